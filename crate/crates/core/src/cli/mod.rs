//! Command-line front end: resolve a config, build measures, run one
//! pipeline, write artifacts and a manifest.
//!
//! Exit status 0 on success, 1 when a numerical acceptance check fails,
//! 2 on configuration or IO errors. Errors are reported on one line as
//! `error[<kind>]: <message>`.

pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::energy::{fourier_sobolev, riesz_energy, riesz_energy_grid, EnergyReport};
use crate::error::{Error, Result};
use crate::identity::{
    bundled_pairs, lemma1_report, mollification_limit_study, Intermediates, Lemma1Config, Lemma1Report,
    MollificationStudy, SmoothDensity, StudyConfig,
};
use crate::measure::io::{points_from_csv, points_to_csv, read_measure, to_json, Measure};
use crate::measure::{
    ifs_sample, AffineMap, BoundingBox, DiscreteMeasure, GridDensity, LatticeSpec, MassSource, Sampling,
};
use crate::numeric::{substream, tag, Vec3};
use crate::output::{pgm, ArtifactSet};
use crate::projections::{orth_project, radial_project, Direction, HistogramSpec};
use crate::scanner::{box_dimension, dyadic_scales, scan_centres, ScanConfig, ScanParams};
use crate::sphere::make_sphere_grid;
use config::{config_source, resolve, single_line, EnergyMethod, MeasureSpec, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "radproj", version, about = "Radial and orthogonal projections of measures")]
pub struct Cli {
    /// Config file, or a bundled name: gaussian_pair, segment.
    #[arg(long, global = true)]
    pub config: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Also write per-atom and per-direction densities.
    #[arg(long, global = true)]
    pub dump_intermediates: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Config overrides `--key value` or `--key=value`; sections use dotted
    /// keys such as `--sphere.resolution 1440`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0.., value_name = "OVERRIDES")]
    pub rest: Vec<String>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Build a measure and serialize it.
    Gen(Overrides),
    /// Riesz or Fourier energy.
    Energy(Overrides),
    /// Orthogonal projection onto the hyperplane normal to a direction.
    Project(Overrides),
    /// Radial projection from a centre.
    Radial(Overrides),
    /// Both sides of the projection identity, with an optional mollification study.
    Lemma1(Overrides),
    /// Exceptional-set scan over a lattice of centres.
    Scan(Overrides),
    /// Box-counting dimension of a point set.
    Boxdim(Overrides),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Energy(_) => "energy",
            Command::Project(_) => "project",
            Command::Radial(_) => "radial",
            Command::Lemma1(_) => "lemma1",
            Command::Scan(_) => "scan",
            Command::Boxdim(_) => "boxdim",
        }
    }

    fn overrides(&self) -> &Overrides {
        match self {
            Command::Gen(o)
            | Command::Energy(o)
            | Command::Project(o)
            | Command::Radial(o)
            | Command::Lemma1(o)
            | Command::Scan(o)
            | Command::Boxdim(o) => o,
        }
    }
}

/// Global options and config overrides after the subcommand.
#[derive(Debug, Default)]
struct Parsed {
    config: Option<String>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    dump: bool,
    pairs: Vec<(String, String)>,
}

fn split_overrides(rest: &[String]) -> Result<Parsed> {
    let mut parsed = Parsed::default();
    let mut i = 0;
    while i < rest.len() {
        let arg = &rest[i];
        let body = arg
            .strip_prefix("--")
            .ok_or_else(|| Error::Parse(format!("expected --key value, got '{arg}'")))?;
        let (key, value) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (body.to_string(), None),
        };
        if key == "dump-intermediates" || key == "dump_intermediates" {
            parsed.dump = true;
            i += 1;
            continue;
        }
        let value = match value {
            Some(v) => v,
            None => {
                i += 1;
                rest.get(i)
                    .cloned()
                    .ok_or_else(|| Error::Parse(format!("missing value for --{key}")))?
            }
        };
        match key.as_str() {
            "config" => parsed.config = Some(value),
            "out" => parsed.out = Some(PathBuf::from(value)),
            "threads" => {
                parsed.threads = Some(
                    value
                        .parse()
                        .map_err(|_| Error::Parse(format!("--threads expects an integer, got '{value}'")))?,
                )
            }
            _ => parsed.pairs.push((key, value)),
        }
        i += 1;
    }
    Ok(parsed)
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Io { .. } => "io",
        Error::Parse(_) => "config",
        Error::Constraint(_) => "constraint",
        Error::InvalidParameter(_) => "invalid-parameter",
        Error::SupportsOverlap { .. } | Error::InSupport { .. } => "support",
        _ => "input",
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("error[usage]: {}", single_line(&e.to_string()));
            return 2;
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.passed {
                0
            } else {
                eprintln!("error[acceptance]: {}", outcome.summary);
                1
            }
        }
        Err(e) => {
            eprintln!("error[{}]: {}", error_kind(&e), single_line(&e.to_string()));
            2
        }
    }
}

pub struct Outcome {
    pub passed: bool,
    pub summary: String,
}

impl Outcome {
    fn ok(summary: String) -> Self {
        Self { passed: true, summary }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let extra = split_overrides(&cli.command.overrides().rest)?;
    let config_name = extra.config.clone().or_else(|| cli.config.clone());
    let text = config_name.as_deref().map(config_source).transpose()?;
    let cfg = resolve(text.as_deref(), &extra.pairs)?;
    let out = extra.out.clone().unwrap_or_else(|| cli.out.clone());
    let dump = cli.dump_intermediates || extra.dump;
    let work = || -> Result<Outcome> {
        let mut artifacts = ArtifactSet::create(&out)?;
        let name = cli.command.name();
        let outcome = match cli.command {
            Command::Gen(_) => cmd_gen(&cfg, &mut artifacts)?,
            Command::Energy(_) => cmd_energy(&cfg, &mut artifacts)?,
            Command::Project(_) => cmd_project(&cfg, &mut artifacts)?,
            Command::Radial(_) => cmd_radial(&cfg, &mut artifacts)?,
            Command::Lemma1(_) => cmd_lemma1(&cfg, &mut artifacts, dump)?,
            Command::Scan(_) => cmd_scan(&cfg, &mut artifacts)?,
            Command::Boxdim(_) => cmd_boxdim(&cfg, &mut artifacts)?,
        };
        artifacts.finish(name, &cfg.to_toml())?;
        Ok(outcome)
    };
    match extra.threads.or(cli.threads) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(work),
        None => work(),
    }
}

fn point(v: &[f64], what: &str) -> Result<(usize, Vec3)> {
    if v.len() != 2 && v.len() != 3 {
        return Err(Error::Parse(format!("{what} needs 2 or 3 coordinates, got {}", v.len())));
    }
    let mut p = [0.0; 3];
    p[..v.len()].copy_from_slice(v);
    Ok((v.len(), p))
}

fn rng_for(cfg: &RunConfig, stream: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream(cfg.seed, &[tag(stream)]))
}

fn sampling(cfg: &RunConfig, stream: &str) -> Sampling {
    Sampling {
        seed: substream(cfg.seed, &[tag(stream)]),
        per_axis: cfg.sampling.per_axis,
        jitter: cfg.sampling.jitter,
    }
}

/// A configured measure, plus the companion `nu` of a bundled pair.
struct Built {
    mu: Measure,
    nu: Option<DiscreteMeasure>,
}

fn build(spec: &MeasureSpec, cfg: &RunConfig, stream: &str) -> Result<Built> {
    let nodes = cfg.grid.nodes;
    let mu = match spec {
        MeasureSpec::Segment { from, to, n, random } => {
            let (dim, a) = point(from, "segment start")?;
            let (dim_b, b) = point(to, "segment end")?;
            if dim != dim_b {
                return Err(Error::Parse("segment endpoints differ in dimension".into()));
            }
            let mut rng = rng_for(cfg, stream);
            let pts = (0..*n)
                .map(|i| {
                    let u = if *random { rng.gen::<f64>() } else { (i as f64 + 0.5) / *n as f64 };
                    [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]), a[2] + u * (b[2] - a[2])]
                })
                .collect();
            Measure::Discrete(DiscreteMeasure::uniform(dim, pts)?)
        }
        MeasureSpec::GaussianMixture { components, samples } => {
            let parts: Vec<([f64; 2], f64, f64)> = components.iter().map(|c| ([c[0], c[1]], c[2], c[3])).collect();
            match samples {
                None => Measure::Grid(SmoothDensity::Gaussians(parts).grid(nodes)?),
                Some(n) => {
                    let total: f64 = parts.iter().map(|p| p.2).sum();
                    let mut rng = rng_for(cfg, stream);
                    let pts = (0..*n)
                        .map(|_| {
                            let mut u = rng.gen::<f64>() * total;
                            let mut k = 0;
                            while k + 1 < parts.len() && u >= parts[k].2 {
                                u -= parts[k].2;
                                k += 1;
                            }
                            let (c, s, _) = parts[k];
                            let gx: f64 = rng.sample(StandardNormal);
                            let gy: f64 = rng.sample(StandardNormal);
                            [c[0] + s * gx, c[1] + s * gy, 0.0]
                        })
                        .collect();
                    Measure::Discrete(DiscreteMeasure::uniform(2, pts)?)
                }
            }
        }
        MeasureSpec::Pair { name } => {
            let pair = bundled_pairs()
                .into_iter()
                .find(|p| p.name == name)
                .ok_or_else(|| Error::Parse(format!("unknown pair '{name}'")))?;
            return Ok(Built {
                mu: Measure::Grid(pair.mu.grid(nodes)?),
                nu: Some(pair.nu),
            });
        }
        MeasureSpec::UniformSquare { lo, side } => {
            let (dim, lo) = point(lo, "square corner")?;
            let h = side / nodes as f64;
            let mut origin = [0.0; 3];
            for a in 0..dim {
                origin[a] = lo[a] - 1.5 * h;
            }
            let lattice = LatticeSpec::new(dim, origin, h, &vec![nodes + 3; dim])?;
            Measure::Grid(GridDensity::from_fn(lattice, |p| {
                let inside = (0..dim).all(|a| p[a] >= lo[a] && p[a] <= lo[a] + side);
                if inside {
                    1.0
                } else {
                    0.0
                }
            })?)
        }
        MeasureSpec::Dirac { at } => {
            let (dim, p) = point(at, "dirac location")?;
            Measure::Discrete(DiscreteMeasure::dirac(dim, p)?)
        }
        MeasureSpec::Points { points, weights } => {
            let mut dim = 0;
            let mut pts = Vec::with_capacity(points.len());
            for (i, p) in points.iter().enumerate() {
                let (d, v) = point(p, &format!("point {i}"))?;
                dim = d;
                pts.push(v);
            }
            let weights = weights.clone().unwrap_or_else(|| vec![1.0; pts.len()]);
            Measure::Discrete(DiscreteMeasure::from_points(dim, pts, weights)?)
        }
        MeasureSpec::Ifs { ratio, translations, n } => {
            let mut dim = 0;
            let mut maps = Vec::with_capacity(translations.len());
            for t in translations {
                let (d, v) = point(t, "translation")?;
                dim = d;
                maps.push(AffineMap::similarity(*ratio, v));
            }
            Measure::Discrete(ifs_sample(dim, &maps, *n, substream(cfg.seed, &[tag(stream)]))?)
        }
        MeasureSpec::File { path } => {
            if path.extension().is_some_and(|e| e == "csv") {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Measure::Discrete(points_from_csv(&text)?)
            } else {
                read_measure(path)?
            }
        }
    };
    Ok(Built { mu, nu: None })
}

macro_rules! on_measure {
    ($m:expr, $mu:ident => $body:expr) => {
        match $m {
            Measure::Discrete($mu) => $body,
            Measure::Grid($mu) => $body,
        }
    };
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Parse(format!("missing '{name}' (set it in the config or pass --{name})")))
}

fn histogram(cfg: &RunConfig, stream: &str) -> HistogramSpec {
    HistogramSpec {
        bins: cfg.histogram.bins,
        window: cfg.histogram.window.map(|w| (w[0], w[1])),
        sampling: sampling(cfg, stream),
    }
}

fn direction(cfg: &RunConfig, dim: usize) -> Result<Direction> {
    let (d, v) = point(&cfg.projection.direction, "projection direction")?;
    if d != dim {
        return Err(Error::Parse(format!("projection direction has {d} coordinates, measure is {dim}-dimensional")));
    }
    Direction::new(dim, v)
}

#[derive(Serialize)]
struct GenSummary {
    dim: usize,
    representation: &'static str,
    atoms: usize,
    mass: f64,
    support: BoundingBox,
}

fn cmd_gen(cfg: &RunConfig, out: &mut ArtifactSet) -> Result<Outcome> {
    let built = build(&cfg.measure, cfg, "measure")?;
    out.write("measure.json", to_json(&built.mu).as_bytes())?;
    let summary = on_measure!(&built.mu, m => GenSummary {
        dim: m.dim(),
        representation: if m.is_smooth() { "grid" } else { "points" },
        atoms: { let mut n = 0; m.visit_atoms(|_, _| n += 1); n },
        mass: m.total_mass(),
        support: m.support_box(),
    });
    if let Measure::Discrete(d) = &built.mu {
        out.write("points.csv", points_to_csv(d).as_bytes())?;
    }
    if let Some(nu) = &built.nu {
        out.write("nu.json", to_json(&Measure::Discrete(nu.clone())).as_bytes())?;
    }
    out.write_json("gen.json", &summary)?;
    Ok(Outcome::ok(format!(
        "gen: {}-d {} measure, {} atoms",
        summary.dim, summary.representation, summary.atoms
    )))
}

fn cmd_energy(cfg: &RunConfig, out: &mut ArtifactSet) -> Result<Outcome> {
    let built = build(&cfg.measure, cfg, "measure")?;
    let dim = built.mu.dim();
    let method = match (cfg.energy.method, &built.mu) {
        (EnergyMethod::Auto, Measure::Discrete(_)) => EnergyMethod::Pairwise,
        (EnergyMethod::Auto, Measure::Grid(_)) => EnergyMethod::Grid,
        (m, _) => m,
    };
    let report: EnergyReport = match (method, &built.mu) {
        (EnergyMethod::Pairwise, Measure::Discrete(m)) => riesz_energy(m, need(cfg.s, "s")?)?,
        (EnergyMethod::Grid, Measure::Grid(g)) => riesz_energy_grid(g, need(cfg.s, "s")?)?,
        (EnergyMethod::Fourier, mu) => {
            let alpha = match cfg.alpha {
                Some(a) => a,
                None => need(cfg.s, "s")? - (dim - 1) as f64,
            };
            let e = direction(cfg, dim)?;
            let f = on_measure!(mu, m => orth_project(m, &e, &histogram(cfg, "histogram"))?);
            fourier_sobolev(&f, alpha)?
        }
        (m, _) => {
            return Err(Error::Parse(format!(
                "energy method {m:?} does not apply to this measure representation"
            )))
        }
    };
    out.write_json("energy.json", &report)?;
    Ok(Outcome::ok(format!(
        "energy: {} = {} ({:?}{})",
        report.exponent,
        report.value,
        report.method,
        if report.divergent { ", divergent" } else { "" }
    )))
}

#[derive(Serialize)]
struct ProjectSummary {
    direction: Direction,
    layout: crate::projections::ProjectionLayout,
    mass: f64,
    max_density: f64,
}

fn cmd_project(cfg: &RunConfig, out: &mut ArtifactSet) -> Result<Outcome> {
    let built = build(&cfg.measure, cfg, "measure")?;
    let e = direction(cfg, built.mu.dim())?;
    let f = on_measure!(&built.mu, m => orth_project(m, &e, &histogram(cfg, "histogram"))?);
    out.write("projection.csv", f.to_csv().as_bytes())?;
    let layout = *f.layout();
    if layout.axes() == 2 {
        out.write("projection.pgm", &pgm(layout.shape[1], layout.shape[0], f.values())?)?;
    }
    let summary = ProjectSummary {
        direction: e,
        layout,
        mass: f.mass(),
        max_density: f.values().iter().cloned().fold(0.0, f64::max),
    };
    out.write_json("projection.json", &summary)?;
    Ok(Outcome::ok(format!("project: mass {} on {} bins", summary.mass, f.values().len())))
}

#[derive(Serialize)]
struct RadialSummary {
    center: Vec3,
    bins: usize,
    mass: f64,
    max_density: f64,
    p: Option<f64>,
    lp_norm_pow: Option<f64>,
}

fn cmd_radial(cfg: &RunConfig, out: &mut ArtifactSet) -> Result<Outcome> {
    let built = build(&cfg.measure, cfg, "measure")?;
    let dim = built.mu.dim();
    let (d, x) = point(&cfg.radial.center, "radial.center")?;
    if d != dim {
        return Err(Error::Parse(format!("radial.center has {d} coordinates, measure is {dim}-dimensional")));
    }
    let grid = Arc::new(make_sphere_grid(dim, cfg.sphere.resolution)?);
    let f = on_measure!(&built.mu, m => radial_project(m, &x, &grid, &sampling(cfg, "radial"))?);
    out.write("radial.csv", f.to_csv().as_bytes())?;
    let summary = RadialSummary {
        center: x,
        bins: grid.len(),
        mass: f.mass(),
        max_density: f.linf(),
        p: cfg.p,
        lp_norm_pow: cfg.p.map(|p| f.lp_norm_pow(p)),
    };
    out.write_json("radial.json", &summary)?;
    Ok(Outcome::ok(format!("radial: {} bins, max density {}", summary.bins, summary.max_density)))
}

#[derive(Serialize)]
struct Lemma1Output {
    reports: Vec<Lemma1Report>,
    tolerance: f64,
    study: Option<MollificationStudy>,
}

fn cmd_lemma1(cfg: &RunConfig, out: &mut ArtifactSet, dump: bool) -> Result<Outcome> {
    let built = build(&cfg.measure, cfg, "measure")?;
    let nu = match (&cfg.nu, built.nu) {
        (Some(spec), _) => match build(spec, cfg, "nu")?.mu {
            Measure::Discrete(d) => d,
            Measure::Grid(_) => return Err(Error::Parse("nu must be an atomic measure".into())),
        },
        (None, Some(nu)) => nu,
        (None, None) => return Err(Error::Parse("missing [nu] section".into())),
    };
    let lemma = Lemma1Config {
        sphere_resolution: cfg.sphere.resolution,
        histogram_bins: cfg.histogram.bins,
        sampling: sampling(cfg, "lemma1"),
    };
    let mut store = Intermediates::default();
    let reports = on_measure!(&built.mu, m => lemma1_report(m, &nu, &cfg.lemma1.ps, &lemma, dump.then_some(&mut store))?);
    let study = match (&built.mu, cfg.mollify.scales.is_empty()) {
        (Measure::Discrete(m), false) => Some(mollification_limit_study(
            m,
            &nu,
            cfg.p.unwrap_or(cfg.lemma1.ps[cfg.lemma1.ps.len() - 1]),
            &cfg.mollify.scales,
            &StudyConfig {
                lattice_nodes: cfg.mollify.nodes,
                profile: cfg.mollify.profile,
                lemma,
            },
        )?),
        _ => None,
    };
    if dump {
        for (i, (x, f)) in store.radial.iter().enumerate() {
            let header = format!("# atom {:?}\n", &x[..nu.dim()]);
            out.write(&format!("intermediates/radial_{i:04}.csv"), (header + &f.to_csv()).as_bytes())?;
        }
        for (i, (e, f, w)) in store.projected.iter().enumerate() {
            let header = format!("# direction {:?}\n", &e.e()[..nu.dim()]);
            out.write(&format!("intermediates/projected_mu_{i:04}.csv"), (header.clone() + &f.to_csv()).as_bytes())?;
            out.write(&format!("intermediates/projected_nu_{i:04}.csv"), (header + &w.to_csv()).as_bytes())?;
        }
    }
    let worst = reports.iter().map(|r| r.gap).fold(0.0, f64::max);
    let output = Lemma1Output {
        reports,
        tolerance: cfg.lemma1.tolerance,
        study,
    };
    out.write_json("lemma1.json", &output)?;
    Ok(Outcome {
        passed: worst <= cfg.lemma1.tolerance,
        summary: format!("lemma1: worst relative gap {worst:.3e} (tolerance {})", cfg.lemma1.tolerance),
    })
}

fn cmd_scan(cfg: &RunConfig, out: &mut ArtifactSet) -> Result<Outcome> {
    let built = build(&cfg.measure, cfg, "measure")?;
    let dim = built.mu.dim();
    let p = cfg.p.unwrap_or(2.0);
    let params = match (cfg.s, cfg.t) {
        (Some(s), Some(t)) => Some(ScanParams::new(dim, s, t, p)?),
        _ => None,
    };
    let (dl, lo) = point(&cfg.scan.lo, "scan.lo")?;
    let (dh, hi) = point(&cfg.scan.hi, "scan.hi")?;
    if dl != dim || dh != dim {
        return Err(Error::Parse(format!("scan region must be {dim}-dimensional")));
    }
    let margin = cfg.scan.margin.unwrap_or_else(|| {
        cfg.mollify
            .scales
            .iter()
            .cloned()
            .reduce(f64::min)
            .map_or(0.1, |s| 2.0 * s)
    });
    let scan = ScanConfig {
        region: BoundingBox::new(dim, lo, hi),
        step: cfg.scan.step,
        p,
        margin,
        threshold: cfg.scan.threshold,
        doublings: cfg.scan.doublings,
        sampling: sampling(cfg, "scan"),
    };
    let base = Arc::new(make_sphere_grid(dim, cfg.sphere.resolution)?);
    let mut report = on_measure!(&built.mu, m => scan_centres(m, &scan, &base)?);
    report.bound = params.map(|q| q.bound());
    out.write("scan.json", report.to_json().as_bytes())?;
    out.write("scan.csv", report.to_csv().as_bytes())?;
    if dim == 2 {
        // rows top to bottom in decreasing y; masked centres are black
        let [nx, ny, _] = report.shape;
        let mut image = vec![f64::NAN; nx * ny];
        for (&flat, norms) in report.lattice_index.iter().zip(&report.norms) {
            let (ix, iy) = (flat / ny, flat % ny);
            image[(ny - 1 - iy) * nx + ix] = norms[norms.len() - 1].ln();
        }
        out.write("scan.pgm", &pgm(nx, ny, &image)?)?;
    }
    if let Some(q) = params {
        out.write_json("params.json", &q)?;
    }
    Ok(Outcome::ok(format!(
        "scan: {} centres, {} masked, {} bad, dimension {}",
        report.centres.len(),
        report.masked,
        report.bad_set.len(),
        report
            .dim_estimate
            .as_ref()
            .map_or("n/a".to_string(), |d| format!("{:.3} +- {:.3}", d.dimension, 2.0 * d.stderr))
    )))
}

fn cmd_boxdim(cfg: &RunConfig, out: &mut ArtifactSet) -> Result<Outcome> {
    let points: Vec<Vec3> = match &cfg.boxdim.points {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            points_from_csv(&text)?.points().to_vec()
        }
        None => match build(&cfg.measure, cfg, "measure")?.mu {
            Measure::Discrete(d) => d.points().to_vec(),
            Measure::Grid(_) => return Err(Error::Parse("boxdim needs a point set".into())),
        },
    };
    let scales = if cfg.boxdim.scales.is_empty() {
        let extent = BoundingBox::from_points(3, &points).map_or(1.0, |b| b.max_extent());
        let hi = cfg.boxdim.max_scale.unwrap_or(extent / 8.0);
        let lo = cfg.boxdim.min_scale.unwrap_or(hi / 32.0);
        dyadic_scales(lo, hi)
    } else {
        cfg.boxdim.scales.clone()
    };
    let est = box_dimension(&points, &scales)?;
    out.write_json("boxdim.json", &est)?;
    Ok(Outcome::ok(format!(
        "boxdim: {:.3} in [{:.3}, {:.3}] from {} points",
        est.dimension,
        est.band.0,
        est.band.1,
        points.len()
    )))
}
