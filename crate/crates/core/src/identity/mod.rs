//! Both sides of the projection identity
//!
//! `int ||pi_{x#} mu_x||_p^p d nu(x) = int_S ||pi_{e#} mu||^p_{L^p(pi_{e#} nu)} de`
//!
//! computed by independent pipelines, and the mollification limit study.

mod pairs;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use pairs::{bundled_pairs, SmoothDensity, TestPair};

use crate::error::{Error, Result};
use crate::measure::{mollify, DiscreteMeasure, LatticeSpec, MassSource, Mollifier, Profile, Sampling};
use crate::numeric::{pairwise_sum, Vec3};
use crate::projections::{
    line_density, lp_norm_weighted, orth_project_onto, Direction, DirectionDensity, HistogramSpec, ProjectionLayout,
};
use crate::sphere::{make_sphere_grid, SphereDensity, SphereGrid};

/// Resolutions shared by both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Config {
    pub sphere_resolution: usize,
    pub histogram_bins: usize,
    pub sampling: Sampling,
}

impl Default for Lemma1Config {
    fn default() -> Self {
        Self {
            sphere_resolution: 720,
            histogram_bins: 512,
            sampling: Sampling::midpoints(4),
        }
    }
}

impl Lemma1Config {
    /// Twice the sphere and histogram resolution, same samples per unit area
    /// when the lattice is doubled too.
    pub fn doubled(&self) -> Self {
        Self {
            sphere_resolution: 2 * self.sphere_resolution,
            histogram_bins: 2 * self.histogram_bins,
            sampling: Sampling {
                per_axis: (self.sampling.per_axis / 2).max(1),
                ..self.sampling
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolutions {
    pub sphere_bins: usize,
    pub histogram_bins: usize,
    pub samples_per_axis: usize,
    pub nu_atoms: usize,
}

/// Uniform boundedness diagnostic: the radial densities never exceed the
/// largest projected density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinfDiagnostic {
    pub radial_max: f64,
    pub projected_max: f64,
    /// `radial_max <= projected_max * 1.05`.
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub resolutions: Resolutions,
    pub linf: LinfDiagnostic,
}

/// Per-atom sphere densities and per-direction projections, for audit.
#[derive(Debug, Clone, Default)]
pub struct Intermediates {
    pub radial: Vec<(Vec3, SphereDensity)>,
    pub projected: Vec<(Direction, DirectionDensity, DirectionDensity)>,
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.max(b).max(f64::MIN_POSITIVE)
}

fn check_disjoint<M: MassSource>(mu: &M, nu: &DiscreteMeasure, margin: f64) -> Result<()> {
    for (index, (x, w)) in nu.points().iter().zip(nu.weights()).enumerate() {
        if *w == 0.0 {
            continue;
        }
        let distance = mu.support_distance(x);
        if !(distance > margin) {
            return Err(Error::SupportsOverlap {
                index,
                distance,
                required: margin,
            });
        }
    }
    Ok(())
}

fn check_p(ps: &[f64]) -> Result<()> {
    match ps.iter().find(|p| !(**p >= 1.0) || !p.is_finite()) {
        Some(p) => Err(Error::InvalidParameter(format!("exponent p must be >= 1, got {p}"))),
        None if ps.is_empty() => Err(Error::Empty),
        None => Ok(()),
    }
}

struct LhsParts {
    /// `sum_x nu(x) ||f_x||_p^p` per requested p.
    values: Vec<f64>,
    linf: f64,
    radial: Vec<(Vec3, SphereDensity)>,
}

fn lhs_parts<M: MassSource>(
    mu: &M,
    nu: &DiscreteMeasure,
    ps: &[f64],
    grid: &Arc<SphereGrid>,
    sampling: &Sampling,
    keep: bool,
) -> Result<LhsParts> {
    let per_atom: Vec<Result<(Vec<f64>, f64, Option<SphereDensity>)>> = nu
        .points()
        .par_iter()
        .zip(nu.weights().par_iter())
        .map(|(x, w)| {
            let f = line_density(mu, x, grid, sampling)?;
            let norms = ps.iter().map(|p| w * f.lp_norm_pow(*p)).collect();
            let linf = f.linf();
            Ok((norms, linf, keep.then_some(f)))
        })
        .collect();
    let mut columns = vec![Vec::with_capacity(nu.len()); ps.len()];
    let mut linf: f64 = 0.0;
    let mut radial = Vec::new();
    for (r, x) in per_atom.into_iter().zip(nu.points()) {
        let (norms, l, f) = r?;
        for (col, v) in columns.iter_mut().zip(norms) {
            col.push(v);
        }
        linf = linf.max(l);
        if let Some(f) = f {
            radial.push((*x, f));
        }
    }
    Ok(LhsParts {
        values: columns.iter().map(|c| pairwise_sum(c)).collect(),
        linf,
        radial,
    })
}

struct RhsParts {
    values: Vec<f64>,
    linf: f64,
    projected: Vec<(Direction, DirectionDensity, DirectionDensity)>,
}

fn rhs_parts<M: MassSource>(
    mu: &M,
    nu: &DiscreteMeasure,
    ps: &[f64],
    grid: &Arc<SphereGrid>,
    spec: &HistogramSpec,
    keep: bool,
) -> Result<RhsParts> {
    let boxes = [mu.support_box(), nu.support_box()];
    let n = grid.len();
    // e and -e project onto the same hyperplane; evaluate one of each pair
    let anti = grid.antipodes();
    let chosen: Vec<usize> = (0..n).filter(|&i| anti.map_or(true, |a| i < a[i])).collect();
    let per_dir: Vec<Result<(Vec<f64>, f64, Option<(Direction, DirectionDensity, DirectionDensity)>)>> = chosen
        .par_iter()
        .map(|&i| {
            let e = Direction::new(grid.dim(), grid.centers()[i])?;
            let layout = ProjectionLayout::covering(&e, &boxes, spec)?;
            let f = orth_project_onto(mu, &layout, &spec.sampling)?;
            let w = orth_project_onto(nu, &layout, &spec.sampling)?;
            let area = match anti {
                Some(a) => grid.areas()[i] + grid.areas()[a[i]],
                None => grid.areas()[i],
            };
            let vals = ps
                .iter()
                .map(|p| lp_norm_weighted(&f, *p, &w).map(|v| v * area))
                .collect::<Result<Vec<f64>>>()?;
            let linf = f.values().iter().cloned().fold(0.0, f64::max);
            Ok((vals, linf, keep.then_some((e, f, w))))
        })
        .collect();
    let mut columns = vec![Vec::with_capacity(chosen.len()); ps.len()];
    let mut linf: f64 = 0.0;
    let mut projected = Vec::new();
    for r in per_dir {
        let (vals, l, kept) = r?;
        for (col, v) in columns.iter_mut().zip(vals) {
            col.push(v);
        }
        linf = linf.max(l);
        if let Some(k) = kept {
            projected.push(k);
        }
    }
    Ok(RhsParts {
        values: columns.iter().map(|c| pairwise_sum(c)).collect(),
        linf,
        projected,
    })
}

/// `sum_x nu(x) ||line density of mu_x||_p^p`.
pub fn lemma1_lhs<M: MassSource>(mu: &M, nu: &DiscreteMeasure, p: f64, sphere: &Arc<SphereGrid>, sampling: &Sampling) -> Result<f64> {
    check_p(&[p])?;
    check_disjoint(mu, nu, 0.0)?;
    Ok(lhs_parts(mu, nu, &[p], sphere, sampling, false)?.values[0])
}

/// Sphere quadrature of `||pi_{e#} mu||^p_{L^p(pi_{e#} nu)}` over direction bins.
pub fn lemma1_rhs<M: MassSource>(
    mu: &M,
    nu: &DiscreteMeasure,
    p: f64,
    directions: &Arc<SphereGrid>,
    bins: &HistogramSpec,
) -> Result<f64> {
    check_p(&[p])?;
    check_disjoint(mu, nu, 0.0)?;
    Ok(rhs_parts(mu, nu, &[p], directions, bins, false)?.values[0])
}

/// Both sides for several exponents, sharing the projected densities.
pub fn lemma1_report<M: MassSource>(
    mu: &M,
    nu: &DiscreteMeasure,
    ps: &[f64],
    config: &Lemma1Config,
    mut intermediates: Option<&mut Intermediates>,
) -> Result<Vec<Lemma1Report>> {
    check_p(ps)?;
    if mu.dim() != nu.dim() {
        return Err(Error::GridMismatch(format!("mu is {}-dimensional, nu is {}-dimensional", mu.dim(), nu.dim())));
    }
    check_disjoint(mu, nu, 0.0)?;
    let grid = Arc::new(make_sphere_grid(mu.dim(), config.sphere_resolution)?);
    if grid.antipodes().is_none() {
        return Err(Error::InvalidParameter(format!(
            "sphere resolution {} has no antipodal symmetry; use an even value",
            config.sphere_resolution
        )));
    }
    let keep = intermediates.is_some();
    let lhs = lhs_parts(mu, nu, ps, &grid, &config.sampling, keep)?;
    let spec = HistogramSpec {
        bins: config.histogram_bins,
        window: None,
        sampling: config.sampling,
    };
    let rhs = rhs_parts(mu, nu, ps, &grid, &spec, keep)?;
    let linf = LinfDiagnostic {
        radial_max: lhs.linf,
        projected_max: rhs.linf,
        bounded: lhs.linf <= rhs.linf * 1.05,
    };
    let resolutions = Resolutions {
        sphere_bins: grid.len(),
        histogram_bins: config.histogram_bins,
        samples_per_axis: config.sampling.per_axis,
        nu_atoms: nu.len(),
    };
    if let Some(store) = intermediates.as_deref_mut() {
        store.radial = lhs.radial;
        store.projected = rhs.projected;
    }
    Ok(ps
        .iter()
        .enumerate()
        .map(|(k, &p)| Lemma1Report {
            p,
            lhs: lhs.values[k],
            rhs: rhs.values[k],
            gap: relative_gap(lhs.values[k], rhs.values[k]),
            resolutions: resolutions.clone(),
            linf,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Lattice nodes per axis for the mollified density.
    pub lattice_nodes: usize,
    pub profile: Profile,
    pub lemma: Lemma1Config,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub scale: f64,
    pub report: Lemma1Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollificationStudy {
    pub reports: Vec<ScaleReport>,
    pub gaps_non_increasing: bool,
    /// LHS values move in one direction as the scale shrinks.
    pub lhs_monotone: bool,
    /// Relative change of the LHS between the last two scales.
    pub lhs_last_change: f64,
    /// The smaller of the last two LHS values is at least 97% of the last
    /// one (the liminf does not fall below the limit estimate).
    pub fatou_consistent: bool,
}

/// Mollify `mu` at each scale and report both sides of the identity.
pub fn mollification_limit_study(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    scales: &[f64],
    config: &StudyConfig,
) -> Result<MollificationStudy> {
    if scales.is_empty() {
        return Err(Error::Empty);
    }
    if scales.iter().any(|s| !(*s > 0.0)) || scales.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter(format!("scales must be positive and strictly decreasing, got {scales:?}")));
    }
    check_disjoint(mu, nu, scales[0])?;
    let mut reports = Vec::with_capacity(scales.len());
    for &scale in scales {
        let lattice = LatticeSpec::covering(&mu.support_box(), scale, config.lattice_nodes)?;
        let smooth = mollify(mu, &Mollifier::with_profile(scale, config.profile)?, &lattice)?;
        let report = lemma1_report(&smooth, nu, &[p], &config.lemma, None)?.remove(0);
        reports.push(ScaleReport { scale, report });
    }
    let gaps: Vec<f64> = reports.iter().map(|r| r.report.gap).collect();
    let lhs: Vec<f64> = reports.iter().map(|r| r.report.lhs).collect();
    let gaps_non_increasing = gaps.windows(2).all(|w| w[1] <= w[0] || w[1] < 0.01);
    let lhs_monotone = lhs.windows(2).all(|w| w[1] >= w[0]) || lhs.windows(2).all(|w| w[1] <= w[0]);
    let lhs_last_change = if lhs.len() >= 2 { relative_gap(lhs[lhs.len() - 1], lhs[lhs.len() - 2]) } else { 0.0 };
    let fatou_consistent = match lhs.len() {
        0 | 1 => true,
        n => lhs[n - 2].min(lhs[n - 1]) >= 0.97 * lhs[n - 1],
    };
    Ok(MollificationStudy {
        reports,
        gaps_non_increasing,
        lhs_monotone,
        lhs_last_change,
        fatou_consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::GridDensity;

    fn gaussian_grid(n: usize) -> GridDensity {
        let lat = LatticeSpec::cube(2, &[-1.0, -1.0, 0.0], 2.0, n).unwrap();
        GridDensity::from_fn(lat, |p| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            if r2 < 0.36 {
                (-r2 / 0.02).exp()
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn dirac_nu_reduces_to_one_atom() {
        let mu = gaussian_grid(128);
        let x = [2.0, 0.5, 0.0];
        let nu = DiscreteMeasure::dirac(2, x).unwrap();
        let grid = Arc::new(make_sphere_grid(2, 360).unwrap());
        let s = Sampling::default();
        let lhs = lemma1_lhs(&mu, &nu, 2.0, &grid, &s).unwrap();
        let direct = line_density(&mu, &x, &grid, &s).unwrap().lp_norm_pow(2.0);
        assert_eq!(lhs, direct);
    }

    #[test]
    fn overlapping_supports_name_the_atom() {
        let mu = gaussian_grid(64);
        let nu = DiscreteMeasure::uniform(2, vec![[3.0, 0.0, 0.0], [0.1, 0.0, 0.0]]).unwrap();
        match lemma1_report(&mu, &nu, &[1.0], &Lemma1Config::default(), None) {
            Err(Error::SupportsOverlap { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn small_configuration_agrees() {
        let mu = gaussian_grid(128);
        let nu = DiscreteMeasure::uniform(2, vec![[1.5, 0.2, 0.0], [-0.3, 1.6, 0.0], [1.2, -1.4, 0.0]]).unwrap();
        let config = Lemma1Config {
            sphere_resolution: 360,
            histogram_bins: 256,
            sampling: Sampling::default(),
        };
        let mut store = Intermediates::default();
        let reports = lemma1_report(&mu, &nu, &[1.0, 2.0], &config, Some(&mut store)).unwrap();
        for r in &reports {
            assert!(r.gap < 0.05, "{r:?}");
            assert!(r.linf.bounded);
        }
        assert_eq!(store.radial.len(), 3);
        assert_eq!(store.projected.len(), 180);
    }

    #[test]
    fn scales_must_decrease() {
        let mu = DiscreteMeasure::dirac(2, [0.0; 3]).unwrap();
        let nu = DiscreteMeasure::dirac(2, [2.0, 0.0, 0.0]).unwrap();
        let config = StudyConfig {
            lattice_nodes: 64,
            profile: Profile::Bump,
            lemma: Lemma1Config::default(),
        };
        assert!(mollification_limit_study(&mu, &nu, 1.5, &[0.1, 0.2], &config).is_err());
        match mollification_limit_study(&mu, &nu, 1.5, &[3.0, 0.1], &config) {
            Err(Error::SupportsOverlap { required, .. }) => assert_eq!(required, 3.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
