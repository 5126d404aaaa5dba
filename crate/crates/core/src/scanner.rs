//! Exceptional-set exploration: which centres see a singular radial
//! projection, and how large that set looks.
//!
//! Singularity is undecidable at finite resolution. A centre is flagged when
//! `||radial projection||_p^p` keeps growing as the sphere grid is refined:
//! an `L^p` density has stable histogram norms, a point mass grows like
//! `(bin size)^{1-p}`.

use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{BoundingBox, MassSource, Sampling};
use crate::numeric::{fit_line, Vec3};
use crate::projections::radial_project;
use crate::sphere::{make_sphere_grid, SphereGrid};

fn check_st(d: usize, s: f64, t: f64) -> Result<()> {
    if d != 2 && d != 3 {
        return Err(Error::UnsupportedDim(d));
    }
    let k = (d - 1) as f64;
    if !(s > k && s < d as f64) {
        return Err(Error::Constraint(format!("need d-1 < s < d, got d={d}, s={s}")));
    }
    if !(t > 2.0 * k - s && t < k) {
        return Err(Error::Constraint(format!(
            "need 2(d-1)-s < t < d-1, got d={d}, s={s}, t={t} (interval ({}, {k}))",
            2.0 * k - s
        )));
    }
    Ok(())
}

/// `min{2 - t/(d-1), t/(2(d-1)-s)}`.
pub fn admissible_p(d: usize, s: f64, t: f64) -> Result<f64> {
    check_st(d, s, t)?;
    let k = (d - 1) as f64;
    Ok((2.0 - t / k).min(t / (2.0 * k - s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub d: usize,
    pub s: f64,
    pub t: f64,
    pub p: f64,
    pub q: f64,
    /// How far `p` exceeds the admissible exponent, zero when admissible.
    pub delta_p: f64,
}

impl ScanParams {
    pub fn new(d: usize, s: f64, t: f64, p: f64) -> Result<Self> {
        let max_p = admissible_p(d, s, t)?;
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Constraint(format!("need 1 < p, got p={p}")));
        }
        Ok(Self {
            d,
            s,
            t,
            p,
            q: p / (p - 1.0),
            delta_p: (p - max_p).max(0.0),
        })
    }

    /// `2(d-1) - s`.
    pub fn bound(&self) -> f64 {
        2.0 * (self.d - 1) as f64 - self.s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub region: BoundingBox,
    pub step: f64,
    pub p: f64,
    pub margin: f64,
    /// Flag a centre when its norm grows by at least this factor between
    /// the coarsest and finest sphere grids.
    pub threshold: f64,
    /// Number of sphere doublings; by default enough for a point mass to
    /// grow by 1.8.
    pub doublings: Option<usize>,
    pub sampling: Sampling,
}

impl ScanConfig {
    pub fn new(region: BoundingBox, step: f64, p: f64, margin: f64) -> Self {
        Self {
            region,
            step,
            p,
            margin,
            threshold: 1.5,
            doublings: None,
            sampling: Sampling::default(),
        }
    }

    pub fn ladder_length(&self) -> usize {
        self.doublings.unwrap_or_else(|| default_doublings(self.p))
    }
}

/// Smallest `k <= 6` with `2^{k(p-1)} >= 1.8`.
pub fn default_doublings(p: f64) -> usize {
    if !(p > 1.0) {
        return 6;
    }
    ((1.8f64.log2() / (p - 1.0)).ceil() as usize).clamp(1, 6)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub dimension: f64,
    pub stderr: f64,
    /// `dimension -+ 2 stderr`.
    pub band: (f64, f64),
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub p: f64,
    /// Centres per axis of the full scan lattice.
    pub shape: [usize; 3],
    /// Scanned centres, in lattice order, masked ones omitted.
    pub centres: Vec<Vec3>,
    /// Flat lattice index of each scanned centre.
    pub lattice_index: Vec<usize>,
    pub masked: usize,
    /// Sphere resolutions, coarsest first.
    pub resolutions: Vec<usize>,
    /// `norms[i][k]` is `||pi_x mu||_p^p` for centre `i` on grid `k`.
    pub norms: Vec<Vec<f64>>,
    pub threshold: f64,
    pub bad_set: Vec<Vec3>,
    pub dim_estimate: Option<DimensionEstimate>,
    /// `2(d-1) - s` when exponents were supplied.
    pub bound: Option<f64>,
    pub warnings: Vec<String>,
}

impl ScanReport {
    /// Finest over coarsest norm per centre.
    pub fn growth(&self) -> Vec<f64> {
        self.norms.iter().map(|n| n[n.len() - 1] / n[0]).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per scanned centre: coordinates, norms per resolution, flag.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z");
        for r in &self.resolutions {
            out.push_str(&format!(",norm_{r}"));
        }
        out.push_str(",bad\n");
        let bad: HashSet<[u64; 3]> = self.bad_set.iter().map(bits).collect();
        for (c, n) in self.centres.iter().zip(&self.norms) {
            out.push_str(&format!("{},{},{}", c[0], c[1], c[2]));
            for v in n {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{}\n", u8::from(bad.contains(&bits(c)))));
        }
        out
    }
}

fn bits(p: &Vec3) -> [u64; 3] {
    [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()]
}

fn scan_shape(cfg: &ScanConfig, dim: usize) -> Result<[usize; 3]> {
    if !(cfg.step > 0.0) || !cfg.step.is_finite() {
        return Err(Error::InvalidParameter(format!("scan step must be positive, got {}", cfg.step)));
    }
    let mut shape = [1usize; 3];
    for (a, n) in shape.iter_mut().enumerate().take(dim) {
        let span = cfg.region.hi[a] - cfg.region.lo[a];
        if !(span >= 0.0) {
            return Err(Error::InvalidParameter("scan region has negative extent".into()));
        }
        *n = (span / cfg.step + 1e-9).floor() as usize + 1;
    }
    Ok(shape)
}

/// Norms of the radial projections from every lattice centre farther than
/// `margin` from the support, on `base` and its successive doublings.
pub fn scan_centres<M: MassSource>(mu: &M, cfg: &ScanConfig, base: &Arc<SphereGrid>) -> Result<ScanReport> {
    let dim = mu.dim();
    if base.dim() != dim {
        return Err(Error::GridMismatch(format!(
            "measure is {dim}-dimensional, sphere grid is for dimension {}",
            base.dim()
        )));
    }
    if !(cfg.margin > 0.0) {
        return Err(Error::InvalidParameter(format!("margin must be positive, got {}", cfg.margin)));
    }
    if !(cfg.p >= 1.0) || !cfg.p.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent p must be >= 1, got {}", cfg.p)));
    }
    let shape = scan_shape(cfg, dim)?;
    let total = shape[0] * shape[1] * shape[2];
    let lattice: Vec<Vec3> = (0..total)
        .map(|i| {
            let idx = [i / (shape[1] * shape[2]), (i / shape[2]) % shape[1], i % shape[2]];
            let mut c = [0.0; 3];
            for a in 0..dim {
                c[a] = cfg.region.lo[a] + idx[a] as f64 * cfg.step;
            }
            c
        })
        .collect();
    let keep: Vec<bool> = lattice.par_iter().map(|c| mu.support_distance(c) > cfg.margin).collect();
    let lattice_index: Vec<usize> = (0..total).filter(|&i| keep[i]).collect();
    if lattice_index.is_empty() {
        return Err(Error::EmptyScan);
    }
    let centres: Vec<Vec3> = lattice_index.iter().map(|&i| lattice[i]).collect();

    let k = cfg.ladder_length();
    let mut grids = vec![base.clone()];
    for j in 1..=k {
        grids.push(Arc::new(make_sphere_grid(dim, base.resolution() << j)?));
    }
    let norms: Vec<Result<Vec<f64>>> = centres
        .par_iter()
        .map(|x| {
            grids
                .iter()
                .map(|g| Ok(radial_project(mu, x, g, &cfg.sampling)?.lp_norm_pow(cfg.p)))
                .collect()
        })
        .collect();
    let norms = norms.into_iter().collect::<Result<Vec<_>>>()?;

    let mut warnings = Vec::new();
    if cfg.p == 1.0 {
        warnings.push("p = 1: norms are total masses and cannot grow".into());
    }
    let mut report = ScanReport {
        p: cfg.p,
        shape,
        centres,
        lattice_index,
        masked: total - keep.iter().filter(|k| **k).count(),
        resolutions: grids.iter().map(|g| g.resolution()).collect(),
        norms,
        threshold: cfg.threshold,
        bad_set: Vec::new(),
        dim_estimate: None,
        bound: None,
        warnings,
    };
    report.bad_set = extract_bad_set(&report, cfg.threshold)?;
    if report.bad_set.len() >= 10 {
        let extent = cfg.region.max_extent();
        let scales = dyadic_scales(1.01 * cfg.step, extent / 8.0);
        match box_dimension(&report.bad_set, &scales) {
            Ok(est) => report.dim_estimate = Some(est),
            Err(e) => report.warnings.push(format!("no dimension estimate: {e}")),
        }
    }
    Ok(report)
}

/// Centres whose norm grows by at least `threshold` from the coarsest to
/// the finest resolution. A threshold of 1 or less flags every centre.
pub fn extract_bad_set(report: &ScanReport, threshold: f64) -> Result<Vec<Vec3>> {
    if report.resolutions.len() < 2 {
        return Err(Error::SingleResolution);
    }
    Ok(report
        .centres
        .iter()
        .zip(report.growth())
        .filter(|(_, g)| threshold <= 1.0 || *g >= threshold)
        .map(|(c, _)| *c)
        .collect())
}

/// `lo, 2 lo, 4 lo, ...` up to `hi`.
pub fn dyadic_scales(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = lo;
    while r <= hi * (1.0 + 1e-12) && lo > 0.0 {
        out.push(r);
        r *= 2.0;
    }
    out
}

/// Least-squares slope of `log N(r)` against `log(1/r)`, where `N(r)` is the
/// fewest occupied cells of `r Z^d` over quarter-cell shifts of the lattice.
pub fn box_dimension(points: &[Vec3], scales: &[f64]) -> Result<DimensionEstimate> {
    if scales.len() < 4 || scales.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 positive scales, got {}",
            scales.len()
        )));
    }
    let distinct: HashSet<[u64; 3]> = points.iter().map(bits).collect();
    if distinct.len() == 1 {
        return Ok(DimensionEstimate {
            dimension: 0.0,
            stderr: 0.0,
            band: (0.0, 0.0),
            scales: scales.to_vec(),
            counts: vec![1; scales.len()],
        });
    }
    if points.len() < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 points, got {}", points.len())));
    }
    let dim = if points.iter().any(|p| p[2] != 0.0) { 3 } else { 2 };
    let shifts = [0.0, 0.25, 0.5, 0.75];
    let offsets: Vec<Vec3> = (0..shifts.len().pow(dim as u32))
        .map(|k| {
            let mut o = [0.0; 3];
            for (a, c) in o.iter_mut().enumerate().take(dim) {
                *c = shifts[(k / shifts.len().pow(a as u32)) % shifts.len()];
            }
            o
        })
        .collect();
    let counts: Vec<usize> = scales
        .iter()
        .map(|r| {
            offsets
                .iter()
                .map(|o| {
                    points
                        .iter()
                        .map(|p| {
                            [
                                (p[0] / r + o[0]).floor() as i64,
                                (p[1] / r + o[1]).floor() as i64,
                                (p[2] / r + o[2]).floor() as i64,
                            ]
                        })
                        .collect::<HashSet<_>>()
                        .len()
                })
                .min()
                .unwrap_or(0)
        })
        .collect();
    let xs: Vec<f64> = scales.iter().map(|r| -r.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|n| (*n as f64).ln()).collect();
    let fit = fit_line(&xs, &ys);
    Ok(DimensionEstimate {
        dimension: fit.slope,
        stderr: fit.slope_stderr,
        band: (fit.slope - 2.0 * fit.slope_stderr, fit.slope + 2.0 * fit.slope_stderr),
        scales: scales.to_vec(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{DiscreteMeasure, GridDensity, LatticeSpec};

    #[test]
    fn admissible_examples() {
        assert!((admissible_p(2, 1.5, 0.8).unwrap() - 1.2).abs() < 1e-12);
        assert!((admissible_p(2, 1.5, 0.75).unwrap() - 1.25).abs() < 1e-12);
        let err = admissible_p(2, 1.5, 0.4).unwrap_err().to_string();
        assert!(err.contains("2(d-1)-s < t < d-1"), "{err}");
        assert!(admissible_p(2, 2.0, 0.5).is_err());
    }

    #[test]
    fn params_record_the_overshoot() {
        let ok = ScanParams::new(2, 1.5, 0.8, 1.1).unwrap();
        assert_eq!(ok.delta_p, 0.0);
        assert!((ok.q - 11.0).abs() < 1e-12);
        let over = ScanParams::new(2, 1.5, 0.8, 1.5).unwrap();
        assert!((over.delta_p - 0.3).abs() < 1e-12);
        assert_eq!(over.bound(), 0.5);
    }

    #[test]
    fn ladder_lengths() {
        assert_eq!(default_doublings(2.0), 1);
        assert_eq!(default_doublings(1.2), 5);
        assert_eq!(default_doublings(1.01), 6);
    }

    #[test]
    fn box_dimension_of_segment_square_and_point() {
        let seg: Vec<Vec3> = (0..10_000).map(|i| [i as f64 / 10_000.0, 0.0, 0.0]).collect();
        let scales = dyadic_scales(1.0 / 256.0, 1.0 / 8.0);
        let d = box_dimension(&seg, &scales).unwrap();
        assert!((d.dimension - 1.0).abs() < 0.15, "{}", d.dimension);
        let sq: Vec<Vec3> = (0..10_000).map(|i| [(i / 100) as f64 / 100.0, (i % 100) as f64 / 100.0, 0.0]).collect();
        let d = box_dimension(&sq, &dyadic_scales(1.0 / 64.0, 1.0 / 4.0)).unwrap();
        assert!((d.dimension - 2.0).abs() < 0.15, "{}", d.dimension);
        assert_eq!(box_dimension(&[[0.3, 0.2, 0.0]], &scales).unwrap().dimension, 0.0);
        assert!(box_dimension(&seg[..5], &scales).is_err());
        assert!(box_dimension(&seg, &scales[..3]).is_err());
    }

    fn unit_square(n: usize) -> GridDensity {
        let h = 1.0 / n as f64;
        let lat = LatticeSpec::new(2, [-0.5 * h - h, -0.5 * h - h, 0.0], h, &[n + 3, n + 3]).unwrap();
        GridDensity::from_fn(lat, |p| if (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]) { 1.0 } else { 0.0 })
            .unwrap()
    }

    #[test]
    fn dirac_flags_everything_and_square_nothing() {
        let region = BoundingBox::new(2, [-2.0, -2.0, 0.0], [3.0, 3.0, 0.0]);
        let cfg = ScanConfig::new(region, 0.5, 1.2, 0.3);
        let base = Arc::new(make_sphere_grid(2, 90).unwrap());
        let dirac = DiscreteMeasure::dirac(2, [0.5, 0.5, 0.0]).unwrap();
        let r = scan_centres(&dirac, &cfg, &base).unwrap();
        assert_eq!(r.resolutions.len(), 6);
        assert_eq!(r.bad_set.len(), r.centres.len());
        assert_eq!(r.masked, 1);

        let sq = unit_square(32);
        let r = scan_centres(&sq, &cfg, &base).unwrap();
        assert!(r.bad_set.is_empty(), "{:?}", r.bad_set);
        for c in &r.centres {
            assert!(sq.support_distance(c) > cfg.margin);
        }
        // per-doubling stability
        for n in &r.norms {
            for w in n.windows(2) {
                assert!(w[1] / w[0] <= 1.1, "{n:?}");
            }
        }
        assert_eq!(extract_bad_set(&r, 1.0).unwrap().len(), r.centres.len());
    }

    #[test]
    fn fully_masked_region_is_an_error() {
        let region = BoundingBox::new(2, [0.4, 0.4, 0.0], [0.6, 0.6, 0.0]);
        let cfg = ScanConfig::new(region, 0.1, 2.0, 0.3);
        let base = Arc::new(make_sphere_grid(2, 90).unwrap());
        let dirac = DiscreteMeasure::dirac(2, [0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(scan_centres(&dirac, &cfg, &base), Err(Error::EmptyScan)));
    }
}
