//! Ball-mass scaling exponents and the Hoelder ball bound on the sphere.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dist2;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::numeric::{fit_line, pairwise_sum, Vec3};
use crate::sphere::{geodesic, SphereDensity};

#[derive(Debug, Clone, Copy)]
pub enum FrostmanSource<'a> {
    Points(&'a DiscreteMeasure),
    Sphere(&'a SphereDensity),
}

impl<'a> From<&'a DiscreteMeasure> for FrostmanSource<'a> {
    fn from(m: &'a DiscreteMeasure) -> Self {
        FrostmanSource::Points(m)
    }
}

impl<'a> From<&'a SphereDensity> for FrostmanSource<'a> {
    fn from(f: &'a SphereDensity) -> Self {
        FrostmanSource::Sphere(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrostmanEstimate {
    pub exponent: f64,
    pub stderr: f64,
    pub radii: Vec<f64>,
    /// Largest ball mass found at each radius.
    pub ball_masses: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Least-squares slope of `log sup_x mu(B(x, r))` against `log r`.
///
/// Balls are centred at atoms (bin centres on the sphere). Sphere balls are
/// geodesic and contain the bins whose centres they cover.
pub fn frostman_exponent<'a>(source: impl Into<FrostmanSource<'a>>, radii: &[f64]) -> Result<FrostmanEstimate> {
    if radii.len() < 3 || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParameter("need at least 3 positive radii".into()));
    }
    let (lo, hi) = radii
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(*r), hi.max(*r)));
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!("radii must span a decade, got [{lo}, {hi}]")));
    }
    let source = source.into();
    let degenerate = match source {
        FrostmanSource::Points(m) => m.points().iter().all(|p| *p == m.points()[0]),
        FrostmanSource::Sphere(f) => f.values().iter().filter(|v| **v > 0.0).count() <= 1,
    };
    if degenerate {
        return Ok(FrostmanEstimate {
            exponent: 0.0,
            stderr: 0.0,
            radii: radii.to_vec(),
            ball_masses: vec![1.0; radii.len()],
            warnings: vec!["degenerate measure (single atom): exponent 0".into()],
        });
    }
    let ball_masses: Vec<f64> = radii
        .iter()
        .map(|&r| match source {
            FrostmanSource::Points(m) => sup_ball_points(m, r),
            FrostmanSource::Sphere(f) => sup_ball_sphere(f, r),
        })
        .collect();
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = ball_masses.iter().map(|m| m.ln()).collect();
    let fit = fit_line(&xs, &ys);
    Ok(FrostmanEstimate {
        exponent: fit.slope,
        stderr: fit.slope_stderr,
        radii: radii.to_vec(),
        ball_masses,
        warnings: Vec::new(),
    })
}

fn cell_of(p: &Vec3, r: f64) -> (i64, i64, i64) {
    (
        (p[0] / r).floor() as i64,
        (p[1] / r).floor() as i64,
        (p[2] / r).floor() as i64,
    )
}

fn sup_ball_points(m: &DiscreteMeasure, r: f64) -> f64 {
    let pts = m.points();
    let w = m.weights();
    let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        cells.entry(cell_of(p, r)).or_default().push(i);
    }
    let r2 = r * r;
    let dz: &[i64] = if m.dim() == 3 { &[-1, 0, 1] } else { &[0] };
    pts.par_iter()
        .map(|p| {
            let (cx, cy, cz) = cell_of(p, r);
            let mut acc = 0.0;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for &z in dz {
                        if let Some(list) = cells.get(&(cx + dx, cy + dy, cz + z)) {
                            for &j in list {
                                if dist2(p, &pts[j]) <= r2 {
                                    acc += w[j];
                                }
                            }
                        }
                    }
                }
            }
            acc
        })
        .reduce(|| 0.0, f64::max)
}

fn sup_ball_sphere(f: &SphereDensity, r: f64) -> f64 {
    let grid = f.grid();
    let centers = grid.centers();
    let masses: Vec<f64> = f.values().iter().zip(grid.areas()).map(|(v, a)| v * a).collect();
    (0..centers.len())
        .into_par_iter()
        .map(|i| {
            let inside: Vec<f64> = centers
                .iter()
                .zip(&masses)
                .filter(|(c, _)| geodesic(&centers[i], c) <= r)
                .map(|(_, m)| *m)
                .collect();
            pairwise_sum(&inside)
        })
        .reduce(|| 0.0, f64::max)
}

/// Both sides of `int_B f^p <= area(B)^{2-p} (int f^q)^{p-1}` over the
/// geodesic ball `B(center, r)`, with `q = p / (p - 1)`. The ball is the set
/// of bins whose centres it covers.
pub fn frostman_holder_check(f: &SphereDensity, p: f64, center: &Vec3, r: f64) -> Result<(f64, f64)> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::InvalidParameter(format!("exponent must lie in (1, 2), got {p}")));
    }
    let q = p / (p - 1.0);
    let grid = f.grid();
    let mut inside = Vec::new();
    let mut area = Vec::new();
    let mut lq = Vec::new();
    for ((c, a), v) in grid.centers().iter().zip(grid.areas()).zip(f.values()) {
        lq.push(v.powf(q) * a);
        if geodesic(center, c) <= r {
            inside.push(v.powf(p) * a);
            area.push(*a);
        }
    }
    let lhs = pairwise_sum(&inside);
    let rhs = pairwise_sum(&area).powf(2.0 - p) * pairwise_sum(&lq).powf(p - 1.0);
    Ok((lhs, rhs))
}

/// Rescale `f` to unit `L^q` norm.
pub fn normalize_lq(f: &SphereDensity, q: f64) -> Result<SphereDensity> {
    let norm = crate::sphere::lp_norm_sphere(f, q)?;
    if !(norm > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok(f.scaled(1.0 / norm))
}
