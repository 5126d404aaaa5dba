//! Riesz energies, Fourier-side Sobolev energies, Frostman exponents and the
//! Kaufman sphere integral.

mod fourier;
mod frostman;
mod grid;
mod kaufman;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fourier::fourier_sobolev;
pub use frostman::{frostman_exponent, frostman_holder_check, normalize_lq, FrostmanEstimate, FrostmanSource};
pub use grid::{cell_pair_mean, riesz_energy_grid};
pub use kaufman::{kaufman_integral, KaufmanValue};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::numeric::{pairwise_sum, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Direct off-diagonal sum over atom pairs.
    SpatialPairwise,
    /// Cell-pair quadrature on a lattice, evaluated by FFT convolution.
    SpatialGrid,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub exponent: f64,
    /// Infinite when `divergent` is set (serialized as null).
    pub value: f64,
    pub method: Method,
    pub resolution: String,
    pub error_estimate: f64,
    #[serde(default)]
    pub divergent: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl EnergyReport {
    pub(crate) fn divergent(exponent: f64, method: Method, resolution: String, why: String) -> Self {
        Self {
            exponent,
            value: f64::INFINITY,
            method,
            resolution,
            error_estimate: f64::INFINITY,
            divergent: true,
            warnings: vec![why],
        }
    }
}

#[inline]
pub(crate) fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

/// `sum_{i != j} w_i w_j |y_i - y_j|^{-s}`.
///
/// The error estimate is the standard error of the row means, i.e. the
/// spread of the per-atom potentials divided by sqrt(n).
pub fn riesz_energy(mu: &DiscreteMeasure, s: f64) -> Result<EnergyReport> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("Riesz exponent must be positive, got {s}")));
    }
    let pts = mu.points();
    let w = mu.weights();
    let n = pts.len();
    let half_s = -0.5 * s;
    let rows: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = &pts[i];
            let mut acc = 0.0;
            let mut coincident = false;
            for (j, q) in pts.iter().enumerate() {
                if j == i {
                    continue;
                }
                let r2 = dist2(p, q);
                if r2 == 0.0 {
                    coincident = true;
                } else {
                    acc += w[j] * r2.powf(half_s);
                }
            }
            (acc, coincident)
        })
        .collect();
    let resolution = format!("{n} atoms");
    if rows.iter().any(|r| r.1) {
        return Ok(EnergyReport::divergent(
            s,
            Method::SpatialPairwise,
            resolution,
            "coincident distinct atoms".into(),
        ));
    }
    let terms: Vec<f64> = rows.iter().zip(w).map(|((row, _), wi)| wi * row).collect();
    let value = pairwise_sum(&terms);
    let error_estimate = if n > 1 {
        let scaled: Vec<f64> = terms.iter().map(|t| t * n as f64).collect();
        let mean = pairwise_sum(&scaled) / n as f64;
        let var: Vec<f64> = scaled.iter().map(|t| (t - mean) * (t - mean)).collect();
        (pairwise_sum(&var) / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    } else {
        0.0
    };
    Ok(EnergyReport {
        exponent: s,
        value,
        method: Method::SpatialPairwise,
        resolution,
        error_estimate,
        divergent: false,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_atoms() {
        let mu = DiscreteMeasure::uniform(2, vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        let r = riesz_energy(&mu, 1.0).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_atom_has_zero_energy() {
        let mu = DiscreteMeasure::dirac(3, [1.0, 2.0, 3.0]).unwrap();
        assert_eq!(riesz_energy(&mu, 1.5).unwrap().value, 0.0);
    }

    #[test]
    fn coincident_atoms_are_flagged() {
        let mu = DiscreteMeasure::from_points(2, vec![[0.0; 3], [0.0; 3], [1.0, 0.0, 0.0]], vec![1.0; 3]).unwrap();
        let r = riesz_energy(&mu, 0.5).unwrap();
        assert!(r.divergent && r.value.is_infinite());
        assert!(riesz_energy(&mu, 0.0).is_err());
    }

    #[test]
    fn uniform_segment_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = (0..2000).map(|_| [rng.gen::<f64>(), 0.0, 0.0]).collect();
        let mu = DiscreteMeasure::uniform(2, pts).unwrap();
        let r = riesz_energy(&mu, 0.5).unwrap();
        let exact = 2.0 / (0.5 * 1.5);
        assert!((r.value - exact).abs() / exact < 0.02, "{}", r.value);
        assert!(r.error_estimate > 0.0 && r.error_estimate < 0.1);
    }
}
