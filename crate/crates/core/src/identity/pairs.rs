//! Analytic test densities and the bundled measure pairs.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measure::{BoundingBox, DiscreteMeasure, GridDensity, LatticeSpec};
use crate::numeric::Vec3;

/// Truncation radius of Gaussian components, in standard deviations.
const CUTOFF: f64 = 6.0;

/// Planar density given in closed form, rasterized on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothDensity {
    /// Weighted isotropic Gaussians `(center, sigma, weight)`, each cut off at
    /// six standard deviations.
    Gaussians(Vec<([f64; 2], f64, f64)>),
    /// `exp(-1 / (1 - u^2))` in `u = (|y - center| - radius) / half_width`.
    Annulus { center: [f64; 2], radius: f64, half_width: f64 },
}

impl SmoothDensity {
    pub fn eval(&self, p: &Vec3) -> f64 {
        match self {
            SmoothDensity::Gaussians(parts) => parts
                .iter()
                .map(|(c, sigma, w)| {
                    let r2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                    if r2 < (CUTOFF * sigma).powi(2) {
                        w * (-r2 / (2.0 * sigma * sigma)).exp() / (2.0 * std::f64::consts::PI * sigma * sigma)
                    } else {
                        0.0
                    }
                })
                .sum(),
            SmoothDensity::Annulus { center, radius, half_width } => {
                let r = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                let u = (r - radius) / half_width;
                if u.abs() < 1.0 {
                    (-1.0 / (1.0 - u * u)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn support_box(&self) -> BoundingBox {
        match self {
            SmoothDensity::Gaussians(parts) => {
                let mut bb: Option<BoundingBox> = None;
                for (c, sigma, _) in parts {
                    let r = CUTOFF * sigma;
                    let b = BoundingBox::new(2, [c[0] - r, c[1] - r, 0.0], [c[0] + r, c[1] + r, 0.0]);
                    bb = Some(match bb {
                        Some(a) => a.union(&b),
                        None => b,
                    });
                }
                bb.expect("at least one component")
            }
            SmoothDensity::Annulus { center, radius, half_width } => {
                let r = radius + half_width;
                BoundingBox::new(2, [center[0] - r, center[1] - r, 0.0], [center[0] + r, center[1] + r, 0.0])
            }
        }
    }

    /// Rasterize on an `n x n` lattice whose interior covers the support.
    pub fn grid(&self, n: usize) -> Result<GridDensity> {
        let bb = self.support_box();
        let lattice = LatticeSpec::covering(&bb, 0.01 * bb.max_extent(), n)?;
        GridDensity::from_fn(lattice, |p| self.eval(p))
    }
}

/// A smooth `mu` and an atomic `nu` with disjoint supports.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPair {
    pub name: &'static str,
    pub mu: SmoothDensity,
    pub nu: DiscreteMeasure,
}

/// `k x k` lattice of atoms over `center +- 2.5 sigma` with Gaussian weights.
fn gaussian_atoms(center: [f64; 2], sigma: f64, k: usize, mass: f64, points: &mut Vec<Vec3>, weights: &mut Vec<f64>) {
    let mut local = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let u = -2.5 + 5.0 * i as f64 / (k - 1) as f64;
            let v = -2.5 + 5.0 * j as f64 / (k - 1) as f64;
            points.push([center[0] + u * sigma, center[1] + v * sigma, 0.0]);
            local.push((-(u * u + v * v) / 2.0).exp());
        }
    }
    let total: f64 = local.iter().sum();
    weights.extend(local.iter().map(|w| mass * w / total));
}

/// The three planar pairs used by the identity checks.
pub fn bundled_pairs() -> Vec<TestPair> {
    let mut pairs = Vec::new();

    let mut pts = Vec::new();
    let mut ws = Vec::new();
    gaussian_atoms([2.2, 0.1], 0.12, 7, 0.5, &mut pts, &mut ws);
    gaussian_atoms([1.8, -0.6], 0.1, 7, 0.5, &mut pts, &mut ws);
    pairs.push(TestPair {
        name: "gaussian-mixtures",
        mu: SmoothDensity::Gaussians(vec![([0.0, 0.0], 0.15, 0.6), ([0.5, 0.3], 0.1, 0.4)]),
        nu: DiscreteMeasure::from_points(2, pts, ws).expect("valid atoms"),
    });

    let mut pts = Vec::new();
    let mut ws = Vec::new();
    gaussian_atoms([0.1, -0.05], 0.1, 7, 1.0, &mut pts, &mut ws);
    pairs.push(TestPair {
        name: "annulus-bump",
        mu: SmoothDensity::Annulus {
            center: [0.0, 0.0],
            radius: 1.0,
            half_width: 0.2,
        },
        nu: DiscreteMeasure::from_points(2, pts, ws).expect("valid atoms"),
    });

    pairs.push(TestPair {
        name: "three-bumps-two-atoms",
        mu: SmoothDensity::Gaussians(vec![
            ([0.0, 0.0], 0.1, 0.3),
            ([0.6, 0.2], 0.08, 0.3),
            ([0.2, 0.7], 0.12, 0.4),
        ]),
        nu: DiscreteMeasure::from_points(2, vec![[2.0, 0.5, 0.0], [-1.2, 1.5, 0.0]], vec![0.5, 0.5])
            .expect("valid atoms"),
    });
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::MassSource;

    #[test]
    fn pairs_have_disjoint_supports() {
        for pair in bundled_pairs() {
            let mu = pair.mu.grid(128).unwrap();
            for x in pair.nu.points() {
                assert!(mu.support_distance(x) > 0.05, "{}", pair.name);
            }
        }
    }

    #[test]
    fn gaussian_mixture_integrates_to_its_weights() {
        let d = SmoothDensity::Gaussians(vec![([0.0, 0.0], 0.2, 0.25), ([1.0, 0.0], 0.1, 0.75)]);
        let lat = LatticeSpec::covering(&d.support_box(), 0.05, 400).unwrap();
        let raw: f64 = (0..lat.len()).map(|i| d.eval(&lat.node(lat.unravel(i)))).sum::<f64>() * lat.cell_volume();
        assert!((raw - 1.0).abs() < 1e-6);
    }
}
