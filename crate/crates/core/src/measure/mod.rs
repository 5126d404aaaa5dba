//! Discretized compactly supported measures in R^2 and R^3.
//!
//! Two representations are used throughout: [`DiscreteMeasure`], a weighted
//! point cloud, and [`GridDensity`], a nonnegative density sampled on a
//! regular lattice. Both implement [`MassSource`], which is what the
//! projection and energy pipelines consume.

mod grid;
mod ifs;
pub mod io;
mod mollify;

pub use grid::{GridDensity, LatticeSpec};
pub use ifs::{ifs_sample, AffineMap};
pub use mollify::{mollify, Mollifier, Profile};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{fmt_point, norm, pairwise_sum, sub, Vec3};

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDim(dim))
    }
}

/// Axis-aligned box; for planar data the third axis is degenerate at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub dim: usize,
    pub lo: Vec3,
    pub hi: Vec3,
}

impl BoundingBox {
    pub fn new(dim: usize, lo: Vec3, hi: Vec3) -> Self {
        Self { dim, lo, hi }
    }

    pub fn from_points<'a>(dim: usize, points: impl IntoIterator<Item = &'a Vec3>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut bb = Self::new(dim, first, first);
        for p in it {
            bb.include(p);
        }
        Some(bb)
    }

    pub fn include(&mut self, p: &Vec3) {
        for a in 0..self.dim {
            self.lo[a] = self.lo[a].min(p[a]);
            self.hi[a] = self.hi[a].max(p[a]);
        }
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        let mut out = *self;
        out.include(&other.lo);
        out.include(&other.hi);
        out
    }

    pub fn inflate(&self, r: f64) -> BoundingBox {
        let mut out = *self;
        for a in 0..self.dim {
            out.lo[a] -= r;
            out.hi[a] += r;
        }
        out
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        (0..self.dim).all(|a| other.lo[a] >= self.lo[a] && other.hi[a] <= self.hi[a])
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..self.dim).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }

    /// Euclidean distance from `x` to the box (0 inside).
    pub fn distance_to(&self, x: &Vec3) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.dim {
            let d = (self.lo[a] - x[a]).max(x[a] - self.hi[a]).max(0.0);
            acc += d * d;
        }
        acc.sqrt()
    }

    pub fn max_extent(&self) -> f64 {
        (0..self.dim).map(|a| self.hi[a] - self.lo[a]).fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec3 {
        let mut c = [0.0; 3];
        for a in 0..self.dim {
            c[a] = 0.5 * (self.lo[a] + self.hi[a]);
        }
        c
    }

    pub fn corners(&self) -> Vec<Vec3> {
        let n = 1usize << self.dim;
        (0..n)
            .map(|mask| {
                let mut c = [0.0; 3];
                for a in 0..self.dim {
                    c[a] = if mask & (1 << a) == 0 { self.lo[a] } else { self.hi[a] };
                }
                c
            })
            .collect()
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = (0..self.dim)
            .map(|a| format!("[{}, {}]", self.lo[a], self.hi[a]))
            .collect();
        parts.join(" x ")
    }
}

/// Stratified sampling parameters for continuous sources.
///
/// Each positive lattice cell is split into `per_axis^d` strata with one
/// sample per stratum, jittered or at the stratum midpoint. Jitter is a hash
/// of `(seed, cell, stratum)`, so results do not depend on iteration order or
/// thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub seed: u64,
    pub per_axis: usize,
    #[serde(default = "jitter_default")]
    pub jitter: bool,
}

fn jitter_default() -> bool {
    true
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            seed: 0,
            per_axis: 4,
            jitter: true,
        }
    }
}

impl Sampling {
    /// Stratum midpoints: a deterministic midpoint rule with no seed noise.
    pub fn midpoints(per_axis: usize) -> Self {
        Self {
            seed: 0,
            per_axis,
            jitter: false,
        }
    }
}

/// A finite collection of weighted positions standing in for a measure.
pub trait MassSource: Sync {
    fn dim(&self) -> usize;

    /// Box containing every sample the source can emit.
    fn support_box(&self) -> BoundingBox;

    /// Exact distance from `x` to the support (atoms, or positive cells).
    fn support_distance(&self, x: &Vec3) -> f64;

    /// Grid densities deposit into histograms linearly; atoms use nearest bins.
    fn is_smooth(&self) -> bool;

    /// Visit the representative atoms: points, or lattice nodes with cell masses.
    fn visit_atoms<F: FnMut(&Vec3, f64)>(&self, f: F);

    /// Visit quadrature samples. Atoms are emitted as-is; cells are stratified.
    fn visit_samples<F: FnMut(&Vec3, f64)>(&self, sampling: &Sampling, f: F);

    fn total_mass(&self) -> f64 {
        let mut masses = Vec::new();
        self.visit_atoms(|_, m| masses.push(m));
        pairwise_sum(&masses)
    }
}

/// Weighted point cloud, normalized to total mass 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<Vec3>,
    weights: Vec<f64>,
    total_mass: f64,
    bbox: BoundingBox,
}

impl DiscreteMeasure {
    /// Normalize `weights` to total mass 1; weights already summing to 1
    /// within 1e-12 are kept bit for bit, so serialized measures read back
    /// unchanged. Planar inputs have their third coordinate forced to zero.
    pub fn from_points(dim: usize, points: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if points.is_empty() {
            return Err(Error::Empty);
        }
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch {
                points: points.len(),
                weights: weights.len(),
            });
        }
        for (i, w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if *w < 0.0 {
                return Err(Error::NegativeWeight(i));
            }
        }
        let mut points = points;
        for (i, p) in points.iter_mut().enumerate() {
            if p[..dim].iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite(i));
            }
            if dim == 2 {
                p[2] = 0.0;
            }
        }
        let raw = pairwise_sum(&weights);
        if raw <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let weights: Vec<f64> = if (raw - 1.0).abs() <= 1e-12 {
            weights
        } else {
            weights.iter().map(|w| w / raw).collect()
        };
        Ok(Self::assemble(dim, points, weights))
    }

    /// Equal weights 1/n.
    pub fn uniform(dim: usize, points: Vec<Vec3>) -> Result<Self> {
        let n = points.len();
        Self::from_points(dim, points, vec![1.0; n])
    }

    pub fn dirac(dim: usize, at: Vec3) -> Result<Self> {
        Self::from_points(dim, vec![at], vec![1.0])
    }

    fn assemble(dim: usize, points: Vec<Vec3>, weights: Vec<f64>) -> Self {
        let total_mass = pairwise_sum(&weights);
        let bbox = BoundingBox::from_points(dim, &points).expect("non-empty");
        Self {
            dim,
            points,
            weights,
            total_mass,
            bbox,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn bounding_box(&self) -> BoundingBox {
        self.bbox
    }

    /// Apply `f` to every point, keeping the weights.
    pub fn map_points(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        let mut points: Vec<Vec3> = self.points.iter().map(f).collect();
        if self.dim == 2 {
            for p in &mut points {
                p[2] = 0.0;
            }
        }
        Self::assemble(self.dim, points, self.weights.clone())
    }

    pub fn translated(&self, v: &Vec3) -> Self {
        self.map_points(|p| crate::numeric::add(p, v))
    }
}

impl MassSource for DiscreteMeasure {
    fn dim(&self) -> usize {
        self.dim
    }

    fn support_box(&self) -> BoundingBox {
        self.bbox
    }

    fn support_distance(&self, x: &Vec3) -> f64 {
        self.points
            .iter()
            .map(|p| norm(&sub(p, x)))
            .fold(f64::INFINITY, f64::min)
    }

    fn is_smooth(&self) -> bool {
        false
    }

    fn visit_atoms<F: FnMut(&Vec3, f64)>(&self, mut f: F) {
        for (p, w) in self.points.iter().zip(&self.weights) {
            f(p, *w);
        }
    }

    fn visit_samples<F: FnMut(&Vec3, f64)>(&self, _sampling: &Sampling, f: F) {
        self.visit_atoms(f)
    }

    fn total_mass(&self) -> f64 {
        self.total_mass
    }
}

/// Reject `x` unless it lies at positive distance from the support.
pub(crate) fn require_outside<M: MassSource>(mu: &M, x: &Vec3) -> Result<f64> {
    let distance = mu.support_distance(x);
    if distance > 0.0 {
        Ok(distance)
    } else {
        Err(Error::InSupport {
            point: fmt_point(x, mu.dim()),
            distance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_normalize_to_half() {
        let mu = DiscreteMeasure::from_points(2, vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], vec![1.0, 1.0]).unwrap();
        assert_eq!(mu.weights(), &[0.5, 0.5]);
        assert_eq!(mu.total_mass(), 1.0);
    }

    #[test]
    fn single_point_is_a_dirac() {
        let mu = DiscreteMeasure::from_points(2, vec![[3.0, 4.0, 0.0]], vec![7.0]).unwrap();
        assert_eq!(mu.weights(), &[1.0]);
        assert_eq!(mu.bounding_box().lo, [3.0, 4.0, 0.0]);
    }

    #[test]
    fn negative_weight_is_rejected_with_index() {
        let err = DiscreteMeasure::from_points(2, vec![[0.0; 3], [1.0, 0.0, 0.0]], vec![1.0, -1.0]).unwrap_err();
        assert_eq!(err.to_string(), "negative weight at index 1");
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(matches!(DiscreteMeasure::from_points(2, vec![], vec![]), Err(Error::Empty)));
        assert!(matches!(
            DiscreteMeasure::from_points(2, vec![[f64::NAN, 0.0, 0.0]], vec![1.0]),
            Err(Error::NonFinite(0))
        ));
        assert!(matches!(
            DiscreteMeasure::from_points(2, vec![[0.0; 3]], vec![0.0]),
            Err(Error::ZeroMass)
        ));
        assert!(matches!(
            DiscreteMeasure::from_points(4, vec![[0.0; 3]], vec![1.0]),
            Err(Error::UnsupportedDim(4))
        ));
    }

    #[test]
    fn support_distance_of_dirac_is_euclidean() {
        let mu = DiscreteMeasure::dirac(2, [0.0; 3]).unwrap();
        assert_eq!(mu.support_distance(&[3.0, 4.0, 0.0]), 5.0);
        assert_eq!(mu.support_distance(&[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn box_distance() {
        let bb = BoundingBox::new(2, [0.0, 0.0, 0.0], [1.0, 1.0, 0.0]);
        assert_eq!(bb.distance_to(&[2.0, 0.5, 0.0]), 1.0);
        assert_eq!(bb.distance_to(&[0.5, 0.5, 0.0]), 0.0);
        assert_eq!(bb.corners().len(), 4);
    }
}
