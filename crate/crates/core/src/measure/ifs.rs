use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::numeric::Vec3;

/// Affine map `x -> linear * x + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub linear: [[f64; 3]; 3],
    pub translation: Vec3,
}

impl AffineMap {
    pub fn new(linear: [[f64; 3]; 3], translation: Vec3) -> Self {
        Self { linear, translation }
    }

    /// `x -> ratio * x + translation`.
    pub fn similarity(ratio: f64, translation: Vec3) -> Self {
        let mut linear = [[0.0; 3]; 3];
        for (a, row) in linear.iter_mut().enumerate() {
            row[a] = ratio;
        }
        Self { linear, translation }
    }

    #[inline]
    pub fn apply(&self, x: &Vec3) -> Vec3 {
        let mut out = self.translation;
        for (a, row) in self.linear.iter().enumerate() {
            out[a] += row[0] * x[0] + row[1] * x[1] + row[2] * x[2];
        }
        out
    }

    /// Operator 2-norm of the linear part restricted to the first `dim` axes.
    pub fn contraction_ratio(&self, dim: usize) -> f64 {
        // power iteration on A^T A
        let a = &self.linear;
        let mut v = [1.0, 0.7, 0.3];
        let mut lambda = 0.0;
        for _ in 0..200 {
            let mut av = [0.0; 3];
            for i in 0..dim {
                for j in 0..dim {
                    av[i] += a[i][j] * v[j];
                }
            }
            let mut atav = [0.0; 3];
            for j in 0..dim {
                for i in 0..dim {
                    atav[j] += a[i][j] * av[i];
                }
            }
            let n = atav[..dim].iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                return 0.0;
            }
            lambda = n;
            for j in 0..dim {
                v[j] = atav[j] / n;
            }
        }
        lambda.sqrt()
    }
}

/// Chaos-game sample of the attractor of an iterated function system.
///
/// Maps are chosen uniformly; the orbit starts at the origin and the first
/// 64 iterates are discarded. Output is deterministic in `seed`.
pub fn ifs_sample(dim: usize, maps: &[AffineMap], n: usize, seed: u64) -> Result<DiscreteMeasure> {
    check_dim(dim)?;
    if maps.is_empty() || n == 0 {
        return Err(Error::Empty);
    }
    for (index, m) in maps.iter().enumerate() {
        let ratio = m.contraction_ratio(dim);
        if !(ratio < 1.0) {
            return Err(Error::NonContracting { index, ratio });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = [0.0; 3];
    for _ in 0..64 {
        x = maps[rng.gen_range(0..maps.len())].apply(&x);
    }
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        x = maps[rng.gen_range(0..maps.len())].apply(&x);
        points.push(x);
    }
    DiscreteMeasure::uniform(dim, points)
}
