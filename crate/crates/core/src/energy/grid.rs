//! Riesz energy of a lattice density.
//!
//! Mass is spread uniformly over each cell, so the energy is
//! `sum_ij m_i m_j K(i - j)` where `K(k)` is the mean of `|x - y|^{-s}` over
//! `x` in cell 0 and `y` in cell `k`. Writing `y - x = h (k + u)`, `u` has the
//! tensor triangle density `prod (1 - |u_a|)` on `[-1, 1]^d`. Near offsets are
//! integrated exactly up to quadrature error; far offsets use the second-order
//! expansion of the mean. The double sum is a convolution, done by FFT.

use std::collections::HashMap;

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use super::{EnergyReport, Method};
use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::measure::GridDensity;
use crate::numeric::{gauss_legendre, pairwise_sum};

/// Offsets with every |k_a| up to this bound use the exact cell-pair mean.
const NEAR: i64 = 4;

/// Mean of `|k + u|^{-s}` for `u` triangle-distributed on `[-1, 1]^dim`
/// (lattice units).
pub fn cell_pair_mean(dim: usize, k: [i64; 3], s: f64) -> f64 {
    if k[..dim].iter().all(|a| a.abs() <= NEAR) {
        near_mean(dim, k, s)
    } else {
        far_mean(dim, k, s)
    }
}

fn far_mean(dim: usize, k: [i64; 3], s: f64) -> f64 {
    let r2: f64 = k[..dim].iter().map(|&a| (a * a) as f64).sum();
    // E|k+u|^{-s} ~ |k|^{-s} + (1/2) sum Var(u_a) d_a^2 |k|^{-s}, Var = 1/6
    r2.powf(-0.5 * s) * (1.0 + s * (s + 2.0 - dim as f64) / (12.0 * r2))
}

fn near_mean(dim: usize, k: [i64; 3], s: f64) -> f64 {
    let rule = gauss_legendre(16);
    let (nodes, weights): (Vec<f64>, Vec<f64>) = (
        rule.0.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        rule.1.iter().map(|w| 0.5 * w).collect(),
    );
    let mut total = 0.0;
    for mask in 0..(1usize << dim) {
        let sigma: Vec<i64> = (0..dim).map(|a| if mask >> a & 1 == 1 { 1 } else { -1 }).collect();
        let singular = (0..dim).all(|a| k[a] == 0 || k[a] == -sigma[a]);
        if singular {
            // singular vertex of this orthant; weight is v or 1 - v per axis
            let linear: Vec<bool> = (0..dim).map(|a| k[a] != 0).collect();
            total += duffy(dim, &linear, s, &nodes, &weights);
        } else {
            total += tensor_gauss(dim, |t| {
                let mut r2 = 0.0;
                let mut w = 1.0;
                for a in 0..dim {
                    let u = sigma[a] as f64 * t[a];
                    let c = k[a] as f64 + u;
                    r2 += c * c;
                    w *= 1.0 - t[a];
                }
                w * r2.powf(-0.5 * s)
            }, &nodes, &weights);
        }
    }
    total
}

fn tensor_gauss(dim: usize, f: impl Fn(&[f64; 3]) -> f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let n = nodes.len();
    let mut acc = 0.0;
    let count = n.pow(dim as u32);
    for idx in 0..count {
        let mut t = [0.0; 3];
        let mut w = 1.0;
        let mut rem = idx;
        for slot in t.iter_mut().take(dim) {
            *slot = nodes[rem % n];
            w *= weights[rem % n];
            rem /= n;
        }
        acc += w * f(&t);
    }
    acc
}

/// `int_{[0,1]^dim} prod g_a(v_a) |v|^{-s} dv` with `g_a(v) = v` when
/// `linear[a]`, else `1 - v`. Each pyramid `v = xi * w` (largest axis of `w`
/// equal to 1) has a polynomial radial integrand that is integrated exactly.
fn duffy(dim: usize, linear: &[bool], s: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let mut total = 0.0;
    for m in 0..dim {
        let others: Vec<usize> = (0..dim).filter(|&a| a != m).collect();
        total += tensor_gauss(dim - 1, |t| {
            let mut w = [0.0; 3];
            w[m] = 1.0;
            for (slot, &a) in others.iter().enumerate() {
                w[a] = t[slot];
            }
            let mut coef = [0.0; 4];
            coef[0] = 1.0;
            let mut deg = 0;
            for a in 0..dim {
                let (c0, c1) = if linear[a] { (0.0, w[a]) } else { (1.0, -w[a]) };
                for j in (0..=deg + 1).rev() {
                    let lower = if j > 0 { coef[j - 1] } else { 0.0 };
                    coef[j] = coef[j] * c0 + lower * c1;
                }
                deg += 1;
            }
            let radial: f64 = (0..=deg).map(|j| coef[j] / (dim as f64 - s + j as f64)).sum();
            let r2: f64 = w[..dim].iter().map(|x| x * x).sum();
            r2.powf(-0.5 * s) * radial
        }, nodes, weights);
    }
    total
}

/// `sum_ij m_i m_j K(i - j) h^{-s}` on a lattice of the given shape.
fn lattice_energy(dim: usize, masses: &[f64], shape: [usize; 3], spacing: f64, s: f64) -> f64 {
    let mut padded = [1usize; 3];
    for a in 0..dim {
        padded[a] = 2 * shape[a];
    }
    let total: usize = padded.iter().product();
    let hs = spacing.powf(-s);

    let mut table: HashMap<[i64; 3], f64> = HashMap::new();
    let mut kernel = vec![Complex64::new(0.0, 0.0); total];
    for (p, slot) in kernel.iter_mut().enumerate() {
        let idx = [p / (padded[1] * padded[2]), (p / padded[2]) % padded[1], p % padded[2]];
        let mut k = [0i64; 3];
        let mut reachable = true;
        for a in 0..dim {
            let i = idx[a] as i64;
            let n = shape[a] as i64;
            k[a] = if i < n { i } else { i - 2 * n };
            if k[a] == -n {
                reachable = false;
            }
        }
        if !reachable {
            continue;
        }
        let v = if k[..dim].iter().all(|a| a.abs() <= NEAR) {
            let mut key = [0i64; 3];
            for a in 0..dim {
                key[a] = k[a].abs();
            }
            key[..dim].sort_unstable();
            *table.entry(key).or_insert_with(|| near_mean(dim, key, s))
        } else {
            far_mean(dim, k, s)
        };
        *slot = Complex64::new(v * hs, 0.0);
    }

    let mut field = vec![Complex64::new(0.0, 0.0); total];
    for (i, m) in masses.iter().enumerate() {
        let i0 = i / (shape[1] * shape[2]);
        let i1 = (i / shape[2]) % shape[1];
        let i2 = i % shape[2];
        field[(i0 * padded[1] + i1) * padded[2] + i2] = Complex64::new(*m, 0.0);
    }
    fft_nd(&mut kernel, padded, FftDirection::Forward);
    fft_nd(&mut field, padded, FftDirection::Forward);
    for (f, k) in field.iter_mut().zip(&kernel) {
        *f *= k;
    }
    fft_nd(&mut field, padded, FftDirection::Inverse);
    let terms: Vec<f64> = masses
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let i0 = i / (shape[1] * shape[2]);
            let i1 = (i / shape[2]) % shape[1];
            let i2 = i % shape[2];
            m * field[(i0 * padded[1] + i1) * padded[2] + i2].re / total as f64
        })
        .collect();
    pairwise_sum(&terms).max(0.0)
}

fn coarsen(dim: usize, masses: &[f64], shape: [usize; 3]) -> (Vec<f64>, [usize; 3]) {
    let mut coarse = [1usize; 3];
    for a in 0..dim {
        coarse[a] = shape[a].div_ceil(2);
    }
    let mut out = vec![0.0; coarse.iter().product()];
    for (i, m) in masses.iter().enumerate() {
        let i0 = i / (shape[1] * shape[2]) / 2;
        let i1 = (i / shape[2]) % shape[1] / 2;
        let i2 = if dim == 3 { i % shape[2] / 2 } else { 0 };
        out[(i0 * coarse[1] + i1) * coarse[2] + i2] += m;
    }
    (out, coarse)
}

/// Riesz `s`-energy of a lattice density. The error estimate is the change
/// against the same computation on the twice-coarser lattice.
pub fn riesz_energy_grid(mu: &GridDensity, s: f64) -> Result<EnergyReport> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("Riesz exponent must be positive, got {s}")));
    }
    let l = mu.lattice();
    let dim = l.dim;
    let resolution = format!(
        "{} cells, h={}",
        l.shape[..dim].iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x"),
        l.spacing
    );
    if s >= dim as f64 {
        return Ok(EnergyReport::divergent(
            s,
            Method::SpatialGrid,
            resolution,
            format!("s = {s} >= d = {dim}: the kernel is not locally integrable"),
        ));
    }
    let vol = l.cell_volume();
    let masses: Vec<f64> = mu.values().iter().map(|v| v * vol).collect();
    let value = lattice_energy(dim, &masses, l.shape, l.spacing, s);
    let (coarse, cshape) = coarsen(dim, &masses, l.shape);
    let coarse_value = lattice_energy(dim, &coarse, cshape, 2.0 * l.spacing, s);
    Ok(EnergyReport {
        exponent: s,
        value,
        method: Method::SpatialGrid,
        resolution,
        error_estimate: (value - coarse_value).abs(),
        divergent: false,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::LatticeSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_exponent_mean_is_one() {
        for dim in [2, 3] {
            for k in [[0, 0, 0], [1, 0, 0], [1, 1, 1], [3, -2, 0]] {
                assert!((near_mean(dim, k, 0.0) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn self_cell_mean_matches_monte_carlo() {
        // oracle: sample two uniform points in the unit cell
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (dim, s) in [(2usize, 1.0f64), (2, 1.5), (3, 1.0)] {
            let n = 2_000_000;
            let mut acc = 0.0;
            for _ in 0..n {
                let mut r2 = 0.0;
                for _ in 0..dim {
                    let d = rng.gen::<f64>() - rng.gen::<f64>();
                    r2 += d * d;
                }
                acc += r2.powf(-0.5 * s);
            }
            let mc = acc / n as f64;
            let exact = near_mean(dim, [0, 0, 0], s);
            // heavy tail at s = 1.5 in the plane: loose bound
            assert!((mc - exact).abs() / exact < 0.02, "d={dim} s={s}: {mc} vs {exact}");
        }
    }

    #[test]
    fn far_expansion_joins_the_exact_mean() {
        for (dim, s) in [(2usize, 0.5f64), (2, 1.5), (3, 1.2)] {
            let exact = near_mean(dim, [4, 3, 0], s);
            let far = far_mean(dim, [4, 3, 0], s);
            assert!((exact - far).abs() / exact < 5e-4, "{exact} {far}");
        }
    }

    fn bump(lat: LatticeSpec, c: [f64; 2], sigma: f64) -> Vec<f64> {
        (0..lat.len())
            .map(|i| {
                let idx = lat.unravel(i);
                let p = lat.node(idx);
                let r2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                if lat.is_boundary(idx) || r2 > (4.0 * sigma).powi(2) {
                    0.0
                } else {
                    (-r2 / (2.0 * sigma * sigma)).exp()
                }
            })
            .collect()
    }

    #[test]
    fn distant_bumps_follow_the_far_field() {
        let s = 1.0;
        let sigma = 0.05;
        let lat = LatticeSpec::cube(2, &[-0.5, -0.5, 0.0], 5.0, 250).unwrap();
        let a = bump(lat, [0.0, 0.0], sigma);
        let b = bump(lat, [4.0, 0.0], sigma);
        let single = riesz_energy_grid(&GridDensity::from_values(lat, a.clone()).unwrap(), s).unwrap().value;
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let pair = riesz_energy_grid(&GridDensity::from_values(lat, sum).unwrap(), s).unwrap().value;
        // two halves: 2 * (1/4) * self + 2 * (1/4) * R^{-s}, to O((sigma/R)^2)
        let expected = 0.5 * single + 0.5 * 4f64.powf(-s);
        assert!((pair - expected).abs() / expected < 1e-3, "{pair} vs {expected}");
    }

    #[test]
    fn gaussian_self_convergence() {
        let s = 1.2;
        let make = |n: usize| {
            let lat = LatticeSpec::cube(2, &[-1.0, -1.0, 0.0], 2.0, n).unwrap();
            GridDensity::from_values(lat, bump(lat, [0.0, 0.0], 0.2)).unwrap()
        };
        let e128 = riesz_energy_grid(&make(128), s).unwrap();
        let e256 = riesz_energy_grid(&make(256), s).unwrap();
        assert!((e128.value - e256.value).abs() / e256.value < 0.02);
        assert!(e256.error_estimate < 0.02 * e256.value);
    }

    #[test]
    fn supercritical_exponent_is_divergent() {
        let lat = LatticeSpec::cube(2, &[-1.0, -1.0, 0.0], 2.0, 16).unwrap();
        let g = GridDensity::from_values(lat, bump(lat, [0.0, 0.0], 0.3)).unwrap();
        let r = riesz_energy_grid(&g, 2.0).unwrap();
        assert!(r.divergent && r.value.is_infinite());
    }

    #[test]
    fn three_dimensional_lattice() {
        // uniform cube of side 1: compare with the cell-pair formula at one cell per axis
        let lat = LatticeSpec::cube(3, &[-0.25, -0.25, -0.25], 1.5, 24).unwrap();
        let g = GridDensity::from_fn(lat, |p| {
            if p.iter().all(|c| (0.0..=1.0).contains(c)) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let r = riesz_energy_grid(&g, 1.0).unwrap();
        // oracle: the same cube as a single cell of side 1
        let exact = near_mean(3, [0, 0, 0], 1.0);
        assert!((r.value - exact).abs() / exact < 1e-3, "{} vs {exact}", r.value);
    }
}
