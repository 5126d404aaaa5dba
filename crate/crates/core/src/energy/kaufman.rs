//! `int_S |pi_e(x) - pi_e(y)|^{-t} d sigma(e)` for a piecewise-constant
//! density `sigma` on the sphere.
//!
//! With `v = x - y`, `|pi_e(v)| = |v| sin(angle(e, v))`, singular where `e`
//! is parallel to `v`. On the circle the singular directions split their bins
//! and each half is integrated with the substitution that cancels the
//! endpoint singularity. Other bins, and all of S^2, use adaptive
//! subdivision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre, norm, pairwise_sum, sub, Vec3};
use crate::sphere::{longitude, SphereDensity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KaufmanValue {
    pub value: f64,
    /// Sum over bins of the last refinement change.
    pub error_estimate: f64,
}

const REL_TOL: f64 = 1e-3;
const MAX_DEPTH: usize = 8;

pub fn kaufman_integral(x: &Vec3, y: &Vec3, t: f64, sigma: &SphereDensity) -> Result<KaufmanValue> {
    let grid = sigma.grid();
    let dim = grid.dim();
    let v = sub(x, y);
    let r = norm(&v);
    if !(r > 0.0) {
        return Err(Error::InvalidParameter("x and y must be distinct".into()));
    }
    if !(t > 0.0 && t < (dim - 1) as f64) {
        return Err(Error::InvalidParameter(format!(
            "exponent must lie in (0, {}) for the integral to converge, got {t}",
            dim - 1
        )));
    }
    let rule = gauss_legendre(16);
    let mut parts = Vec::new();
    let mut errors = Vec::new();
    for (i, &density) in sigma.values().iter().enumerate() {
        if density == 0.0 {
            continue;
        }
        let (z_lo, z_hi, p_lo, p_hi) = grid.bin_rect(i);
        let (val, err) = if dim == 2 {
            arc_integral(p_lo, p_hi, longitude(&v), t, &rule)
        } else {
            let axis = [v[0] / r, v[1] / r, v[2] / r];
            patch_integral(z_lo, z_hi, p_lo, p_hi, &axis, t)
        };
        parts.push(density * val);
        errors.push(density * err);
    }
    let scale = r.powf(-t);
    Ok(KaufmanValue {
        value: scale * pairwise_sum(&parts),
        error_estimate: scale * pairwise_sum(&errors),
    })
}

/// `int_a^b |sin(theta - psi)|^{-t} d theta` over an arc shorter than pi.
fn arc_integral(a: f64, b: f64, psi: f64, t: f64, rule: &(Vec<f64>, Vec<f64>)) -> (f64, f64) {
    use std::f64::consts::PI;
    // singular angles psi + k pi inside (a, b)
    let mut cuts = Vec::new();
    for k in -2..=3 {
        let s = psi + k as f64 * PI;
        if s > a && s < b {
            cuts.push(s);
        }
        if s == a || s == b {
            cuts.push(s);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if cuts.is_empty() {
        return adaptive_arc(a, b, psi, t, rule, 0);
    }
    let mut total = 0.0;
    let mut err = 0.0;
    let mut edges = vec![a];
    edges.extend(cuts.iter().copied().filter(|c| *c > a && *c < b));
    edges.push(b);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let at_lo = cuts.iter().any(|c| *c == lo);
        let at_hi = cuts.iter().any(|c| *c == hi);
        let (v, e) = match (at_lo, at_hi) {
            (true, _) => (singular_side(hi - lo, t, rule), 0.0),
            (false, true) => (singular_side(hi - lo, t, rule), 0.0),
            _ => adaptive_arc(lo, hi, psi, t, rule, 0),
        };
        total += v;
        err += e;
    }
    (total, err)
}

/// `int_0^w |sin u|^{-t} du` for `w <= pi / 2` via `u = w s^{1/(1-t)}`,
/// which turns the endpoint singularity into the bounded factor
/// `(u / sin u)^t`.
fn singular_side(w: f64, t: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let e = 1.0 / (1.0 - t);
    let mut acc = 0.0;
    for (x, wt) in rule.0.iter().zip(&rule.1) {
        let s = 0.5 * (x + 1.0);
        let u = w * s.powf(e);
        let ratio = if u > 0.0 { u / u.sin() } else { 1.0 };
        acc += 0.5 * wt * ratio.powf(t);
    }
    acc * w.powf(1.0 - t) / (1.0 - t)
}

fn gauss_arc(a: f64, b: f64, psi: f64, t: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * (mid + half * x - psi).sin().abs().powf(-t))
        .sum::<f64>()
        * half
}

/// 8-way subdivision until the bin value stabilizes.
fn adaptive_arc(a: f64, b: f64, psi: f64, t: f64, rule: &(Vec<f64>, Vec<f64>), depth: usize) -> (f64, f64) {
    let coarse = gauss_arc(a, b, psi, t, rule);
    let step = (b - a) / 8.0;
    let fine: f64 = (0..8)
        .map(|k| gauss_arc(a + k as f64 * step, a + (k + 1) as f64 * step, psi, t, rule))
        .sum();
    let change = (fine - coarse).abs();
    if change <= REL_TOL * fine.abs() || depth >= MAX_DEPTH {
        return (fine, change);
    }
    let mut total = 0.0;
    let mut err = 0.0;
    for k in 0..8 {
        let (v, e) = adaptive_arc(a + k as f64 * step, a + (k + 1) as f64 * step, psi, t, rule, depth + 1);
        total += v;
        err += e;
    }
    (total, err)
}

/// `int sin(angle(e, axis))^{-t} dA` over the patch `z in [z_lo, z_hi]`,
/// `phi in [p_lo, p_hi]` (area element `dz dphi`).
fn patch_integral(z_lo: f64, z_hi: f64, p_lo: f64, p_hi: f64, axis: &Vec3, t: f64) -> (f64, f64) {
    let rule = gauss_legendre(4);
    let f = |z: f64, phi: f64| {
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let e = [rho * phi.cos(), rho * phi.sin(), z];
        let c = e[0] * axis[0] + e[1] * axis[1] + e[2] * axis[2];
        (1.0 - c * c).max(0.0).sqrt().powf(-t)
    };
    adaptive_patch(&f, [z_lo, z_hi, p_lo, p_hi], axis, t, &rule, 0)
}

fn gauss_patch(f: &impl Fn(f64, f64) -> f64, r: [f64; 4], rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (hz, hp) = (0.5 * (r[1] - r[0]), 0.5 * (r[3] - r[2]));
    let (mz, mp) = (0.5 * (r[0] + r[1]), 0.5 * (r[2] + r[3]));
    let mut acc = 0.0;
    for (a, wa) in rule.0.iter().zip(&rule.1) {
        for (b, wb) in rule.0.iter().zip(&rule.1) {
            acc += wa * wb * f(mz + hz * a, mp + hp * b);
        }
    }
    acc * hz * hp
}

fn split(r: [f64; 4]) -> [[f64; 4]; 4] {
    let zm = 0.5 * (r[0] + r[1]);
    let pm = 0.5 * (r[2] + r[3]);
    [
        [r[0], zm, r[2], pm],
        [r[0], zm, pm, r[3]],
        [zm, r[1], r[2], pm],
        [zm, r[1], pm, r[3]],
    ]
}

/// Whether the patch contains `+axis` or `-axis`.
fn holds_pole(r: [f64; 4], axis: &Vec3) -> bool {
    [1.0, -1.0].iter().any(|s: &f64| {
        let z = s * axis[2];
        let phi = longitude(&[s * axis[0], s * axis[1], 0.0]);
        z >= r[0] && z <= r[1] && phi >= r[2] && phi <= r[3]
    })
}

fn adaptive_patch(
    f: &impl Fn(f64, f64) -> f64,
    r: [f64; 4],
    axis: &Vec3,
    t: f64,
    rule: &(Vec<f64>, Vec<f64>),
    depth: usize,
) -> (f64, f64) {
    if depth >= MAX_DEPTH && holds_pole(r, axis) {
        // geodesic disk of equal area around the singular direction:
        // int_0^rho gamma^{-t} 2 pi gamma d gamma
        let area = (r[1] - r[0]) * (r[3] - r[2]);
        let rho = (area / std::f64::consts::PI).sqrt();
        let v = 2.0 * std::f64::consts::PI * rho.powf(2.0 - t) / (2.0 - t);
        return (v, v);
    }
    let coarse = gauss_patch(f, r, rule);
    let subs = split(r);
    let fine: f64 = subs.iter().map(|s| gauss_patch(f, *s, rule)).sum();
    let change = (fine - coarse).abs();
    if (change <= REL_TOL * fine.abs() && !holds_pole(r, axis)) || depth >= MAX_DEPTH {
        return (fine, change);
    }
    let mut total = 0.0;
    let mut err = 0.0;
    for s in subs {
        let (v, e) = adaptive_patch(f, s, axis, t, rule, depth + 1);
        total += v;
        err += e;
    }
    (total, err)
}
