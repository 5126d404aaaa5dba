//! `int |f^(xi)|^2 |xi|^alpha d xi` for a density on a hyperplane, with
//! `f^(xi) = int f(t) e^{-2 pi i t . xi} dt`.
//!
//! The histogram is treated as samples of a smooth density: its zero-padded
//! DFT approximates `f^` up to the Nyquist frequency, and `|xi|^alpha` is
//! integrated exactly (1-D) or by Gauss rules (2-D) over each frequency cell.

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use super::{EnergyReport, Method};
use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::numeric::{gauss_legendre, pairwise_sum};
use crate::projections::DirectionDensity;

/// Fraction of the Nyquist band treated as the spectral tail.
const TAIL_START: f64 = 0.75;
const ALIAS_LIMIT: f64 = 0.01;

/// `int_a^b |x|^alpha dx`.
fn power_integral(a: f64, b: f64, alpha: f64) -> f64 {
    let prim = |x: f64| x.signum() * x.abs().powf(alpha + 1.0) / (alpha + 1.0);
    prim(b) - prim(a)
}

pub fn fourier_sobolev(f: &DirectionDensity, alpha: f64) -> Result<EnergyReport> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidParameter(format!("Sobolev exponent must lie in (0, 2), got {alpha}")));
    }
    let layout = f.layout();
    let axes = layout.axes();
    let h = layout.spacing;
    let factor = if axes == 1 { 8 } else { 4 };
    let mut padded = [1usize; 3];
    for a in 0..axes {
        padded[a] = (factor * layout.shape[a]).next_power_of_two();
    }
    let total: usize = padded.iter().product();
    let cell = h.powi(axes as i32);
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    let n1 = layout.shape[1];
    for (i, v) in f.values().iter().enumerate() {
        let (i0, i1) = (i / n1, i % n1);
        data[i0 * padded[1] + i1] = Complex64::new(v * cell, 0.0);
    }
    fft_nd(&mut data, padded, FftDirection::Forward);

    let dxi = [1.0 / (padded[0] as f64 * h), 1.0 / (padded[1] as f64 * h)];
    let nyquist = 0.5 / h;
    let signed = |k: usize, n: usize| if k < n / 2 { k as i64 } else { k as i64 - n as i64 };
    let rule = gauss_legendre(6);

    let mut energy = Vec::with_capacity(total);
    let mut tail_energy = Vec::new();
    let mut power = Vec::with_capacity(total);
    let mut tail_power = Vec::new();
    for (idx, c) in data.iter().enumerate() {
        let k0 = signed(idx / padded[1], padded[0]);
        let k1 = if axes == 2 { signed(idx % padded[1], padded[1]) } else { 0 };
        // drop the unpaired Nyquist row so the band is symmetric
        if k0 == -(padded[0] as i64) / 2 || (axes == 2 && k1 == -(padded[1] as i64) / 2) {
            continue;
        }
        let xi = [k0 as f64 * dxi[0], k1 as f64 * dxi[1]];
        let weight = if axes == 1 {
            power_integral(xi[0] - 0.5 * dxi[0], xi[0] + 0.5 * dxi[0], alpha)
        } else if k0.abs() <= 2 && k1.abs() <= 2 {
            let mut acc = 0.0;
            for (a, wa) in rule.0.iter().zip(&rule.1) {
                for (b, wb) in rule.0.iter().zip(&rule.1) {
                    let x = xi[0] + 0.5 * dxi[0] * a;
                    let y = xi[1] + 0.5 * dxi[1] * b;
                    acc += 0.25 * wa * wb * (x * x + y * y).powf(0.5 * alpha);
                }
            }
            acc * dxi[0] * dxi[1]
        } else {
            (xi[0] * xi[0] + xi[1] * xi[1]).powf(0.5 * alpha) * dxi[0] * dxi[1]
        };
        let sq = c.norm_sqr();
        let radius = if axes == 1 { xi[0].abs() } else { xi[0].abs().max(xi[1].abs()) };
        energy.push(sq * weight);
        power.push(sq);
        if radius > TAIL_START * nyquist {
            tail_energy.push(sq * weight);
            tail_power.push(sq);
        }
    }
    let value = pairwise_sum(&energy);
    let tail = pairwise_sum(&tail_energy);
    let all_power = pairwise_sum(&power);
    let mut warnings = Vec::new();
    if all_power > 0.0 {
        let frac = pairwise_sum(&tail_power) / all_power;
        if frac > ALIAS_LIMIT {
            warnings.push(format!(
                "possible aliasing: {:.2}% of the spectral mass lies above {TAIL_START} of Nyquist",
                100.0 * frac
            ));
        }
    }
    Ok(EnergyReport {
        exponent: alpha,
        value,
        method: Method::Fourier,
        resolution: format!(
            "{} bins, h={h}, padded to {}",
            layout.shape[..axes].iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x"),
            padded[..axes].iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x")
        ),
        error_estimate: tail,
        divergent: false,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{BoundingBox, Sampling};
    use crate::projections::{Direction, HistogramSpec, ProjectionLayout};
    use std::f64::consts::PI;

    fn line_layout(lo: f64, hi: f64, bins: usize) -> ProjectionLayout {
        let e = Direction::from_angle(PI / 2.0);
        let spec = HistogramSpec {
            bins,
            window: Some((lo, hi)),
            sampling: Sampling::default(),
        };
        ProjectionLayout::covering(&e, &[BoundingBox::new(2, [0.0; 3], [0.0; 3])], &spec).unwrap()
    }

    #[test]
    fn zero_density_has_zero_energy() {
        let f = DirectionDensity::from_fn(line_layout(-1.0, 1.0, 64), |_| 0.0).unwrap();
        assert_eq!(fourier_sobolev(&f, 0.5).unwrap().value, 0.0);
    }

    #[test]
    fn exponent_range_is_checked() {
        let f = DirectionDensity::from_fn(line_layout(-1.0, 1.0, 64), |_| 1.0).unwrap();
        assert!(fourier_sobolev(&f, 0.0).is_err());
        assert!(fourier_sobolev(&f, 2.0).is_err());
    }

    #[test]
    fn box_density_warns_about_aliasing() {
        let f = DirectionDensity::from_fn(line_layout(-1.0, 1.0, 64), |t| if t[0].abs() < 0.04 { 1.0 } else { 0.0 }).unwrap();
        let r = fourier_sobolev(&f, 1.5).unwrap();
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn planar_gaussian_matches_radial_integral() {
        // 2-D standard Gaussian: |f^|^2 = exp(-4 pi^2 |xi|^2), so the value is
        // 2 pi int_0^inf exp(-4 pi^2 r^2) r^{alpha+1} dr
        let e = Direction::new(3, [0.0, 0.0, 1.0]).unwrap();
        let spec = HistogramSpec {
            bins: 128,
            window: Some((-8.0, 8.0)),
            sampling: Sampling::default(),
        };
        let layout = ProjectionLayout::covering(&e, &[BoundingBox::new(3, [0.0; 3], [0.0; 3])], &spec).unwrap();
        let f = DirectionDensity::from_fn(layout, |t| (-(t[0] * t[0] + t[1] * t[1]) / 2.0).exp() / (2.0 * PI)).unwrap();
        let alpha = 0.5;
        let r = fourier_sobolev(&f, alpha).unwrap();
        // oracle by 1-D quadrature in r
        let n = 200_000;
        let rmax = 2.0;
        let oracle: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * rmax / n as f64;
                2.0 * PI * (-4.0 * PI * PI * x * x).exp() * x.powf(alpha + 1.0) * rmax / n as f64
            })
            .sum();
        assert!((r.value - oracle).abs() / oracle < 0.01, "{} vs {oracle}", r.value);
    }
}
