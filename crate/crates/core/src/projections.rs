//! Orthogonal projections onto hyperplanes `e^perp`, radial projections from a
//! point onto the unit sphere, and the Riesz-weighted measure `mu_x`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{check_dim, require_outside, BoundingBox, MassSource, Sampling};
use crate::numeric::{cross, dot, norm, pairwise_sum, scale, sub, Vec3};
use crate::sphere::{longitude, SphereDensity, SphereGrid};

/// Normalizing constant of the Riesz weight.
///
/// Radial projection only sees the ray `x + r e, r > 0`, while the orthogonal
/// fibre through `x` is the whole line. With constant 2 the antipodal mean of
/// the radial density (see [`line_density`]) equals the fibre integral.
pub const RIESZ_CONSTANT: f64 = 2.0;

/// Unit vector in R^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    dim: usize,
    e: Vec3,
}

impl Direction {
    pub fn new(dim: usize, v: Vec3) -> Result<Self> {
        check_dim(dim)?;
        let mut e = v;
        if dim == 2 {
            e[2] = 0.0;
        }
        let n = norm(&e);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter("direction must be a nonzero finite vector".into()));
        }
        Ok(Self { dim, e: scale(&e, 1.0 / n) })
    }

    /// `(cos theta, sin theta)`.
    pub fn from_angle(theta: f64) -> Self {
        Self {
            dim: 2,
            e: [theta.cos(), theta.sin(), 0.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn e(&self) -> &Vec3 {
        &self.e
    }

    pub fn neg(&self) -> Self {
        Self {
            dim: self.dim,
            e: scale(&self.e, -1.0),
        }
    }

    /// Orthonormal basis of `e^perp`; only the first vector is used in the plane.
    pub fn frame(&self) -> [Vec3; 2] {
        let e = &self.e;
        if self.dim == 2 {
            return [[-e[1], e[0], 0.0], [0.0; 3]];
        }
        let axis = (0..3)
            .min_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs()))
            .expect("three axes");
        let mut t = [0.0; 3];
        t[axis] = 1.0;
        let u = cross(e, &t);
        let u = scale(&u, 1.0 / norm(&u));
        let w = cross(e, &u);
        [u, w]
    }
}

/// Bin count and optional fixed window for hyperplane histograms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    /// Bins per axis of `e^perp`.
    pub bins: usize,
    /// Fixed window `[lo, hi]` on every frame axis. Without it the window
    /// covers the projected support with one spare bin on each side.
    pub window: Option<(f64, f64)>,
    pub sampling: Sampling,
}

impl HistogramSpec {
    pub fn new(bins: usize) -> Self {
        Self {
            bins,
            window: None,
            sampling: Sampling::default(),
        }
    }
}

/// Placement of a (d-1)-dimensional histogram on `e^perp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionLayout {
    pub direction: Direction,
    pub frame: [Vec3; 2],
    /// Frame coordinates of the centre of bin 0.
    pub origin: [f64; 2],
    pub spacing: f64,
    /// Bins per axis; the second entry is 1 in the plane.
    pub shape: [usize; 2],
}

impl ProjectionLayout {
    /// Layout whose window contains the projection of every box in `boxes`.
    pub fn covering(e: &Direction, boxes: &[BoundingBox], spec: &HistogramSpec) -> Result<Self> {
        let dim = e.dim();
        let axes = dim - 1;
        if spec.bins < 3 {
            return Err(Error::HistogramTooSmall(format!("need at least 3 bins, got {}", spec.bins)));
        }
        let frame = e.frame();
        let (lo, hi) = projected_extent(&frame, axes, boxes)?;
        let mut shape = [1usize; 2];
        let mut origin = [0.0; 2];
        let spacing;
        match spec.window {
            Some((a, b)) => {
                if !(b > a) {
                    return Err(Error::InvalidParameter(format!("empty histogram window [{a}, {b}]")));
                }
                spacing = (b - a) / spec.bins as f64;
                for k in 0..axes {
                    origin[k] = a + 0.5 * spacing;
                    shape[k] = spec.bins;
                }
            }
            None => {
                let extent = (0..axes).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
                let scale_hint = (0..axes).map(|k| lo[k].abs().max(hi[k].abs())).fold(1.0, f64::max);
                let extent = extent.max(1e-9 * scale_hint);
                spacing = extent / (spec.bins as f64 - 2.0);
                for k in 0..axes {
                    let c = 0.5 * (lo[k] + hi[k]);
                    origin[k] = c - 0.5 * (spec.bins as f64 - 1.0) * spacing;
                    shape[k] = spec.bins;
                }
            }
        }
        Ok(Self {
            direction: *e,
            frame,
            origin,
            spacing,
            shape,
        })
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axes(&self) -> usize {
        self.direction.dim() - 1
    }

    /// Frame coordinates of the projection of `y` onto `e^perp`.
    #[inline]
    pub fn coords(&self, y: &Vec3) -> [f64; 2] {
        [dot(y, &self.frame[0]), dot(y, &self.frame[1])]
    }

    /// Fractional bin position: bin `i` is centred at `i`.
    #[inline]
    fn position(&self, t: &[f64; 2]) -> [f64; 2] {
        [
            (t[0] - self.origin[0]) / self.spacing,
            (t[1] - self.origin[1]) / self.spacing,
        ]
    }

    pub fn bin_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.spacing,
            self.origin[1] + j as f64 * self.spacing,
        ]
    }

    fn bin_volume(&self) -> f64 {
        self.spacing.powi(self.axes() as i32)
    }
}

fn projected_extent(frame: &[Vec3; 2], axes: usize, boxes: &[BoundingBox]) -> Result<([f64; 2], [f64; 2])> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for b in boxes {
        for c in b.corners() {
            for k in 0..axes {
                let t = dot(&c, &frame[k]);
                lo[k] = lo[k].min(t);
                hi[k] = hi[k].max(t);
            }
        }
    }
    if !lo[0].is_finite() {
        return Err(Error::Empty);
    }
    Ok((lo, hi))
}

/// Histogram of a density on `e^perp` (mass per unit (d-1)-volume).
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionDensity {
    layout: ProjectionLayout,
    values: Vec<f64>,
}

impl DirectionDensity {
    pub fn from_values(layout: ProjectionLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a histogram of {} bins",
                values.len(),
                layout.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(format!("density value {} at bin {i}", values[i])));
        }
        Ok(Self { layout, values })
    }

    /// Sample `f` at the bin centres (frame coordinates).
    pub fn from_fn(layout: ProjectionLayout, f: impl Fn(&[f64; 2]) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(layout.len());
        for i in 0..layout.shape[0] {
            for j in 0..layout.shape[1] {
                values.push(f(&layout.bin_center(i, j)));
            }
        }
        Self::from_values(layout, values)
    }

    pub fn layout(&self) -> &ProjectionLayout {
        &self.layout
    }

    pub fn direction(&self) -> &Direction {
        &self.layout.direction
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.values) * self.layout.bin_volume()
    }

    /// Per-bin masses.
    pub fn bin_masses(&self) -> Vec<f64> {
        let v = self.layout.bin_volume();
        self.values.iter().map(|x| x * v).collect()
    }

    #[inline]
    fn get(&self, i: i64, j: i64) -> f64 {
        let [n0, n1] = self.layout.shape;
        if i < 0 || j < 0 || i >= n0 as i64 || j >= n1 as i64 {
            0.0
        } else {
            self.values[i as usize * n1 + j as usize]
        }
    }

    /// Multilinear interpolation between bin centres at frame coordinates
    /// `t`; zero outside the histogram.
    pub fn value_at(&self, t: &[f64; 2]) -> f64 {
        let u = self.layout.position(t);
        let i0 = u[0].floor();
        let f0 = u[0] - i0;
        let i0 = i0 as i64;
        if self.layout.axes() == 1 {
            return (1.0 - f0) * self.get(i0, 0) + f0 * self.get(i0 + 1, 0);
        }
        let j0 = u[1].floor();
        let f1 = u[1] - j0;
        let j0 = j0 as i64;
        (1.0 - f0) * ((1.0 - f1) * self.get(i0, j0) + f1 * self.get(i0, j0 + 1))
            + f0 * ((1.0 - f1) * self.get(i0 + 1, j0) + f1 * self.get(i0 + 1, j0 + 1))
    }

    /// Density of the projection at `pi_e(y)`.
    pub fn value_at_point(&self, y: &Vec3) -> f64 {
        self.value_at(&self.layout.coords(y))
    }

    /// CSV rows: bin centre in frame coordinates, value.
    pub fn to_csv(&self) -> String {
        let l = &self.layout;
        let mut out = String::from(if l.axes() == 1 { "t,value\n" } else { "t1,t2,value\n" });
        for i in 0..l.shape[0] {
            for j in 0..l.shape[1] {
                let c = l.bin_center(i, j);
                let v = self.values[i * l.shape[1] + j];
                if l.axes() == 1 {
                    out.push_str(&format!("{},{v}\n", c[0]));
                } else {
                    out.push_str(&format!("{},{},{v}\n", c[0], c[1]));
                }
            }
        }
        out
    }
}

/// Project `mu` orthogonally onto `e^perp` and bin the result.
pub fn orth_project<M: MassSource>(mu: &M, e: &Direction, spec: &HistogramSpec) -> Result<DirectionDensity> {
    if mu.dim() != e.dim() {
        return Err(Error::GridMismatch(format!(
            "measure is {}-dimensional, direction is {}-dimensional",
            mu.dim(),
            e.dim()
        )));
    }
    let layout = ProjectionLayout::covering(e, &[mu.support_box()], spec)?;
    orth_project_onto(mu, &layout, &spec.sampling)
}

/// Project onto a prescribed layout, so several measures share one grid.
pub fn orth_project_onto<M: MassSource>(mu: &M, layout: &ProjectionLayout, sampling: &Sampling) -> Result<DirectionDensity> {
    let axes = layout.axes();
    let [n0, n1] = layout.shape;
    let mut masses = vec![0.0; layout.len()];
    let clamp = |i: i64, n: usize| i.clamp(0, n as i64 - 1) as usize;
    if mu.is_smooth() {
        mu.visit_samples(sampling, |y, m| {
            let u = layout.position(&layout.coords(y));
            let i0 = u[0].floor();
            let f0 = u[0] - i0;
            let i0 = i0 as i64;
            if axes == 1 {
                masses[clamp(i0, n0)] += m * (1.0 - f0);
                masses[clamp(i0 + 1, n0)] += m * f0;
            } else {
                let j0 = u[1].floor();
                let f1 = u[1] - j0;
                let j0 = j0 as i64;
                for (di, wi) in [(0, 1.0 - f0), (1, f0)] {
                    for (dj, wj) in [(0, 1.0 - f1), (1, f1)] {
                        masses[clamp(i0 + di, n0) * n1 + clamp(j0 + dj, n1)] += m * wi * wj;
                    }
                }
            }
        });
    } else {
        mu.visit_samples(sampling, |y, m| {
            let u = layout.position(&layout.coords(y));
            let i = clamp(u[0].round() as i64, n0);
            let j = if axes == 1 { 0 } else { clamp(u[1].round() as i64, n1) };
            masses[i * n1 + j] += m;
        });
    }
    let mut outside: Option<[f64; 2]> = None;
    mu.visit_samples(sampling, |y, _| {
        let t = layout.coords(y);
        let u = layout.position(&t);
        if (0..axes).any(|k| u[k] < -0.5 - 1e-9 || u[k] > layout.shape[k] as f64 - 0.5 + 1e-9) {
            outside.get_or_insert(t);
        }
    });
    if let Some(t) = outside {
        let lo = layout.origin[0] - 0.5 * layout.spacing;
        let hi = lo + layout.shape[0] as f64 * layout.spacing;
        return Err(Error::HistogramTooSmall(format!(
            "projected sample at {:?} lies outside the window [{lo}, {hi}]",
            &t[..axes]
        )));
    }
    let v = layout.bin_volume();
    Ok(DirectionDensity {
        layout: *layout,
        values: masses.into_iter().map(|m| m / v).collect(),
    })
}

/// Push `mu` forward under `y -> (y - x) / |y - x|` and bin on `grid`.
///
/// Planar grid densities are deposited linearly between neighbouring arcs;
/// everything else goes to the bin containing the direction.
pub fn radial_project<M: MassSource>(mu: &M, x: &Vec3, grid: &Arc<SphereGrid>, sampling: &Sampling) -> Result<SphereDensity> {
    if mu.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "measure is {}-dimensional, sphere grid is for dimension {}",
            mu.dim(),
            grid.dim()
        )));
    }
    require_outside(mu, x)?;
    let n = grid.len();
    let mut masses = vec![0.0; n];
    if mu.dim() == 2 && mu.is_smooth() {
        mu.visit_samples(sampling, |y, m| {
            let phi = longitude(&sub(y, x));
            let u = grid.circle_position(phi).expect("planar grid");
            let i0 = u.floor();
            let f = u - i0;
            let i0 = (i0 as i64).rem_euclid(n as i64) as usize;
            masses[i0] += m * (1.0 - f);
            masses[(i0 + 1) % n] += m * f;
        });
    } else {
        mu.visit_samples(sampling, |y, m| {
            let d = sub(y, x);
            let r = norm(&d);
            masses[grid.locate(&scale(&d, 1.0 / r))] += m;
        });
    }
    SphereDensity::from_masses(grid.clone(), masses)
}

/// `mu` reweighted by `c_d |x - y|^{1-d}`.
#[derive(Debug, Clone, Copy)]
pub struct WeightedMeasure<'a, M: MassSource> {
    base: &'a M,
    center: Vec3,
    c_d: f64,
}

impl<'a, M: MassSource> WeightedMeasure<'a, M> {
    pub fn base(&self) -> &M {
        self.base
    }

    pub fn center(&self) -> &Vec3 {
        &self.center
    }

    pub fn constant(&self) -> f64 {
        self.c_d
    }

    #[inline]
    fn kernel(&self, y: &Vec3) -> f64 {
        let r = norm(&sub(y, &self.center));
        let k = if self.base.dim() == 2 { 1.0 / r } else { 1.0 / (r * r) };
        self.c_d * k
    }
}

impl<M: MassSource> MassSource for WeightedMeasure<'_, M> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn support_box(&self) -> BoundingBox {
        self.base.support_box()
    }

    fn support_distance(&self, x: &Vec3) -> f64 {
        self.base.support_distance(x)
    }

    fn is_smooth(&self) -> bool {
        self.base.is_smooth()
    }

    fn visit_atoms<F: FnMut(&Vec3, f64)>(&self, mut f: F) {
        self.base.visit_atoms(|y, m| f(y, m * self.kernel(y)));
    }

    fn visit_samples<F: FnMut(&Vec3, f64)>(&self, sampling: &Sampling, mut f: F) {
        self.base.visit_samples(sampling, |y, m| f(y, m * self.kernel(y)));
    }
}

/// `mu_x = c_d |x - y|^{1-d} d mu(y)` with the default constant.
pub fn weight_riesz<'a, M: MassSource>(mu: &'a M, x: &Vec3) -> Result<WeightedMeasure<'a, M>> {
    weight_riesz_with(mu, x, RIESZ_CONSTANT)
}

pub fn weight_riesz_with<'a, M: MassSource>(mu: &'a M, x: &Vec3, c_d: f64) -> Result<WeightedMeasure<'a, M>> {
    require_outside(mu, x)?;
    if !(c_d > 0.0) {
        return Err(Error::InvalidParameter(format!("Riesz constant must be positive, got {c_d}")));
    }
    Ok(WeightedMeasure { base: mu, center: *x, c_d })
}

/// Antipodal mean of the radial projection of `mu_x`: the density of the
/// fibre integral `e -> int_R mu(x + r e) dr` on the sphere.
pub fn line_density<M: MassSource>(mu: &M, x: &Vec3, grid: &Arc<SphereGrid>, sampling: &Sampling) -> Result<SphereDensity> {
    let weighted = weight_riesz(mu, x)?;
    radial_project(&weighted, x, grid, sampling)?.antipodal_mean()
}

/// `pi_{e#} mu` evaluated at `pi_e(x)`.
pub fn density_formula_rhs<M: MassSource>(mu: &M, x: &Vec3, e: &Direction, spec: &HistogramSpec) -> Result<f64> {
    require_outside(mu, x)?;
    let proj = orth_project(mu, e, spec)?;
    Ok(proj.value_at_point(x))
}

/// `sum f(bin)^p * w-mass(bin)` over a shared hyperplane grid.
pub fn lp_norm_weighted(f: &DirectionDensity, p: f64, w: &DirectionDensity) -> Result<f64> {
    if f.layout != w.layout {
        return Err(Error::GridMismatch("densities are binned on different hyperplane grids".into()));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent must be positive, got {p}")));
    }
    let terms: Vec<f64> = f
        .values
        .iter()
        .zip(w.bin_masses())
        .map(|(v, m)| if m > 0.0 && *v > 0.0 { v.powf(p) * m } else { 0.0 })
        .collect();
    Ok(pairwise_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{DiscreteMeasure, GridDensity, LatticeSpec};
    use crate::sphere::make_sphere_grid;
    use std::f64::consts::PI;

    #[test]
    fn frames_are_orthonormal() {
        for v in [[1.0, 2.0, 3.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [-0.3, 0.9, 0.1]] {
            let d = Direction::new(3, v).unwrap();
            let [u, w] = d.frame();
            assert!((norm(&u) - 1.0).abs() < 1e-12 && (norm(&w) - 1.0).abs() < 1e-12);
            assert!(dot(&u, &w).abs() < 1e-12);
            assert!(dot(&u, d.e()).abs() < 1e-12 && dot(&w, d.e()).abs() < 1e-12);
        }
        assert!(Direction::new(2, [0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn dirac_projects_into_one_bin() {
        let y = [0.3, -0.7, 0.0];
        let mu = DiscreteMeasure::dirac(2, y).unwrap();
        let e = Direction::from_angle(0.4);
        let p = orth_project(&mu, &e, &HistogramSpec::new(11)).unwrap();
        let nonzero: Vec<_> = p.values().iter().filter(|v| **v > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((p.mass() - 1.0).abs() < 1e-12);
        let x = [1.0, 1.0, 0.0];
        let grid = Arc::new(make_sphere_grid(2, 90).unwrap());
        let r = radial_project(&mu, &x, &grid, &Sampling::default()).unwrap();
        let d = sub(&y, &x);
        let bin = grid.locate(&scale(&d, 1.0 / norm(&d)));
        assert!((r.values()[bin] * grid.areas()[bin] - 1.0).abs() < 1e-12);
        assert!((r.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_disk_projects_to_semicircle() {
        // Halton sample of the disk: 10^5 low-discrepancy points
        let halton = |mut i: usize, b: usize| {
            let (mut f, mut r) = (1.0, 0.0);
            while i > 0 {
                f /= b as f64;
                r += f * (i % b) as f64;
                i /= b;
            }
            r
        };
        let mut pts = Vec::with_capacity(100_000);
        let mut i = 1;
        while pts.len() < 100_000 {
            let p = [2.0 * halton(i, 2) - 1.0, 2.0 * halton(i, 3) - 1.0, 0.0];
            if p[0] * p[0] + p[1] * p[1] <= 1.0 {
                pts.push(p);
            }
            i += 1;
        }
        let mu = DiscreteMeasure::uniform(2, pts).unwrap();
        let spec = HistogramSpec {
            bins: 200,
            window: Some((-1.0, 1.0)),
            sampling: Sampling::default(),
        };
        let proj = orth_project(&mu, &Direction::from_angle(1.1), &spec).unwrap();
        // L1 distance to the bin averages of the semicircle law
        let h = proj.layout().spacing;
        let cdf = |t: f64| (t * (1.0 - t * t).sqrt() + t.asin()) / PI;
        let mut l1 = 0.0;
        for i in 0..200 {
            let c = proj.layout().bin_center(i, 0)[0];
            let exact = (cdf((c + 0.5 * h).min(1.0)) - cdf((c - 0.5 * h).max(-1.0))) / h;
            l1 += (proj.values()[i] - exact).abs() * h;
        }
        assert!((proj.mass() - 1.0).abs() < 1e-12);
        assert!(l1 < 0.02, "{l1}");
    }

    #[test]
    fn segment_seen_from_origin() {
        let n = 100_000;
        let pts = (0..n).map(|i| [-1.0 + 2.0 * (i as f64 + 0.5) / n as f64, 1.0, 0.0]).collect();
        let mu = DiscreteMeasure::uniform(2, pts).unwrap();
        let grid = Arc::new(make_sphere_grid(2, 360).unwrap());
        let f = radial_project(&mu, &[0.0; 3], &grid, &Sampling::default()).unwrap();
        for (i, c) in grid.centers().iter().enumerate() {
            let theta = longitude(c);
            if theta > PI / 4.0 + 0.02 && theta < 3.0 * PI / 4.0 - 0.02 {
                let exact = 1.0 / (2.0 * theta.sin().powi(2));
                let rel = (f.values()[i] - exact).abs() / exact;
                assert!(rel < 0.03, "theta {theta}: {} vs {exact}", f.values()[i]);
            }
        }
    }

    #[test]
    fn riesz_weight_examples() {
        let mu = DiscreteMeasure::dirac(2, [2.0, 0.0, 0.0]).unwrap();
        let w = weight_riesz(&mu, &[0.0; 3]).unwrap();
        assert!((w.total_mass() - RIESZ_CONSTANT * 0.5).abs() < 1e-15);
        let r: f64 = 1.5;
        let ring: Vec<Vec3> = (0..7).map(|k| [r * (k as f64).cos(), r * (k as f64).sin(), 0.0]).collect();
        let mu3 = DiscreteMeasure::uniform(3, ring).unwrap();
        let w3 = weight_riesz(&mu3, &[0.0; 3]).unwrap();
        assert!((w3.total_mass() - RIESZ_CONSTANT / (r * r)).abs() < 1e-14);
        assert!(weight_riesz(&mu, &[2.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn riesz_mass_of_square_matches_quadrature() {
        let lat = LatticeSpec::cube(2, &[-0.25, -0.25, 0.0], 1.5, 96).unwrap();
        let g = GridDensity::from_fn(lat, |p| {
            if (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let x = [-1.0, 0.5, 0.0];
        let w = weight_riesz_with(&g, &x, 1.0).unwrap();
        // independent oracle: Gauss–Legendre over the unit square
        let rule = crate::numeric::gauss_legendre(40);
        let mut exact = 0.0;
        for (a, wa) in rule.0.iter().zip(&rule.1) {
            for (b, wb) in rule.0.iter().zip(&rule.1) {
                let y = [0.5 + 0.5 * a, 0.5 + 0.5 * b, 0.0];
                exact += 0.25 * wa * wb / norm(&sub(&y, &x));
            }
        }
        assert!((w.total_mass() - exact).abs() / exact < 0.01);
    }

    #[test]
    fn weighted_norm_examples() {
        let mu = DiscreteMeasure::uniform(2, vec![[0.0, 0.0, 0.0], [1.0, 0.5, 0.0]]).unwrap();
        let e = Direction::from_angle(0.0);
        let layout = ProjectionLayout::covering(&e, &[mu.support_box()], &HistogramSpec::new(16)).unwrap();
        let f = orth_project_onto(&mu, &layout, &Sampling::default()).unwrap();
        let ones = DirectionDensity {
            layout,
            values: vec![1.0; 16],
        };
        let zero = DirectionDensity {
            layout,
            values: vec![0.0; 16],
        };
        assert_eq!(lp_norm_weighted(&f, 2.0, &zero).unwrap(), 0.0);
        assert!((lp_norm_weighted(&ones, 3.0, &f).unwrap() - 1.0).abs() < 1e-12);
        let other = orth_project(&mu, &e, &HistogramSpec::new(20)).unwrap();
        assert!(lp_norm_weighted(&f, 2.0, &other).is_err());
    }

    #[test]
    fn triangle_against_uniform() {
        // f: triangle density on [-1, 1]; w: uniform on [0, 1]; p = 2
        let lat = LatticeSpec::cube(2, &[-1.25, -1.25, 0.0], 2.5, 250).unwrap();
        let tri = GridDensity::from_fn(lat, |p| (1.0 - p[0].abs()).max(0.0) * if p[1].abs() < 0.5 { 1.0 } else { 0.0 })
            .unwrap();
        let uni = GridDensity::from_fn(lat, |p| {
            if (0.0..=1.0).contains(&p[0]) && p[1].abs() < 0.5 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        // project along y so the frame axis is -x
        let e = Direction::from_angle(PI / 2.0);
        let spec = HistogramSpec {
            bins: 200,
            window: Some((-1.25, 1.25)),
            sampling: Sampling::default(),
        };
        let layout = ProjectionLayout::covering(&e, &[tri.support_box(), uni.support_box()], &spec).unwrap();
        let f = orth_project_onto(&tri, &layout, &spec.sampling).unwrap();
        let w = orth_project_onto(&uni, &layout, &spec.sampling).unwrap();
        let got = lp_norm_weighted(&f, 2.0, &w).unwrap();
        // oracle: int_0^1 (1 - t)^2 dt by fine midpoint rule
        let n = 100_000;
        let oracle: f64 = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64;
                (1.0 - t).powi(2) / n as f64
            })
            .sum();
        assert!((got - oracle).abs() / oracle < 0.01, "{got} vs {oracle}");
    }

    #[test]
    fn gaussian_marginal_on_the_fibre() {
        let sigma = 0.2;
        let lat = LatticeSpec::cube(2, &[-1.5, -1.5, 0.0], 3.0, 240).unwrap();
        let g = GridDensity::from_fn(lat, |p| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            if r2 < (6.0 * sigma) * (6.0 * sigma) {
                (-r2 / (2.0 * sigma * sigma)).exp()
            } else {
                0.0
            }
        })
        .unwrap();
        let x = [3.0, 0.0, 0.0];
        let e = Direction::from_angle(PI / 2.0);
        let got = density_formula_rhs(&g, &x, &e, &HistogramSpec::new(200)).unwrap();
        // the fibre through x misses the centre by 3; use a fibre through it
        assert!(got.abs() < 1e-12);
        let e0 = Direction::from_angle(0.0);
        let at_center = density_formula_rhs(&g, &x, &e0, &HistogramSpec::new(200)).unwrap();
        let exact = 1.0 / ((2.0 * PI).sqrt() * sigma);
        assert!((at_center - exact).abs() / exact < 0.02, "{at_center} vs {exact}");
    }

    #[test]
    fn line_density_matches_fibre_lookup() {
        let sigma = 0.25;
        let lat = LatticeSpec::cube(2, &[-1.0, -1.0, 0.0], 2.0, 256).unwrap();
        let g = GridDensity::from_fn(lat, |p| {
            let r2 = (p[0] - 0.1).powi(2) + p[1] * p[1];
            if r2 < (3.0 * sigma) * (3.0 * sigma) {
                (-r2 / (2.0 * sigma * sigma)).exp()
            } else {
                0.0
            }
        })
        .unwrap();
        let x = [-2.0, 0.3, 0.0];
        let grid = Arc::new(make_sphere_grid(2, 720).unwrap());
        let lhs = line_density(&g, &x, &grid, &Sampling::default()).unwrap();
        let spec = HistogramSpec::new(512);
        let peak = lhs.linf();
        for (i, c) in grid.centers().iter().enumerate() {
            let v = lhs.values()[i];
            if v < 0.2 * peak {
                continue;
            }
            let e = Direction::new(2, *c).unwrap();
            let rhs = density_formula_rhs(&g, &x, &e, &spec).unwrap();
            assert!((v - rhs).abs() / rhs < 0.05, "bin {i}: {v} vs {rhs}");
        }
    }
}
