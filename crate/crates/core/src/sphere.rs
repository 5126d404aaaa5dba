//! Equal-area partitions of S^1 and S^2 and piecewise-constant densities on
//! them.
//!
//! On S^1 the bins are `n` arcs `[2 pi i / n, 2 pi (i + 1) / n)`. On S^2 the
//! sphere is cut into latitude bands of equal height in z (Archimedes: equal
//! height means equal area), and each band into an even number of equal
//! longitude sectors. Band counts are mirrored about the equator, so every
//! bin has an exact antipodal partner.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::check_dim;
use crate::numeric::{cross, dot, norm, Vec3};

#[derive(Debug, Clone, PartialEq)]
enum Layout {
    Circle {
        n: usize,
    },
    Zonal {
        /// Band edges in z, descending from 1 to -1.
        edges: Vec<f64>,
        counts: Vec<usize>,
        offsets: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    dim: usize,
    resolution: usize,
    layout: Layout,
    centers: Vec<Vec3>,
    areas: Vec<f64>,
    antipodes: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct SphereGridFile {
    dim: usize,
    resolution: usize,
    centers: Vec<Vec<f64>>,
    areas: Vec<f64>,
}

/// Equal-area grid on S^{dim-1} with about `resolution` bins.
pub fn make_sphere_grid(dim: usize, resolution: usize) -> Result<SphereGrid> {
    check_dim(dim)?;
    if dim == 2 {
        if resolution < 4 {
            return Err(Error::InvalidParameter(format!("circle grid needs at least 4 arcs, got {resolution}")));
        }
        Ok(SphereGrid::circle(resolution))
    } else {
        if resolution < 8 {
            return Err(Error::InvalidParameter(format!("sphere grid needs at least 8 bins, got {resolution}")));
        }
        Ok(SphereGrid::zonal(resolution))
    }
}

impl SphereGrid {
    fn circle(n: usize) -> Self {
        let w = 2.0 * PI / n as f64;
        let centers = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * w;
                [t.cos(), t.sin(), 0.0]
            })
            .collect();
        let antipodes = (n % 2 == 0).then(|| (0..n).map(|i| (i + n / 2) % n).collect());
        Self {
            dim: 2,
            resolution: n,
            layout: Layout::Circle { n },
            centers,
            areas: vec![w; n],
            antipodes,
        }
    }

    fn zonal(target: usize) -> Self {
        let mut bands = ((PI * target as f64 / 4.0).sqrt().round() as usize).max(2);
        if bands % 2 == 1 {
            bands += 1;
        }
        let half = bands / 2;
        let sines: Vec<f64> = (0..bands)
            .map(|k| ((k as f64 + 0.5) * PI / bands as f64).sin())
            .collect();
        let sine_total: f64 = sines.iter().sum();
        let mut upper: Vec<usize> = (0..half)
            .map(|k| {
                let ideal = target as f64 * sines[k] / sine_total;
                (2 * ((ideal / 2.0).round() as usize)).max(2)
            })
            .collect();
        // mirrored pairs move the total in steps of 4
        let mut total: i64 = 2 * upper.iter().sum::<usize>() as i64;
        let goal = target as i64;
        let mut k = half;
        while (goal - total).abs() >= 4 {
            k = if k == 0 { half - 1 } else { k - 1 };
            if goal > total {
                upper[k] += 2;
                total += 4;
            } else if upper[k] > 2 {
                upper[k] -= 2;
                total -= 4;
            } else if upper.iter().all(|&c| c <= 2) {
                break;
            }
        }
        let mut counts = upper.clone();
        counts.extend(upper.iter().rev());
        let n: usize = counts.iter().sum();

        let mut edges = vec![0.0; bands + 1];
        edges[0] = 1.0;
        let mut acc = 0usize;
        for k in 0..half {
            acc += counts[k];
            edges[k + 1] = 1.0 - 2.0 * acc as f64 / n as f64;
        }
        edges[half] = 0.0;
        for k in 0..half {
            edges[bands - k] = -edges[k];
        }

        let mut offsets = Vec::with_capacity(bands);
        let mut centers = Vec::with_capacity(n);
        let mut off = 0;
        for k in 0..bands {
            offsets.push(off);
            off += counts[k];
            let z = 0.5 * (edges[k] + edges[k + 1]);
            let rho = (1.0 - z * z).max(0.0).sqrt();
            for j in 0..counts[k] {
                let phi = (j as f64 + 0.5) * 2.0 * PI / counts[k] as f64;
                centers.push([rho * phi.cos(), rho * phi.sin(), z]);
            }
        }
        let antipodes = (0..bands)
            .flat_map(|k| {
                let m = counts[k];
                let mirror = bands - 1 - k;
                let base = offsets[mirror];
                (0..m).map(move |j| base + (j + m / 2) % m)
            })
            .collect::<Vec<_>>();
        let area = 4.0 * PI / n as f64;
        let mut grid = Self {
            dim: 3,
            resolution: target,
            layout: Layout::Zonal { edges, counts, offsets },
            centers,
            areas: vec![area; n],
            antipodes: None,
        };
        grid.antipodes = Some(antipodes);
        grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The bin-count target the grid was built from.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        crate::numeric::pairwise_sum(&self.areas)
    }

    /// Index of the antipodal bin for every bin, when the grid is symmetric.
    pub fn antipodes(&self) -> Option<&[usize]> {
        self.antipodes.as_deref()
    }

    /// Number of latitude rings (1 on the circle).
    pub fn rings(&self) -> Vec<std::ops::Range<usize>> {
        match &self.layout {
            Layout::Circle { n } => vec![0..*n],
            Layout::Zonal { counts, offsets, .. } => {
                offsets.iter().zip(counts).map(|(o, c)| *o..*o + *c).collect()
            }
        }
    }

    /// Bin containing the unit vector `e`. Intervals are half-open `[a, b)`
    /// in longitude and `(z_lo, z_hi]` in height.
    #[inline]
    pub fn locate(&self, e: &Vec3) -> usize {
        let phi = longitude(e);
        self.locate_polar(e[2], phi)
    }

    /// As [`locate`](Self::locate) with precomputed height and longitude in `[0, 2 pi)`.
    #[inline]
    pub fn locate_polar(&self, z: f64, phi: f64) -> usize {
        match &self.layout {
            Layout::Circle { n } => {
                let i = (phi * (*n as f64) / (2.0 * PI)) as usize;
                i.min(n - 1)
            }
            Layout::Zonal { edges, counts, offsets } => {
                let bands = counts.len();
                // first band whose lower edge is below z
                let k = edges[1..].partition_point(|&lo| lo >= z).min(bands - 1);
                let m = counts[k];
                let j = ((phi * m as f64 / (2.0 * PI)) as usize).min(m - 1);
                offsets[k] + j
            }
        }
    }

    /// Fractional bin coordinate on the circle: bin `i` is centred at `i`.
    #[inline]
    pub fn circle_position(&self, phi: f64) -> Option<f64> {
        match &self.layout {
            Layout::Circle { n } => Some(phi * (*n as f64) / (2.0 * PI) - 0.5),
            Layout::Zonal { .. } => None,
        }
    }

    /// Parameter rectangle of a bin: (z_lo, z_hi, phi_lo, phi_hi). On the
    /// circle the z range is empty.
    pub fn bin_rect(&self, i: usize) -> (f64, f64, f64, f64) {
        match &self.layout {
            Layout::Circle { n } => {
                let w = 2.0 * PI / *n as f64;
                (0.0, 0.0, i as f64 * w, (i + 1) as f64 * w)
            }
            Layout::Zonal { edges, counts, offsets } => {
                let k = offsets.partition_point(|&o| o <= i) - 1;
                let j = i - offsets[k];
                let w = 2.0 * PI / counts[k] as f64;
                (edges[k + 1], edges[k], j as f64 * w, (j + 1) as f64 * w)
            }
        }
    }

    pub fn to_json(&self) -> String {
        let file = SphereGridFile {
            dim: self.dim,
            resolution: self.resolution,
            centers: self.centers.iter().map(|c| c[..self.dim].to_vec()).collect(),
            areas: self.areas.clone(),
        };
        serde_json::to_string(&file).expect("grid serializes")
    }

    /// Rebuild from JSON; the stored centres must match the regenerated grid.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SphereGridFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let grid = make_sphere_grid(file.dim, file.resolution)?;
        let same = grid.len() == file.centers.len()
            && grid
                .centers
                .iter()
                .zip(&file.centers)
                .all(|(a, b)| a[..grid.dim].iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12));
        if !same {
            return Err(Error::Parse("sphere grid centres do not match the stated resolution".into()));
        }
        Ok(grid)
    }
}

/// Longitude in `[0, 2 pi)`.
#[inline]
pub fn longitude(e: &Vec3) -> f64 {
    let phi = e[1].atan2(e[0]);
    if phi < 0.0 {
        let p = phi + 2.0 * PI;
        if p >= 2.0 * PI {
            0.0
        } else {
            p
        }
    } else {
        phi
    }
}

/// Great-circle distance between unit vectors.
pub fn geodesic(a: &Vec3, b: &Vec3) -> f64 {
    norm(&cross(a, b)).atan2(dot(a, b))
}

/// Piecewise-constant density (mass per unit area) on a [`SphereGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SphereDensity {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl SphereDensity {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} bins",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(format!("density value {} at bin {i}", values[i])));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<SphereGrid>, f: impl Fn(&Vec3) -> f64) -> Result<Self> {
        let values = grid.centers.iter().map(f).collect();
        Self::new(grid, values)
    }

    /// Histogram of per-bin masses divided by bin areas.
    pub fn from_masses(grid: Arc<SphereGrid>, masses: Vec<f64>) -> Result<Self> {
        let values = masses.iter().zip(&grid.areas).map(|(m, a)| m / a).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        let masses: Vec<f64> = self.values.iter().zip(&self.grid.areas).map(|(v, a)| v * a).collect();
        crate::numeric::pairwise_sum(&masses)
    }

    /// `sum value^p * area`, i.e. the p-th power of the L^p norm.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        let terms: Vec<f64> = self
            .values
            .iter()
            .zip(&self.grid.areas)
            .map(|(v, a)| if *v > 0.0 { v.powf(p) * a } else { 0.0 })
            .collect();
        crate::numeric::pairwise_sum(&terms)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
        }
    }

    /// Average of the density and its antipodal reflection, `(f(e) + f(-e)) / 2`.
    pub fn antipodal_mean(&self) -> Result<Self> {
        let anti = self
            .grid
            .antipodes()
            .ok_or_else(|| Error::InvalidParameter("grid has no antipodal symmetry (use an even resolution)".into()))?;
        let values = (0..self.values.len())
            .map(|i| 0.5 * (self.values[i] + self.values[anti[i]]))
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    /// CSV rows: bin index, centre coordinates, area, value.
    pub fn to_csv(&self) -> String {
        let dim = self.grid.dim;
        let mut out = String::from(if dim == 2 { "bin,x,y,area,value\n" } else { "bin,x,y,z,area,value\n" });
        for (i, (c, (a, v))) in self.grid.centers.iter().zip(self.grid.areas.iter().zip(&self.values)).enumerate() {
            let coords: Vec<String> = c[..dim].iter().map(|x| format!("{x}")).collect();
            out.push_str(&format!("{i},{},{a},{v}\n", coords.join(",")));
        }
        out
    }
}

/// `(sum value^p * area)^(1/p)` for `p >= 1`.
pub fn lp_norm_sphere(f: &SphereDensity, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("L^p exponent must be >= 1, got {p}")));
    }
    Ok(f.lp_norm_pow(p).powf(1.0 / p))
}
