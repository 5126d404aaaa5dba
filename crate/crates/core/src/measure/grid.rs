use serde::{Deserialize, Serialize};

use super::{check_dim, BoundingBox, MassSource, Sampling};
use crate::error::{Error, Result};
use crate::numeric::{mix64, pairwise_sum, unit_f64, Vec3};

/// Regular cubic lattice. Node `i` sits at `origin + i * spacing` and stands
/// for the cell of side `spacing` centred on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dim: usize,
    pub origin: Vec3,
    pub spacing: f64,
    /// Nodes per axis; the third entry is 1 for planar lattices.
    pub shape: [usize; 3],
}

impl LatticeSpec {
    pub fn new(dim: usize, origin: Vec3, spacing: f64, shape: &[usize]) -> Result<Self> {
        check_dim(dim)?;
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidParameter(format!("lattice spacing must be positive, got {spacing}")));
        }
        if shape.len() != dim || shape.iter().any(|&n| n < 3) {
            return Err(Error::InvalidParameter(format!(
                "lattice shape {shape:?} must have {dim} axes of at least 3 nodes"
            )));
        }
        let mut s = [1usize; 3];
        s[..dim].copy_from_slice(shape);
        let mut o = origin;
        if dim == 2 {
            o[2] = 0.0;
        }
        Ok(Self {
            dim,
            origin: o,
            spacing,
            shape: s,
        })
    }

    /// `n` cells per axis tiling the cube `[lo, lo + side]^d`.
    pub fn cube(dim: usize, lo: &Vec3, side: f64, n: usize) -> Result<Self> {
        let h = side / n as f64;
        let mut origin = [0.0; 3];
        for a in 0..dim {
            origin[a] = lo[a] + 0.5 * h;
        }
        Self::new(dim, origin, h, &vec![n; dim])
    }

    /// Square lattice of `n` nodes per axis whose interior contains `bbox`
    /// inflated by `margin`.
    pub fn covering(bbox: &BoundingBox, margin: f64, n: usize) -> Result<Self> {
        if n < 5 {
            return Err(Error::InvalidParameter(format!("need at least 5 nodes per axis, got {n}")));
        }
        let inflated = bbox.inflate(margin);
        let extent = inflated.max_extent().max(f64::MIN_POSITIVE);
        // interior spans nodes 1..=n-2, leave one extra cell of slack
        let h = extent / (n as f64 - 4.0);
        let c = inflated.center();
        let mut origin = [0.0; 3];
        for a in 0..bbox.dim {
            origin[a] = c[a] - 0.5 * (n as f64 - 1.0) * h;
        }
        Self::new(bbox.dim, origin, h, &vec![n; bbox.dim])
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    #[inline]
    pub fn flat(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.shape[1] + idx[1]) * self.shape[2] + idx[2]
    }

    #[inline]
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let k = flat % self.shape[2];
        let rest = flat / self.shape[2];
        [rest / self.shape[1], rest % self.shape[1], k]
    }

    #[inline]
    pub fn node(&self, idx: [usize; 3]) -> Vec3 {
        let mut p = self.origin;
        for a in 0..self.dim {
            p[a] += idx[a] as f64 * self.spacing;
        }
        p
    }

    pub fn is_boundary(&self, idx: [usize; 3]) -> bool {
        (0..self.dim).any(|a| idx[a] == 0 || idx[a] + 1 == self.shape[a])
    }

    /// Box spanned by the non-boundary nodes.
    pub fn interior_box(&self) -> BoundingBox {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..self.dim {
            lo[a] = self.origin[a] + self.spacing;
            hi[a] = self.origin[a] + (self.shape[a] - 2) as f64 * self.spacing;
        }
        BoundingBox::new(self.dim, lo, hi)
    }
}

/// Nonnegative density on a lattice with total mass `h^d * sum(values) = 1`
/// and a zero boundary layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    lattice: LatticeSpec,
    values: Vec<f64>,
    active: Vec<usize>,
}

impl GridDensity {
    /// Validate and normalize raw values (row-major, last axis fastest).
    /// Values already of unit mass within 1e-12 are kept as given.
    pub fn from_values(lattice: LatticeSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values for the lattice, got {}",
                lattice.len(),
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
            if *v < 0.0 {
                return Err(Error::NegativeWeight(i));
            }
            if *v > 0.0 && lattice.is_boundary(lattice.unravel(i)) {
                return Err(Error::InvalidParameter(format!(
                    "density must vanish on the boundary layer (node {i} is {v})"
                )));
            }
        }
        let mass = pairwise_sum(&values) * lattice.cell_volume();
        if mass <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let values: Vec<f64> = if (mass - 1.0).abs() <= 1e-12 {
            values
        } else {
            values.iter().map(|v| v / mass).collect()
        };
        Ok(Self::assemble(lattice, values))
    }

    /// Sample `f` at the nodes, zero the boundary layer and normalize.
    pub fn from_fn(lattice: LatticeSpec, f: impl Fn(&Vec3) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..lattice.len())
            .map(|i| {
                let idx = lattice.unravel(i);
                if lattice.is_boundary(idx) {
                    0.0
                } else {
                    f(&lattice.node(idx)).max(0.0)
                }
            })
            .collect();
        Self::from_values(lattice, values)
    }

    fn assemble(lattice: LatticeSpec, values: Vec<f64>) -> Self {
        let active = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(i, _)| i)
            .collect();
        Self {
            lattice,
            values,
            active,
        }
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim
    }

    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.values) * self.lattice.cell_volume()
    }

    /// Flat indices of cells with positive density.
    pub fn active_cells(&self) -> &[usize] {
        &self.active
    }

    /// Nearest-node value; zero outside the lattice.
    pub fn value_at(&self, x: &Vec3) -> f64 {
        let l = &self.lattice;
        let mut idx = [0usize; 3];
        for a in 0..l.dim {
            let u = ((x[a] - l.origin[a]) / l.spacing).round();
            if u < 0.0 || u >= l.shape[a] as f64 {
                return 0.0;
            }
            idx[a] = u as usize;
        }
        self.values[l.flat(idx)]
    }

    fn cell_box(&self, flat: usize) -> BoundingBox {
        let c = self.lattice.node(self.lattice.unravel(flat));
        BoundingBox::new(self.lattice.dim, c, c).inflate(0.5 * self.lattice.spacing)
    }
}

impl MassSource for GridDensity {
    fn dim(&self) -> usize {
        self.lattice.dim
    }

    fn support_box(&self) -> BoundingBox {
        let mut bb = self.cell_box(self.active[0]);
        for &i in &self.active[1..] {
            let c = self.cell_box(i);
            bb.include(&c.lo);
            bb.include(&c.hi);
        }
        bb
    }

    fn support_distance(&self, x: &Vec3) -> f64 {
        self.active
            .iter()
            .map(|&i| self.cell_box(i).distance_to(x))
            .fold(f64::INFINITY, f64::min)
    }

    fn is_smooth(&self) -> bool {
        true
    }

    fn visit_atoms<F: FnMut(&Vec3, f64)>(&self, mut f: F) {
        let vol = self.lattice.cell_volume();
        for &i in &self.active {
            f(&self.lattice.node(self.lattice.unravel(i)), self.values[i] * vol);
        }
    }

    fn visit_samples<F: FnMut(&Vec3, f64)>(&self, sampling: &Sampling, mut f: F) {
        let l = &self.lattice;
        let dim = l.dim;
        let k = sampling.per_axis.max(1);
        let strata = k.pow(dim as u32);
        let vol = l.cell_volume();
        let h = l.spacing;
        let sub = h / k as f64;
        let seed = mix64(sampling.seed);
        for &i in &self.active {
            let centre = l.node(l.unravel(i));
            let m = self.values[i] * vol / strata as f64;
            let cell_seed = mix64(seed ^ (i as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
            for s in 0..strata {
                let mut p = centre;
                let mut rem = s;
                for (a, coord) in p.iter_mut().enumerate().take(dim) {
                    let stratum = rem % k;
                    rem /= k;
                    let u = if sampling.jitter {
                        unit_f64(mix64(cell_seed.wrapping_add((s * 3 + a) as u64)))
                    } else {
                        0.5
                    };
                    *coord += -0.5 * h + (stratum as f64 + u) * sub;
                }
                f(&p, m);
            }
        }
    }

    fn total_mass(&self) -> f64 {
        self.mass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(n: usize) -> GridDensity {
        // cells tile [-0.5, 1.5]^2; density 1 on [0,1]^2
        let lat = LatticeSpec::cube(2, &[-0.5, -0.5, 0.0], 2.0, n).unwrap();
        GridDensity::from_fn(lat, |p| {
            if (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn normalized_mass_is_one() {
        let g = unit_square(64);
        assert!((g.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn support_distance_matches_brute_force_within_a_cell() {
        let g = unit_square(64);
        let d = g.support_distance(&[2.0, 0.5, 0.0]);
        assert!((d - 1.0).abs() <= g.lattice().spacing, "{d}");
        assert_eq!(g.support_distance(&[0.5, 0.5, 0.0]), 0.0);
    }

    #[test]
    fn boundary_layer_must_vanish() {
        let lat = LatticeSpec::new(2, [0.0; 3], 1.0, &[3, 3]).unwrap();
        let err = GridDensity::from_values(lat, vec![1.0; 9]).unwrap_err();
        assert!(err.to_string().contains("boundary"));
    }

    #[test]
    fn samples_stay_in_their_cells_and_conserve_mass() {
        let g = unit_square(32);
        let sampling = Sampling {
            seed: 7,
            per_axis: 3,
            jitter: true,
        };
        let mut total = 0.0;
        let bb = g.support_box();
        g.visit_samples(&sampling, |p, m| {
            assert!(bb.contains(p));
            total += m;
        });
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unravel_inverts_flat() {
        let lat = LatticeSpec::new(3, [0.0; 3], 0.5, &[4, 5, 6]).unwrap();
        for i in 0..lat.len() {
            assert_eq!(lat.flat(lat.unravel(i)), i);
        }
    }
}
