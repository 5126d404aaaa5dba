use serde::{Deserialize, Serialize};

use super::{GridDensity, LatticeSpec, MassSource};
use crate::error::{Error, Result};
use crate::numeric::{gl16, integrate_gl, Vec3};

/// Radial mollifier profile on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `exp(-1 / (1 - |u|^2))`, C-infinity.
    #[default]
    Bump,
    /// `(1 + cos(pi |u|)) / 2`, C^1.
    RaisedCosine,
}

impl Profile {
    #[inline]
    pub fn raw(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        match self {
            Profile::Bump => (-1.0 / (1.0 - r * r)).exp(),
            Profile::RaisedCosine => 0.5 * (1.0 + (std::f64::consts::PI * r).cos()),
        }
    }
}

/// Approximate identity `psi_eps(u) = eps^{-d} psi(u / eps)` with unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub scale: f64,
    pub profile: Profile,
}

impl Mollifier {
    pub fn new(scale: f64) -> Result<Self> {
        Self::with_profile(scale, Profile::Bump)
    }

    pub fn with_profile(scale: f64, profile: Profile) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!("mollifier scale must be positive, got {scale}")));
        }
        Ok(Self { scale, profile })
    }

    /// Constant making the profile integrate to 1 over the unit ball in R^dim.
    pub fn normalization(&self, dim: usize) -> f64 {
        let sphere_area = if dim == 2 { 2.0 * std::f64::consts::PI } else { 4.0 * std::f64::consts::PI };
        // the bump is flat near r = 1, so a composite rule is plenty
        let pieces = 32;
        let mut radial = 0.0;
        for i in 0..pieces {
            let a = i as f64 / pieces as f64;
            let b = (i + 1) as f64 / pieces as f64;
            radial += integrate_gl(gl16(), a, b, |r| self.profile.raw(r) * r.powi(dim as i32 - 1));
        }
        1.0 / (sphere_area * radial)
    }

    /// Continuous density at distance `r` from the centre.
    pub fn density(&self, dim: usize, r: f64) -> f64 {
        self.profile.raw(r / self.scale) * self.normalization(dim) / self.scale.powi(dim as i32)
    }
}

/// Convolve `mu` with the mollifier and sample the result on `lattice`.
///
/// Each atom (a point mass, or a lattice cell of a grid density) is replaced
/// by the mollifier sampled at the surrounding nodes and renormalized so the
/// stamp carries exactly the atom's mass. Stamps whose support contains no
/// node collapse onto the nearest node.
pub fn mollify<M: MassSource>(mu: &M, mollifier: &Mollifier, lattice: &LatticeSpec) -> Result<GridDensity> {
    let dim = mu.dim();
    if dim != lattice.dim {
        return Err(Error::GridMismatch(format!(
            "measure is {dim}-dimensional, lattice is {}-dimensional",
            lattice.dim
        )));
    }
    let eps = mollifier.scale;
    let mut atoms: Vec<(Vec3, f64)> = Vec::new();
    mu.visit_atoms(|p, m| atoms.push((*p, m)));
    let atom_box = super::BoundingBox::from_points(dim, atoms.iter().map(|(p, _)| p)).ok_or(Error::Empty)?;
    let required = atom_box.inflate(eps);
    if !lattice.interior_box().contains_box(&required) {
        return Err(Error::GridTooSmall {
            required: required.describe(),
        });
    }

    let h = lattice.spacing;
    let vol = lattice.cell_volume();
    let reach = (eps / h).ceil() as i64 + 1;
    let mut values = vec![0.0; lattice.len()];
    let mut aligned: Option<Vec<([i64; 3], f64)>> = None;

    for (y, m) in &atoms {
        // nearest node and sub-cell offset of the atom
        let mut base = [0i64; 3];
        let mut frac = [0.0; 3];
        for a in 0..dim {
            let u = (y[a] - lattice.origin[a]) / h;
            base[a] = u.round() as i64;
            frac[a] = u - base[a] as f64;
        }
        let owned;
        let stamp: &Vec<([i64; 3], f64)> = if is_aligned(&frac) {
            aligned.get_or_insert_with(|| build_stamp(dim, &frac, reach, h, mollifier))
        } else {
            owned = build_stamp(dim, &frac, reach, h, mollifier);
            &owned
        };
        if stamp.is_empty() {
            let idx = [base[0] as usize, base[1] as usize, if dim == 3 { base[2] as usize } else { 0 }];
            values[lattice.flat(idx)] += m / vol;
            continue;
        }
        for (off, w) in stamp.iter() {
            let mut idx = [0usize; 3];
            for a in 0..dim {
                idx[a] = (base[a] + off[a]) as usize;
            }
            values[lattice.flat(idx)] += m * w / vol;
        }
    }
    GridDensity::from_values(*lattice, values)
}

/// Lattice-aligned atoms share one cached stamp.
fn is_aligned(frac: &[f64; 3]) -> bool {
    frac.iter().all(|f| f.abs() < 1e-9)
}

fn build_stamp(dim: usize, frac: &[f64; 3], reach: i64, h: f64, mollifier: &Mollifier) -> Vec<([i64; 3], f64)> {
    let eps = mollifier.scale;
    let mut out = Vec::new();
    let range = -reach..=reach;
    let zr = if dim == 3 { range.clone() } else { 0..=0 };
    for i in range.clone() {
        for j in range.clone() {
            for k in zr.clone() {
                let off = [i, j, k];
                let mut r2 = 0.0;
                for a in 0..dim {
                    let d = (off[a] as f64 - frac[a]) * h;
                    r2 += d * d;
                }
                let w = mollifier.profile.raw(r2.sqrt() / eps);
                if w > 0.0 {
                    out.push((off, w));
                }
            }
        }
    }
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut out {
        *w /= total;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::DiscreteMeasure;
    use crate::numeric::norm;

    #[test]
    fn dirac_becomes_unit_mass_bump_inside_its_ball() {
        let mu = DiscreteMeasure::dirac(2, [0.0; 3]).unwrap();
        let lat = LatticeSpec::cube(2, &[-0.5, -0.5, 0.0], 1.0, 101).unwrap();
        let g = mollify(&mu, &Mollifier::new(0.1).unwrap(), &lat).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-9);
        for &i in g.active_cells() {
            let p = lat.node(lat.unravel(i));
            assert!(norm(&p) < 0.1);
        }
    }

    #[test]
    fn too_small_grid_names_the_required_box() {
        let mu = DiscreteMeasure::dirac(2, [0.0; 3]).unwrap();
        let lat = LatticeSpec::cube(2, &[-0.1, -0.1, 0.0], 0.2, 20).unwrap();
        let err = mollify(&mu, &Mollifier::new(0.1).unwrap(), &lat).unwrap_err();
        assert!(err.to_string().contains("[-0.1, 0.1]"), "{err}");
    }

    #[test]
    fn normalization_gives_unit_mass() {
        for profile in [Profile::Bump, Profile::RaisedCosine] {
            for dim in [2, 3] {
                let m = Mollifier::with_profile(1.0, profile).unwrap();
                let c = m.normalization(dim);
                // midpoint sum over a fine lattice of the unit ball
                let n = if dim == 2 { 400 } else { 80 };
                let h = 2.0 / n as f64;
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..(if dim == 3 { n } else { 1 }) {
                            let x = -1.0 + (i as f64 + 0.5) * h;
                            let y = -1.0 + (j as f64 + 0.5) * h;
                            let z = if dim == 3 { -1.0 + (k as f64 + 0.5) * h } else { 0.0 };
                            acc += profile.raw((x * x + y * y + z * z).sqrt());
                        }
                    }
                }
                let mass = acc * h.powi(dim as i32) * c;
                assert!((mass - 1.0).abs() < 2e-3, "{profile:?} d={dim}: {mass}");
            }
        }
    }

    #[test]
    fn tiny_scale_collapses_to_nearest_node() {
        let mu = DiscreteMeasure::dirac(2, [0.013, 0.0, 0.0]).unwrap();
        let lat = LatticeSpec::cube(2, &[-0.5, -0.5, 0.0], 1.0, 10).unwrap();
        let g = mollify(&mu, &Mollifier::new(1e-4).unwrap(), &lat).unwrap();
        assert_eq!(g.active_cells().len(), 1);
        assert!((g.mass() - 1.0).abs() < 1e-12);
    }
}
