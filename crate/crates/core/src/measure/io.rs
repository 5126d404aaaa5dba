//! JSON and CSV serialization of measures.
//!
//! Point clouds: `{dim, points, weights}`. Grid densities:
//! `{dim, origin, spacing, shape, values}` with row-major values.
//! CSV point clouds have one row per point and the weight in the last column.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DiscreteMeasure, GridDensity, LatticeSpec};
use crate::error::{Error, Result};
use crate::numeric::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureFile {
    Grid {
        dim: usize,
        origin: Vec<f64>,
        spacing: f64,
        shape: Vec<usize>,
        values: Vec<f64>,
    },
    Points {
        dim: usize,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

/// Either representation, as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Discrete(DiscreteMeasure),
    Grid(GridDensity),
}

impl Measure {
    pub fn dim(&self) -> usize {
        match self {
            Measure::Discrete(m) => m.dim(),
            Measure::Grid(g) => g.dim(),
        }
    }
}

fn to_vec3(dim: usize, coords: &[f64], index: usize) -> Result<Vec3> {
    if coords.len() != dim {
        return Err(Error::Parse(format!(
            "point {index} has {} coordinates, expected {dim}",
            coords.len()
        )));
    }
    let mut p = [0.0; 3];
    p[..dim].copy_from_slice(coords);
    Ok(p)
}

impl From<&DiscreteMeasure> for MeasureFile {
    fn from(m: &DiscreteMeasure) -> Self {
        MeasureFile::Points {
            dim: m.dim(),
            points: m.points().iter().map(|p| p[..m.dim()].to_vec()).collect(),
            weights: m.weights().to_vec(),
        }
    }
}

impl From<&GridDensity> for MeasureFile {
    fn from(g: &GridDensity) -> Self {
        let l = g.lattice();
        MeasureFile::Grid {
            dim: l.dim,
            origin: l.origin[..l.dim].to_vec(),
            spacing: l.spacing,
            shape: l.shape[..l.dim].to_vec(),
            values: g.values().to_vec(),
        }
    }
}

impl From<&Measure> for MeasureFile {
    fn from(m: &Measure) -> Self {
        match m {
            Measure::Discrete(d) => d.into(),
            Measure::Grid(g) => g.into(),
        }
    }
}

impl MeasureFile {
    pub fn into_measure(self) -> Result<Measure> {
        match self {
            MeasureFile::Points { dim, points, weights } => {
                let pts = points
                    .iter()
                    .enumerate()
                    .map(|(i, c)| to_vec3(dim, c, i))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Measure::Discrete(DiscreteMeasure::from_points(dim, pts, weights)?))
            }
            MeasureFile::Grid {
                dim,
                origin,
                spacing,
                shape,
                values,
            } => {
                let lattice = LatticeSpec::new(dim, to_vec3(dim, &origin, 0)?, spacing, &shape)?;
                Ok(Measure::Grid(GridDensity::from_values(lattice, values)?))
            }
        }
    }
}

pub fn to_json(m: &Measure) -> String {
    serde_json::to_string(&MeasureFile::from(m)).expect("measure serializes")
}

pub fn from_json(text: &str) -> Result<Measure> {
    let file: MeasureFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_measure()
}

pub fn read_measure(path: &Path) -> Result<Measure> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(Measure::Discrete(points_from_csv(&text)?)),
        _ => from_json(&text),
    }
}

pub fn write_measure(path: &Path, m: &Measure) -> Result<()> {
    std::fs::write(path, to_json(m)).map_err(|e| Error::io(path, e))
}

/// Parse a CSV point cloud: `x,y[,z],weight` per row. A non-numeric first
/// row is treated as a header.
pub fn points_from_csv(text: &str) -> Result<DiscreteMeasure> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if rows.is_empty() && line_no == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("line {}: {e}", line_no + 1))),
        }
    }
    let first = rows.first().ok_or(Error::Empty)?;
    let dim = first.len().saturating_sub(1);
    let mut points = Vec::with_capacity(rows.len());
    let mut weights = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim + 1 {
            return Err(Error::Parse(format!("row {i} has {} columns, expected {}", r.len(), dim + 1)));
        }
        points.push(to_vec3(dim, &r[..dim], i).or_else(|_| Err(Error::UnsupportedDim(dim)))?);
        weights.push(r[dim]);
    }
    DiscreteMeasure::from_points(dim, points, weights)
}

pub fn points_to_csv(m: &DiscreteMeasure) -> String {
    let mut out = String::new();
    for (p, w) in m.points().iter().zip(m.weights()) {
        let cols: Vec<String> = p[..m.dim()].iter().chain(std::iter::once(w)).map(|c| format!("{c}")).collect();
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}
