//! Run configuration: TOML sections, dotted overrides, bundled presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::Profile;

/// Configs shipped with the binary, addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("gaussian_pair", include_str!("../../configs/gaussian_pair.toml")),
    ("segment", include_str!("../../configs/segment.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// Uniform measure on a segment, as `n` atoms placed iid (`random`) or at
    /// cell midpoints.
    Segment {
        from: Vec<f64>,
        to: Vec<f64>,
        n: usize,
        #[serde(default = "yes")]
        random: bool,
    },
    /// Planar Gaussian mixture, rows `[cx, cy, sigma, weight]`. Rasterized on
    /// `grid.nodes` unless `samples` asks for an iid point cloud.
    GaussianMixture {
        components: Vec<[f64; 4]>,
        #[serde(default)]
        samples: Option<usize>,
    },
    /// One of the bundled identity test pairs; supplies `nu` as well.
    Pair { name: String },
    /// Uniform density on `[lo, lo + side]^d`, rasterized on `grid.nodes`.
    UniformSquare { lo: Vec<f64>, side: f64 },
    Dirac { at: Vec<f64> },
    Points {
        points: Vec<Vec<f64>>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// Self-similar set: maps `x -> ratio x + t` for each translation.
    Ifs {
        ratio: f64,
        translations: Vec<Vec<f64>>,
        n: usize,
    },
    /// Measure JSON, or a point CSV when the extension is `.csv`.
    File { path: PathBuf },
}

fn yes() -> bool {
    true
}

impl Default for MeasureSpec {
    fn default() -> Self {
        MeasureSpec::Segment {
            from: vec![0.0, 0.0],
            to: vec![1.0, 0.0],
            n: 2000,
            random: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub nodes: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { nodes: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphereSection {
    pub resolution: usize,
}

impl Default for SphereSection {
    fn default() -> Self {
        Self { resolution: 720 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramSection {
    pub bins: usize,
    pub window: Option<[f64; 2]>,
}

impl Default for HistogramSection {
    fn default() -> Self {
        Self { bins: 512, window: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub per_axis: usize,
    pub jitter: bool,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            per_axis: 4,
            jitter: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyMethod {
    /// Pairwise for point clouds, lattice convolution for grid densities.
    #[default]
    Auto,
    Pairwise,
    Grid,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    pub method: EnergyMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionSection {
    pub direction: Vec<f64>,
}

impl Default for ProjectionSection {
    fn default() -> Self {
        Self {
            direction: vec![1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RadialSection {
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma1Section {
    pub ps: Vec<f64>,
    pub tolerance: f64,
}

impl Default for Lemma1Section {
    fn default() -> Self {
        Self {
            ps: vec![1.0, 1.2, 2.0],
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MollifySection {
    pub scales: Vec<f64>,
    pub profile: Profile,
    pub nodes: usize,
}

impl Default for MollifySection {
    fn default() -> Self {
        Self {
            scales: Vec::new(),
            profile: Profile::Bump,
            nodes: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub step: f64,
    /// Defaults to twice the smallest mollification scale, else 0.1.
    pub margin: Option<f64>,
    pub threshold: f64,
    pub doublings: Option<usize>,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            lo: vec![-2.0, -2.0],
            hi: vec![3.0, 3.0],
            step: 0.05,
            margin: None,
            threshold: 1.5,
            doublings: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BoxdimSection {
    /// Point CSV; the configured measure's atoms otherwise.
    pub points: Option<PathBuf>,
    /// Explicit scales; otherwise dyadic from `min_scale` to `max_scale`.
    pub scales: Vec<f64>,
    pub min_scale: Option<f64>,
    pub max_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Riesz energy exponent.
    pub s: Option<f64>,
    /// Test exponent of the exceptional-set bounds.
    pub t: Option<f64>,
    pub p: Option<f64>,
    /// Sobolev exponent; `s - (d - 1)` when absent.
    pub alpha: Option<f64>,
    pub measure: MeasureSpec,
    pub nu: Option<MeasureSpec>,
    pub grid: GridSection,
    pub sphere: SphereSection,
    pub histogram: HistogramSection,
    pub sampling: SamplingSection,
    pub energy: EnergySection,
    pub projection: ProjectionSection,
    pub radial: RadialSection,
    pub lemma1: Lemma1Section,
    pub mollify: MollifySection,
    pub scan: ScanSection,
    pub boxdim: BoxdimSection,
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parse a raw override value as a TOML literal, falling back to a string.
fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Set `a.b.c = value`, creating tables on the way.
pub fn set_dotted(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<String> = key.split('.').map(|k| k.replace('-', "_")).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse(format!("malformed key '{key}'")));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("'{part}' in '{key}' is not a section")))?;
    }
    node.insert(parts[parts.len() - 1].clone(), parse_value(raw));
    Ok(())
}

/// Config text from a file path or a bundled name.
pub fn config_source(name_or_path: &str) -> Result<String> {
    let path = Path::new(name_or_path);
    if path.exists() {
        return std::fs::read_to_string(path).map_err(|e| Error::io(path, e));
    }
    if let Some((_, text)) = BUNDLED.iter().find(|(n, _)| *n == name_or_path) {
        return Ok(text.to_string());
    }
    Err(Error::io(
        path,
        std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or bundled config"),
    ))
}

/// Merge overrides into the config text and deserialize.
pub fn resolve(text: Option<&str>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut table: toml::Table = match text {
        Some(t) => toml::from_str(t).map_err(|e| Error::Parse(single_line(&e.to_string())))?,
        None => toml::Table::new(),
    };
    for (k, v) in overrides {
        set_dotted(&mut table, k, v)?;
    }
    table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(single_line(&e.to_string())))
}

pub(crate) fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
