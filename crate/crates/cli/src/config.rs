//! JSON experiment configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use aqlab::audit::CorollaryId;
use aqlab::control::ControlSpec;
use aqlab::SpaceSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub spaces: Spaces,
    pub phi: ControlSpec,
    pub mapping: MappingConfig,
    #[serde(default = "default_methods", deserialize_with = "methods_de")]
    pub method: Vec<Method>,
    pub samples: SampleConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub fixpoint: FixpointConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Allows `X` and `Y` with different homogeneity. No theorem is checked
    /// for that case; the `Y` exponent drives every weight.
    #[serde(default)]
    pub experimental_distinct_beta: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spaces {
    pub x: SpaceSpec,
    pub y: SpaceSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingConfig {
    pub core: CoreConfig,
    #[serde(default)]
    pub perturbation: Option<PerturbationConfig>,
    /// Rescale the perturbation amplitude to the largest admissible value on
    /// the sample tuples before anything else runs.
    #[serde(default)]
    pub calibrate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoreConfig {
    Zero,
    /// `(zᵀ Q z) · A x`.
    Separable { a: Vec<Vec<f64>>, q: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationConfig {
    PowerProduct { eta: f64, a: f64, b: f64 },
    Oscillatory { eta: f64, a: f64, b: f64, freq: f64 },
    /// CSV with header `x,z,value`; relative paths resolve against the
    /// config file's directory.
    Table { eta: f64, path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DirectHalving,
    DirectDoubling,
    FixpointHalving,
    FixpointDoubling,
    All,
}

impl Method {
    pub const CONCRETE: [Method; 4] = [
        Method::DirectHalving,
        Method::DirectDoubling,
        Method::FixpointHalving,
        Method::FixpointDoubling,
    ];
}

fn default_methods() -> Vec<Method> {
    vec![Method::All]
}

fn methods_de<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<Method>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Method),
        Many(Vec<Method>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(m) => vec![m],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    /// Point grid spacing is `2^-depth`.
    pub depth: u32,
    /// Coordinates lie in `[-range, range]`.
    pub range: f64,
    #[serde(default)]
    pub random_count: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Spacing `2^-tuple_depth` of the 4-tuple grid used for admissibility,
    /// calibration and structural checks.
    #[serde(default)]
    pub tuple_depth: u32,
    /// Number of seeded random 4-tuples added to the tuple grid.
    #[serde(default)]
    pub random_tuples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub identity: f64,
    pub extraction: f64,
    pub series: f64,
    pub series_max_terms: usize,
    pub k_max: usize,
    pub n_max: usize,
    /// Agreement of limits computed along different routes.
    pub routes: f64,
    /// Tolerance for the structural checks on the extracted approximant.
    pub structure: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: 1e-12,
            extraction: 1e-10,
            series: 1e-12,
            series_max_terms: 100_000,
            k_max: 60,
            n_max: 200,
            routes: 1e-10,
            structure: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixpointConfig {
    #[serde(rename = "L")]
    pub l: f64,
}

impl Default for FixpointConfig {
    fn default() -> Self {
        FixpointConfig { l: 0.5 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default)]
    pub corollaries: Vec<CorollaryRequest>,
    /// Run the structural checks on the configured mapping itself.
    #[serde(default)]
    pub structure: bool,
}

/// One corollary to audit. Parameters default to the configured control
/// and the `Y` homogeneity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorollaryRequest {
    pub id: CorollaryId,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub r_values: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config and resolves relative table paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(PerturbationConfig::Table { path: p, .. }) = &mut cfg.mapping.perturbation {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {}, expected {CONFIG_VERSION}", self.version));
        }
        let (bx, by) = (self.spaces.x.homogeneity(), self.spaces.y.homogeneity());
        if bx != by && !self.experimental_distinct_beta {
            return bad(format!(
                "X and Y homogeneity differ ({bx} vs {by}); set experimental_distinct_beta to allow it"
            ));
        }
        let s = &self.samples;
        if !(s.range.is_finite() && s.range > 0.0) {
            return bad(format!("samples.range must be positive, got {}", s.range));
        }
        if s.depth > 30 || s.tuple_depth > 30 {
            return bad("sample depths above 30 are not supported".into());
        }
        if (s.random_count > 0 || s.random_tuples > 0) && s.seed.is_none() {
            return bad("samples.seed is required when random samples are requested".into());
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("identity", t.identity),
            ("extraction", t.extraction),
            ("series", t.series),
            ("routes", t.routes),
            ("structure", t.structure),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("tolerances.{name} must be positive, got {v}"));
            }
        }
        if t.k_max == 0 || t.n_max == 0 || t.series_max_terms == 0 {
            return bad("k_max, n_max and series_max_terms must be positive".into());
        }
        if !(self.fixpoint.l > 0.0 && self.fixpoint.l < 1.0) {
            return bad(format!("fixpoint.L must lie in (0, 1), got {}", self.fixpoint.l));
        }
        if let Some(v) = self.sweep.r_values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return bad(format!("sweep r values must be positive, got {v}"));
        }
        Ok(())
    }

    /// Concrete methods in canonical order.
    pub fn methods(&self) -> Vec<Method> {
        if self.method.contains(&Method::All) {
            return Method::CONCRETE.to_vec();
        }
        let mut m = self.method.clone();
        m.sort();
        m.dedup();
        m
    }

    pub fn beta(&self) -> f64 {
        self.spaces.y.homogeneity()
    }
}
