use crate::anisotropy::Anisotropy;
use crate::diagnostics::AuditSpec;
use crate::error::{FlowError, Result};
use crate::flow::Controls;
use crate::sphere::GridMode;
use crate::state::{Gauge, InitialBody};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub mode: GridMode,
    /// Band limit `L` for full2d grids, node count for axisym grids.
    pub resolution: usize,
}

/// Pinching constants; `auto_c` replaces `c` by the admissible value over
/// 1.5 times the initial body's circumscribed ball about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PinchConfig {
    pub eps: f64,
    pub c: f64,
    pub auto_c: bool,
}

impl Default for PinchConfig {
    fn default() -> Self {
        PinchConfig { eps: 0.1, c: 0.0, auto_c: false }
    }
}

/// Which `(σ, p)` norms are monitored and how often meshes are written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSchedule {
    pub sigma: Vec<f64>,
    pub p: Vec<f64>,
    /// Write a mesh every this many records (the last record is always written).
    pub mesh_stride: usize,
}

impl Default for DiagnosticsSchedule {
    fn default() -> Self {
        DiagnosticsSchedule { sigma: vec![0.0, 0.25, 0.5], p: vec![2.0], mesh_stride: 25 }
    }
}

impl DiagnosticsSchedule {
    pub fn norms(&self) -> Vec<(f64, f64)> {
        self.sigma.iter().flat_map(|&s| self.p.iter().map(move |&p| (s, p))).collect()
    }
}

/// One experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub dimension: usize,
    pub gauge: Gauge,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    pub body: InitialBody,
    #[serde(default)]
    pub anisotropy: Anisotropy,
    #[serde(default)]
    pub pinch: PinchConfig,
    #[serde(default)]
    pub controls: Controls,
    #[serde(default)]
    pub diagnostics: DiagnosticsSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn bad<T>(msg: String) -> Result<T> {
    Err(FlowError::InvalidParameter(msg))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FlowError::InvalidParameter(format!("config does not parse: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| FlowError::InvalidParameter(format!("config does not serialize: {e}")))
    }

    /// Checks everything that can be checked without building a grid.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("experiment name {:?} must be a non-empty file name", self.name));
        }
        if self.dimension < 2 {
            return bad(format!("dimension must be at least 2, got {}", self.dimension));
        }
        if self.gauge == Gauge::RadialAxisym && self.grid.mode != GridMode::Axisym {
            return Err(FlowError::GaugeMismatch("the radial gauge needs an axisym grid".into()));
        }
        let PinchConfig { eps, c, .. } = self.pinch;
        if !(eps > 0.0 && eps < 1.0) {
            return bad(format!("pinch.eps must lie in (0, 1), got {eps}"));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return bad(format!("pinch.c must be non-negative, got {c}"));
        }
        self.controls.validate()?;
        self.anisotropy.validate()?;
        self.anisotropy.frame_center(self.dimension, self.grid.mode)?;
        let d = &self.diagnostics;
        if d.sigma.iter().any(|s| !(0.0..=0.5).contains(s)) || d.p.iter().any(|p| !(*p >= 2.0)) {
            return bad("diagnostics need σ ∈ [0, 1/2] and p ≥ 2".into());
        }
        if d.mesh_stride == 0 {
            return bad("diagnostics.mesh_stride must be positive".into());
        }
        Ok(())
    }
}

/// Named audit batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub batches: BTreeMap<String, AuditBatch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// What an audit batch is expected to show.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditExpectation {
    /// Every `Q ≥ −1e-10`.
    NonNegative,
    /// At least one `Q < 0`.
    NegativeFound,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditBatch {
    pub expect: AuditExpectation,
    pub spec: AuditSpec,
}

impl AuditConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: AuditConfig = toml::from_str(text).map_err(|e| FlowError::InvalidParameter(format!("audit config does not parse: {e}")))?;
        for b in cfg.batches.values() {
            b.spec.validate()?;
        }
        Ok(cfg)
    }
}

/// Evolution-equation check on a body and the closed-form sphere check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub name: String,
    pub dimension: usize,
    pub grid: GridConfig,
    pub body: InitialBody,
    #[serde(default)]
    pub anisotropy: Anisotropy,
    pub dt: f64,
    /// Radius of the origin-centred sphere used for the metric identity.
    pub sphere_radius: f64,
    /// Bound on the relative residuals of the support, mean-curvature and speed identities.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Bound on the relative residual of the metric identity on the sphere.
    #[serde(default = "default_metric_tolerance")]
    pub metric_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_tolerance() -> f64 {
    1e-4
}

fn default_metric_tolerance() -> f64 {
    1e-10
}

impl VerifyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: VerifyConfig = toml::from_str(text).map_err(|e| FlowError::InvalidParameter(format!("verify config does not parse: {e}")))?;
        if !(cfg.dt > 0.0 && cfg.sphere_radius > 0.0 && cfg.tolerance > 0.0 && cfg.metric_tolerance > 0.0) {
            return bad("dt, sphere_radius and tolerances must be positive".into());
        }
        cfg.anisotropy.validate()?;
        Ok(cfg)
    }
}
