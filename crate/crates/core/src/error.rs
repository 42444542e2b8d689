use thiserror::Error;

/// Errors raised by the geometry, flow and analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid grid request: {0}")]
    InvalidGrid(String),

    #[error("field has {got} values but the grid has {expected} nodes")]
    FieldSize { expected: usize, got: usize },

    #[error("field contains a non-finite value at node {node}")]
    NonFinite { node: usize },

    /// The field carries more energy above the band limit than the gauge tolerates.
    #[error("under-resolved field: aliasing energy fraction {fraction:.3e} exceeds {threshold:.1e}; refine the grid")]
    GaugeResolution { fraction: f64, threshold: f64 },

    #[error("convexity lost at node {node}: minimum principal radius {min_radius:.6e}")]
    ConvexityLoss { node: usize, min_radius: f64 },

    #[error("radial function non-positive at node {node}: r = {value:.6e}")]
    StarShapeLoss { node: usize, value: f64 },

    #[error("step limit of {steps} steps reached at t = {t}")]
    StepLimit { steps: usize, t: f64 },

    #[error("invalid anisotropy: {0}")]
    InvalidAnisotropy(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gauge mismatch: {0}")]
    GaugeMismatch(String),

    #[error("extinction estimate needs at least {needed} records, got {got}")]
    InsufficientRecords { needed: usize, got: usize },

    #[error("record at t = {t} is not before the extinction time T = {extinction}")]
    PastExtinction { t: f64, extinction: f64 },

    #[error("volume is not strictly decreasing at record {index}")]
    NonMonotoneVolume { index: usize },

    #[error("support function non-positive at node {node} after recentering ({value:.3e})")]
    Recentering { node: usize, value: f64 },

    #[error("coincident principal curvatures at indices {0} and {1}")]
    CoincidentEigenvalues(usize, usize),

    #[error("linear program failed: {0}")]
    Optimization(String),
}

pub type Result<T> = std::result::Result<T, FlowError>;
