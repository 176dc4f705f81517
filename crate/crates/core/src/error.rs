use alloc::string::String;

/// Which defining property of a weight function failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WeightCondition {
    /// `phi > 0` at nodes off the vanishing boundary.
    Positive,
    /// `phi = 0` on the vanishing boundary.
    VanishesOnBoundary,
    /// `min |grad phi|` above the configured floor.
    GradientFloor,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("unknown boundary `{0}`")]
    UnknownBoundary(String),
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("weight violates {condition:?} at node {node} (value {value:e})")]
    WeightViolation {
        condition: WeightCondition,
        node: usize,
        value: f64,
    },
    #[error("weight exponent {exponent:e} exceeds the representable budget")]
    ParameterOverflow { exponent: f64 },
    #[error("solver stopped after {iterations} iterations at relative residual {residual:e}")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("incompatible data: {0}")]
    IncompatibleData(String),
    #[error("truncation bound {bound:e} exceeds tolerance {tolerance:e}")]
    TruncationTooSmall { bound: f64, tolerance: f64 },
    #[error("measurement circle r = {radius} is not a grid ring")]
    GammaOffGrid { radius: f64 },
    #[error("no stable (gamma, s) region: {0}")]
    NoStableRegion(String),
    #[error("sampler exhausted its rejection budget on sample {sample}")]
    SamplingExhausted { sample: usize },
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGeometry(_) => "InvalidGeometry",
            Error::UnknownBoundary(_) => "UnknownBoundary",
            Error::UnsupportedGeometry(_) => "UnsupportedGeometry",
            Error::WeightViolation { .. } => "WeightViolation",
            Error::ParameterOverflow { .. } => "ParameterOverflow",
            Error::SolverDiverged { .. } => "SolverDiverged",
            Error::IncompatibleData(_) => "IncompatibleData",
            Error::TruncationTooSmall { .. } => "TruncationTooSmall",
            Error::GammaOffGrid { .. } => "GammaOffGrid",
            Error::NoStableRegion(_) => "NoStableRegion",
            Error::SamplingExhausted { .. } => "SamplingExhausted",
            Error::InvalidMetric(_) => "InvalidMetric",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
