use thiserror::Error;

use crate::lattice::LatticeVector;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rates for {z} and its mirror differ ({rate} vs {mirror})")]
    AsymmetricRates { z: LatticeVector, rate: f64, mirror: f64 },

    #[error("jump {z} has non-positive or non-finite rate {rate}")]
    NonpositiveRate { z: LatticeVector, rate: f64 },

    #[error("the zero vector may not appear in the jump table")]
    ZeroJumpInSupport,

    #[error("jump support does not generate Z^{d} (lattice index {index})")]
    NotIrreducible { d: usize, index: u64 },

    #[error("jump table is empty")]
    EmptySupport,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("jump covariance matrix is singular")]
    SingularHessian,

    #[error("quadrature did not converge: value {value}, estimated error {est_error}")]
    NotConverged { value: f64, est_error: f64 },

    #[error("Green's function at lambda = 0 diverges in dimension {d}")]
    DivergentGreenFunction { d: usize },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("time step too coarse: {0}")]
    StepTooCoarse(String),

    #[error("tail extrapolation unstable: successive estimates {previous} and {last}")]
    ExtrapolationUnstable { previous: f64, last: f64 },

    #[error("{truncated} paths exceeded the jump cap")]
    JumpCapExceeded { truncated: u64 },

    #[error("query point lies outside the box of radius {radius}")]
    QueryOutsideBox { radius: i64 },

    #[error("oracle bracket [{lower}, {upper}] wider than {tolerance}")]
    BracketTooWide { lower: f64, upper: f64, tolerance: f64 },

    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model file: {0}")]
    ModelFile(String),
}

impl Error {
    /// Short machine-readable tag, matching the variant name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::AsymmetricRates { .. } => "AsymmetricRates",
            Error::NonpositiveRate { .. } => "NonpositiveRate",
            Error::ZeroJumpInSupport => "ZeroJumpInSupport",
            Error::NotIrreducible { .. } => "NotIrreducible",
            Error::EmptySupport => "EmptySupport",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::SingularHessian => "SingularHessian",
            Error::NotConverged { .. } => "NotConverged",
            Error::DivergentGreenFunction { .. } => "DivergentGreenFunction",
            Error::InvalidQuery(_) => "InvalidQuery",
            Error::StepTooCoarse(_) => "StepTooCoarse",
            Error::ExtrapolationUnstable { .. } => "ExtrapolationUnstable",
            Error::JumpCapExceeded { .. } => "JumpCapExceeded",
            Error::QueryOutsideBox { .. } => "QueryOutsideBox",
            Error::BracketTooWide { .. } => "BracketTooWide",
            Error::DegenerateSamples(_) => "DegenerateSamples",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::ModelFile(_) => "ModelFile",
        }
    }

    /// True for failures of a numerical method rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::SingularHessian
                | Error::StepTooCoarse(_)
                | Error::ExtrapolationUnstable { .. }
                | Error::BracketTooWide { .. }
                | Error::JumpCapExceeded { .. }
        )
    }
}
