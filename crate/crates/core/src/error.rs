//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("divergent moment: p = {p} is not admissible for alpha = {alpha} on this region")]
    DivergentMoment { p: f64, alpha: f64 },
    #[error("invalid region radius l = {0}; must be positive")]
    InvalidRegion(f64),
    #[error("overlap mass is infinite at x = 0 for an infinite-activity measure")]
    InfiniteOverlap,
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty measure")]
    EmptyMeasure,
    #[error("unsupported drift family: {0}")]
    UnsupportedFamily(String),
    #[error("blow-up: |Y| exceeded 1e8 at step {step} (chain {chain})")]
    Blowup { step: u64, chain: usize },
    #[error("w1 tolerance {tol} is below the estimated noise floor {floor}")]
    NoiseFloorExceedsTol { tol: f64, floor: f64 },
    #[error("tuple is not in the index set Theta")]
    NotInTheta,
    #[error("case violation: {0}")]
    CaseViolation(String),
    #[error("sigma violates the overlap condition: {0}")]
    SigmaViolatesH2(String),
    #[error("overlap J(kappa) is zero")]
    ZeroOverlap,
    #[error("grid too coarse: roots {left} and {right} are closer than 3 grid cells")]
    GridTooCoarse { left: f64, right: f64 },
    #[error("no 1 -> 3 root-count transition for gamma = {gamma} on [1e-3, 1e2]")]
    NoTransition { gamma: f64 },
    #[error("validation failure: {0}")]
    Validation(String),
}

impl Error {
    /// True for failures of a numerical method rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Blowup { .. }
                | Error::QuadratureFailure(_)
                | Error::GridTooCoarse { .. }
                | Error::NoTransition { .. }
                | Error::NoiseFloorExceedsTol { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
