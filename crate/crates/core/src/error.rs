use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("the zero polynomial has no well-defined roots")]
    ZeroPolynomial,
    #[error("root finder did not converge after {iterations} iterations")]
    RootsNotConverged { iterations: usize },
    #[error("conjugate pair {index} has non-positive imaginary part {imag}")]
    PairNotInUpperHalfPlane { index: usize, imag: f64 },
    #[error("conjugate pair {index} lies at the origin")]
    PairAtOrigin { index: usize },
    #[error("lambert W is only defined here for non-negative input, got {0}")]
    NegativeLambertArgument(f64),
    #[error("single-singularity map needs exactly one singularity pair, found {0}")]
    NotSingleSingularity(usize),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid system: D^2 entry {index} is {value}, must be positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("symmetric eigensolver exceeded {0} iterations")]
    EigenNotConverged(usize),
    #[error("requested {requested} eigenpairs but the system has {available}")]
    TooManyLevels { requested: usize, available: usize },
    #[error("unknown exact reference case {0} (expected 1..=4)")]
    UnknownCase(u32),
    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
