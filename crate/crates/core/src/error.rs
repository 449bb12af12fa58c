//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dielectric model: {0}")]
    InvalidModel(String),

    #[error("frequency {omega} lies within the exclusion radius of the pole at {pole}")]
    PoleProximity { omega: f64, pole: f64 },

    #[error("wavevector must be finite and positive, got {0}")]
    InvalidWavevector(f64),

    #[error("frequency must be finite and positive, got {0}")]
    InvalidFrequency(f64),

    #[error("frequency {0} lies in a polaritonic gap (epsilon <= 0)")]
    GappedFrequency(f64),

    #[error("(k = {k}, omega = {omega}) is not on a polariton branch (relative residual {residual:e})")]
    NotOnBranch { k: f64, omega: f64, residual: f64 },

    #[error("Hopfield coefficients are singular at k = 0")]
    DegeneratePoint,

    #[error("dispersion is not monotone on the band ({lo}, {hi})")]
    NonMonotone { lo: f64, hi: f64 },

    #[error("root bracket ({lo}, {hi}) does not enclose a sign change")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("frequency {0} is too close to a band edge (epsilon below the positivity floor)")]
    BandEdge(f64),

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("quadrature did not reach tolerance (estimated error {estimate:e})")]
    QuadratureFailure { estimate: f64 },

    #[error("measured trace is empty")]
    EmptyTrace,

    #[error("every sample of the measured trace is gapped")]
    AllGapped,

    #[error("measured trace is malformed: {0}")]
    InvalidTrace(String),

    #[error("fit needs at least {needed} usable points, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("initial guess is outside the parameter bounds: {0}")]
    InvalidInitialGuess(String),

    #[error("fit did not converge after {iterations} iterations (scaled gradient {gradient:e})")]
    NonConvergence { iterations: usize, gradient: f64 },

    #[error("Jacobian is singular at the current parameters")]
    SingularJacobian,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
