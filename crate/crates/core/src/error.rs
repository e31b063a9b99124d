//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Density-matrix constructor arguments violate trace or positivity.
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("operator passed as a Hamiltonian/coupling is not Hermitian (defect {defect:.3e})")]
    NonHermitianHamiltonian { defect: f64 },

    /// Overflow or NaN produced by an exponential/propagation step.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("spectral density evaluated at negative frequency {0}")]
    NegativeFrequency(f64),

    #[error("log-gamma evaluated at a pole (z = {re} + {im}i)")]
    PoleOfGamma { re: f64, im: f64 },

    #[error("quadrature failed to reach tolerance in {context}: error estimate {estimate:.3e}")]
    QuadratureFailure { context: &'static str, estimate: f64 },

    /// The spectral integrals need Omega > 0; at Omega = 0 the g0 integral
    /// diverges logarithmically.
    #[error("degenerate Omega = {0}; spectral integrals require Omega > 0")]
    DegenerateOmega(f64),

    #[error("operation requires the {expected} measurement, got {got}")]
    WrongObservable {
        expected: &'static str,
        got: &'static str,
    },

    /// The Gamma-function closed form of the dephasing factor needs finite beta.
    #[error("closed-form dephasing factor requires finite inverse temperature")]
    ZeroTemperatureUnsupported,

    #[error("analytic sigma_x solution requires a zero-temperature bath")]
    RequiresZeroTemperature,

    #[error("analytic sigma_x solution requires omega0 = 0 (got {0})")]
    RequiresZeroSplitting(f64),

    #[error("trace drift {drift:.3e} exceeds tolerance; reduce the time step")]
    StepSizeTooLarge { drift: f64 },

    #[error("initial coherence is zero in the measured basis; no measurement time defined")]
    NoInitialCoherence,

    #[error("no threshold crossing found within the scan horizon t = {horizon}")]
    NoCrossingFound { horizon: f64 },

    #[error("threshold fraction must satisfy 0 < f < 1 (got {0})")]
    InvalidFraction(f64),

    #[error("measurement strength lambda must be positive (got {0})")]
    ZeroStrength(f64),

    #[error("config error at `{field}`: {message}")]
    ConfigError { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code contract: 0 success, 2 config error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigError { .. } => 2,
            _ => 3,
        }
    }
}
