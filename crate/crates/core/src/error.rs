use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// exp(-z^2) left the f64 range; the value is not representable.
    #[error("floating-point overflow evaluating {what} (log-magnitude {log_magnitude:.3e})")]
    Overflow { what: &'static str, log_magnitude: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Newton iteration did not converge from seed {seed} after {iterations} iterations")]
    NoConvergence { seed: Complex64, iterations: usize },

    #[error("pole converged outside the fourth quadrant: {kappa}")]
    WrongQuadrant { kappa: Complex64 },

    #[error("argument-principle count {expected} disagrees with {found} located poles")]
    MissedPole { expected: i64, found: usize },

    #[error("poles {first} and {second} are closer than {separation:e}")]
    DuplicatePole { first: usize, second: usize, separation: f64 },

    #[error("pole {kappa} fails validation: |residual| = {residual:e}")]
    InvalidPole { kappa: Complex64, residual: f64 },

    #[error("contour passes through a zero of the residual near {at}")]
    ZeroOnContour { at: Complex64 },

    #[error("resonance normalizer is degenerate (|N| = {magnitude:e}) for pole {kappa}")]
    DegenerateNormalizer { kappa: Complex64, magnitude: f64 },

    #[error("tail window spans {decades:.2} decades, need at least {required}")]
    WindowTooShort { decades: f64, required: f64 },

    #[error("adaptive quadrature missed tolerance {tolerance:e} (estimate {estimate:e})")]
    ToleranceNotMet { tolerance: f64, estimate: f64 },

    #[error("grid too small: boundary reflections reached {reflected:e} of peak density")]
    GridTooSmall { reflected: f64 },

    #[error("{failed} oracle checks failed")]
    VerificationFailed { failed: usize },

    #[error("pole cache: {0}")]
    Cache(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    During { stage: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by bad user input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::During { source, .. } => source.is_validation(),
            e => matches!(e, Error::InvalidArgument(_) | Error::Config(_) | Error::Json(_) | Error::Cache(_)),
        }
    }

    /// Wraps the error with the stage it came from.
    pub fn during(stage: impl Into<String>) -> impl FnOnce(Error) -> Error {
        let stage = stage.into();
        move |e| Error::During { stage, source: Box::new(e) }
    }
}
