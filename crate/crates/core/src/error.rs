use thiserror::Error;

/// Failures shared by every module.
///
/// The variants map onto the CLI exit codes: [`Error::Usage`] and
/// [`Error::Domain`] are caller mistakes, the numerical variants report
/// non-convergence with the best estimate reached.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("divergent integral: exponent {s} must exceed the volume entropy {h}")]
    Divergent { s: f64, h: f64 },

    #[error("root iteration did not converge after {sweeps} sweeps (worst residual {worst_residual:e})")]
    RootNonConvergence { sweeps: usize, worst_residual: f64 },

    #[error("quadrature did not reach tolerance (estimate {value:e}, error estimate {error:e}, {evals} evaluations)")]
    Quadrature { value: f64, error: f64, evals: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("replication {replication}: {source}")]
    Replication {
        replication: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by numerics rather than by the caller.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::RootNonConvergence { .. } | Error::Quadrature { .. } => true,
            Error::Replication { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
