use thiserror::Error as ThisError;

#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("radial eigensolver did not converge for l={l} after {iterations} iterations")]
    EigenConvergence { l: usize, iterations: usize },
    #[error("SCF did not converge after {} iterations (last residual {:.3e})", residuals.len(), residuals.last().copied().unwrap_or(f64::NAN))]
    ScfConvergence { residuals: Vec<f64> },
    #[error("Arnoldi did not converge (worst Ritz residual {:.3e})", residuals.iter().cloned().fold(0.0, f64::max))]
    ArnoldiConvergence { residuals: Vec<f64> },
    #[error("non-finite amplitude after step {step}")]
    NonFinite { step: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse { .. } | Error::Domain(_))
    }

    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_)
                | Error::EigenConvergence { .. }
                | Error::ScfConvergence { .. }
                | Error::ArnoldiConvergence { .. }
                | Error::NonFinite { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
