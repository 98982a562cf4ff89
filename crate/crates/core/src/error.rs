use thiserror::Error;

pub type Result<T> = std::result::Result<T, QoctError>;

/// Errors raised by the simulation and extraction pipeline.
///
/// The variants are grouped by how a caller is expected to react; the CLI maps
/// them onto exit codes via [`QoctError::exit_code`].
#[derive(Debug, Error)]
pub enum QoctError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("out of range: {0}")]
    Range(String),

    /// The physical configuration cannot be realised (no phase matching,
    /// spectral grid too narrow, ...).
    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("degenerate extraction: {0}")]
    Degenerate(#[from] Degeneracy),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The specific ways an inverse problem can fail to have a unique answer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Degeneracy {
    #[error("both polarization rates vanish; retardance is undefined")]
    VanishingRates,
    #[error("axis angle is indeterminate (sin δ ≈ 0 or null coefficients vanish)")]
    IndeterminateAlpha,
    #[error("coincidence landscape is flat over the reference-arm angles")]
    FlatLandscape,
    #[error("no interface dip found in the interferogram")]
    NoDips,
}

impl QoctError {
    pub fn exit_code(&self) -> i32 {
        match self {
            QoctError::Argument(_) | QoctError::Parse(_) | QoctError::Io { .. } => 2,
            QoctError::Range(_) | QoctError::Configuration(_) => 3,
            QoctError::Degenerate(_) => 4,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        QoctError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
