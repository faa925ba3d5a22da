use std::path::PathBuf;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid exponent m={0} outside the supported range 3..=12")]
    GridExponent(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("texture bandwidth {bandwidth:.6} is not below the limit {limit:.6}")]
    TextureBandwidth { bandwidth: f64, limit: f64 },

    #[error("|k| = {k:.6} is below k_tex = {k_tex:.6}; the asymptotic expansion does not apply")]
    BelowTextureBand { k: f64, k_tex: f64 },

    #[error("curvature lower bound is zero (polygonal curves present); theory constants unavailable")]
    ZeroCurvature,

    #[error("{path}:{line}: {msg}")]
    Config { path: String, line: usize, msg: String },

    #[error("malformed {format} data: {msg}")]
    Format { format: &'static str, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
