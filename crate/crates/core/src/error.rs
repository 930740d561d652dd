use thiserror::Error;

/// Errors raised by density evaluation, conditioning and sampling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlpError {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("conditioning on a null event in {op}: {detail}")]
    NullConditioning { op: &'static str, detail: String },

    #[error("horizon error in {op}: time {t} is outside the admissible range {range}")]
    Horizon {
        op: &'static str,
        t: f64,
        range: &'static str,
    },

    #[error("unsupported generating law for {op}: {detail}")]
    UnsupportedLaw { op: &'static str, detail: String },

    #[error("{op} requires an integrable specification: {detail}")]
    Integrability { op: &'static str, detail: String },

    #[error("insufficient data for {op}: {detail}")]
    InsufficientData { op: &'static str, detail: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid bridge endpoint: {0}")]
    InvalidEndpoint(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("numerical failure in {op}: {detail}")]
    Numerical { op: &'static str, detail: String },

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, GlpError>;

impl GlpError {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        GlpError::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn null_event(op: &'static str, detail: impl Into<String>) -> Self {
        GlpError::NullConditioning {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn unsupported(op: &'static str, detail: impl Into<String>) -> Self {
        GlpError::UnsupportedLaw {
            op,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for GlpError {
    fn from(e: std::io::Error) -> Self {
        GlpError::Io(e.to_string())
    }
}

impl From<csv::Error> for GlpError {
    fn from(e: csv::Error) -> Self {
        GlpError::Io(e.to_string())
    }
}
