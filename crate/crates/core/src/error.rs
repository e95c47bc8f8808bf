use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown potential kind `{0}`")]
    UnknownKind(String),

    #[error("invalid parameter `{name}` for {kind}: {reason}")]
    InvalidParam {
        kind: String,
        name: String,
        reason: String,
    },

    #[error("tabulated potential has negative value {value} at r = {r}")]
    NegativeSample { r: f64, value: f64 },

    #[error("potential is not integrable: the integral of r F(r) diverges")]
    NonIntegrable,

    #[error("quadrature did not converge on [{a}, {b}]: estimate {value}, error {error}")]
    Quadrature {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
    },

    #[error("block {block}: {reason}")]
    Block { block: usize, reason: String },

    #[error("step control failed near t = {t}: {reason}")]
    StepControl { t: f64, reason: String },

    #[error("energy form is singular: {0}")]
    SingularForm(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed spec file: {0}")]
    Spec(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
