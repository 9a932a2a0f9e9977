use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{loss}: prediction outside the admissible domain ({detail})")]
    Domain { loss: String, detail: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("class index {index} out of range for {classes} classes")]
    ClassIndex { index: usize, classes: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{0} has no moment generating function")]
    NoMgf(String),

    #[error("tilt {h} outside the MGF domain (|h| < {bound})")]
    OutsideMgfDomain { h: f64, bound: f64 },

    #[error("threshold {c} is not above the mean {mean}; the tilt would be nonpositive")]
    NonpositiveTilt { c: f64, mean: f64 },

    #[error("threshold {c} is unreachable by the tilted mean (limit {limit})")]
    Infeasible { c: f64, limit: f64 },

    #[error("tilt vector leaves the positive orthant: coordinate {index} is {value}")]
    TiltOutsideOrthant { index: usize, value: f64 },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("support of the sum would have {0} atoms")]
    SupportOverflow(usize),

    #[error("no exact regime applies: {0}")]
    UnsupportedRegime(String),

    #[error("did not converge: {0}")]
    Convergence(String),

    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(loss: &str, detail: impl Into<String>) -> Self {
        Error::Domain {
            loss: loss.to_string(),
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidParameter(detail.into())
    }
}

pub(crate) fn domain(loss: &str, detail: impl Into<String>) -> Error {
    Error::domain(loss, detail)
}

pub(crate) fn invalid(detail: impl Into<String>) -> Error {
    Error::invalid(detail)
}
