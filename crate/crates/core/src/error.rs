use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("rejection budget exhausted after {attempts} attempts ({detail})")]
    RejectionBudget { attempts: usize, detail: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("path space too large: {paths} paths exceed the budget of {budget}")]
    MemoryBudget { paths: usize, budget: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("unpaired eigenvalue {re}+{im}i (distance {distance:e})")]
    Unpaired { re: f64, im: f64, distance: f64 },

    #[error("graph is not labelled")]
    Unlabelled,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::Dimension(_) | Error::Unlabelled | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
