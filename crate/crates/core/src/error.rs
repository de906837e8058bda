use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A row of an input file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    /// Dimensions disagree (interval count, day count, consumer sets).
    #[error("shape error: {0}")]
    Shape(String),

    /// A value lies outside its domain (negative reading, NaN, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was called with invalid or infeasible parameters.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The input carries no usable information (constant axis, identical points).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("trial {index}: {source}")]
    Trial {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the input data rather than by configuration.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::Shape(_)
            | Error::Domain(_)
            | Error::Degenerate(_)
            | Error::Csv(_)
            | Error::Json(_) => true,
            Error::Trial { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}
