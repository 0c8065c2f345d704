use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the fusion pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        line: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("schema violation at line {line}, column `{column}`: {message}")]
    Schema {
        line: usize,
        column: String,
        message: String,
    },

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("cannot summarize column `{0}`: every cell is missing")]
    Summary(String),

    #[error("cannot impute column `{0}`: every cell is missing")]
    Imputation(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("resample error: {0}")]
    Resample(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("fusion error: {0}")]
    Fusion(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 usage/config, 2 data, 3 training.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) | Error::InvalidSchema(_) | Error::Json(_) => 1,
            Error::Parse { .. }
            | Error::Schema { .. }
            | Error::Summary(_)
            | Error::Imputation(_)
            | Error::Resample(_)
            | Error::Data(_)
            | Error::Io(_) => 2,
            Error::Divergence(_) | Error::Shape(_) | Error::Fusion(_) | Error::Metric(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
