use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset not found: {0}")]
    DatasetNotFound(PathBuf),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("missing mandatory column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: missing label in labeled mode")]
    MissingLabel { row: String },
    #[error("row {row}: invalid label `{value}`")]
    InvalidLabel { row: String, value: String },
    #[error("duplicate row_id `{0}`")]
    DuplicateRowId(String),
    #[error("line {line}: {message}")]
    MalformedRow { line: usize, message: String },
    #[error("degenerate labels: both classes must be present")]
    DegenerateLabels,
    #[error("empty feature matrix")]
    EmptyMatrix,
    #[error("matrix has no labels")]
    Unlabeled,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("invalid signal spec: {0}")]
    InvalidSpec(String),
    #[error("unsupported model version {found} (expected {expected})")]
    UnsupportedModelVersion { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error("unknown variant `{0}`")]
    UnknownVariant(String),
    #[error("variant `{variant}` requires {what}")]
    MissingInput { variant: String, what: &'static str },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input (files, configs, arguments)
    /// rather than by a failure inside the pipeline.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DatasetNotFound(_)
                | Error::EmptyDataset
                | Error::MissingColumn(_)
                | Error::MissingLabel { .. }
                | Error::InvalidLabel { .. }
                | Error::DuplicateRowId(_)
                | Error::MalformedRow { .. }
                | Error::InvalidParam { .. }
                | Error::InvalidSpec(_)
                | Error::UnknownVariant(_)
                | Error::MissingInput { .. }
                | Error::UnsupportedModelVersion { .. }
                | Error::CorruptModel(_)
        )
    }
}
