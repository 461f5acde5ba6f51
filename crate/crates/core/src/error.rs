use thiserror::Error;

/// Everything that can go wrong while reading or scoring a corpus.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("overlapping edits [{first_start}, {first_end}) and [{second_start}, {second_end})")]
    Overlap {
        first_start: usize,
        first_end: usize,
        second_start: usize,
        second_end: usize,
    },

    #[error("edit interval [{start}, {end}) exceeds source length {len}")]
    Bounds { start: usize, end: usize, len: usize },

    #[error("invalid edit [{start}, {end}): {reason}")]
    InvalidEdit {
        start: usize,
        end: usize,
        reason: &'static str,
    },

    #[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch { what: String, left: usize, right: usize },

    #[error("line {line}: source sentence is empty")]
    EmptySource { line: usize },

    #[error("no corrected or dummy reference chunks in the dataset; average chunk length is undefined")]
    NoChunks,

    #[error("sample {sample} has {found} annotator(s); at least 2 are required")]
    TooFewAnnotators { sample: usize, found: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("system sets differ; only in metric scores: {only_metric:?}; only in human table: {only_human:?}")]
    SystemMismatch {
        only_metric: Vec<String>,
        only_human: Vec<String>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
