use alloc::string::String;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("duplicate user id `{0}`")]
    DuplicateUser(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("vocabulary pruning removed every token")]
    EmptyVocabulary,
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("document `{0}` has no in-vocabulary tokens")]
    EmptyDocument(String),
    #[error("need at least 2 users, got {0}")]
    TooFewUsers(usize),
    #[error("need at least 2 topics, got {0}")]
    TooFewTopics(usize),
    #[error("shape mismatch: expected {expected} rows, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("duplicate feature column `{0}`")]
    DuplicateColumn(String),
    #[error("user `{0}` has no posts")]
    ZeroPosts(String),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("non-finite feature value at row {row}, column {col}")]
    NanFeature { row: usize, col: usize },
    #[error("dimension mismatch: model expects {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("class {class} has {count} members, fewer than {folds} folds")]
    TooFewPerClass {
        class: &'static str,
        count: usize,
        folds: usize,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
