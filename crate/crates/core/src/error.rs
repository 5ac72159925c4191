use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("newick syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("duplicate leaf label `{0}`")]
    DuplicateLabel(String),

    #[error("branch length error: {0}")]
    BranchLength(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("unknown leaf label `{0}`")]
    UnknownLabel(String),

    #[error("subset size m={m} out of range for n={n} leaves")]
    MOutOfRange { m: usize, n: usize },

    #[error("map format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("n={n} is below the uniqueness threshold 2m-1={} for m={m}", 2 * .m - 1)]
    BelowThreshold { n: usize, m: usize },

    #[error("map is not realizable by a tree: {0}")]
    NotRealizable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }
}
