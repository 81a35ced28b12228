use thiserror::Error;

/// Errors produced while loading or validating toolkit inputs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}:{col}: {msg}")]
    SpecDbParse {
        path: String,
        line: usize,
        col: usize,
        msg: String,
    },

    #[error("duplicate flag entry for ({utility}, {flag}) at {path}:{line}")]
    SpecDbDuplicate {
        path: String,
        line: usize,
        utility: String,
        flag: String,
    },

    #[error("{path}:{line}: bad record: {msg}")]
    CorpusFormat {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("cannot split {clusters} clusters at a 10:1:1 ratio (need at least 12)")]
    TooFewClusters { clusters: usize },

    #[error("unbalanced sub-token markers: {0}")]
    UnbalancedMarkers(String),

    #[error("instance-id mismatch between system output and test set: {0}")]
    InstanceMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
