use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("invalid ontology: {0}")]
    Ontology(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown object id `{0}`")]
    MissingObject(String),

    #[error("modulation needs at least one kept object")]
    EmptyKeepSet,

    #[error("malformed program: {0}")]
    MalformedProgram(String),

    #[error("FPVG eligibility violated for question `{0}`")]
    Ineligible(String),

    #[error("evaluation set is empty")]
    EmptyEvaluation,

    #[error("expected 10 annotator answers, got {0}")]
    AnnotatorCount(usize),

    #[error("answer vocabulary is empty")]
    EmptyVocab,

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("cannot augment: {0}")]
    NotAugmentable(String),

    #[error("embedding table: {0}")]
    Embedding(String),

    #[error("missing fixture {}", .0.display())]
    MissingFixture(PathBuf),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
