use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty token")]
    EmptyToken,

    #[error("no words")]
    NoWords,

    #[error("no pairs")]
    NoPairs,

    #[error("no documents")]
    NoDocuments,

    #[error("empty token sequence")]
    EmptySequence,

    #[error("inconsistent source")]
    InconsistentSource,

    #[error("ragged annotations: example {id} has {found} references, expected {expected}")]
    RaggedAnnotations {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("agreement needs at least 2 annotators, found {0}")]
    TooFewAnnotators(usize),

    #[error("example has no references")]
    NoReferences,

    #[error("length mismatch: {left_name} has {left} lines, {right_name} has {right}")]
    LengthMismatch {
        left_name: String,
        left: usize,
        right_name: String,
        right: usize,
    },

    /// Line-aligned streams diverged; `line` is the first line present in
    /// only one of them (1-based).
    #[error("line {line}: {longer} continues after {shorter} ended")]
    StreamDivergence {
        line: usize,
        longer: String,
        shorter: String,
    },

    #[error("tab character in text field")]
    TabInText,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    /// Failure tied to one sentence of a line-aligned input (0-based index).
    #[error("{side} sentence {}: {source}", index + 1)]
    InSentence {
        index: usize,
        side: &'static str,
        #[source]
        source: Box<Error>,
    },

    /// Failure on a 1-based line of a file being parsed.
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Attaches a file and (optionally) a 1-based line number to an error.
    #[error("{}{}: {source}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    At {
        path: PathBuf,
        line: Option<usize>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, path: impl Into<PathBuf>, line: Option<usize>) -> Self {
        Error::At {
            path: path.into(),
            line,
            source: Box::new(self),
        }
    }

    pub fn on_line(self, line: usize) -> Self {
        Error::Line {
            line,
            source: Box::new(self),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Innermost error with location wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::At { source, .. }
            | Error::InSentence { source, .. }
            | Error::Line { source, .. } => source.root(),
            other => other,
        }
    }
}
