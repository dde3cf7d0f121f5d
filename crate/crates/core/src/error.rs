use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::document::{MentionId, RelationLabel, Violation};

#[derive(Debug, Error)]
pub enum Error {
    #[error("document id mismatch: tree belongs to `{tree}`, document is `{document}`")]
    DocIdMismatch { tree: String, document: String },

    #[error("invalid document `{doc_id}`: {reason}")]
    InvalidDocument { doc_id: String, reason: String },

    #[error("`{0}` is not an EVENT or TIMEX mention")]
    NotAMention(MentionId),

    #[error("unknown mention `{id}` in document `{doc_id}`")]
    UnknownMention { doc_id: String, id: MentionId },

    #[error("invalid tree for document `{doc_id}`: {}", join_violations(.violations))]
    InvalidTree {
        doc_id: String,
        violations: Vec<Violation>,
    },

    #[error("line {line}: malformed record: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("invalid score table for `{child}`: {reason}")]
    ScoreTable { child: MentionId, reason: String },

    #[error("gold row ({parent}, {label}) is missing from the score table of `{child}`")]
    MissingGoldRow {
        child: MentionId,
        parent: MentionId,
        label: RelationLabel,
    },

    #[error("document `{0}` appears more than once")]
    DuplicateDocument(String),

    #[error("document sets differ (only predicted: {only_left:?}, only gold: {only_right:?})")]
    DocumentSetMismatch {
        only_left: Vec<String>,
        only_right: Vec<String>,
    },

    #[error("node sets differ between trees of `{doc_id}`")]
    NodeSetMismatch { doc_id: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
