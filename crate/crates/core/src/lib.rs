//! Temporal dependency parsing primitives.
//!
//! A document annotated with events and time expressions is parsed into a
//! Temporal Dependency Tree: every mention picks one reference node (its
//! parent) among ROOT, the document creation time (DCT) and nearby mentions,
//! together with a relation label. This crate holds everything that does not
//! need a neural network:
//!
//! * [`document`]: mentions, documents, edges, trees and structural validation.
//! * [`corpus`]: the line-delimited corpus format and corpus statistics.
//! * [`candidates`]: windowed parent candidates and training instances.
//! * [`scores`]: per-child score tables and the ranking loss over them.
//! * [`decoder`]: greedy, cycle-avoiding tree assembly.
//! * [`eval`]: edge F1 and per-parent-category accuracy.
//! * [`closure`]: relation deduction and closure-equivalence of trees.

pub mod candidates;
pub mod closure;
pub mod corpus;
pub mod decoder;
pub mod document;
mod error;
pub mod eval;
pub mod fixtures;
pub mod scores;
pub mod synthetic;

pub use candidates::{
    build_training_instances, generate_candidates, CandidateSet, TrainingInstance, WindowConfig,
};
pub use closure::{
    close, close_relations, equivalence_aware_report, trees_equivalent, DocumentVerdict,
    Equivalence, EquivalenceReport, RelationMatrix, TemporalRelation,
};
pub use corpus::{
    corpus_stats, load_corpus, load_documents, save_corpus, CorpusRecord, CorpusStats, LoadOptions,
};
pub use decoder::{cycle_skip_rate, decode, ChildDecision, DecodeTrace};
pub use document::{
    deduced_root_edge, legal_labels, validate_tree, would_create_cycle, Document, Edge, Mention,
    MentionId, MentionKind, RelationLabel, TemporalDependencyTree, TokenSpan, Violation,
    DCT_INDEX, ROOT_INDEX,
};
pub use error::Error;
pub use eval::{category_breakdown_delta, evaluate, CategoryDelta, EvalReport};
pub use scores::{ranking_loss, ScoreRow, ScoreTable};

pub type Result<T, E = Error> = std::result::Result<T, E>;
