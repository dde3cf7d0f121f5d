//! Temporal dependency parsing.
//!
//! Each event and time expression of a document is attached to one
//! reference node (ROOT, the document creation time, or another mention)
//! with a temporal label, forming a tree. This crate bundles the pieces:
//!
//! * everything from `tdp-core` (documents, corpus I/O, candidate windows,
//!   decoding, evaluation, closure), re-exported at the top level;
//! * [`neural`]: encoders, the ranking model and its trainer;
//! * [`render`]: indented and Graphviz views of a tree;
//! * [`cli`]: the `tdp` command line.
//!
//! ```no_run
//! use tdp::neural::{EncoderVariant, ModelConfig, RankerModel, TrainConfig};
//!
//! let corpus = tdp::synthetic::template_corpus(20, 0);
//! let docs: Vec<_> = corpus.iter().map(|(d, _)| d).collect();
//! let model = RankerModel::new(ModelConfig::new(EncoderVariant::RandomInitRecurrent), &docs)?;
//! let outcome = tdp::neural::train(model, &corpus, &[], &TrainConfig::default())?;
//! let (tree, trace) = outcome.model.parse(&corpus[0].0)?;
//! println!("{}", tdp::render::indented(&tree, &corpus[0].0));
//! # Ok::<(), tdp::neural::Error>(())
//! ```

pub mod cli;
pub mod render;

pub use tdp_core::*;
pub use tdp_neural as neural;
