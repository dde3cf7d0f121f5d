//! Neural scoring for temporal dependency parsing.
//!
//! A [`RankerModel`] encodes every (candidate parent, child) pair, appends
//! [`LinguisticFeatureVector`] features and scores the pair's relation
//! labels with a small feed-forward network. One softmax over all
//! candidate × label rows of a child gives its [`ScoreTable`]; the greedy
//! decoder from `tdp-core` turns tables into a tree.
//!
//! Four encoders are available ([`EncoderVariant`]):
//!
//! * `bilstm`: BiLSTM over randomly initialized word embeddings,
//! * `bilstm-glove`: the same with embeddings read from a word-vector file,
//! * `bilstm-bert`: BiLSTM over a frozen transformer's outputs,
//! * `bert-ft`: a transformer fine-tuned on [`PseudoSentencePair`]s.
//!
//! Tensors, autograd, LSTM/BERT layers and Adam come from `candle`.
//!
//! [`ScoreTable`]: tdp_core::ScoreTable

mod checkpoint;
pub mod contextual;
pub mod encoder;
mod error;
pub mod features;
pub mod model;
pub mod params;
pub mod pseudo;
pub mod train;
pub mod vocab;

pub use contextual::{BertShape, ContextualAssets, SubwordTokenizer, RANDOM_TINY};
pub use encoder::{EncoderConfig, EncoderVariant, HeadPooling};
pub use error::Error;
pub use features::{extract_features, LinguisticFeatureVector};
pub use model::{Activation, ModelConfig, Precision, RankerModel};
pub use params::ParamStore;
pub use pseudo::{build_pseudo_sentence_pair, PseudoSentence, PseudoSentencePair};
pub use train::{
    corpus_f1, corpus_instances, grid_search, mean_and_variance, train, train_with, EpochRecord, GridCell,
    GridReport, GridSpec, TrainConfig, TrainOutcome, Trainer,
};
pub use vocab::{load_word_vectors, Vocabulary};

pub type Result<T, E = Error> = std::result::Result<T, E>;
