//! Encoder variants and their settings.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contextual::RANDOM_TINY;
use crate::{Error, Result};

/// How a (parent, child) pair is turned into a dense vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EncoderVariant {
    /// BiLSTM over randomly initialized word embeddings.
    RandomInitRecurrent,
    /// BiLSTM over embeddings initialized from a word-vector file.
    StaticPretrainedRecurrent,
    /// BiLSTM over the outputs of a frozen pretrained transformer.
    FrozenContextualRecurrent,
    /// `[CLS]` output of a transformer fine-tuned on pseudo-sentence pairs.
    FinetunedTransformer,
}

impl EncoderVariant {
    pub const ALL: [EncoderVariant; 4] = [
        EncoderVariant::RandomInitRecurrent,
        EncoderVariant::StaticPretrainedRecurrent,
        EncoderVariant::FrozenContextualRecurrent,
        EncoderVariant::FinetunedTransformer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderVariant::RandomInitRecurrent => "bilstm",
            EncoderVariant::StaticPretrainedRecurrent => "bilstm-glove",
            EncoderVariant::FrozenContextualRecurrent => "bilstm-bert",
            EncoderVariant::FinetunedTransformer => "bert-ft",
        }
    }

    pub fn is_recurrent(self) -> bool {
        self != EncoderVariant::FinetunedTransformer
    }

    pub fn is_contextual(self) -> bool {
        matches!(
            self,
            EncoderVariant::FrozenContextualRecurrent | EncoderVariant::FinetunedTransformer
        )
    }
}

impl fmt::Display for EncoderVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncoderVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        let variant = match norm.as_str() {
            "bilstm" | "random-init-recurrent" => EncoderVariant::RandomInitRecurrent,
            "bilstm-glove" | "static-pretrained-recurrent" => EncoderVariant::StaticPretrainedRecurrent,
            "bilstm-bert" | "frozen-contextual-recurrent" => EncoderVariant::FrozenContextualRecurrent,
            "bert-ft" | "finetuned-transformer" => EncoderVariant::FinetunedTransformer,
            _ => {
                return Err(Error::Config(format!(
                    "unknown encoder `{s}` (expected bilstm, bilstm-glove, bilstm-bert or bert-ft)"
                )))
            }
        };
        Ok(variant)
    }
}

/// Which recurrent outputs represent a multi-token mention.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadPooling {
    /// Output at the first token of the span.
    #[default]
    First,
    /// Mean of the outputs over the span.
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub variant: EncoderVariant,
    /// Word embedding size of the non-contextual recurrent variants.
    pub embedding_dim: usize,
    /// Hidden size per direction of the BiLSTM.
    pub recurrent_hidden_dim: usize,
    /// `random:tiny` or a model directory; contextual variants only.
    pub contextual_model_name: Option<String>,
    /// Word-vector text file for the static variant.
    #[serde(default)]
    pub static_embeddings: Option<PathBuf>,
    /// Subword budget of one transformer input.
    pub max_sequence_length: usize,
    pub freeze_contextual: bool,
    #[serde(default)]
    pub head_pooling: HeadPooling,
}

impl EncoderConfig {
    pub fn new(variant: EncoderVariant) -> Self {
        EncoderConfig {
            variant,
            embedding_dim: 32,
            recurrent_hidden_dim: 32,
            contextual_model_name: variant.is_contextual().then(|| RANDOM_TINY.to_owned()),
            static_embeddings: None,
            max_sequence_length: 128,
            freeze_contextual: variant == EncoderVariant::FrozenContextualRecurrent,
            head_pooling: HeadPooling::First,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let frozen = self.variant == EncoderVariant::FrozenContextualRecurrent;
        if self.variant.is_contextual() && self.freeze_contextual != frozen {
            return bad(format!("freeze_contextual must be {frozen} for {}", self.variant));
        }
        if self.variant.is_contextual() && self.contextual_model_name.is_none() {
            return bad(format!("{} needs contextual_model_name", self.variant));
        }
        if self.variant == EncoderVariant::StaticPretrainedRecurrent && self.static_embeddings.is_none() {
            return bad("bilstm-glove needs static_embeddings".to_owned());
        }
        if self.variant.is_recurrent() && self.recurrent_hidden_dim == 0 {
            return bad("recurrent_hidden_dim must be positive".to_owned());
        }
        if !self.variant.is_contextual() && self.embedding_dim == 0 {
            return bad("embedding_dim must be positive".to_owned());
        }
        if self.variant.is_contextual() && self.max_sequence_length < 8 {
            return bad("max_sequence_length must be at least 8".to_owned());
        }
        Ok(())
    }
}
