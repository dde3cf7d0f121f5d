//! Pretrained transformer assets: architecture, tokenizer and weights.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use candle_transformers::models::bert;
use serde::{Deserialize, Serialize};
use tokenizers::models::wordpiece::WordPiece;
use tokenizers::normalizers::BertNormalizer;
use tokenizers::pre_tokenizers::bert::BertPreTokenizer;
use tokenizers::Tokenizer;

use crate::pseudo::{assemble, EncodedPair, PseudoSentence, PseudoSentencePair};
use crate::{Error, Result};

/// Prefix of model names that build a small randomly initialized
/// transformer instead of loading one from disk.
pub const RANDOM_TINY: &str = "random:tiny";

/// Architecture of a BERT-style encoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BertShape {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    #[serde(default = "default_act")]
    pub hidden_act: String,
    pub max_position_embeddings: usize,
    #[serde(default = "default_type_vocab")]
    pub type_vocab_size: usize,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f64,
    #[serde(default)]
    pub pad_token_id: usize,
}

fn default_act() -> String {
    "gelu".to_owned()
}

fn default_type_vocab() -> usize {
    2
}

fn default_eps() -> f64 {
    1e-12
}

impl BertShape {
    pub fn tiny(vocab_size: usize, max_position_embeddings: usize) -> Self {
        BertShape {
            vocab_size,
            hidden_size: 32,
            num_hidden_layers: 2,
            num_attention_heads: 4,
            intermediate_size: 64,
            hidden_act: default_act(),
            max_position_embeddings,
            type_vocab_size: 2,
            layer_norm_eps: 1e-12,
            pad_token_id: 0,
        }
    }

    pub fn to_candle(&self) -> Result<bert::Config> {
        let act = match self.hidden_act.as_str() {
            "gelu" => "gelu",
            "relu" => "relu",
            "gelu_new" | "gelu_approximate" | "geluapproximate" => "geluapproximate",
            other => return Err(Error::Config(format!("unsupported activation `{other}`"))),
        };
        let value = serde_json::json!({
            "vocab_size": self.vocab_size,
            "hidden_size": self.hidden_size,
            "num_hidden_layers": self.num_hidden_layers,
            "num_attention_heads": self.num_attention_heads,
            "intermediate_size": self.intermediate_size,
            "hidden_act": act,
            "hidden_dropout_prob": 0.0,
            "max_position_embeddings": self.max_position_embeddings,
            "type_vocab_size": self.type_vocab_size,
            "initializer_range": 0.02,
            "layer_norm_eps": self.layer_norm_eps,
            "pad_token_id": self.pad_token_id,
            "classifier_dropout": null,
            "model_type": "bert",
        });
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }
}

/// A WordPiece tokenizer plus the special ids pair assembly needs.
#[derive(Clone)]
pub struct SubwordTokenizer {
    tokenizer: Tokenizer,
    cls: u32,
    sep: u32,
    pad: u32,
    unk: u32,
}

impl std::fmt::Debug for SubwordTokenizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubwordTokenizer")
            .field("vocab_size", &self.vocab_size())
            .finish()
    }
}

impl SubwordTokenizer {
    pub fn new(tokenizer: Tokenizer) -> Result<Self> {
        let special = |t: &str| {
            tokenizer
                .token_to_id(t)
                .ok_or_else(|| Error::Tokenizer(format!("vocabulary has no {t} token")))
        };
        Ok(SubwordTokenizer {
            cls: special("[CLS]")?,
            sep: special("[SEP]")?,
            pad: special("[PAD]")?,
            unk: special("[UNK]")?,
            tokenizer,
        })
    }

    /// Lower-casing WordPiece over `vocab` (token -> id).
    pub fn word_piece(vocab: HashMap<String, u32>) -> Result<Self> {
        let model = WordPiece::builder()
            .vocab(vocab.into_iter().collect::<ahash::AHashMap<_, _>>())
            .unk_token("[UNK]".to_owned())
            .build()?;
        Self::with_bert_pipeline(model)
    }

    pub fn from_vocab_file(path: &Path) -> Result<Self> {
        let file = path.to_str().ok_or_else(|| Error::Config(format!("{} is not UTF-8", path.display())))?;
        let model = WordPiece::from_file(file).unk_token("[UNK]".to_owned()).build()?;
        Self::with_bert_pipeline(model)
    }

    fn with_bert_pipeline(model: WordPiece) -> Result<Self> {
        let mut tokenizer = Tokenizer::new(model);
        tokenizer.with_normalizer(Some(BertNormalizer::new(true, true, None, true)));
        tokenizer.with_pre_tokenizer(Some(BertPreTokenizer));
        Self::new(tokenizer)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::new(Tokenizer::from_file(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.tokenizer.save(path, false)?;
        Ok(())
    }

    pub fn vocab_size(&self) -> usize {
        self.tokenizer.get_vocab_size(true)
    }

    pub fn pad_id(&self) -> u32 {
        self.pad
    }

    pub fn unk_id(&self) -> u32 {
        self.unk
    }

    pub fn cls_id(&self) -> u32 {
        self.cls
    }

    pub fn sep_id(&self) -> u32 {
        self.sep
    }

    /// Subword ids of one word.
    pub fn word_ids(&self, word: &str) -> Result<Vec<u32>> {
        Ok(self.tokenizer.encode(word, false)?.get_ids().to_vec())
    }

    fn words_ids(&self, words: &[String]) -> Result<Vec<u32>> {
        let mut out = Vec::new();
        for w in words {
            out.extend(self.word_ids(w)?);
        }
        Ok(out)
    }

    fn side_ids(&self, side: &PseudoSentence) -> Result<(Vec<u32>, Vec<u32>)> {
        Ok((self.words_ids(&side.head())?, self.words_ids(&side.sentence)?))
    }

    /// Tokenizes and truncates a pair to at most `max_len` subwords.
    pub fn encode_pair(&self, pair: &PseudoSentencePair, max_len: usize) -> Result<EncodedPair> {
        assemble(
            self.cls,
            self.sep,
            self.side_ids(&pair.parent_side)?,
            self.side_ids(&pair.child_side)?,
            max_len,
        )
    }
}

/// Everything needed to instantiate a contextual encoder.
#[derive(Clone, Debug)]
pub struct ContextualAssets {
    pub shape: BertShape,
    pub tokenizer: SubwordTokenizer,
    /// Pretrained weights; `None` means random initialization.
    pub weights: Option<PathBuf>,
}

impl ContextualAssets {
    /// Resolves a model name: [`RANDOM_TINY`], or a directory holding
    /// `config.json`, `model.safetensors` and `tokenizer.json` or `vocab.txt`.
    ///
    /// `words` feed the vocabulary of the random model.
    pub fn resolve<'a>(name: &str, words: impl IntoIterator<Item = &'a str>, max_len: usize) -> Result<Self> {
        if name == RANDOM_TINY {
            let tokenizer = SubwordTokenizer::word_piece(tiny_vocab(words))?;
            let shape = BertShape::tiny(tokenizer.vocab_size(), max_len.max(64));
            return Ok(ContextualAssets {
                shape,
                tokenizer,
                weights: None,
            });
        }
        let dir = Path::new(name);
        if !dir.is_dir() {
            return Err(Error::Config(format!(
                "contextual model `{name}` is neither `{RANDOM_TINY}` nor a directory"
            )));
        }
        Self::from_dir(dir, true)
    }

    /// Loads a model directory. Weights are optional when `need_weights`
    /// is false (the caller supplies them separately).
    pub fn from_dir(dir: &Path, need_weights: bool) -> Result<Self> {
        let config = dir.join("config.json");
        let text = std::fs::read_to_string(&config).map_err(|source| Error::Io {
            path: config.clone(),
            source,
        })?;
        let shape: BertShape = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
        let tokenizer = if dir.join("tokenizer.json").is_file() {
            SubwordTokenizer::from_file(&dir.join("tokenizer.json"))?
        } else if dir.join("vocab.txt").is_file() {
            SubwordTokenizer::from_vocab_file(&dir.join("vocab.txt"))?
        } else {
            return Err(Error::Config(format!(
                "{} has neither tokenizer.json nor vocab.txt",
                dir.display()
            )));
        };
        let weights = dir.join("model.safetensors");
        let weights = if weights.is_file() {
            Some(weights)
        } else if need_weights {
            return Err(Error::Config(format!("missing checkpoint {}", weights.display())));
        } else {
            None
        };
        Ok(ContextualAssets {
            shape,
            tokenizer,
            weights,
        })
    }

    /// Writes `config.json` and `tokenizer.json` into `dir`.
    pub fn save_description(&self, dir: &Path) -> Result<()> {
        let config = dir.join("config.json");
        let text = serde_json::to_string_pretty(&self.shape).expect("shape serializes");
        std::fs::write(&config, text).map_err(|source| Error::Io { path: config, source })?;
        self.tokenizer.save(&dir.join("tokenizer.json"))
    }
}

/// Specials, every lower-cased word piece of `words`, and single
/// characters (plain and `##`-continued) so unseen words still split.
fn tiny_vocab<'a>(words: impl IntoIterator<Item = &'a str>) -> HashMap<String, u32> {
    let mut pieces = BTreeSet::new();
    for word in words {
        let lower = word.to_lowercase();
        let mut run = String::new();
        for c in lower.chars() {
            if c.is_alphanumeric() {
                run.push(c);
            } else {
                if !run.is_empty() {
                    pieces.insert(std::mem::take(&mut run));
                }
                if !c.is_whitespace() {
                    pieces.insert(c.to_string());
                }
            }
        }
        if !run.is_empty() {
            pieces.insert(run);
        }
    }
    for c in ('a'..='z').chain('0'..='9') {
        pieces.insert(c.to_string());
        pieces.insert(format!("##{c}"));
    }
    for w in ["root", "timex", "event", ":"] {
        pieces.insert(w.to_owned());
    }
    ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
        .into_iter()
        .map(str::to_owned)
        .chain(pieces)
        .enumerate()
        .map(|(i, t)| (t, i as u32))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_tokenizer_splits_words() {
        let assets = ContextualAssets::resolve(RANDOM_TINY, ["Kuchma", "27,", "signed"], 128).unwrap();
        let t = &assets.tokenizer;
        assert_eq!(t.word_ids("Kuchma").unwrap().len(), 1);
        assert_eq!(t.word_ids("27,").unwrap().len(), 2);
        assert_eq!(t.word_ids("zq").unwrap().len(), 2);
        assert_eq!(t.pad_id(), 0);
        assert!(assets.shape.to_candle().is_ok());
    }

    #[test]
    fn unknown_name_is_a_config_error() {
        let err = ContextualAssets::resolve("/no/such/model", [], 128).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn directory_without_weights() {
        let dir = tempfile::tempdir().unwrap();
        let assets = ContextualAssets::resolve(RANDOM_TINY, ["a"], 64).unwrap();
        assets.save_description(dir.path()).unwrap();
        let name = dir.path().to_str().unwrap();
        assert!(matches!(ContextualAssets::resolve(name, [], 64), Err(Error::Config(_))));
        let back = ContextualAssets::from_dir(dir.path(), false).unwrap();
        assert_eq!(back.shape, assets.shape);
        assert_eq!(back.tokenizer.vocab_size(), assets.tokenizer.vocab_size());
    }
}
