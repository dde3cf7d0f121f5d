//! The ranking model: pair encoder, features, feed-forward scorer.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Mutex;

use candle::{DType, Device, IndexOp, Module, Tensor, Var, D};
use candle_nn::rnn::{LSTMConfig, RNN};
use candle_nn::{Embedding, Init, Linear, LSTM};
use candle_transformers::models::bert::BertModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use tdp_core::{
    decode, generate_candidates, legal_labels, CandidateSet, DecodeTrace, Document, MentionId, RelationLabel,
    ScoreTable, TemporalDependencyTree, TrainingInstance, WindowConfig,
};

use crate::contextual::{ContextualAssets, SubwordTokenizer};
use crate::encoder::{EncoderConfig, EncoderVariant, HeadPooling};
use crate::features::{features_by_index, LinguisticFeatureVector};
use crate::params::{read_safetensors, ParamStore};
use crate::pseudo::{build_pseudo_sentence_pair, EncodedPair};
use crate::vocab::{load_word_vectors, Vocabulary};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Precision {
    pub fn dtype(self) -> DType {
        match self {
            Precision::F32 => DType::F32,
            Precision::F64 => DType::F64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub window: WindowConfig,
    pub ffn_hidden_dim: usize,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub precision: Precision,
    /// Seeds parameter initialization.
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(variant: EncoderVariant) -> Self {
        ModelConfig {
            encoder: EncoderConfig::new(variant),
            window: WindowConfig::default(),
            ffn_hidden_dim: 64,
            activation: Activation::Tanh,
            precision: Precision::F32,
            seed: 0,
        }
    }
}

enum WordSource {
    Table(Embedding),
    Contextual(BertModel),
}

enum Encoder {
    Recurrent {
        words: WordSource,
        forward: LSTM,
        backward: LSTM,
        /// Rows for ROOT and DCT, shaped like one BiLSTM output.
        sentinels: Tensor,
    },
    Transformer(BertModel),
}

/// Where parameter values come from when a model is assembled.
pub(crate) enum Source<'a> {
    Fresh { vocabulary_docs: &'a [&'a Document] },
    Stored { vocabulary: Option<Vocabulary>, assets: Option<ContextualAssets> },
}

/// Scores every legal (candidate, label) pair of a child.
///
/// Trainable parameters live in one [`ParamStore`]; a frozen contextual
/// encoder lives in a second store the optimizer never sees, and its outputs
/// are detached from the graph.
pub struct RankerModel {
    config: ModelConfig,
    device: Device,
    dtype: DType,
    trainable: ParamStore,
    frozen: ParamStore,
    vocabulary: Option<Vocabulary>,
    assets: Option<ContextualAssets>,
    encoder: Encoder,
    hidden: Linear,
    out: Linear,
    contextual_cache: Mutex<HashMap<u64, Tensor>>,
}

impl std::fmt::Debug for RankerModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RankerModel")
            .field("config", &self.config)
            .field("trainable", &self.trainable.len())
            .field("frozen", &self.frozen.len())
            .finish()
    }
}

/// One child and the parents to score it against.
pub(crate) struct Query<'a> {
    pub doc: &'a Document,
    pub child: usize,
    pub parents: Vec<usize>,
}

/// Legal rows of one query: `(parent, label, position in the flat logits)`.
type QueryRows = Vec<(usize, RelationLabel, usize)>;

const LABELS: usize = 4;

impl RankerModel {
    /// A freshly initialized model. Word vocabularies (and the vocabulary of
    /// a `random:tiny` transformer) are collected from `vocabulary_docs`.
    pub fn new(config: ModelConfig, vocabulary_docs: &[&Document]) -> Result<Self> {
        let trainable = ParamStore::seeded(config.seed);
        let frozen = ParamStore::seeded(config.seed ^ 0x5eed_f0f0);
        Self::assemble(config, trainable, frozen, Source::Fresh { vocabulary_docs })
    }

    /// Like [`new`](Self::new) but every parameter starts at zero.
    pub fn zeroed(config: ModelConfig, vocabulary_docs: &[&Document]) -> Result<Self> {
        Self::assemble(
            config,
            ParamStore::zeros(),
            ParamStore::zeros(),
            Source::Fresh { vocabulary_docs },
        )
    }

    pub(crate) fn assemble(config: ModelConfig, trainable: ParamStore, frozen: ParamStore, source: Source) -> Result<Self> {
        config.encoder.validate()?;
        if config.precision == Precision::F64 && config.encoder.variant.is_contextual() {
            return Err(Error::Config("f64 precision is only available for the bilstm and bilstm-glove encoders".into()));
        }
        if config.ffn_hidden_dim == 0 {
            return Err(Error::Config("ffn_hidden_dim must be positive".to_owned()));
        }
        let device = Device::Cpu;
        let dtype = config.precision.dtype();
        let enc = &config.encoder;
        let vb = trainable.var_builder(dtype, &device);

        let (vocabulary, assets) = match source {
            Source::Stored { vocabulary, assets } => (vocabulary, assets),
            Source::Fresh { vocabulary_docs } => {
                let vocabulary = (!enc.variant.is_contextual()).then(|| Vocabulary::from_documents(vocabulary_docs.iter().copied()));
                let assets = match &enc.contextual_model_name {
                    Some(name) if enc.variant.is_contextual() => {
                        let words = vocabulary_docs
                            .iter()
                            .flat_map(|d| d.sentences().iter().flatten().map(String::as_str).chain(d.dct_text().split_whitespace()));
                        let assets = ContextualAssets::resolve(name, words, enc.max_sequence_length)?;
                        let store = if enc.freeze_contextual { &frozen } else { &trainable };
                        if let Some(path) = &assets.weights {
                            store.stage(pretrained_tensors(path, &device)?);
                        }
                        Some(assets)
                    }
                    _ => None,
                };
                if let (EncoderVariant::StaticPretrainedRecurrent, Some(vocab)) = (enc.variant, &vocabulary) {
                    let path = enc.static_embeddings.as_ref().expect("validated");
                    trainable.stage([(
                        "embed.weight".to_owned(),
                        static_table(path, vocab, enc.embedding_dim, config.seed, &device)?,
                    )]);
                }
                (vocabulary, assets)
            }
        };

        let bert = |store: &ParamStore, assets: &ContextualAssets| -> Result<BertModel> {
            let cfg = assets.shape.to_candle()?;
            if assets.weights.is_some() {
                store.set_strict(true);
            }
            let model = BertModel::load(store.var_builder(dtype, &device).pp("bert"), &cfg);
            store.set_strict(false);
            Ok(model?)
        };

        let encoder = if enc.variant.is_recurrent() {
            let (words, input_dim) = match enc.variant {
                EncoderVariant::FrozenContextualRecurrent => {
                    let assets = assets.as_ref().expect("contextual assets resolved");
                    (WordSource::Contextual(bert(&frozen, assets)?), assets.shape.hidden_size)
                }
                _ => {
                    let vocab = vocabulary
                        .as_ref()
                        .ok_or_else(|| Error::Config("recurrent model without a vocabulary".to_owned()))?;
                    let table = candle_nn::embedding(vocab.len(), enc.embedding_dim, vb.pp("embed"))?;
                    (WordSource::Table(table), enc.embedding_dim)
                }
            };
            let h = enc.recurrent_hidden_dim;
            let bound = 1.0 / (h as f64).sqrt();
            let init = Init::Uniform { lo: -bound, up: bound };
            let lstm_config = LSTMConfig {
                w_ih_init: init,
                w_hh_init: init,
                b_ih_init: Some(init),
                b_hh_init: Some(init),
                ..LSTMConfig::default()
            };
            let forward = candle_nn::lstm(input_dim, h, lstm_config, vb.pp("lstm_forward"))?;
            let backward = candle_nn::lstm(input_dim, h, lstm_config, vb.pp("lstm_backward"))?;
            let sentinels = vb.get_with_hints((2, 2 * h), "sentinels", Init::Randn { mean: 0.0, stdev: 0.1 })?;
            Encoder::Recurrent {
                words,
                forward,
                backward,
                sentinels,
            }
        } else {
            let assets = assets.as_ref().expect("contextual assets resolved");
            if enc.max_sequence_length > assets.shape.max_position_embeddings {
                return Err(Error::Config(format!(
                    "max_sequence_length {} exceeds the model's {} positions",
                    enc.max_sequence_length, assets.shape.max_position_embeddings
                )));
            }
            Encoder::Transformer(bert(&trainable, assets)?)
        };

        let encoder_dim = match (&encoder, &assets) {
            (Encoder::Recurrent { .. }, _) => 4 * enc.recurrent_hidden_dim,
            (Encoder::Transformer(_), Some(a)) => a.shape.hidden_size,
            (Encoder::Transformer(_), None) => unreachable!("transformer without assets"),
        };
        let input = encoder_dim + LinguisticFeatureVector::dim(&config.window);
        let hidden = candle_nn::linear(input, config.ffn_hidden_dim, vb.pp("ffn").pp("hidden"))?;
        let out = candle_nn::linear(config.ffn_hidden_dim, LABELS, vb.pp("ffn").pp("out"))?;
        trainable.clear_staged();
        frozen.clear_staged();

        Ok(RankerModel {
            config,
            device,
            dtype,
            trainable,
            frozen,
            vocabulary,
            assets,
            encoder,
            hidden,
            out,
            contextual_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn window(&self) -> &WindowConfig {
        &self.config.window
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn trainable(&self) -> &ParamStore {
        &self.trainable
    }

    /// Parameters of the frozen contextual encoder; empty for other variants.
    pub fn frozen(&self) -> &ParamStore {
        &self.frozen
    }

    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        self.vocabulary.as_ref()
    }

    pub fn contextual_assets(&self) -> Option<&ContextualAssets> {
        self.assets.as_ref()
    }

    /// The two layers of the scorer, by name.
    pub fn feed_forward_vars(&self) -> Vec<(String, Var)> {
        self.trainable
            .named_vars()
            .into_iter()
            .filter(|(name, _)| name.starts_with("ffn."))
            .collect()
    }

    /// Size of the encoder output plus features.
    pub fn pair_dim(&self) -> usize {
        self.hidden.weight().dim(1).expect("rank-2 weight")
    }

    /// Encoder output with the features appended.
    pub fn encode_pair(&self, doc: &Document, parent: &MentionId, child: &MentionId) -> Result<Vec<f64>> {
        let query = Query {
            doc,
            child: doc.require(child)?,
            parents: vec![doc.require(parent)?],
        };
        let reps = self.pair_representations(std::slice::from_ref(&query))?;
        Ok(reps.i(0)?.to_dtype(DType::F64)?.to_vec1()?)
    }

    pub fn score_child(&self, doc: &Document, candidates: &CandidateSet) -> Result<ScoreTable> {
        let query = Query {
            doc,
            child: doc.require(&candidates.child)?,
            parents: candidates
                .candidates
                .iter()
                .map(|c| doc.require(c))
                .collect::<tdp_core::Result<_>>()?,
        };
        Ok(self.score_queries(&[query])?.pop().expect("one table per query"))
    }

    /// One table per mention, in document order, over the model's window.
    pub fn score_document(&self, doc: &Document) -> Result<Vec<ScoreTable>> {
        let queries = doc
            .mentions()
            .iter()
            .map(|m| {
                let set = generate_candidates(doc, &m.id, &self.config.window)?;
                Ok(Query {
                    doc,
                    child: doc.require(&m.id)?,
                    parents: set.candidates.iter().map(|c| doc.require(c)).collect::<tdp_core::Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.score_queries(&queries)
    }

    /// Scores and decodes one document.
    pub fn parse(&self, doc: &Document) -> Result<(TemporalDependencyTree, DecodeTrace)> {
        let tables = self.score_document(doc)?;
        Ok(decode(doc, &tables)?)
    }

    fn score_queries(&self, queries: &[Query]) -> Result<Vec<ScoreTable>> {
        if queries.iter().all(|q| q.parents.is_empty()) {
            return Ok(queries
                .iter()
                .map(|q| ScoreTable::from_raw(q.doc.node(q.child).id.clone(), []))
                .collect());
        }
        let (flat, rows) = self.logits(queries)?;
        let flat: Vec<f64> = flat.to_dtype(DType::F64)?.to_vec1()?;
        Ok(queries
            .iter()
            .zip(rows)
            .map(|(q, rows)| {
                let raw = rows
                    .into_iter()
                    .map(|(p, label, at)| (q.doc.node(p).id.clone(), label, flat[at]));
                ScoreTable::from_raw(q.doc.node(q.child).id.clone(), raw)
            })
            .collect())
    }

    /// Per-instance negative log-likelihood of the gold row, shape `[batch]`.
    pub fn instance_losses(&self, batch: &[(&Document, &TrainingInstance)]) -> Result<Tensor> {
        if batch.is_empty() {
            return Err(Error::Empty("empty batch"));
        }
        let queries = batch
            .iter()
            .map(|(doc, inst)| {
                Ok(Query {
                    doc,
                    child: doc.require(&inst.candidates.child)?,
                    parents: inst
                        .candidates
                        .candidates
                        .iter()
                        .map(|c| doc.require(c))
                        .collect::<tdp_core::Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (flat, rows) = self.logits(&queries)?;
        let pad = flat.dim(0)?;
        let width = rows.iter().map(Vec::len).max().unwrap_or(0);

        let mut index = Vec::with_capacity(batch.len() * width);
        let mut gold = Vec::with_capacity(batch.len());
        for (((doc, inst), q), rows) in batch.iter().zip(&queries).zip(&rows) {
            let gold_parent = doc.require(&inst.gold_parent)?;
            let column = rows
                .iter()
                .position(|&(p, l, _)| p == gold_parent && l == inst.gold_label)
                .ok_or_else(|| Error::MissingGold {
                    child: doc.node(q.child).id.to_string(),
                    parent: inst.gold_parent.to_string(),
                    label: inst.gold_label.to_string(),
                })?;
            gold.push(column as u32);
            index.extend(rows.iter().map(|&(_, _, at)| at as u32));
            index.extend(std::iter::repeat_n(pad as u32, width - rows.len()));
        }
        let floor = Tensor::full(-1e30f64, 1, &self.device)?.to_dtype(self.dtype)?;
        let padded = Tensor::cat(&[&flat, &floor], 0)?;
        let index = Tensor::from_vec(index, batch.len() * width, &self.device)?;
        let matrix = padded.index_select(&index, 0)?.reshape((batch.len(), width))?;
        let log_probs = candle_nn::ops::log_softmax(&matrix, D::Minus1)?;
        let gold = Tensor::from_vec(gold, (batch.len(), 1), &self.device)?;
        Ok(log_probs.gather(&gold, 1)?.squeeze(1)?.neg()?)
    }

    /// Mean of [`instance_losses`](Self::instance_losses).
    pub fn batch_loss(&self, batch: &[(&Document, &TrainingInstance)]) -> Result<Tensor> {
        Ok(self.instance_losses(batch)?.mean_all()?)
    }

    /// Flat `[pairs * 4]` logits and the legal rows of each query.
    fn logits(&self, queries: &[Query]) -> Result<(Tensor, Vec<QueryRows>)> {
        let reps = self.pair_representations(queries)?;
        let hidden = self.hidden.forward(&reps)?;
        let hidden = match self.config.activation {
            Activation::Tanh => hidden.tanh()?,
            Activation::Relu => hidden.relu()?,
        };
        let flat = self.out.forward(&hidden)?.flatten_all()?;

        let mut rows = Vec::with_capacity(queries.len());
        let mut pair = 0;
        for q in queries {
            let kind = q.doc.node(q.child).kind;
            let mut mine = Vec::new();
            for &p in &q.parents {
                for &label in legal_labels(kind, q.doc.node(p).kind) {
                    mine.push((p, label, pair * LABELS + label.index()));
                }
                pair += 1;
            }
            rows.push(mine);
        }
        Ok((flat, rows))
    }

    /// `[pairs, pair_dim]`: encoder outputs with features appended.
    fn pair_representations(&self, queries: &[Query]) -> Result<Tensor> {
        let encoded = match &self.encoder {
            Encoder::Recurrent { .. } => self.recurrent_pairs(queries)?,
            Encoder::Transformer(bert) => self.transformer_pairs(bert, queries)?,
        };
        let window = &self.config.window;
        let mut features = Vec::new();
        let mut count = 0;
        for q in queries {
            for &p in &q.parents {
                features.extend(features_by_index(q.doc, p, q.child, window).values);
                count += 1;
            }
        }
        let features = Tensor::from_vec(features, (count, LinguisticFeatureVector::dim(window)), &self.device)?
            .to_dtype(self.dtype)?;
        Ok(Tensor::cat(&[&encoded, &features], 1)?)
    }

    fn transformer_pairs(&self, bert: &BertModel, queries: &[Query]) -> Result<Tensor> {
        let tokenizer = &self.assets.as_ref().expect("transformer has assets").tokenizer;
        let max_len = self.config.encoder.max_sequence_length;
        let mut encoded: Vec<EncodedPair> = Vec::new();
        for q in queries {
            let child = &q.doc.node(q.child).id;
            for &p in &q.parents {
                let pair = build_pseudo_sentence_pair(q.doc, &q.doc.node(p).id, child)?;
                encoded.push(tokenizer.encode_pair(&pair, max_len)?);
            }
        }
        let sequences: Vec<(Vec<u32>, Vec<u32>)> = encoded.into_iter().map(|e| (e.ids, e.type_ids)).collect();
        let out = run_bert(bert, tokenizer, &sequences, &self.device)?;
        Ok(out.i((.., 0, ..))?.contiguous()?)
    }

    fn recurrent_pairs(&self, queries: &[Query]) -> Result<Tensor> {
        let Encoder::Recurrent { sentinels, .. } = &self.encoder else {
            unreachable!("recurrent encoder")
        };
        let mut docs: Vec<&Document> = Vec::new();
        let mut slot_of = Vec::with_capacity(queries.len());
        for q in queries {
            let slot = match docs.iter().position(|d| std::ptr::eq(*d, q.doc)) {
                Some(s) => s,
                None => {
                    docs.push(q.doc);
                    docs.len() - 1
                }
            };
            slot_of.push(slot);
        }
        let (states, steps) = self.bilstm(&docs)?;
        let rows = states.dim(0)?;
        let table = Tensor::cat(&[&states, sentinels], 0)?;

        // Token rows covered by a node: sentinel rows for ROOT/DCT.
        let offsets: Vec<Vec<usize>> = docs.iter().map(|d| sentence_offsets(d)).collect();
        let node_rows = |slot: usize, node: usize| -> Vec<usize> {
            let doc = docs[slot];
            let m = doc.node(node);
            match (m.sentence_index, m.token_span) {
                (Some(s), Some(span)) => {
                    let base = slot * steps + offsets[slot][s];
                    let end = match self.config.encoder.head_pooling {
                        HeadPooling::First => span.start + 1,
                        HeadPooling::Mean => span.end.max(span.start + 1),
                    };
                    (span.start..end).map(|t| base + t).collect()
                }
                _ if node == tdp_core::ROOT_INDEX => vec![rows],
                _ => vec![rows + 1],
            }
        };

        let mut parent_rows = Vec::new();
        let mut child_rows = Vec::new();
        for (q, &slot) in queries.iter().zip(&slot_of) {
            let child = node_rows(slot, q.child);
            for &p in &q.parents {
                parent_rows.push(node_rows(slot, p));
                child_rows.push(child.clone());
            }
        }
        let parents = self.pool(&table, &parent_rows)?;
        let children = self.pool(&table, &child_rows)?;
        Ok(Tensor::cat(&[&parents, &children], 1)?)
    }

    /// Averages the listed rows of `table` (a plain lookup for single rows).
    fn pool(&self, table: &Tensor, rows: &[Vec<usize>]) -> Result<Tensor> {
        if rows.iter().all(|r| r.len() == 1) {
            let index: Vec<u32> = rows.iter().map(|r| r[0] as u32).collect();
            let index = Tensor::from_vec(index, rows.len(), &self.device)?;
            return Ok(table.index_select(&index, 0)?);
        }
        let width = table.dim(0)?;
        let mut weights = vec![0f64; rows.len() * width];
        for (i, r) in rows.iter().enumerate() {
            for &t in r {
                weights[i * width + t] += 1.0 / r.len() as f64;
            }
        }
        let weights = Tensor::from_vec(weights, (rows.len(), width), &self.device)?.to_dtype(self.dtype)?;
        Ok(weights.matmul(table)?)
    }

    /// BiLSTM over each document's tokens, padded to a common length.
    /// Returns `[docs * steps, 2H]` and `steps`.
    fn bilstm(&self, docs: &[&Document]) -> Result<(Tensor, usize)> {
        let Encoder::Recurrent {
            words,
            forward,
            backward,
            ..
        } = &self.encoder
        else {
            unreachable!("recurrent encoder")
        };
        let inputs = docs
            .iter()
            .map(|d| self.word_vectors(words, d))
            .collect::<Result<Vec<_>>>()?;
        let lengths: Vec<usize> = inputs.iter().map(|t| t.dim(0)).collect::<candle::Result<_>>()?;
        let steps = lengths.iter().copied().max().unwrap_or(0).max(1);
        let dim = inputs[0].dim(1)?;
        let padded = inputs
            .iter()
            .zip(&lengths)
            .map(|(t, &len)| {
                if len == steps {
                    Ok(t.clone())
                } else {
                    let pad = Tensor::zeros((steps - len, dim), self.dtype, &self.device)?;
                    Tensor::cat(&[t, &pad], 0)
                }
            })
            .collect::<candle::Result<Vec<_>>>()?;
        let batch = Tensor::stack(&padded, 0)?;

        // Each document reversed within its own length; padding stays put.
        let reverse: Vec<u32> = lengths
            .iter()
            .enumerate()
            .flat_map(|(b, &len)| (0..steps).map(move |t| (b * steps + if t < len { len - 1 - t } else { t }) as u32))
            .collect();
        let reverse = Tensor::from_vec(reverse, docs.len() * steps, &self.device)?;
        let flip = |x: &Tensor, width: usize| -> candle::Result<Tensor> {
            x.reshape((docs.len() * steps, width))?
                .index_select(&reverse, 0)?
                .reshape((docs.len(), steps, width))
        };

        let h = self.config.encoder.recurrent_hidden_dim;
        let fwd = forward.states_to_tensor(&forward.seq(&batch)?)?;
        let bwd = backward.states_to_tensor(&backward.seq(&flip(&batch, dim)?)?)?;
        let bwd = flip(&bwd, h)?;
        let both = Tensor::cat(&[&fwd, &bwd], 2)?.reshape((docs.len() * steps, 2 * h))?;
        Ok((both, steps))
    }

    /// `[tokens, dim]` inputs of one document.
    fn word_vectors(&self, words: &WordSource, doc: &Document) -> Result<Tensor> {
        match words {
            WordSource::Table(table) => {
                let vocab = self.vocabulary.as_ref().expect("table variants have a vocabulary");
                let ids: Vec<u32> = doc.sentences().iter().flatten().map(|w| vocab.id(w)).collect();
                let n = ids.len();
                Ok(table.forward(&Tensor::from_vec(ids, n, &self.device)?)?)
            }
            WordSource::Contextual(bert) => {
                let key = fingerprint(doc);
                if let Some(t) = self.contextual_cache.lock().unwrap().get(&key) {
                    return Ok(t.clone());
                }
                let tokenizer = &self.assets.as_ref().expect("contextual assets").tokenizer;
                let vectors = contextual_word_vectors(
                    bert,
                    tokenizer,
                    doc,
                    self.config.encoder.max_sequence_length,
                    &self.device,
                )?
                .detach();
                self.contextual_cache.lock().unwrap().insert(key, vectors.clone());
                Ok(vectors)
            }
        }
    }

    /// Scores `queries` through the batched path; used by tests that
    /// compare against per-child scoring.
    #[doc(hidden)]
    pub fn score_many(&self, doc: &Document, sets: &[CandidateSet]) -> Result<Vec<ScoreTable>> {
        let queries = sets
            .iter()
            .map(|s| {
                Ok(Query {
                    doc,
                    child: doc.require(&s.child)?,
                    parents: s.candidates.iter().map(|c| doc.require(c)).collect::<tdp_core::Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.score_queries(&queries)
    }
}

fn sentence_offsets(doc: &Document) -> Vec<usize> {
    let mut acc = 0;
    doc.sentences()
        .iter()
        .map(|s| {
            let here = acc;
            acc += s.len();
            here
        })
        .collect()
}

fn fingerprint(doc: &Document) -> u64 {
    let mut h = DefaultHasher::new();
    doc.doc_id().hash(&mut h);
    doc.sentences().hash(&mut h);
    h.finish()
}

/// Runs a padded batch of `(ids, type_ids)` sequences: `[batch, len, hidden]`.
fn run_bert(
    bert: &BertModel,
    tokenizer: &SubwordTokenizer,
    sequences: &[(Vec<u32>, Vec<u32>)],
    device: &Device,
) -> Result<Tensor> {
    let len = sequences.iter().map(|(ids, _)| ids.len()).max().unwrap_or(0);
    let mut ids = Vec::with_capacity(sequences.len() * len);
    let mut types = Vec::with_capacity(sequences.len() * len);
    let mut mask = Vec::with_capacity(sequences.len() * len);
    for (i, t) in sequences {
        ids.extend(i.iter().copied().chain(std::iter::repeat_n(tokenizer.pad_id(), len - i.len())));
        types.extend(t.iter().copied().chain(std::iter::repeat_n(0, len - t.len())));
        mask.extend((0..len).map(|k| (k < i.len()) as u32));
    }
    let shape = (sequences.len(), len);
    let ids = Tensor::from_vec(ids, shape, device)?;
    let types = Tensor::from_vec(types, shape, device)?;
    let mask = Tensor::from_vec(mask, shape, device)?;
    Ok(bert.forward(&ids, &types, Some(&mask))?)
}

/// First-subword transformer outputs for every token of `doc`, sentence by
/// sentence; long sentences are split into several inputs.
fn contextual_word_vectors(
    bert: &BertModel,
    tokenizer: &SubwordTokenizer,
    doc: &Document,
    max_len: usize,
    device: &Device,
) -> Result<Tensor> {
    let budget = max_len - 2;
    let mut chunks: Vec<Vec<u32>> = Vec::new();
    let mut positions: Vec<(usize, usize)> = Vec::new();
    for sentence in doc.sentences() {
        let mut current: Vec<u32> = Vec::new();
        for word in sentence {
            let mut ids = tokenizer.word_ids(word)?;
            if ids.is_empty() {
                ids.push(tokenizer.unk_id());
            }
            ids.truncate(budget);
            if current.len() + ids.len() > budget {
                chunks.push(std::mem::take(&mut current));
            }
            positions.push((chunks.len(), 1 + current.len()));
            current.extend(ids);
        }
        if !current.is_empty() {
            chunks.push(current);
        }
    }
    let sequences: Vec<(Vec<u32>, Vec<u32>)> = chunks
        .into_iter()
        .map(|c| {
            let mut ids = vec![tokenizer.cls_id()];
            ids.extend(c);
            ids.push(tokenizer.sep_id());
            let types = vec![0; ids.len()];
            (ids, types)
        })
        .collect();
    let out = run_bert(bert, tokenizer, &sequences, device)?;
    let (n, len, hidden) = out.dims3()?;
    let index: Vec<u32> = positions.iter().map(|&(c, p)| (c * len + p) as u32).collect();
    let count = index.len();
    let index = Tensor::from_vec(index, count, device)?;
    Ok(out.reshape((n * len, hidden))?.index_select(&index, 0)?)
}

/// Pretrained transformer weights renamed under `bert.`.
fn pretrained_tensors(path: &std::path::Path, device: &Device) -> Result<Vec<(String, Tensor)>> {
    Ok(read_safetensors(path, device)?
        .into_iter()
        .filter_map(|(name, t)| {
            let bare = name.strip_prefix("bert.").unwrap_or(&name);
            if !(bare.starts_with("embeddings.") || bare.starts_with("encoder.")) {
                return None;
            }
            let bare = bare.replace("LayerNorm.gamma", "LayerNorm.weight").replace("LayerNorm.beta", "LayerNorm.bias");
            Some((format!("bert.{bare}"), t))
        })
        .collect())
}

/// `[vocab, dim]` embedding table: file vectors where available, small
/// seeded Gaussian noise elsewhere.
fn static_table(path: &std::path::Path, vocab: &Vocabulary, dim: usize, seed: u64, device: &Device) -> Result<Tensor> {
    let wanted: std::collections::HashSet<&str> = vocab.words().iter().map(String::as_str).collect();
    let (file_dim, vectors) = load_word_vectors(path, |w| wanted.contains(w.to_lowercase().as_str()))?;
    if file_dim != dim {
        return Err(Error::Config(format!(
            "{} holds {file_dim}-dimensional vectors, embedding_dim is {dim}",
            path.display()
        )));
    }
    let by_lower: HashMap<String, &Vec<f32>> = vectors.iter().map(|(w, v)| (w.to_lowercase(), v)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x61_6c_6f_76_65);
    let noise = Normal::new(0.0f32, 0.1).expect("valid normal");
    let mut values = Vec::with_capacity(vocab.len() * dim);
    let mut found = 0;
    for word in vocab.words() {
        match by_lower.get(word) {
            Some(v) => {
                values.extend_from_slice(v);
                found += 1;
            }
            None => values.extend((0..dim).map(|_| noise.sample(&mut rng))),
        }
    }
    log::info!("{found} of {} words have pretrained vectors", vocab.len());
    Ok(Tensor::from_vec(values, (vocab.len(), dim), device)?)
}
