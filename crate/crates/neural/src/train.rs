//! Optimization loop and hyper-parameter grid search.

use std::collections::BTreeMap;

use candle::{DType, Tensor};
use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tdp_core::{build_training_instances, evaluate, Document, TemporalDependencyTree, TrainingInstance};

use crate::model::RankerModel;
use crate::{Error, Result};

pub type Corpus = [(Document, TemporalDependencyTree)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Independent seeds per grid cell.
    pub runs: usize,
    /// Child instances per optimizer step.
    pub batch_size: usize,
    /// Seeds shuffling; run `r` of a grid uses `seed + r`.
    pub seed: u64,
    /// Return the weights of the best dev epoch instead of the last one.
    pub select_best_dev: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 50,
            runs: 1,
            batch_size: 16,
            seed: 0,
            select_best_dev: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.runs == 0 {
            return Err(Error::Config("epochs, batch_size and runs must be at least 1".to_owned()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Labeled F1 on the dev split, absent without one.
    pub dev_f1: Option<f64>,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: RankerModel,
    pub trace: Vec<EpochRecord>,
    /// Epoch whose weights the model holds.
    pub selected_epoch: usize,
}

/// Training instances of a corpus, tagged with their document index.
pub fn corpus_instances(model: &RankerModel, corpus: &Corpus) -> Result<Vec<(usize, TrainingInstance)>> {
    let mut out = Vec::new();
    for (i, (doc, tree)) in corpus.iter().enumerate() {
        for inst in build_training_instances(doc, tree, model.window())? {
            out.push((i, inst));
        }
    }
    Ok(out)
}

/// Adam over the trainable parameters of one model.
pub struct Trainer<'m> {
    model: &'m RankerModel,
    optimizer: AdamW,
}

impl<'m> Trainer<'m> {
    pub fn new(model: &'m RankerModel, learning_rate: f64) -> Result<Self> {
        let params = ParamsAdamW {
            lr: learning_rate,
            weight_decay: 0.0,
            ..ParamsAdamW::default()
        };
        Ok(Trainer {
            model,
            optimizer: AdamW::new(model.trainable().vars(), params)?,
        })
    }

    /// One optimizer step on the mean loss of `batch`; returns that loss.
    pub fn step(&mut self, batch: &[(&Document, &TrainingInstance)]) -> Result<f64> {
        let loss = self.model.batch_loss(batch)?;
        let value = scalar(&loss)?;
        if !value.is_finite() {
            return Err(Error::Diverged {
                epoch: 0,
                step: 0,
                loss: value,
            });
        }
        self.optimizer.backward_step(&loss)?;
        Ok(value)
    }
}

fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(DType::F64)?.to_scalar::<f64>()?)
}

/// Labeled F1 of the model's parses of `corpus`.
pub fn corpus_f1(model: &RankerModel, corpus: &Corpus) -> Result<f64> {
    let mut predicted = Vec::with_capacity(corpus.len());
    for (doc, _) in corpus {
        predicted.push(model.parse(doc)?.0);
    }
    let gold: Vec<_> = corpus.iter().map(|(_, t)| t.clone()).collect();
    Ok(evaluate(&predicted, &gold)?.f1)
}

/// Trains `model` with shuffled mini-batches of child instances.
///
/// `on_epoch` sees each record as soon as it exists.
pub fn train_with(
    model: RankerModel,
    train: &Corpus,
    dev: &Corpus,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    let instances = corpus_instances(&model, train)?;
    if instances.is_empty() {
        return Err(Error::Empty("no training instances"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, BTreeMap<String, Tensor>)> = None;
    {
        let mut trainer = Trainer::new(&model, config.learning_rate)?;
        for epoch in 1..=config.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for (step, chunk) in order.chunks(config.batch_size).enumerate() {
                let batch: Vec<(&Document, &TrainingInstance)> = chunk
                    .iter()
                    .map(|&i| (&train[instances[i].0].0, &instances[i].1))
                    .collect();
                let loss = trainer.step(&batch).map_err(|e| match e {
                    Error::Diverged { loss, .. } => Error::Diverged { epoch, step, loss },
                    other => other,
                })?;
                total += loss * batch.len() as f64;
            }
            let dev_f1 = if dev.is_empty() {
                None
            } else {
                Some(corpus_f1(&model, dev)?)
            };
            let record = EpochRecord {
                epoch,
                mean_loss: total / instances.len() as f64,
                dev_f1,
            };
            log::debug!("epoch {epoch}: loss {:.4} dev F1 {:?}", record.mean_loss, record.dev_f1);
            on_epoch(&record);
            if config.select_best_dev {
                if let Some(f1) = dev_f1 {
                    if best.as_ref().is_none_or(|(b, _, _)| f1 > *b) {
                        best = Some((f1, epoch, model.trainable().snapshot()?));
                    }
                }
            }
            trace.push(record);
        }
    }
    let selected_epoch = match best {
        Some((_, epoch, weights)) => {
            for (name, var) in model.trainable().named_vars() {
                var.set(&weights[&name])?;
            }
            epoch
        }
        None => config.epochs,
    };
    Ok(TrainOutcome {
        model,
        trace,
        selected_epoch,
    })
}

pub fn train(model: RankerModel, train: &Corpus, dev: &Corpus, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(model, train, dev, config, |_| {})
}

/// Learning rates and epoch counts to cross.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub learning_rates: Vec<f64>,
    pub epochs: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            learning_rates: vec![0.001, 0.0001, 0.0005, 0.00025],
            epochs: vec![50, 75, 100],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub learning_rate: f64,
    pub epochs: usize,
    pub dev_f1: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
    /// Index of the selected cell.
    pub best: usize,
}

impl GridReport {
    pub fn best_cell(&self) -> &GridCell {
        &self.cells[self.best]
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("lr        epochs  mean_f1  variance  runs\n");
        for (i, c) in self.cells.iter().enumerate() {
            out.push_str(&format!(
                "{:<9} {:>6}  {:>7.4}  {:>8.6}  {}{}\n",
                c.learning_rate,
                c.epochs,
                c.mean,
                c.variance,
                c.dev_f1.len(),
                if i == self.best { "  *" } else { "" }
            ));
        }
        out
    }
}

/// Mean and population variance.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, variance)
}

/// Highest mean; ties go to the lower learning rate, then fewer epochs.
pub fn select_cell(cells: &[GridCell]) -> Option<usize> {
    (0..cells.len()).reduce(|best, i| {
        let (a, b) = (&cells[best], &cells[i]);
        let better = b.mean > a.mean
            || (b.mean == a.mean
                && (b.learning_rate < a.learning_rate || (b.learning_rate == a.learning_rate && b.epochs < a.epochs)));
        if better {
            i
        } else {
            best
        }
    })
}

/// Trains `runs` models per (learning rate, epochs) cell and reports dev F1.
///
/// `make_model(seed)` builds a fresh model; run `r` uses `base.seed + r` for
/// both initialization and shuffling. Because a run's first `e` epochs do
/// not depend on the total epoch count, the cells of one learning rate are
/// read off a single run of the longest schedule.
pub fn grid_search(
    mut make_model: impl FnMut(u64) -> Result<RankerModel>,
    train_set: &Corpus,
    dev: &Corpus,
    grid: &GridSpec,
    base: &TrainConfig,
) -> Result<GridReport> {
    if grid.learning_rates.is_empty() || grid.epochs.is_empty() {
        return Err(Error::Empty("grid search needs at least one learning rate and one epoch count"));
    }
    if dev.is_empty() {
        return Err(Error::Empty("grid search needs a dev split"));
    }
    let longest = *grid.epochs.iter().max().expect("non-empty");
    let mut cells = Vec::new();
    for &lr in &grid.learning_rates {
        let mut per_epochs: Vec<Vec<f64>> = vec![Vec::new(); grid.epochs.len()];
        for run in 0..base.runs {
            let seed = base.seed + run as u64;
            let config = TrainConfig {
                learning_rate: lr,
                epochs: longest,
                seed,
                ..base.clone()
            };
            let outcome = train(make_model(seed)?, train_set, dev, &config)?;
            for (slot, &epochs) in grid.epochs.iter().enumerate() {
                let seen = &outcome.trace[..epochs];
                let f1 = if base.select_best_dev {
                    seen.iter().filter_map(|r| r.dev_f1).fold(f64::NEG_INFINITY, f64::max)
                } else {
                    seen[epochs - 1].dev_f1.expect("dev split present")
                };
                per_epochs[slot].push(f1);
            }
            log::info!("grid lr={lr} run {run} done");
        }
        for (slot, &epochs) in grid.epochs.iter().enumerate() {
            let (mean, variance) = mean_and_variance(&per_epochs[slot]);
            cells.push(GridCell {
                learning_rate: lr,
                epochs,
                dev_f1: std::mem::take(&mut per_epochs[slot]),
                mean,
                variance,
            });
        }
    }
    let best = select_cell(&cells).expect("non-empty grid");
    Ok(GridReport { cells, best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_variance() {
        let (m, v) = mean_and_variance(&[0.5, 0.6]);
        assert!((m - 0.55).abs() < 1e-12);
        assert!((v - 0.0025).abs() < 1e-12);
    }

    #[test]
    fn ties_prefer_lower_learning_rate() {
        let cell = |lr, epochs, mean| GridCell {
            learning_rate: lr,
            epochs,
            dev_f1: vec![mean],
            mean,
            variance: 0.0,
        };
        let cells = vec![cell(0.001, 50, 0.5), cell(0.0001, 75, 0.5), cell(0.0005, 50, 0.4)];
        assert_eq!(select_cell(&cells), Some(1));
        let cells = vec![cell(0.001, 50, 0.5), cell(0.001, 100, 0.6)];
        assert_eq!(select_cell(&cells), Some(1));
    }

    #[test]
    fn config_checks() {
        assert!(TrainConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
