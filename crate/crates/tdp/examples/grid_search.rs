//! A small learning-rate × epochs grid with two seeds per cell.

use tdp::neural::{grid_search, EncoderVariant, GridSpec, ModelConfig, RankerModel, TrainConfig};
use tdp::synthetic::template_corpus;

fn main() -> tdp::neural::Result<()> {
    let corpus = template_corpus(12, 2);
    let (train_set, dev) = corpus.split_at(9);
    let docs: Vec<_> = corpus.iter().map(|(d, _)| d).collect();
    let grid = GridSpec {
        learning_rates: vec![0.005, 0.001],
        epochs: vec![2, 5],
    };
    let base = TrainConfig {
        runs: 2,
        ..Default::default()
    };
    let report = grid_search(
        |seed| {
            let mut config = ModelConfig::new(EncoderVariant::RandomInitRecurrent);
            config.seed = seed;
            RankerModel::new(config, &docs)
        },
        train_set,
        dev,
        &grid,
        &base,
    )?;
    print!("{}", report.to_table());
    let best = report.best_cell();
    println!("best: lr {} for {} epochs", best.learning_rate, best.epochs);
    Ok(())
}
