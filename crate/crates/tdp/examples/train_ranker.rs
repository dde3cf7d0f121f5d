//! Train the recurrent ranker on a synthetic corpus, save it, reload it and
//! parse a held-out document.

use tdp::neural::{train_with, EncoderVariant, ModelConfig, RankerModel, TrainConfig};
use tdp::render::indented;
use tdp::synthetic::template_corpus;
use tdp::evaluate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = template_corpus(24, 1);
    let (train_set, dev) = corpus.split_at(20);
    let docs: Vec<_> = corpus.iter().map(|(d, _)| d).collect();
    let model = RankerModel::new(ModelConfig::new(EncoderVariant::RandomInitRecurrent), &docs)?;
    let config = TrainConfig {
        epochs: 15,
        select_best_dev: true,
        ..Default::default()
    };
    let outcome = train_with(model, train_set, dev, &config, |r| {
        println!("epoch {:>2}  loss {:.4}  dev F1 {:.3}", r.epoch, r.mean_loss, r.dev_f1.unwrap_or(f64::NAN));
    })?;
    println!("kept epoch {}", outcome.selected_epoch);

    let dir = tempfile::tempdir()?;
    outcome.model.save(dir.path())?;
    let model = RankerModel::load(dir.path())?;
    let (doc, gold) = &dev[0];
    let (tree, trace) = model.parse(doc)?;
    print!("{}", indented(&tree, doc));
    let report = evaluate(std::slice::from_ref(&tree), std::slice::from_ref(gold))?;
    println!("F1 {:.3}, {} cycle skip(s)", report.f1, trace.total_skips());
    Ok(())
}
