use candle::{DType, Tensor};

use tdp_core::synthetic::template_corpus;
use tdp_core::{build_training_instances, Document, TrainingInstance};
use tdp_neural::*;

fn f64_model(variant: EncoderVariant, corpus: &[&Document]) -> RankerModel {
    let mut c = ModelConfig::new(variant);
    c.encoder.embedding_dim = 6;
    c.encoder.recurrent_hidden_dim = 5;
    c.ffn_hidden_dim = 7;
    c.precision = Precision::F64;
    c.seed = 17;
    RankerModel::new(c, corpus).unwrap()
}

fn loss(model: &RankerModel, batch: &[(&Document, &TrainingInstance)]) -> f64 {
    model.batch_loss(batch).unwrap().to_scalar::<f64>().unwrap()
}

#[test]
fn feed_forward_gradients_match_central_differences() {
    let corpus = template_corpus(2, 3);
    let docs: Vec<&Document> = corpus.iter().map(|(d, _)| d).collect();
    let variant = EncoderVariant::RandomInitRecurrent;
    let model = f64_model(variant, &docs);
    let instances: Vec<(usize, TrainingInstance)> = corpus
        .iter()
        .enumerate()
        .flat_map(|(i, (d, t))| {
            build_training_instances(d, t, model.window())
                .unwrap()
                .into_iter()
                .map(move |x| (i, x))
        })
        .take(6)
        .collect();
    let batch: Vec<_> = instances.iter().map(|(i, x)| (&corpus[*i].0, x)).collect();

    let grads = model.batch_loss(&batch).unwrap().backward().unwrap();
    let eps = 1e-6;
    let mut worst = 0.0f64;
    for (name, var) in model.feed_forward_vars() {
        let analytic: Vec<f64> = grads.get(&var).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        let original = var.as_tensor().copy().unwrap();
        let flat: Vec<f64> = original.flatten_all().unwrap().to_vec1().unwrap();
        for (k, &g) in analytic.iter().enumerate() {
            let shifted = |delta: f64| {
                let mut v = flat.clone();
                v[k] += delta;
                var.set(&Tensor::from_vec(v, original.shape(), original.device()).unwrap()).unwrap();
                loss(&model, &batch)
            };
            let numeric = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
            var.set(&original).unwrap();
            // Entries whose true gradient is zero only need to be small.
            let scale = g.abs().max(numeric.abs()).max(1e-4);
            let rel = (g - numeric).abs() / scale;
            worst = worst.max(rel);
            assert!(rel < 1e-3, "{variant} {name}[{k}]: {g} vs {numeric}");
        }
    }
    assert!(worst < 1e-3);
    assert_eq!(model.dtype(), DType::F64);
}

#[test]
fn contextual_encoders_reject_f64() {
    let corpus = template_corpus(1, 3);
    let mut c = ModelConfig::new(EncoderVariant::FinetunedTransformer);
    c.precision = Precision::F64;
    assert!(matches!(RankerModel::new(c, &[&corpus[0].0]), Err(Error::Config(_))));
}

#[test]
fn frozen_contextual_weights_never_move() {
    let corpus = template_corpus(4, 8);
    let docs: Vec<&Document> = corpus.iter().map(|(d, _)| d).collect();
    let mut c = ModelConfig::new(EncoderVariant::FrozenContextualRecurrent);
    c.encoder.recurrent_hidden_dim = 8;
    c.ffn_hidden_dim = 8;
    let model = RankerModel::new(c, &docs).unwrap();
    assert!(!model.frozen().is_empty());
    assert!(model.trainable().named_vars().iter().all(|(n, _)| !n.starts_with("bert.")));

    let frozen_before = model.frozen().snapshot().unwrap();
    let trainable_before = model.trainable().snapshot().unwrap();
    let instances = corpus_instances(&model, &corpus).unwrap();
    let mut trainer = Trainer::new(&model, 0.01).unwrap();
    for step in 0..10 {
        let batch: Vec<_> = instances
            .iter()
            .cycle()
            .skip(step * 4)
            .take(4)
            .map(|(i, x)| (&corpus[*i].0, x))
            .collect();
        trainer.step(&batch).unwrap();
    }
    let frozen_after = model.frozen().snapshot().unwrap();
    for (name, before) in &frozen_before {
        let a: Vec<f32> = before.flatten_all().unwrap().to_vec1().unwrap();
        let b: Vec<f32> = frozen_after[name].flatten_all().unwrap().to_vec1().unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()), "{name} moved");
    }
    let trainable_after = model.trainable().snapshot().unwrap();
    let moved = trainable_before.iter().filter(|(name, before)| {
        let a: Vec<f32> = before.flatten_all().unwrap().to_vec1().unwrap();
        let b: Vec<f32> = trainable_after[*name].flatten_all().unwrap().to_vec1().unwrap();
        a != b
    });
    let moved: Vec<_> = moved.map(|(n, _)| n.as_str()).collect();
    assert!(moved.iter().any(|n| n.starts_with("lstm_forward")), "{moved:?}");
    assert!(moved.iter().any(|n| n.starts_with("lstm_backward")), "{moved:?}");
}
