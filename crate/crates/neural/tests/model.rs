use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tdp_core::fixtures::example_one;
use tdp_core::synthetic::template_corpus;
use tdp_core::{build_training_instances, generate_candidates, validate_tree, Document, TrainingInstance, WindowConfig};
use tdp_neural::*;

fn small(variant: EncoderVariant, seed: u64) -> ModelConfig {
    let mut c = ModelConfig::new(variant);
    c.encoder.embedding_dim = 8;
    c.encoder.recurrent_hidden_dim = 6;
    c.ffn_hidden_dim = 10;
    c.seed = seed;
    c
}

fn example_model(variant: EncoderVariant, seed: u64) -> (Document, RankerModel) {
    let (doc, _) = example_one();
    let model = RankerModel::new(small(variant, seed), &[&doc]).unwrap();
    (doc, model)
}

#[test]
fn probabilities_sum_to_one_for_every_variant() {
    for variant in [
        EncoderVariant::RandomInitRecurrent,
        EncoderVariant::FrozenContextualRecurrent,
        EncoderVariant::FinetunedTransformer,
    ] {
        let (doc, model) = example_model(variant, 1);
        let tables = model.score_document(&doc).unwrap();
        assert_eq!(tables.len(), doc.mentions().len());
        for t in &tables {
            assert!((t.probability_sum() - 1.0).abs() < 1e-6, "{variant}");
        }
        let (tree, _) = model.parse(&doc).unwrap();
        assert!(validate_tree(&tree, &doc).unwrap().is_empty());
    }
}

#[test]
fn one_row_per_candidate_and_legal_label() {
    let (doc, model) = example_model(EncoderVariant::RandomInitRecurrent, 2);
    let w = WindowConfig::default();
    let set = generate_candidates(&doc, &"called".into(), &w).unwrap();
    let table = model.score_child(&doc, &set).unwrap();
    // DCT plus six events, three temporal labels each; feb27 is a TIMEX
    // parent and also takes three labels.
    assert_eq!(table.rows.len(), 7 * 3);
    let set = generate_candidates(&doc, &"feb27".into(), &w).unwrap();
    let table = model.score_child(&doc, &set).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].probability, 1.0);
}

#[test]
fn zero_parameters_give_uniform_scores() {
    let (doc, _) = example_one();
    for variant in [EncoderVariant::RandomInitRecurrent, EncoderVariant::FinetunedTransformer] {
        let model = RankerModel::zeroed(small(variant, 0), &[&doc]).unwrap();
        for table in model.score_document(&doc).unwrap() {
            let r = table.rows.len() as f64;
            for row in &table.rows {
                assert!((row.probability - 1.0 / r).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn batched_scores_match_single_child_scores() {
    let (doc, model) = example_model(EncoderVariant::RandomInitRecurrent, 3);
    let sets: Vec<_> = doc
        .mentions()
        .iter()
        .map(|m| generate_candidates(&doc, &m.id, model.window()).unwrap())
        .collect();
    let batched = model.score_many(&doc, &sets).unwrap();
    for (set, b) in sets.iter().zip(&batched) {
        let single = model.score_child(&doc, set).unwrap();
        for (x, y) in single.rows.iter().zip(&b.rows) {
            assert_eq!((&x.parent, x.label), (&y.parent, y.label));
            assert!((x.raw_score - y.raw_score).abs() < 1e-5);
        }
    }
}

#[test]
fn encoding_is_deterministic_and_sized() {
    let (doc, model) = example_model(EncoderVariant::FinetunedTransformer, 4);
    let a = model.encode_pair(&doc, &"feb27".into(), &"called".into()).unwrap();
    let b = model.encode_pair(&doc, &"feb27".into(), &"called".into()).unwrap();
    assert_eq!(a, b);
    let hidden = model.contextual_assets().unwrap().shape.hidden_size;
    let features = LinguisticFeatureVector::dim(model.window());
    assert_eq!(a.len(), hidden + features);
    assert_eq!(model.pair_dim(), hidden + features);

    let (doc, model) = example_model(EncoderVariant::RandomInitRecurrent, 4);
    let v = model.encode_pair(&doc, &"DCT".into(), &"share".into()).unwrap();
    assert_eq!(v.len(), 4 * 6 + features);
    // The appended features are the extracted ones.
    let f = extract_features(&doc, &"DCT".into(), &"share".into(), model.window()).unwrap();
    assert_eq!(&v[4 * 6..], f.values.as_slice());
}

#[test]
fn mean_pooling_differs_from_head_on_multi_token_mentions() {
    let (doc, _) = example_one();
    let mut config = small(EncoderVariant::RandomInitRecurrent, 5);
    let first = RankerModel::new(config.clone(), &[&doc]).unwrap();
    config.encoder.head_pooling = HeadPooling::Mean;
    let mean = RankerModel::new(config, &[&doc]).unwrap();
    let a = first.encode_pair(&doc, &"feb27".into(), &"signed".into()).unwrap();
    let b = mean.encode_pair(&doc, &"feb27".into(), &"signed".into()).unwrap();
    assert_ne!(a, b);
    let a = first.encode_pair(&doc, &"called".into(), &"saying".into()).unwrap();
    let b = mean.encode_pair(&doc, &"called".into(), &"saying".into()).unwrap();
    assert_eq!(a, b);
}

fn instances(corpus: &[(Document, tdp_core::TemporalDependencyTree)], w: &WindowConfig) -> Vec<(usize, TrainingInstance)> {
    corpus
        .iter()
        .enumerate()
        .flat_map(|(i, (d, t))| build_training_instances(d, t, w).unwrap().into_iter().map(move |x| (i, x)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn batch_loss_is_the_mean_of_instance_losses(seed in any::<u64>(), take in 1usize..12) {
        let corpus = template_corpus(3, seed);
        let docs: Vec<&Document> = corpus.iter().map(|(d, _)| d).collect();
        let model = RankerModel::new(small(EncoderVariant::RandomInitRecurrent, seed), &docs).unwrap();
        let all = instances(&corpus, model.window());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked: Vec<_> = rand::seq::index::sample(&mut rng, all.len(), take.min(all.len()))
            .into_iter()
            .map(|i| (&corpus[all[i].0].0, &all[i].1))
            .collect();
        let batch = model.batch_loss(&picked).unwrap().to_scalar::<f32>().unwrap() as f64;
        let singles: f64 = picked
            .iter()
            .map(|p| model.batch_loss(std::slice::from_ref(p)).unwrap().to_scalar::<f32>().unwrap() as f64)
            .sum::<f64>() / picked.len() as f64;
        prop_assert!((batch - singles).abs() < 1e-4, "{batch} vs {singles}");
        prop_assert!(batch >= 0.0);
    }

    #[test]
    fn random_models_normalize(seed in any::<u64>()) {
        let (doc, model) = example_model(EncoderVariant::RandomInitRecurrent, seed);
        for t in model.score_document(&doc).unwrap() {
            prop_assert!((t.probability_sum() - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn loss_matches_core_ranking_loss() {
    let (doc, gold) = example_one();
    let model = RankerModel::new(small(EncoderVariant::RandomInitRecurrent, 6), &[&doc]).unwrap();
    for inst in build_training_instances(&doc, &gold, model.window()).unwrap() {
        let table = model.score_child(&doc, &inst.candidates).unwrap();
        let expected = tdp_core::ranking_loss(&table, &inst.gold_parent, inst.gold_label).unwrap();
        let got = model.batch_loss(&[(&doc, &inst)]).unwrap().to_scalar::<f32>().unwrap() as f64;
        assert!((got - expected).abs() < 1e-4, "{got} vs {expected}");
    }
}

#[test]
fn identical_seeds_give_identical_traces() {
    let corpus = template_corpus(6, 11);
    let (train_set, dev) = corpus.split_at(4);
    let docs: Vec<&Document> = corpus.iter().map(|(d, _)| d).collect();
    let config = TrainConfig {
        epochs: 3,
        batch_size: 8,
        seed: 9,
        ..Default::default()
    };
    let run = || {
        let model = RankerModel::new(small(EncoderVariant::RandomInitRecurrent, 9), &docs).unwrap();
        train(model, train_set, dev, &config).unwrap().trace
    };
    let a = run();
    assert_eq!(a.len(), 3);
    assert!(a.iter().all(|r| r.dev_f1.is_some()));
    assert_eq!(a, run());
}

#[test]
fn select_best_dev_restores_the_best_epoch() {
    let corpus = template_corpus(6, 12);
    let (train_set, dev) = corpus.split_at(4);
    let docs: Vec<&Document> = corpus.iter().map(|(d, _)| d).collect();
    let config = TrainConfig {
        epochs: 4,
        batch_size: 8,
        learning_rate: 0.01,
        select_best_dev: true,
        ..Default::default()
    };
    let model = RankerModel::new(small(EncoderVariant::RandomInitRecurrent, 1), &docs).unwrap();
    let outcome = train(model, train_set, dev, &config).unwrap();
    let best = outcome
        .trace
        .iter()
        .map(|r| r.dev_f1.unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    let chosen = &outcome.trace[outcome.selected_epoch - 1];
    assert_eq!(chosen.dev_f1.unwrap(), best);
    assert_eq!(corpus_f1(&outcome.model, dev).unwrap(), best);
}

#[test]
fn divergence_is_reported() {
    let corpus = template_corpus(2, 13);
    let docs: Vec<&Document> = corpus.iter().map(|(d, _)| d).collect();
    let model = RankerModel::new(small(EncoderVariant::RandomInitRecurrent, 1), &docs).unwrap();
    // Poison one weight.
    let (_, var) = &model.feed_forward_vars()[0];
    let nan = (var.as_tensor().ones_like().unwrap() * f64::NAN).unwrap();
    var.set(&nan).unwrap();
    let err = train(model, &corpus, &[], &TrainConfig { epochs: 1, ..Default::default() }).unwrap_err();
    assert!(matches!(err, Error::Diverged { epoch: 1, step: 0, .. }), "{err}");
}

#[test]
fn smallest_grid() {
    let corpus = template_corpus(5, 14);
    let (train_set, dev) = corpus.split_at(3);
    let docs: Vec<&Document> = corpus.iter().map(|(d, _)| d).collect();
    let grid = GridSpec {
        learning_rates: vec![0.001],
        epochs: vec![1],
    };
    let base = TrainConfig {
        runs: 2,
        ..Default::default()
    };
    let mut built = 0;
    let report = grid_search(
        |seed| {
            built += 1;
            RankerModel::new(small(EncoderVariant::RandomInitRecurrent, seed), &docs)
        },
        train_set,
        dev,
        &grid,
        &base,
    )
    .unwrap();
    assert_eq!(built, 2);
    assert_eq!(report.cells.len(), 1);
    assert_eq!(report.cells[0].dev_f1.len(), 2);
    let (m, v) = mean_and_variance(&report.cells[0].dev_f1);
    assert_eq!((report.cells[0].mean, report.cells[0].variance), (m, v));
    assert!(report.to_table().contains('*'));
}

#[test]
fn grid_cells_match_separate_runs() {
    let corpus = template_corpus(5, 15);
    let (train_set, dev) = corpus.split_at(3);
    let docs: Vec<&Document> = corpus.iter().map(|(d, _)| d).collect();
    let make = |seed| RankerModel::new(small(EncoderVariant::RandomInitRecurrent, seed), &docs);
    let grid = GridSpec {
        learning_rates: vec![0.005],
        epochs: vec![1, 2],
    };
    let base = TrainConfig {
        seed: 3,
        ..Default::default()
    };
    let report = grid_search(make, train_set, dev, &grid, &base).unwrap();
    for cell in &report.cells {
        let config = TrainConfig {
            learning_rate: cell.learning_rate,
            epochs: cell.epochs,
            ..base.clone()
        };
        let outcome = train(make(3).unwrap(), train_set, dev, &config).unwrap();
        assert_eq!(outcome.trace.last().unwrap().dev_f1.unwrap(), cell.dev_f1[0]);
    }
}

#[test]
fn checkpoints_round_trip() {
    let corpus = template_corpus(3, 16);
    let docs: Vec<&Document> = corpus.iter().map(|(d, _)| d).collect();
    for variant in [
        EncoderVariant::RandomInitRecurrent,
        EncoderVariant::FrozenContextualRecurrent,
        EncoderVariant::FinetunedTransformer,
    ] {
        let model = RankerModel::new(small(variant, 21), &docs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        let back = RankerModel::load(dir.path()).unwrap();
        assert_eq!(back.config(), model.config());
        for (doc, _) in &corpus {
            let a = model.score_document(doc).unwrap();
            let b = back.score_document(doc).unwrap();
            assert_eq!(a, b, "{variant}");
        }
    }
}

#[test]
fn bad_checkpoints_name_the_directory() {
    let dir = tempfile::tempdir().unwrap();
    let err = RankerModel::load(dir.path()).unwrap_err();
    assert!(err.to_string().contains(&dir.path().display().to_string()), "{err}");

    let (doc, model) = example_model(EncoderVariant::RandomInitRecurrent, 1);
    model.save(dir.path()).unwrap();
    std::fs::write(dir.path().join("weights.safetensors"), b"garbage").unwrap();
    assert!(matches!(RankerModel::load(dir.path()), Err(Error::Checkpoint { .. })));
    let _ = doc;
}

#[test]
fn missing_contextual_checkpoint_is_a_config_error() {
    let (doc, _) = example_one();
    let mut config = small(EncoderVariant::FinetunedTransformer, 0);
    config.encoder.contextual_model_name = Some("/definitely/not/here".to_owned());
    assert!(matches!(RankerModel::new(config, &[&doc]), Err(Error::Config(_))));
}

#[test]
fn pretrained_directory_is_loaded() {
    // A model directory written from a random:tiny encoder stands in for a
    // downloaded checkpoint.
    let (doc, _) = example_one();
    let donor = RankerModel::new(small(EncoderVariant::FinetunedTransformer, 8), &[&doc]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    donor.contextual_assets().unwrap().save_description(dir.path()).unwrap();
    let weights: std::collections::HashMap<String, candle::Tensor> = donor
        .trainable()
        .named_vars()
        .into_iter()
        .filter(|(n, _)| n.starts_with("bert."))
        .map(|(n, v)| (n, v.as_tensor().clone()))
        .collect();
    candle::safetensors::save(&weights, dir.path().join("model.safetensors")).unwrap();

    let mut config = small(EncoderVariant::FrozenContextualRecurrent, 8);
    config.encoder.contextual_model_name = Some(dir.path().to_str().unwrap().to_owned());
    let model = RankerModel::new(config, &[&doc]).unwrap();
    let loaded = model.frozen().snapshot().unwrap();
    assert_eq!(loaded.len(), weights.len());
    for (name, t) in &weights {
        let diff = (&loaded[name] - t).unwrap().abs().unwrap().max_all().unwrap();
        assert_eq!(diff.to_scalar::<f32>().unwrap(), 0.0, "{name}");
    }
}

#[test]
fn static_vectors_seed_the_embedding_table() {
    let (doc, _) = example_one();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    use std::io::Write;
    writeln!(file, "kuchma 1 2 3 4 5 6 7 8\nsigned 0 0 0 0 0 0 0 1").unwrap();
    let mut config = small(EncoderVariant::StaticPretrainedRecurrent, 0);
    config.encoder.static_embeddings = Some(file.path().to_owned());
    let model = RankerModel::new(config.clone(), &[&doc]).unwrap();
    let table = model.trainable().snapshot().unwrap()["embed.weight"].clone();
    let id = model.vocabulary().unwrap().id("Kuchma") as usize;
    let row: Vec<f32> = table.get(id).unwrap().to_vec1().unwrap();
    assert_eq!(row, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);

    config.encoder.embedding_dim = 5;
    assert!(matches!(RankerModel::new(config, &[&doc]), Err(Error::Config(_))));
}

#[test]
fn table_two_pair_through_the_tokenizer() {
    let (doc, model) = example_model(EncoderVariant::FinetunedTransformer, 0);
    let pair = build_pseudo_sentence_pair(&doc, &"feb27".into(), &"called".into()).unwrap();
    let tok = &model.contextual_assets().unwrap().tokenizer;
    let encoded = tok.encode_pair(&pair, 128).unwrap();
    assert_eq!(encoded.ids[0], tok.cls_id());
    let sep = encoded.ids.iter().position(|&i| i == tok.sep_id()).unwrap();
    assert!(encoded.type_ids[..=sep].iter().all(|&t| t == 0));
    assert!(encoded.type_ids[sep + 1..].iter().all(|&t| t == 1));
    let short = tok.encode_pair(&pair, 20).unwrap();
    assert_eq!(short.ids.len(), 20);
    // Node words and labels survive truncation.
    let head = tok.word_ids("February").unwrap()[0];
    assert!(short.ids.contains(&head));
    assert_eq!(short.ids.iter().filter(|&&i| i == tok.sep_id()).count(), 1);
}
