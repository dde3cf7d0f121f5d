//! The four pair encoders on one (parent, child) pair, plus the pseudo-sentence
//! view the transformer reads.

use tdp::fixtures;
use tdp::neural::{build_pseudo_sentence_pair, extract_features, EncoderVariant, ModelConfig, RankerModel};

fn main() -> tdp::neural::Result<()> {
    let (doc, _) = fixtures::example_one();
    let (parent, child) = ("feb27".into(), "called".into());
    println!("{}", build_pseudo_sentence_pair(&doc, &parent, &child)?.tokens().join(" "));

    let window = Default::default();
    let f = extract_features(&doc, &parent, &child, &window)?;
    println!("features: {:?}", f.values);

    let dir = tempfile::tempdir().unwrap();
    let vectors = dir.path().join("vectors.txt");
    std::fs::write(&vectors, "called 0.1 0.2 0.3 0.4\nfebruary 0.4 0.3 0.2 0.1\n").unwrap();

    for variant in EncoderVariant::ALL {
        let mut config = ModelConfig::new(variant);
        if variant == EncoderVariant::StaticPretrainedRecurrent {
            config.encoder.embedding_dim = 4;
            config.encoder.static_embeddings = Some(vectors.clone());
        }
        let model = RankerModel::new(config, &[&doc])?;
        let v = model.encode_pair(&doc, &parent, &child)?;
        let table = &model.score_document(&doc)?[4];
        let best = table.argmax().unwrap();
        println!(
            "{:<12} pair vector {:>3} dims, {} trainable / {} frozen tensors, untrained pick for called: {} {}",
            variant.as_str(),
            v.len(),
            model.trainable().len(),
            model.frozen().len(),
            best.label,
            best.parent
        );
    }
    Ok(())
}
