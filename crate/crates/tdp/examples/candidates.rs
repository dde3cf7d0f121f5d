//! Candidate parents of each mention and the training instances built from them.

use tdp::{build_training_instances, fixtures, generate_candidates, WindowConfig};

fn main() -> tdp::Result<()> {
    let (doc, gold) = fixtures::example_one();
    let window = WindowConfig::new(2, 1);
    for m in doc.mentions() {
        let set = generate_candidates(&doc, &m.id, &window)?;
        let ids: Vec<_> = set.candidates.iter().map(|c| c.as_str()).collect();
        println!("{:>7} [{}] -> {:?}", m.id, m.kind, ids);
    }
    for inst in build_training_instances(&doc, &gold, &window)? {
        println!(
            "{:>7}: gold {} {}{}",
            inst.candidates.child,
            inst.gold_label,
            inst.gold_parent,
            if inst.gold_out_of_window { " (appended, outside window)" } else { "" }
        );
    }
    Ok(())
}
