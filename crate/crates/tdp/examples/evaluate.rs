//! Edge F1, per-parent-category accuracy and the difference between two systems.

use tdp::{category_breakdown_delta, evaluate, fixtures, RelationLabel};

fn main() -> tdp::Result<()> {
    let (_, gold) = fixtures::example_one();
    let mut relabeled = gold.clone();
    relabeled.edges.iter_mut().find(|e| e.child.as_str() == "create").unwrap().label = RelationLabel::Overlap;
    let mut reattached = gold.clone();
    reattached.edges.iter_mut().find(|e| e.child.as_str() == "share").unwrap().parent = "feb27".into();

    let gold = [gold];
    let a = evaluate(&[relabeled], &gold)?;
    let b = evaluate(&[reattached], &gold)?;
    println!("relabeled:  F1 {:.4}  with DCT edge {:.4}", a.f1, a.f1_with_root_edge);
    println!("reattached: F1 {:.4}  unlabeled {:.4}", b.f1, b.unlabeled_f1);
    println!("{}", serde_json::to_string_pretty(&category_breakdown_delta(&b, &a)).unwrap());
    Ok(())
}
