//! Relations implied by a tree, and trees that differ but mean the same.

use tdp::{close, equivalence_aware_report, fixtures, trees_equivalent, RelationLabel, TemporalDependencyTree};

fn main() -> tdp::Result<()> {
    let (_, tree) = fixtures::example_one();
    let m = close(&tree);
    for (a, b) in [("ruled", "share"), ("signed", "called"), ("create", "DCT")] {
        println!("rel({a}, {b}) = {:?}", m.get(&a.into(), &b.into()).unwrap());
    }
    println!("{} of {} ordered pairs known", m.known_pairs(), m.len() * m.len());

    // saying overlaps called, so "create after called" says the same as
    // "create after saying".
    let mut moved = tree.clone();
    moved.edges.iter_mut().find(|e| e.child.as_str() == "create").unwrap().parent = "called".into();
    println!("moved create: {:?}", trees_equivalent(&moved, &tree)?);

    let mut flipped = TemporalDependencyTree::new("example-1", tree.edges.clone());
    flipped.edges.iter_mut().find(|e| e.child.as_str() == "create").unwrap().label = RelationLabel::Before;
    // One document id per comparison.
    let named = |mut t: TemporalDependencyTree, id: &str| {
        t.doc_id = id.to_owned();
        t
    };
    let predicted = [named(tree.clone(), "same"), named(moved, "moved"), named(flipped, "flipped")];
    let gold = ["same", "moved", "flipped"].map(|id| named(tree.clone(), id));
    let report = equivalence_aware_report(&predicted, &gold)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(())
}
