//! Greedy decoding: oracle scores reproduce the gold tree, adversarial scores
//! force a cycle skip.

use tdp::render::indented;
use tdp::{cycle_skip_rate, decode, fixtures, WindowConfig};

fn main() -> tdp::Result<()> {
    let (doc, gold) = fixtures::example_one();
    let tables = fixtures::oracle_tables(&doc, &gold, &WindowConfig::default());
    let (tree, oracle_trace) = decode(&doc, &tables)?;
    assert_eq!(tree, gold);
    print!("{}", indented(&tree, &doc));

    let (doc, tables) = fixtures::adversarial_cycle();
    let (tree, trace) = decode(&doc, &tables)?;
    for d in &trace.decisions {
        println!("{} -> {} ({}, p={:.3}, skipped {})", d.child, d.parent, d.label, d.probability, d.cycle_skips);
    }
    print!("{}", indented(&tree, &doc));
    println!("cycle skip rate: {:.3}", cycle_skip_rate(&[oracle_trace, trace])?);
    Ok(())
}
