//! Write a corpus, read it back, print statistics and catch a broken record.

use tdp::corpus::{load_corpus, read_corpus, save_corpus};
use tdp::synthetic::template_corpus;
use tdp::{corpus_stats, fixtures, CorpusRecord, LoadOptions, WindowConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("corpus.jsonl");
    let mut records = template_corpus(4, 0);
    records.push(fixtures::example_one());
    save_corpus(&records, &path)?;

    let back = load_corpus(&path, LoadOptions::default())?;
    assert_eq!(back, records);
    let stats = corpus_stats(&back, &WindowConfig::default());
    println!("{}", serde_json::to_string_pretty(&stats)?);

    // A tree whose `create` points at itself.
    let (doc, tree) = fixtures::example_one();
    let mut record = CorpusRecord::from_parts(&doc, &tree);
    record.gold_edges.last_mut().unwrap().parent = "create".into();
    let line = serde_json::to_string(&record)?;
    match read_corpus(line.as_bytes(), LoadOptions::default()) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    let lenient = read_corpus(line.as_bytes(), LoadOptions { lenient: true })?;
    println!("lenient load kept {} record(s)", lenient.len());
    Ok(())
}
