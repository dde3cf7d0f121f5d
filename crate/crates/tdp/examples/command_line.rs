//! Drive the command line in-process: synthesize, train, parse, evaluate.

use clap::Parser;
use tdp::cli::{run, Cli};

fn tdp(out: &std::path::Path, args: &str) -> anyhow::Result<()> {
    let mut argv: Vec<String> = vec!["tdp".into()];
    argv.extend(args.split_whitespace().map(str::to_owned));
    argv.extend(["--out-dir".into(), out.display().to_string()]);
    let manifest = run(Cli::try_parse_from(argv)?)?;
    println!("{} -> {}", manifest.command, manifest.metrics);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let out = dir.path();
    let corpus = out.join("synthetic.jsonl");
    let corpus = corpus.display();
    tdp(out, "synth --docs 10 --seed 3")?;
    tdp(out, &format!("stats {corpus}"))?;
    tdp(out, &format!("train --train {corpus} --dev {corpus} --epochs 5"))?;
    tdp(out, &format!("parse {corpus} --checkpoint {}", out.join("model").display()))?;
    tdp(out, &format!("eval --predicted {} --gold {corpus}", out.join("parsed.jsonl").display()))?;
    tdp(out, &format!("compare {} {corpus}", out.join("parsed.jsonl").display()))?;
    Ok(())
}
