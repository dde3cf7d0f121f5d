use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context as _};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tdp_core::corpus::{load_documents, write_corpus};
use tdp_core::synthetic::template_corpus;
use tdp_core::{
    close, corpus_stats, cycle_skip_rate, decode, equivalence_aware_report, evaluate, load_corpus, trees_equivalent,
    validate_tree, CorpusRecord, DecodeTrace, Document, EvalReport, EquivalenceReport, LoadOptions, ScoreTable,
    TemporalDependencyTree, WindowConfig,
};
use tdp_neural::{grid_search, train_with, EncoderVariant, GridSpec, ModelConfig, RankerModel, TrainConfig};

use super::config::ConfigFile;
use super::manifest::Outcome;
use super::*;

pub(crate) struct Context {
    pub out_dir: PathBuf,
    pub lenient: bool,
}

impl Context {
    fn options(&self) -> LoadOptions {
        LoadOptions { lenient: self.lenient }
    }

    fn output(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

pub(crate) fn dispatch(ctx: &Context, command: &Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Stats(a) => stats(ctx, a),
        Command::Validate(a) => validate(ctx, a),
        Command::Train(a) => train(ctx, a),
        Command::Parse(a) => parse(ctx, a),
        Command::Eval(a) => eval(ctx, a),
        Command::Closure(a) => closure(ctx, a),
        Command::Compare(a) => compare(ctx, a),
        Command::Convert(a) => convert(a),
        Command::Synth(a) => synth(ctx, a),
    }
}

type Records = Vec<(Document, TemporalDependencyTree)>;

fn load(ctx: &Context, path: &Path) -> anyhow::Result<Records> {
    load_corpus(path, ctx.options()).with_context(|| format!("loading corpus {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn write_lines<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn window(args: &WindowArgs, base: WindowConfig) -> WindowConfig {
    WindowConfig::new(
        args.window_back.unwrap_or(base.back),
        args.window_forward.unwrap_or(base.forward),
    )
}

fn stats(ctx: &Context, a: &StatsArgs) -> anyhow::Result<Outcome> {
    let records = load(ctx, &a.corpus)?;
    let w = window(&a.window, WindowConfig::default());
    let stats = corpus_stats(&records, &w);
    let out = ctx.output("stats.json");
    write_json(&out, &stats)?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(Outcome {
        config: json!({ "window": w }),
        inputs: vec![a.corpus.clone()],
        outputs: vec![out],
        metrics: json!({
            "documents": stats.documents,
            "outside_window_fraction": stats.outside_window_fraction(),
        }),
        ..Default::default()
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records: usize,
    pub valid: usize,
    /// `(line, message)` of every rejected record.
    pub invalid: Vec<(usize, String)>,
}

fn validate(ctx: &Context, a: &ValidateArgs) -> anyhow::Result<Outcome> {
    let file = File::open(&a.corpus).with_context(|| format!("opening {}", a.corpus.display()))?;
    let lines: Vec<(usize, String)> = BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| Ok((i + 1, l?)))
        .collect::<std::io::Result<_>>()?;
    let checked: Vec<_> = lines
        .par_iter()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let result = serde_json::from_str::<CorpusRecord>(line)
                .map_err(|e| format!("malformed record: {e}"))
                .and_then(|r| r.into_parts().map_err(|e| e.to_string()));
            (*n, result.err())
        })
        .collect();
    let mut report = ValidationReport {
        records: checked.len(),
        ..Default::default()
    };
    for (line, err) in checked {
        match err {
            None => report.valid += 1,
            Some(e) => {
                eprintln!("line {line}: {e}");
                report.invalid.push((line, e));
            }
        }
    }
    let out = ctx.output("validation.json");
    write_json(&out, &report)?;
    println!("{} of {} records valid", report.valid, report.records);
    if !report.invalid.is_empty() && !ctx.lenient {
        bail!("{} invalid record(s) in {}", report.invalid.len(), a.corpus.display());
    }
    Ok(Outcome {
        inputs: vec![a.corpus.clone()],
        outputs: vec![out],
        metrics: json!({ "records": report.records, "invalid": report.invalid.len() }),
        ..Default::default()
    })
}

/// Model, training and grid settings after defaults, file and flags.
fn train_settings(a: &TrainArgs) -> anyhow::Result<(ModelConfig, TrainConfig, GridSpec)> {
    let file = match &a.config {
        Some(p) => ConfigFile::read(p)?,
        None => ConfigFile::default(),
    };
    let variant = match a.encoder {
        Some(v) => v,
        None => file.variant()?.unwrap_or(EncoderVariant::RandomInitRecurrent),
    };
    let mut model = file.model(variant)?;
    model.encoder.variant = variant;
    model.encoder.freeze_contextual = variant == EncoderVariant::FrozenContextualRecurrent;
    if variant.is_contextual() && model.encoder.contextual_model_name.is_none() {
        model.encoder.contextual_model_name = Some(tdp_neural::RANDOM_TINY.to_owned());
    }
    if let Some(c) = &a.checkpoint {
        model.encoder.contextual_model_name = Some(c.clone());
    }
    if let Some(p) = &a.static_embeddings {
        model.encoder.static_embeddings = Some(p.clone());
    }
    model.window = window(&a.window, model.window);

    let mut train = file.train()?;
    let mut grid = file.grid()?;
    if !a.lr.is_empty() {
        grid.learning_rates = a.lr.clone();
        train.learning_rate = a.lr[0];
    }
    if !a.epochs.is_empty() {
        grid.epochs = a.epochs.clone();
        train.epochs = a.epochs[0];
    }
    if !a.grid {
        ensure!(a.lr.len() <= 1 && a.epochs.len() <= 1, "repeated --lr/--epochs only make sense with --grid");
    }
    if let Some(r) = a.runs {
        train.runs = r;
    }
    if let Some(b) = a.batch_size {
        train.batch_size = b;
    }
    if let Some(s) = a.seed {
        train.seed = s;
        model.seed = s;
    }
    train.select_best_dev |= a.select_best_dev;
    train.validate()?;
    model.encoder.validate()?;
    Ok((model, train, grid))
}

fn train(ctx: &Context, a: &TrainArgs) -> anyhow::Result<Outcome> {
    let (mut model_cfg, mut train_cfg, grid) = train_settings(a)?;
    let train_set = load(ctx, &a.train)?;
    ensure!(!train_set.is_empty(), "training corpus {} is empty", a.train.display());
    let dev = match &a.dev {
        Some(p) => load(ctx, p)?,
        None => Vec::new(),
    };
    if (a.grid || train_cfg.select_best_dev) && dev.is_empty() {
        bail!("--grid and --select-best-dev need a non-empty --dev corpus");
    }
    let docs: Vec<&Document> = train_set.iter().chain(&dev).map(|(d, _)| d).collect();
    let mut inputs = vec![a.train.clone()];
    inputs.extend(a.dev.clone());
    inputs.extend(a.config.clone());
    let mut outputs = Vec::new();
    let mut metrics = serde_json::Map::new();

    if a.grid {
        let base_model = model_cfg.clone();
        let report = grid_search(
            |seed| {
                let mut cfg = base_model.clone();
                cfg.seed = seed;
                RankerModel::new(cfg, &docs)
            },
            &train_set,
            &dev,
            &grid,
            &train_cfg,
        )?;
        let table = report.to_table();
        print!("{table}");
        let txt = ctx.output("grid.txt");
        std::fs::write(&txt, &table)?;
        let js = ctx.output("grid.json");
        write_json(&js, &report)?;
        outputs.extend([txt, js]);
        let best = report.best_cell();
        train_cfg.learning_rate = best.learning_rate;
        train_cfg.epochs = best.epochs;
        model_cfg.seed = train_cfg.seed;
        metrics.insert("grid_best".into(), serde_json::to_value(best)?);
    }

    let model = RankerModel::new(model_cfg.clone(), &docs)?;
    let trace_path = ctx.output("train.trace.jsonl");
    let mut trace_file = BufWriter::new(File::create(&trace_path)?);
    let mut write_error = None;
    let outcome = train_with(model, &train_set, &dev, &train_cfg, |record| {
        log::info!("epoch {} loss {:.5} dev F1 {:?}", record.epoch, record.mean_loss, record.dev_f1);
        if write_error.is_none() {
            let written = serde_json::to_writer(&mut trace_file, record)
                .map_err(anyhow::Error::from)
                .and_then(|_| Ok(trace_file.write_all(b"\n")?));
            write_error = written.err();
        }
    })?;
    if let Some(e) = write_error {
        return Err(e.context(format!("writing {}", trace_path.display())));
    }
    trace_file.flush()?;
    let model_dir = ctx.output("model");
    outcome.model.save(&model_dir)?;
    outputs.extend([model_dir, trace_path]);

    let last = outcome.trace.last().expect("at least one epoch");
    metrics.insert("final_loss".into(), json!(last.mean_loss));
    metrics.insert("selected_epoch".into(), json!(outcome.selected_epoch));
    metrics.insert(
        "dev_f1".into(),
        json!(outcome.trace[outcome.selected_epoch - 1].dev_f1),
    );
    println!(
        "trained {} for {} epoch(s); final loss {:.5}",
        model_cfg.encoder.variant, train_cfg.epochs, last.mean_loss
    );
    Ok(Outcome {
        seed: Some(train_cfg.seed),
        config: json!({ "model": model_cfg, "train": train_cfg, "grid": a.grid.then_some(&grid) }),
        inputs,
        outputs,
        metrics: Value::Object(metrics),
    })
}

/// One line of a `--inject-scores` file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreFileRecord {
    pub doc_id: String,
    pub tables: Vec<ScoreTable>,
}

fn read_score_file(path: &Path) -> anyhow::Result<HashMap<String, Vec<ScoreTable>>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ScoreFileRecord =
            serde_json::from_str(&line).with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        out.insert(r.doc_id, r.tables);
    }
    Ok(out)
}

fn parse(ctx: &Context, a: &ParseArgs) -> anyhow::Result<Outcome> {
    let docs = load_documents(&a.corpus, ctx.options())
        .with_context(|| format!("loading documents {}", a.corpus.display()))?;
    let mut inputs = vec![a.corpus.clone()];
    let parsed: Vec<(TemporalDependencyTree, DecodeTrace)> = match (&a.checkpoint, &a.inject_scores) {
        (Some(dir), _) => {
            let model = RankerModel::load(dir)?;
            inputs.push(dir.clone());
            docs.par_iter().map(|d| model.parse(d)).collect::<Result<_, _>>()?
        }
        (None, Some(path)) => {
            let tables = read_score_file(path)?;
            inputs.push(path.clone());
            docs.par_iter()
                .map(|d| {
                    let t = tables
                        .get(d.doc_id())
                        .ok_or_else(|| anyhow!("no score tables for document `{}`", d.doc_id()))?;
                    Ok(decode(d, t)?)
                })
                .collect::<anyhow::Result<_>>()?
        }
        (None, None) => bail!("one of --checkpoint or --inject-scores is required"),
    };

    for ((tree, _), doc) in parsed.iter().zip(&docs) {
        let violations = validate_tree(tree, doc)?;
        ensure!(violations.is_empty(), "decoder produced an invalid tree for `{}`", doc.doc_id());
    }
    let (trees, traces): (Vec<_>, Vec<_>) = parsed.into_iter().unzip();
    let records: Records = docs.into_iter().zip(trees).collect();

    let trees_path = ctx.output("parsed.jsonl");
    let file = File::create(&trees_path).with_context(|| format!("writing {}", trees_path.display()))?;
    let mut w = BufWriter::new(file);
    write_corpus(&records, &mut w)?;
    w.flush()?;
    let traces_path = ctx.output("parse.traces.jsonl");
    write_lines(&traces_path, &traces)?;
    let mut outputs = vec![trees_path, traces_path];
    if let Some(format) = a.dump {
        let (name, comment, render): (_, _, fn(&TemporalDependencyTree, &Document) -> String) = match format {
            DumpFormat::Tree => ("parsed.txt", "#", crate::render::indented),
            DumpFormat::Dot => ("parsed.dot", "//", crate::render::dot),
        };
        let text: String = records
            .iter()
            .map(|(d, t)| format!("{comment} {}\n{}\n", d.doc_id(), render(t, d)))
            .collect();
        let path = ctx.output(name);
        std::fs::write(&path, text)?;
        outputs.push(path);
    }

    let rate = if traces.is_empty() { None } else { Some(cycle_skip_rate(&traces)?) };
    let skipped: usize = traces.iter().map(DecodeTrace::skipped_children).sum();
    println!("parsed {} document(s); cycle skip rate {:?}", records.len(), rate);
    Ok(Outcome {
        config: json!({ "source": if a.checkpoint.is_some() { "checkpoint" } else { "inject-scores" } }),
        inputs,
        outputs,
        metrics: json!({
            "documents": records.len(),
            "cycle_skip_rate": rate,
            "children_with_cycle_skips": skipped,
        }),
        ..Default::default()
    })
}

/// Plain-text summary of an evaluation.
pub fn eval_table(report: &EvalReport, equivalence: &EquivalenceReport) -> String {
    let mut s = String::new();
    let mut row = |name: &str, value: String| s.push_str(&format!("{name:<28}{value}\n"));
    row("labeled F1", format!("{:.4}", report.f1));
    row("unlabeled F1", format!("{:.4}", report.unlabeled_f1));
    row("labeled F1 (with DCT edge)", format!("{:.4}", report.f1_with_root_edge));
    row("accuracy", format!("{:.4}", report.accuracy));
    for (name, c) in [
        ("children of ROOT", report.children_of_root),
        ("children of DCT", report.children_of_dct),
        ("children of TIMEX", report.children_of_timex),
        ("children of EVENT", report.children_of_event),
    ] {
        let acc = c.accuracy().map_or("-".to_owned(), |a| format!("{a:.4}"));
        row(name, format!("{acc} ({}/{})", c.correct, c.total));
    }
    row("exactly correct docs", equivalence.exactly_correct.to_string());
    row("closure-equivalent docs", equivalence.closure_equivalent.to_string());
    row("different docs", equivalence.different.to_string());
    s
}

fn trees(records: Records) -> Vec<TemporalDependencyTree> {
    records.into_iter().map(|(_, t)| t).collect()
}

fn eval(ctx: &Context, a: &EvalArgs) -> anyhow::Result<Outcome> {
    let predicted = trees(load(ctx, &a.predicted)?);
    let gold = trees(load(ctx, &a.gold)?);
    let report = evaluate(&predicted, &gold)?;
    let equivalence = equivalence_aware_report(&predicted, &gold)?;
    let json_path = ctx.output("eval.json");
    write_json(&json_path, &json!({ "report": report, "equivalence": equivalence }))?;
    let table = eval_table(&report, &equivalence);
    print!("{table}");
    let txt_path = ctx.output("eval.txt");
    std::fs::write(&txt_path, &table)?;
    Ok(Outcome {
        inputs: vec![a.predicted.clone(), a.gold.clone()],
        outputs: vec![json_path, txt_path],
        metrics: json!({ "f1": report.f1, "accuracy": report.accuracy, "f1_with_root_edge": report.f1_with_root_edge }),
        ..Default::default()
    })
}

fn closure(ctx: &Context, a: &ClosureArgs) -> anyhow::Result<Outcome> {
    let records = load(ctx, &a.corpus)?;
    let lines: Vec<Value> = records
        .par_iter()
        .map(|(_, t)| json!({ "doc_id": t.doc_id, "relations": close(t) }))
        .collect();
    let out = ctx.output("closure.jsonl");
    write_lines(&out, &lines)?;
    println!("closed {} tree(s)", lines.len());
    Ok(Outcome {
        inputs: vec![a.corpus.clone()],
        outputs: vec![out],
        metrics: json!({ "documents": lines.len() }),
        ..Default::default()
    })
}

fn compare(ctx: &Context, a: &CompareArgs) -> anyhow::Result<Outcome> {
    let left = trees(load(ctx, &a.a)?);
    let right = trees(load(ctx, &a.b)?);
    let report = equivalence_aware_report(&left, &right)?;
    let by_id: HashMap<&str, &TemporalDependencyTree> = right.iter().map(|t| (t.doc_id.as_str(), t)).collect();
    let documents = left
        .iter()
        .map(|t| {
            let other = by_id[t.doc_id.as_str()];
            Ok(json!({ "doc_id": t.doc_id, "equivalence": trees_equivalent(t, other)? }))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let out = ctx.output("compare.json");
    write_json(&out, &json!({ "summary": report, "documents": documents }))?;
    println!(
        "{} identical, {} closure-equivalent, {} different",
        report.exactly_correct, report.closure_equivalent, report.different
    );
    Ok(Outcome {
        inputs: vec![a.a.clone(), a.b.clone()],
        outputs: vec![out],
        metrics: json!({
            "exactly_correct": report.exactly_correct,
            "closure_equivalent": report.closure_equivalent,
            "different": report.different,
        }),
        ..Default::default()
    })
}

fn convert(a: &ConvertArgs) -> anyhow::Result<Outcome> {
    bail!(
        "cannot convert {} from `{}`: no reader for that release format exists yet; \
         write records in the canonical JSON-lines format instead",
        a.input.display(),
        a.from
    )
}

fn synth(ctx: &Context, a: &SynthArgs) -> anyhow::Result<Outcome> {
    let records = template_corpus(a.docs, a.seed);
    let out = ctx.output("synthetic.jsonl");
    tdp_core::save_corpus(&records, &out)?;
    println!("wrote {} document(s) to {}", records.len(), out.display());
    Ok(Outcome {
        seed: Some(a.seed),
        config: json!({ "docs": a.docs }),
        outputs: vec![out],
        metrics: json!({ "documents": records.len() }),
        ..Default::default()
    })
}
