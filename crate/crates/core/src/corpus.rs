//! Line-delimited corpus records.
//!
//! One JSON object per line:
//!
//! ```json
//! {"doc_id": "...", "dct_text": "...", "sentences": [["tok", ...], ...],
//!  "mentions": [{"id": "e1", "kind": "EVENT", "sentence_index": 0,
//!                "token_span": [3, 4], "text": "signed"}, ...],
//!  "gold_edges": [{"child": "e1", "parent": "t1", "label": "overlap"}, ...]}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::{Add, AddAssign};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::candidates::WindowConfig;
use crate::document::{
    validate_tree, Document, Edge, Mention, MentionKind, RelationLabel, TemporalDependencyTree, TokenSpan,
};
use crate::eval::{parent_categories, ParentCategory};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub doc_id: String,
    pub dct_text: String,
    pub sentences: Vec<Vec<String>>,
    pub mentions: Vec<MentionRecord>,
    #[serde(default)]
    pub gold_edges: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MentionRecord {
    pub id: String,
    pub kind: MentionKind,
    pub sentence_index: usize,
    pub token_span: TokenSpan,
    pub text: String,
}

/// Letters and digits only; mention text and span tokens must agree on it.
fn surface_key<'a>(parts: impl IntoIterator<Item = &'a str>) -> String {
    parts
        .into_iter()
        .flat_map(str::chars)
        .filter(|c| c.is_alphanumeric())
        .collect()
}

impl CorpusRecord {
    pub fn from_parts(doc: &Document, tree: &TemporalDependencyTree) -> Self {
        let mentions = doc
            .mentions()
            .iter()
            .map(|m| MentionRecord {
                id: m.id.to_string(),
                kind: m.kind,
                sentence_index: m.sentence_index.unwrap_or_default(),
                token_span: m.token_span.unwrap_or(TokenSpan::new(0, 0)),
                text: m.text.clone(),
            })
            .collect();
        CorpusRecord {
            doc_id: doc.doc_id().to_owned(),
            dct_text: doc.dct_text().to_owned(),
            sentences: doc.sentences().to_vec(),
            mentions,
            gold_edges: tree.edges.clone(),
        }
    }

    /// Builds the document and gold tree, checking every record and tree
    /// invariant.
    pub fn into_parts(mut self) -> Result<(Document, TemporalDependencyTree)> {
        let edges = std::mem::take(&mut self.gold_edges);
        let doc = self.into_document()?;
        let tree = TemporalDependencyTree::new(doc.doc_id(), edges);
        let violations = validate_tree(&tree, &doc)?;
        if !violations.is_empty() {
            return Err(Error::InvalidTree {
                doc_id: tree.doc_id,
                violations,
            });
        }
        Ok((doc, tree))
    }

    /// Builds the document alone; gold edges are ignored.
    pub fn into_document(self) -> Result<Document> {
        let invalid = |reason: String| Error::InvalidDocument {
            doc_id: self.doc_id.clone(),
            reason,
        };
        let mut mentions = Vec::with_capacity(self.mentions.len());
        for m in &self.mentions {
            let mention = match m.kind {
                MentionKind::Event => Mention::event(&m.id, &m.text, m.sentence_index, m.token_span),
                MentionKind::Timex => Mention::timex(&m.id, &m.text, m.sentence_index, m.token_span),
                other => return Err(invalid(format!("mention `{}` has kind {other}", m.id))),
            };
            let covered = self
                .sentences
                .get(m.sentence_index)
                .and_then(|s| s.get(m.token_span.start..m.token_span.end));
            if let Some(tokens) = covered {
                if surface_key([m.text.as_str()]) != surface_key(tokens.iter().map(String::as_str)) {
                    return Err(invalid(format!(
                        "text of mention `{}` ({:?}) does not match its span tokens {:?}",
                        m.id, m.text, tokens
                    )));
                }
            }
            mentions.push(mention);
        }
        Document::new(self.doc_id, self.dct_text, self.sentences, mentions)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Skip bad records with a warning instead of failing.
    pub lenient: bool,
}

pub fn load_corpus(path: impl AsRef<Path>, options: LoadOptions) -> Result<Vec<(Document, TemporalDependencyTree)>> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    read_corpus(BufReader::new(file), options).map_err(|e| match e {
        Error::Io { source, .. } => io_err(source),
        other => other,
    })
}

/// Reads records from any line source; line numbers are 1-based.
pub fn read_corpus(reader: impl BufRead, options: LoadOptions) -> Result<Vec<(Document, TemporalDependencyTree)>> {
    read_records(reader, options, CorpusRecord::into_parts)
}

/// Like [`read_corpus`] but keeps only the documents, so records without
/// (or with partial) gold edges are accepted.
pub fn read_documents(reader: impl BufRead, options: LoadOptions) -> Result<Vec<Document>> {
    read_records(reader, options, CorpusRecord::into_document)
}

pub fn load_documents(path: impl AsRef<Path>, options: LoadOptions) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    read_documents(BufReader::new(file), options).map_err(|e| match e {
        Error::Io { source, .. } => io_err(source),
        other => other,
    })
}

fn read_records<T>(
    reader: impl BufRead,
    options: LoadOptions,
    build: impl Fn(CorpusRecord) -> Result<T>,
) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| Error::Io {
            path: Default::default(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<CorpusRecord>(&line)
            .map_err(|source| Error::Parse { line: line_no, source })
            .and_then(|record| {
                build(record).map_err(|e| Error::Record {
                    line: line_no,
                    source: Box::new(e),
                })
            });
        match parsed {
            Ok(item) => out.push(item),
            Err(e) if options.lenient => log::warn!("skipping record: {e}"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn write_corpus(records: &[(Document, TemporalDependencyTree)], mut writer: impl Write) -> Result<()> {
    for (doc, tree) in records {
        let violations = validate_tree(tree, doc)?;
        if !violations.is_empty() {
            return Err(Error::InvalidTree {
                doc_id: tree.doc_id.clone(),
                violations,
            });
        }
        let line = serde_json::to_string(&CorpusRecord::from_parts(doc, tree))
            .expect("corpus records always serialize");
        writeln!(writer, "{line}").map_err(|source| Error::Io {
            path: Default::default(),
            source,
        })?;
    }
    Ok(())
}

pub fn save_corpus(records: &[(Document, TemporalDependencyTree)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut writer = BufWriter::new(file);
    write_corpus(records, &mut writer).map_err(|e| match e {
        Error::Io { source, .. } => io_err(source),
        other => other,
    })?;
    writer.flush().map_err(io_err)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub before: usize,
    pub after: usize,
    pub overlap: usize,
    pub depends_on: usize,
}

impl LabelCounts {
    fn bump(&mut self, label: RelationLabel) {
        match label {
            RelationLabel::Before => self.before += 1,
            RelationLabel::After => self.after += 1,
            RelationLabel::Overlap => self.overlap += 1,
            RelationLabel::DependsOn => self.depends_on += 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentCategoryCounts {
    pub root: usize,
    pub dct: usize,
    pub timex: usize,
    pub event: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub sentences: usize,
    /// Nodes that take a parent: events, time expressions and DCT.
    pub mentions: usize,
    pub events: usize,
    pub timexes: usize,
    pub dct_nodes: usize,
    /// All gold edges, DCT→ROOT included.
    pub labels: LabelCounts,
    /// Gold parents of EVENT/TIMEX children by kind.
    pub parent_categories: ParentCategoryCounts,
    /// Gold parents of EVENT/TIMEX children that are mentions.
    pub mention_parents: usize,
    /// Of those, how many fall outside the candidate window.
    pub mention_parents_outside_window: usize,
}

impl CorpusStats {
    pub fn outside_window_fraction(&self) -> f64 {
        if self.mention_parents == 0 {
            0.0
        } else {
            self.mention_parents_outside_window as f64 / self.mention_parents as f64
        }
    }
}

impl AddAssign for CorpusStats {
    fn add_assign(&mut self, o: Self) {
        self.documents += o.documents;
        self.sentences += o.sentences;
        self.mentions += o.mentions;
        self.events += o.events;
        self.timexes += o.timexes;
        self.dct_nodes += o.dct_nodes;
        self.labels.before += o.labels.before;
        self.labels.after += o.labels.after;
        self.labels.overlap += o.labels.overlap;
        self.labels.depends_on += o.labels.depends_on;
        self.parent_categories.root += o.parent_categories.root;
        self.parent_categories.dct += o.parent_categories.dct;
        self.parent_categories.timex += o.parent_categories.timex;
        self.parent_categories.event += o.parent_categories.event;
        self.mention_parents += o.mention_parents;
        self.mention_parents_outside_window += o.mention_parents_outside_window;
    }
}

impl Add for CorpusStats {
    type Output = CorpusStats;

    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

impl std::iter::Sum for CorpusStats {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(CorpusStats::default(), Add::add)
    }
}

fn document_stats(doc: &Document, tree: &TemporalDependencyTree, window: &WindowConfig) -> CorpusStats {
    let mut stats = CorpusStats {
        documents: 1,
        sentences: doc.sentences().len(),
        dct_nodes: 1,
        ..Default::default()
    };
    for m in doc.mentions() {
        match m.kind {
            MentionKind::Event => stats.events += 1,
            MentionKind::Timex => stats.timexes += 1,
            _ => {}
        }
    }
    stats.mentions = stats.events + stats.timexes + stats.dct_nodes;

    let categories = parent_categories(tree);
    for edge in &tree.edges {
        stats.labels.bump(edge.label);
        if edge.child.is_dct() {
            continue;
        }
        match categories[&edge.child] {
            ParentCategory::Root => stats.parent_categories.root += 1,
            ParentCategory::Dct => stats.parent_categories.dct += 1,
            ParentCategory::Timex => stats.parent_categories.timex += 1,
            ParentCategory::Event => stats.parent_categories.event += 1,
        }
        if let (Some(child), Some(parent)) = (doc.get(&edge.child), doc.get(&edge.parent)) {
            if parent.kind.is_textual() {
                stats.mention_parents += 1;
                if !window.contains(child.document_order, parent.document_order) {
                    stats.mention_parents_outside_window += 1;
                }
            }
        }
    }
    stats
}

pub fn corpus_stats(records: &[(Document, TemporalDependencyTree)], window: &WindowConfig) -> CorpusStats {
    records
        .iter()
        .map(|(doc, tree)| document_stats(doc, tree, window))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn example_line() -> String {
        let (doc, tree) = fixtures::example_one();
        serde_json::to_string(&CorpusRecord::from_parts(&doc, &tree)).unwrap()
    }

    #[test]
    fn loads_example_one() {
        let records = read_corpus(example_line().as_bytes(), LoadOptions::default()).unwrap();
        assert_eq!(records.len(), 1);
        let (doc, tree) = &records[0];
        assert_eq!(doc.mentions().len() + 1, 8);
        assert_eq!(tree.edges.len(), 8);
        assert_eq!(records[0], fixtures::example_one());
    }

    #[test]
    fn empty_input() {
        assert!(read_corpus(&b""[..], LoadOptions::default()).unwrap().is_empty());
        assert!(read_corpus(&b"\n\n"[..], LoadOptions::default()).unwrap().is_empty());
        let mut buf = Vec::new();
        write_corpus(&[], &mut buf).unwrap();
        assert!(buf.is_empty());
    }

    #[test]
    fn mismatched_text_names_the_mention() {
        let line = example_line().replace("\"text\":\"ruled\"", "\"text\":\"governed\"");
        let err = read_corpus(line.as_bytes(), LoadOptions::default()).unwrap_err();
        let message = err.to_string();
        assert!(message.starts_with("line 1:"), "{message}");
        assert!(message.contains("`ruled`"), "{message}");
    }

    #[test]
    fn malformed_line_has_line_number() {
        let text = format!("{}\n{{not json\n", example_line());
        let err = read_corpus(text.as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let lenient = read_corpus(text.as_bytes(), LoadOptions { lenient: true }).unwrap();
        assert_eq!(lenient.len(), 1);
    }

    #[test]
    fn bad_label_and_bad_tree() {
        let line = example_line().replace("\"after\"", "\"later\"");
        assert!(matches!(
            read_corpus(line.as_bytes(), LoadOptions::default()),
            Err(Error::Parse { .. })
        ));
        let line = example_line().replace(
            "{\"child\":\"create\",\"parent\":\"saying\",\"label\":\"after\"}",
            "{\"child\":\"create\",\"parent\":\"ROOT\",\"label\":\"after\"}",
        );
        let err = read_corpus(line.as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("example-1"), "{err}");
    }

    #[test]
    fn example_one_stats() {
        let stats = corpus_stats(&[fixtures::example_one()], &WindowConfig::default());
        assert_eq!(stats.documents, 1);
        assert_eq!(stats.sentences, 3);
        assert_eq!(stats.mentions, 8);
        assert_eq!((stats.events, stats.timexes), (6, 1));
        assert_eq!(
            stats.labels,
            LabelCounts {
                before: 2,
                after: 1,
                overlap: 3,
                depends_on: 2
            }
        );
        assert_eq!(
            stats.parent_categories,
            ParentCategoryCounts {
                root: 1,
                dct: 3,
                timex: 1,
                event: 2
            }
        );
        assert_eq!(stats.outside_window_fraction(), 0.0);
        assert_eq!(corpus_stats(&[], &WindowConfig::default()), CorpusStats::default());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let records = vec![fixtures::example_one()];
        save_corpus(&records, &path).unwrap();
        assert_eq!(load_corpus(&path, LoadOptions::default()).unwrap(), records);
        let missing = load_corpus(dir.path().join("nope.jsonl"), LoadOptions::default()).unwrap_err();
        assert!(missing.to_string().contains("nope.jsonl"));
    }
}
