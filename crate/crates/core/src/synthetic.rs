//! Generated documents.
//!
//! [`template_corpus`] produces small newswire-like documents whose gold
//! trees follow from surface cues (tense auxiliaries, a leading date,
//! reported-speech gerunds), so a model that reads the words can fit them
//! exactly. The `random_*` helpers build arbitrary valid documents, trees
//! and score tables for property testing.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::candidates::{candidate_indices, WindowConfig};
use crate::document::{
    legal_labels, Document, Edge, Mention, RelationLabel, TemporalDependencyTree, TokenSpan,
    DCT_INDEX, ROOT_INDEX,
};
use crate::scores::ScoreTable;

const SUBJECTS: &[&str] = &["officials", "the minister", "rebels", "the company", "investors", "the council"];
const OBJECTS: &[&str] = &["the plan", "a treaty", "new rules", "the border", "the budget", "talks"];
const PRESENT: &[&str] = &["supports", "shares", "holds", "opposes", "controls", "needs"];
const PERFECT: &[&str] = &["ruled", "visited", "rejected", "approved", "funded", "blocked"];
const FUTURE: &[&str] = &["sign", "review", "extend", "publish", "reopen", "fund"];
const PAST: &[&str] = &["signed", "announced", "called", "reported", "launched", "approved"];
const DATES: &[&[&str]] = &[
    &["Monday"],
    &["March", "3"],
    &["last", "week"],
    &["June", "12", "1998"],
    &["Friday"],
];

struct Builder {
    sentences: Vec<Vec<String>>,
    mentions: Vec<Mention>,
    edges: Vec<Edge>,
    next_event: usize,
    next_timex: usize,
}

impl Builder {
    fn push_words(sentence: &mut Vec<String>, phrase: &str) -> usize {
        let start = sentence.len();
        sentence.extend(phrase.split_whitespace().map(str::to_owned));
        start
    }

    fn event(&mut self, sentence: &mut Vec<String>, word: &str) -> String {
        let id = format!("e{}", self.next_event);
        self.next_event += 1;
        let at = Self::push_words(sentence, word);
        self.mentions.push(Mention::event(
            id.as_str(),
            word,
            self.sentences.len(),
            TokenSpan::new(at, at + 1),
        ));
        id
    }

    fn timex(&mut self, sentence: &mut Vec<String>, words: &[&str]) -> String {
        let id = format!("t{}", self.next_timex);
        self.next_timex += 1;
        let at = sentence.len();
        sentence.extend(words.iter().map(|w| w.to_string()));
        self.mentions.push(Mention::timex(
            id.as_str(),
            words.join(" "),
            self.sentences.len(),
            TokenSpan::new(at, at + words.len()),
        ));
        id
    }

    fn edge(&mut self, child: &str, parent: &str, label: RelationLabel) {
        self.edges.push(Edge::new(child, parent, label));
    }
}

/// `n` template documents; identical seeds give identical corpora.
pub fn template_corpus(n: usize, seed: u64) -> Vec<(Document, TemporalDependencyTree)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| template_document(&format!("synth-{i:03}"), &mut rng)).collect()
}

fn template_document(doc_id: &str, rng: &mut impl Rng) -> (Document, TemporalDependencyTree) {
    use RelationLabel::*;
    let mut b = Builder {
        sentences: Vec::new(),
        mentions: Vec::new(),
        edges: vec![Edge::new("DCT", "ROOT", DependsOn)],
        next_event: 0,
        next_timex: 0,
    };
    let pick = |rng: &mut dyn rand::RngCore, words: &[&'static str]| *words.choose(rng).unwrap();

    let count = rng.random_range(3..=5);
    for _ in 0..count {
        let mut s = Vec::new();
        let subject = pick(rng, SUBJECTS);
        let object = pick(rng, OBJECTS);
        match rng.random_range(0..5) {
            0 => {
                Builder::push_words(&mut s, subject);
                let e = b.event(&mut s, pick(rng, PRESENT));
                Builder::push_words(&mut s, object);
                b.edge(&e, "DCT", Overlap);
            }
            1 => {
                Builder::push_words(&mut s, &format!("{subject} had"));
                let e = b.event(&mut s, pick(rng, PERFECT));
                Builder::push_words(&mut s, object);
                b.edge(&e, "DCT", Before);
            }
            2 => {
                Builder::push_words(&mut s, &format!("{subject} will"));
                let e = b.event(&mut s, pick(rng, FUTURE));
                Builder::push_words(&mut s, object);
                b.edge(&e, "DCT", After);
            }
            3 => {
                Builder::push_words(&mut s, "on");
                let t = b.timex(&mut s, DATES.choose(rng).unwrap());
                Builder::push_words(&mut s, &format!(", {subject}"));
                let e = b.event(&mut s, pick(rng, PAST));
                Builder::push_words(&mut s, object);
                b.edge(&t, "ROOT", DependsOn);
                b.edge(&e, &t, Overlap);
            }
            _ => {
                Builder::push_words(&mut s, subject);
                let main = b.event(&mut s, pick(rng, PAST));
                Builder::push_words(&mut s, &format!("{object} ,"));
                let saying = b.event(&mut s, "saying");
                Builder::push_words(&mut s, "they would");
                let future = b.event(&mut s, pick(rng, FUTURE));
                Builder::push_words(&mut s, pick(rng, OBJECTS));
                b.edge(&main, "DCT", Before);
                b.edge(&saying, &main, Overlap);
                b.edge(&future, &saying, After);
            }
        }
        s.push(".".to_owned());
        b.sentences.push(s);
    }

    let doc = Document::new(doc_id, "March 1, 1998", b.sentences, b.mentions).expect("template document");
    // Edge order follows document order for readability.
    let mut edges = b.edges;
    edges.sort_by_key(|e| doc.get(&e.child).map(|m| m.document_order).unwrap_or(-1));
    (doc, TemporalDependencyTree::new(doc_id, edges))
}

/// A document with up to `max_mentions` single-token mentions spread over a
/// few sentences; roughly a third are TIMEX.
pub fn random_document(doc_id: &str, max_mentions: usize, rng: &mut impl Rng) -> Document {
    let n = rng.random_range(0..=max_mentions);
    let mut sentences: Vec<Vec<String>> = Vec::new();
    let mut mentions = Vec::with_capacity(n);
    let mut remaining = n;
    while remaining > 0 || sentences.is_empty() {
        let here = rng.random_range(0..=remaining.min(6));
        let filler = rng.random_range(1..4);
        let mut sentence: Vec<String> = (0..filler).map(|i| format!("w{}", sentences.len() * 10 + i)).collect();
        for _ in 0..here {
            let idx = n - remaining;
            let word = format!("m{idx}");
            let at = sentence.len();
            sentence.push(word.clone());
            let span = TokenSpan::new(at, at + 1);
            let mention = if rng.random_bool(0.3) {
                Mention::timex(format!("t{idx}"), word, sentences.len(), span)
            } else {
                Mention::event(format!("e{idx}"), word, sentences.len(), span)
            };
            mentions.push(mention);
            if rng.random_bool(0.5) {
                sentence.push(format!("x{idx}"));
            }
            remaining -= 1;
        }
        sentence.push(".".to_owned());
        sentences.push(sentence);
    }
    Document::new(doc_id, "January 1, 2000", sentences, mentions).expect("random document")
}

/// A random valid tree: mentions are attached in random
/// order, each under a random already-attached node of a legal kind.
pub fn random_tree(doc: &Document, rng: &mut impl Rng) -> TemporalDependencyTree {
    let n = doc.nodes().len();
    let mut order: Vec<usize> = (2..n).collect();
    order.shuffle(rng);
    let mut attached = vec![ROOT_INDEX, DCT_INDEX];
    let mut parent_of: Vec<Option<(usize, RelationLabel)>> = vec![None; n];
    parent_of[DCT_INDEX] = Some((ROOT_INDEX, RelationLabel::DependsOn));
    for child in order {
        let kind = doc.node(child).kind;
        let options: Vec<usize> = attached
            .iter()
            .copied()
            .filter(|&p| !legal_labels(kind, doc.node(p).kind).is_empty())
            .collect();
        let parent = *options.choose(rng).expect("ROOT or DCT is always legal");
        let label = *legal_labels(kind, doc.node(parent).kind).choose(rng).unwrap();
        parent_of[child] = Some((parent, label));
        attached.push(child);
    }
    let edges = (1..n)
        .map(|i| {
            let (p, label) = parent_of[i].expect("every node attached");
            Edge::new(doc.node(i).id.clone(), doc.node(p).id.clone(), label)
        })
        .collect();
    TemporalDependencyTree::new(doc.doc_id(), edges)
}

/// Random score tables over the unaugmented candidate windows. Raw scores
/// are drawn from a small integer range so ties are common.
pub fn random_score_tables(doc: &Document, window: &WindowConfig, rng: &mut impl Rng) -> Vec<ScoreTable> {
    (2..doc.nodes().len())
        .map(|child| {
            let kind = doc.node(child).kind;
            let rows: Vec<_> = candidate_indices(doc, child, window)
                .into_iter()
                .flat_map(|p| {
                    legal_labels(kind, doc.node(p).kind)
                        .iter()
                        .map(move |&l| (doc.node(p).id.clone(), l))
                })
                .map(|(p, l)| (p, l, rng.random_range(-3..=3) as f64))
                .collect();
            ScoreTable::from_raw(doc.node(child).id.clone(), rows)
        })
        .collect()
}
