//! Documents, mentions and Temporal Dependency Trees.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Identifier reserved for the abstract root node.
pub const ROOT_ID: &str = "ROOT";
/// Identifier reserved for the document creation time node.
pub const DCT_ID: &str = "DCT";

/// Position of ROOT in [`Document::nodes`].
pub const ROOT_INDEX: usize = 0;
/// Position of DCT in [`Document::nodes`].
pub const DCT_INDEX: usize = 1;

/// Relation between a child and its parent in a temporal dependency tree.
///
/// The declaration order is also the tie-breaking order used by the decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationLabel {
    Before,
    After,
    Overlap,
    DependsOn,
}

impl RelationLabel {
    pub const ALL: [RelationLabel; 4] = [
        RelationLabel::Before,
        RelationLabel::After,
        RelationLabel::Overlap,
        RelationLabel::DependsOn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationLabel::Before => "before",
            RelationLabel::After => "after",
            RelationLabel::Overlap => "overlap",
            RelationLabel::DependsOn => "depends_on",
        }
    }

    /// Dense index in `0..4`, following [`RelationLabel::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|label| label.as_str() == s)
            .ok_or_else(|| format!("unknown relation label `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MentionKind {
    Event,
    Timex,
    Root,
    Dct,
}

impl MentionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MentionKind::Event => "EVENT",
            MentionKind::Timex => "TIMEX",
            MentionKind::Root => "ROOT",
            MentionKind::Dct => "DCT",
        }
    }

    /// EVENT and TIMEX mentions are the ones annotated in text.
    pub fn is_textual(self) -> bool {
        matches!(self, MentionKind::Event | MentionKind::Timex)
    }
}

impl fmt::Display for MentionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Labels allowed on an edge from a `child` node to a `parent` node.
///
/// TIMEX children (and DCT) hang off ROOT or another TIMEX with `depends_on`;
/// DCT itself may only attach to ROOT. Events take a temporal label towards
/// DCT, a TIMEX or another event. Every other combination is illegal.
pub fn legal_labels(child: MentionKind, parent: MentionKind) -> &'static [RelationLabel] {
    use MentionKind::*;
    const TEMPORAL: &[RelationLabel] = &[
        RelationLabel::Before,
        RelationLabel::After,
        RelationLabel::Overlap,
    ];
    const ANCHOR: &[RelationLabel] = &[RelationLabel::DependsOn];
    match (child, parent) {
        (Event, Dct | Timex | Event) => TEMPORAL,
        (Timex, Root | Timex) => ANCHOR,
        (Dct, Root) => ANCHOR,
        _ => &[],
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MentionId(String);

impl MentionId {
    pub fn new(id: impl Into<String>) -> Self {
        MentionId(id.into())
    }

    pub fn root() -> Self {
        MentionId(ROOT_ID.to_owned())
    }

    pub fn dct() -> Self {
        MentionId(DCT_ID.to_owned())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0 == ROOT_ID
    }

    pub fn is_dct(&self) -> bool {
        self.0 == DCT_ID
    }
}

impl fmt::Display for MentionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for MentionId {
    fn from(s: &str) -> Self {
        MentionId::new(s)
    }
}

/// Half-open token range `[start, end)` within a sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn new(start: usize, end: usize) -> Self {
        TokenSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl From<[usize; 2]> for TokenSpan {
    fn from([start, end]: [usize; 2]) -> Self {
        TokenSpan { start, end }
    }
}

impl From<TokenSpan> for [usize; 2] {
    fn from(span: TokenSpan) -> Self {
        [span.start, span.end]
    }
}

/// A node of a temporal dependency tree.
///
/// ROOT and DCT are synthetic: they carry no sentence position, and their
/// document order is −2 and −1 respectively.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mention {
    pub id: MentionId,
    pub kind: MentionKind,
    pub text: String,
    pub sentence_index: Option<usize>,
    pub token_span: Option<TokenSpan>,
    pub document_order: i64,
}

impl Mention {
    pub fn event(id: impl Into<String>, text: impl Into<String>, sentence: usize, span: TokenSpan) -> Self {
        Self::textual(MentionKind::Event, id, text, sentence, span)
    }

    pub fn timex(id: impl Into<String>, text: impl Into<String>, sentence: usize, span: TokenSpan) -> Self {
        Self::textual(MentionKind::Timex, id, text, sentence, span)
    }

    fn textual(
        kind: MentionKind,
        id: impl Into<String>,
        text: impl Into<String>,
        sentence: usize,
        span: TokenSpan,
    ) -> Self {
        Mention {
            id: MentionId::new(id),
            kind,
            text: text.into(),
            sentence_index: Some(sentence),
            token_span: Some(span),
            document_order: 0,
        }
    }

    fn root() -> Self {
        Mention {
            id: MentionId::root(),
            kind: MentionKind::Root,
            text: String::new(),
            sentence_index: None,
            token_span: None,
            document_order: -2,
        }
    }

    fn dct(text: &str) -> Self {
        Mention {
            id: MentionId::dct(),
            kind: MentionKind::Dct,
            text: text.to_owned(),
            sentence_index: None,
            token_span: None,
            document_order: -1,
        }
    }
}

/// A tokenized document with its annotated mentions.
///
/// `nodes()` holds ROOT at [`ROOT_INDEX`], DCT at [`DCT_INDEX`] and then the
/// EVENT/TIMEX mentions sorted by `(sentence_index, token_span.start)`, so a
/// node's index is always `document_order + 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    doc_id: String,
    dct_text: String,
    sentences: Vec<Vec<String>>,
    nodes: Vec<Mention>,
    index: HashMap<MentionId, usize>,
}

impl Document {
    /// Builds a document from EVENT/TIMEX mentions in annotation order.
    ///
    /// Mentions are re-sorted by position (ties keep annotation order) and
    /// receive their `document_order`.
    pub fn new(
        doc_id: impl Into<String>,
        dct_text: impl Into<String>,
        sentences: Vec<Vec<String>>,
        mentions: Vec<Mention>,
    ) -> Result<Self> {
        let doc_id = doc_id.into();
        let dct_text = dct_text.into();
        let invalid = |reason: String| Error::InvalidDocument {
            doc_id: doc_id.clone(),
            reason,
        };

        let mut seen = HashSet::new();
        for mention in &mentions {
            if !mention.kind.is_textual() {
                return Err(invalid(format!(
                    "mention `{}` has kind {}, only EVENT and TIMEX may be annotated",
                    mention.id, mention.kind
                )));
            }
            if mention.id.is_root() || mention.id.is_dct() {
                return Err(invalid(format!("mention id `{}` is reserved", mention.id)));
            }
            if !seen.insert(mention.id.clone()) {
                return Err(invalid(format!("duplicate mention id `{}`", mention.id)));
            }
            let (sentence, span) = match (mention.sentence_index, mention.token_span) {
                (Some(sentence), Some(span)) => (sentence, span),
                _ => {
                    return Err(invalid(format!(
                        "mention `{}` lacks a sentence position",
                        mention.id
                    )))
                }
            };
            let tokens = sentences.get(sentence).ok_or_else(|| {
                invalid(format!(
                    "mention `{}` points at sentence {sentence}, document has {}",
                    mention.id,
                    sentences.len()
                ))
            })?;
            if span.start >= span.end || span.end > tokens.len() {
                return Err(invalid(format!(
                    "mention `{}` has span [{}, {}) outside sentence {sentence} of length {}",
                    mention.id,
                    span.start,
                    span.end,
                    tokens.len()
                )));
            }
        }

        let mut mentions = mentions;
        // Stable sort: identical spans keep annotation order.
        mentions.sort_by_key(|m| (m.sentence_index, m.token_span.map(|s| s.start)));

        let mut nodes = Vec::with_capacity(mentions.len() + 2);
        nodes.push(Mention::root());
        nodes.push(Mention::dct(&dct_text));
        for (order, mut mention) in mentions.into_iter().enumerate() {
            mention.document_order = order as i64;
            nodes.push(mention);
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, m)| (m.id.clone(), i))
            .collect();

        Ok(Document {
            doc_id,
            dct_text,
            sentences,
            nodes,
            index,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn dct_text(&self) -> &str {
        &self.dct_text
    }

    pub fn sentences(&self) -> &[Vec<String>] {
        &self.sentences
    }

    /// ROOT, DCT, then the mentions in document order.
    pub fn nodes(&self) -> &[Mention] {
        &self.nodes
    }

    /// EVENT and TIMEX mentions in document order.
    pub fn mentions(&self) -> &[Mention] {
        &self.nodes[2..]
    }

    pub fn node(&self, index: usize) -> &Mention {
        &self.nodes[index]
    }

    pub fn index_of(&self, id: &MentionId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &MentionId) -> Option<&Mention> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    /// Like [`index_of`](Self::index_of) but unknown ids are an error.
    pub fn require(&self, id: &MentionId) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::UnknownMention {
            doc_id: self.doc_id.clone(),
            id: id.clone(),
        })
    }

    /// Tokens of the sentence containing `mention`; empty for ROOT and DCT.
    pub fn sentence_of(&self, mention: &Mention) -> &[String] {
        mention
            .sentence_index
            .and_then(|s| self.sentences.get(s))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Tokens covered by a textual mention; empty for ROOT and DCT.
    pub fn span_tokens(&self, mention: &Mention) -> &[String] {
        match mention.token_span {
            Some(span) => &self.sentence_of(mention)[span.start..span.end],
            None => &[],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub child: MentionId,
    pub parent: MentionId,
    pub label: RelationLabel,
}

impl Edge {
    pub fn new(child: impl Into<MentionId>, parent: impl Into<MentionId>, label: RelationLabel) -> Self {
        Edge {
            child: child.into(),
            parent: parent.into(),
            label,
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -[{}]-> {}", self.child, self.label, self.parent)
    }
}

/// A labeled tree over `{ROOT, DCT} ∪ mentions`.
///
/// The edge list may describe an invalid structure; [`validate_tree`] checks
/// it against a document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalDependencyTree {
    pub doc_id: String,
    pub edges: Vec<Edge>,
}

impl TemporalDependencyTree {
    pub fn new(doc_id: impl Into<String>, edges: Vec<Edge>) -> Self {
        TemporalDependencyTree {
            doc_id: doc_id.into(),
            edges,
        }
    }

    /// The first edge whose child is `child`.
    pub fn parent_edge(&self, child: &MentionId) -> Option<&Edge> {
        self.edges.iter().find(|e| &e.child == child)
    }

    /// Child → parent-edge lookup; later duplicates are ignored.
    pub fn parent_map(&self) -> HashMap<&MentionId, &Edge> {
        let mut map = HashMap::with_capacity(self.edges.len());
        for edge in &self.edges {
            map.entry(&edge.child).or_insert(edge);
        }
        map
    }
}

/// The fixed `DCT -[depends_on]-> ROOT` edge every tree starts with.
pub fn deduced_root_edge(_doc: &Document) -> Edge {
    Edge::new(MentionId::dct(), MentionId::root(), RelationLabel::DependsOn)
}

/// One violated tree invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    UnknownNode { edge: Edge, id: MentionId },
    SelfLoop { edge: Edge },
    RootHasParent { edge: Edge },
    MissingParent { child: MentionId },
    MultipleParents { child: MentionId, count: usize },
    IllegalEdge { edge: Edge, child_kind: MentionKind, parent_kind: MentionKind },
    Cycle { nodes: Vec<MentionId> },
    DisconnectedFromRoot { child: MentionId },
    EdgeCount { expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownNode { edge, id } => write!(f, "edge {edge} references unknown node {id}"),
            Violation::SelfLoop { edge } => write!(f, "edge {edge} is a self loop"),
            Violation::RootHasParent { edge } => write!(f, "ROOT has a parent edge {edge}"),
            Violation::MissingParent { child } => write!(f, "{child} has no parent"),
            Violation::MultipleParents { child, count } => write!(f, "{child} has {count} parents"),
            Violation::IllegalEdge {
                edge,
                child_kind,
                parent_kind,
            } => write!(
                f,
                "edge {edge} is illegal for a {child_kind} child and a {parent_kind} parent"
            ),
            Violation::Cycle { nodes } => {
                let names: Vec<_> = nodes.iter().map(MentionId::as_str).collect();
                write!(f, "cycle through {}", names.join(" -> "))
            }
            Violation::DisconnectedFromRoot { child } => write!(f, "{child} does not reach ROOT"),
            Violation::EdgeCount { expected, found } => {
                write!(f, "expected {expected} edges, found {found}")
            }
        }
    }
}

/// Checks every tree invariant of `tree` against `doc`.
///
/// Returns an empty list iff the tree is valid. The only error is a
/// `doc_id` mismatch.
pub fn validate_tree(tree: &TemporalDependencyTree, doc: &Document) -> Result<Vec<Violation>> {
    if tree.doc_id != doc.doc_id {
        return Err(Error::DocIdMismatch {
            tree: tree.doc_id.clone(),
            document: doc.doc_id.clone(),
        });
    }

    let n = doc.nodes.len();
    let mut violations = Vec::new();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];

    for edge in &tree.edges {
        let child = doc.index_of(&edge.child);
        let parent = doc.index_of(&edge.parent);
        let (child, parent) = match (child, parent) {
            (Some(c), Some(p)) => (c, p),
            (c, _) => {
                let id = if c.is_none() { &edge.child } else { &edge.parent };
                violations.push(Violation::UnknownNode {
                    edge: edge.clone(),
                    id: id.clone(),
                });
                continue;
            }
        };
        if child == ROOT_INDEX {
            violations.push(Violation::RootHasParent { edge: edge.clone() });
            continue;
        }
        if child == parent {
            violations.push(Violation::SelfLoop { edge: edge.clone() });
            continue;
        }
        let child_kind = doc.nodes[child].kind;
        let parent_kind = doc.nodes[parent].kind;
        if !legal_labels(child_kind, parent_kind).contains(&edge.label) {
            violations.push(Violation::IllegalEdge {
                edge: edge.clone(),
                child_kind,
                parent_kind,
            });
        }
        parents[child].push(parent);
    }

    for (i, ps) in parents.iter().enumerate().skip(1) {
        match ps.len() {
            0 => violations.push(Violation::MissingParent {
                child: doc.nodes[i].id.clone(),
            }),
            1 => {}
            count => violations.push(Violation::MultipleParents {
                child: doc.nodes[i].id.clone(),
                count,
            }),
        }
    }

    // Reachability of ROOT along first parents; 0 = unvisited, 1 = on the
    // current walk, 2 = settled.
    let first: Vec<Option<usize>> = parents.iter().map(|ps| ps.first().copied()).collect();
    let mut state = vec![0u8; n];
    let mut reaches_root = vec![false; n];
    state[ROOT_INDEX] = 2;
    reaches_root[ROOT_INDEX] = true;
    for start in 1..n {
        if state[start] == 2 {
            continue;
        }
        let mut path: Vec<usize> = Vec::new();
        let mut cur = start;
        let outcome = loop {
            if state[cur] == 2 {
                break reaches_root[cur];
            }
            if state[cur] == 1 {
                let pos = path.iter().position(|&p| p == cur).unwrap_or(0);
                let nodes = path[pos..].iter().map(|&i| doc.nodes[i].id.clone()).collect();
                violations.push(Violation::Cycle { nodes });
                break false;
            }
            state[cur] = 1;
            path.push(cur);
            match first[cur] {
                Some(p) => cur = p,
                None => break false,
            }
        };
        for &node in &path {
            state[node] = 2;
            reaches_root[node] = outcome;
        }
    }
    for i in 1..n {
        if !reaches_root[i] && first[i].is_some() && !on_cycle(&first, i) {
            violations.push(Violation::DisconnectedFromRoot {
                child: doc.nodes[i].id.clone(),
            });
        }
    }

    let expected = doc.mentions().len() + 1;
    if tree.edges.len() != expected {
        violations.push(Violation::EdgeCount {
            expected,
            found: tree.edges.len(),
        });
    }
    Ok(violations)
}

fn on_cycle(first: &[Option<usize>], node: usize) -> bool {
    let mut cur = first[node];
    for _ in 0..first.len() {
        match cur {
            Some(c) if c == node => return true,
            Some(c) => cur = first[c],
            None => return false,
        }
    }
    false
}

/// Whether attaching `child` under `parent` would close a cycle in a
/// partially built edge set, i.e. whether `parent`'s ancestors include
/// `child`. Unknown ids are unreachable and give `false`.
pub fn would_create_cycle(partial: &[Edge], child: &MentionId, parent: &MentionId) -> bool {
    let mut up: HashMap<&MentionId, &MentionId> = HashMap::with_capacity(partial.len());
    for edge in partial {
        up.entry(&edge.child).or_insert(&edge.parent);
    }
    let mut cur = parent;
    for _ in 0..=partial.len() {
        if cur == child {
            return true;
        }
        match up.get(cur) {
            Some(next) => cur = next,
            None => return false,
        }
    }
    false
}

/// Index-based variant used while decoding: does the parent chain starting
/// at `from` reach `target`?
pub(crate) fn chain_reaches(parents: &[Option<usize>], from: usize, target: usize) -> bool {
    let mut cur = Some(from);
    for _ in 0..=parents.len() {
        match cur {
            Some(c) if c == target => return true,
            Some(c) => cur = parents[c],
            None => return false,
        }
    }
    false
}
