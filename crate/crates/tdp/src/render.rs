//! Human-readable views of a tree.

use std::collections::BTreeMap;
use std::fmt::Write;

use tdp_core::{Document, MentionId, TemporalDependencyTree};

fn caption(doc: &Document, id: &MentionId) -> String {
    match doc.get(id) {
        Some(m) if m.kind.is_textual() => format!("{} \"{}\" [{}]", id, m.text, m.kind),
        _ => id.to_string(),
    }
}

/// One line per node, children indented under their parent in document
/// order, each prefixed with the label of its edge.
///
/// ```text
/// ROOT
///   depends_on DCT
///     overlap share "share" [EVENT]
/// ```
pub fn indented(tree: &TemporalDependencyTree, doc: &Document) -> String {
    let mut children: BTreeMap<&MentionId, Vec<_>> = BTreeMap::new();
    for e in &tree.edges {
        children.entry(&e.parent).or_default().push(e);
    }
    for list in children.values_mut() {
        list.sort_by_key(|e| doc.index_of(&e.child));
    }
    let mut out = String::new();
    let root = MentionId::root();
    writeln!(out, "{}", root).unwrap();
    let mut stack: Vec<_> = children.get(&root).map(|c| c.iter().rev().map(|e| (*e, 1)).collect()).unwrap_or_default();
    while let Some((edge, depth)) = stack.pop() {
        writeln!(out, "{}{} {}", "  ".repeat(depth), edge.label, caption(doc, &edge.child)).unwrap();
        if let Some(c) = children.get(&edge.child) {
            stack.extend(c.iter().rev().map(|e| (*e, depth + 1)));
        }
    }
    out
}

/// Graphviz digraph with child → parent edges.
pub fn dot(tree: &TemporalDependencyTree, doc: &Document) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {:?} {{", tree.doc_id).unwrap();
    writeln!(out, "  rankdir=BT;").unwrap();
    for node in doc.nodes() {
        writeln!(out, "  {:?} [label={:?}];", node.id.as_str(), caption(doc, &node.id)).unwrap();
    }
    for e in &tree.edges {
        writeln!(out, "  {:?} -> {:?} [label={:?}];", e.child.as_str(), e.parent.as_str(), e.label.as_str()).unwrap();
    }
    out.push_str("}\n");
    out
}
