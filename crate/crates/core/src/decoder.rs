//! Greedy tree assembly.
//!
//! Mentions are attached one at a time in document order. Each child takes
//! its highest-probability row whose parent does not close a cycle with the
//! edges committed so far; earlier children are never revisited.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::document::{
    chain_reaches, deduced_root_edge, legal_labels, Document, Edge, MentionId, RelationLabel,
    TemporalDependencyTree, DCT_INDEX, ROOT_INDEX,
};
use crate::scores::ScoreTable;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChildDecision {
    pub child: MentionId,
    pub parent: MentionId,
    pub label: RelationLabel,
    pub probability: f64,
    /// Higher-ranked rows rejected because they would close a cycle.
    pub cycle_skips: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodeTrace {
    pub doc_id: String,
    pub decisions: Vec<ChildDecision>,
}

impl DecodeTrace {
    pub fn total_skips(&self) -> usize {
        self.decisions.iter().map(|d| d.cycle_skips).sum()
    }

    /// Children whose top-ranked row was skipped.
    pub fn skipped_children(&self) -> usize {
        self.decisions.iter().filter(|d| d.cycle_skips > 0).count()
    }

    /// Fraction of children whose top-ranked row was skipped; 0 when empty.
    pub fn cycle_skip_fraction(&self) -> f64 {
        if self.decisions.is_empty() {
            0.0
        } else {
            self.skipped_children() as f64 / self.decisions.len() as f64
        }
    }
}

/// Row order: probability descending, then nearer-earlier candidate
/// (ascending document order, so ROOT and DCT first), then label order.
fn rank(doc: &Document, a: &(usize, usize, f64), b: &(usize, usize, f64)) -> Ordering {
    b.2.total_cmp(&a.2)
        .then_with(|| doc.node(a.0).document_order.cmp(&doc.node(b.0).document_order))
        .then_with(|| a.1.cmp(&b.1))
}

/// Assembles a tree from one score table per mention, in document order.
pub fn decode(doc: &Document, tables: &[ScoreTable]) -> Result<(TemporalDependencyTree, DecodeTrace)> {
    let mentions = doc.mentions();
    if tables.len() != mentions.len() {
        return Err(Error::InvalidDocument {
            doc_id: doc.doc_id().to_owned(),
            reason: format!("{} score tables for {} mentions", tables.len(), mentions.len()),
        });
    }

    let mut parents: Vec<Option<usize>> = vec![None; doc.nodes().len()];
    parents[DCT_INDEX] = Some(ROOT_INDEX);
    let mut edges = Vec::with_capacity(mentions.len() + 1);
    edges.push(deduced_root_edge(doc));
    let mut trace = DecodeTrace {
        doc_id: doc.doc_id().to_owned(),
        decisions: Vec::with_capacity(mentions.len()),
    };

    for (mention, table) in mentions.iter().zip(tables) {
        if table.child != mention.id {
            return Err(Error::ScoreTable {
                child: table.child.clone(),
                reason: format!("expected the table of `{}` at this position", mention.id),
            });
        }
        let child = doc.require(&mention.id)?;
        let mut rows = Vec::with_capacity(table.rows.len());
        for row in &table.rows {
            let parent = doc.index_of(&row.parent).ok_or_else(|| Error::ScoreTable {
                child: mention.id.clone(),
                reason: format!("unknown parent `{}`", row.parent),
            })?;
            if parent == child || !legal_labels(mention.kind, doc.node(parent).kind).contains(&row.label) {
                return Err(Error::ScoreTable {
                    child: mention.id.clone(),
                    reason: format!("illegal row ({}, {})", row.parent, row.label),
                });
            }
            rows.push((parent, row.label.index(), row.probability));
        }
        rows.sort_by(|a, b| rank(doc, a, b));

        let mut skips = 0;
        let chosen = rows.iter().find(|&&(parent, _, _)| {
            let cyclic = chain_reaches(&parents, parent, child);
            skips += cyclic as usize;
            !cyclic
        });
        let &(parent, label, probability) = chosen.ok_or_else(|| Error::ScoreTable {
            child: mention.id.clone(),
            reason: "every row closes a cycle".to_owned(),
        })?;
        let label = RelationLabel::from_index(label).expect("label index from RelationLabel");

        parents[child] = Some(parent);
        let parent_id = doc.node(parent).id.clone();
        edges.push(Edge::new(mention.id.clone(), parent_id.clone(), label));
        trace.decisions.push(ChildDecision {
            child: mention.id.clone(),
            parent: parent_id,
            label,
            probability,
            cycle_skips: skips,
        });
    }

    Ok((TemporalDependencyTree::new(doc.doc_id(), edges), trace))
}

/// Corpus-level share of children whose first choice was rejected.
pub fn cycle_skip_rate(traces: &[DecodeTrace]) -> Result<f64> {
    let children: usize = traces.iter().map(|t| t.decisions.len()).sum();
    if children == 0 {
        return Err(Error::EmptyInput("cycle skip rate needs at least one decoded child"));
    }
    let skipped: usize = traces.iter().map(DecodeTrace::skipped_children).sum();
    Ok(skipped as f64 / children as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::WindowConfig;
    use crate::document::{validate_tree, Mention, TokenSpan};
    use crate::fixtures;

    #[test]
    fn oracle_scores_reproduce_example_one() {
        let (doc, gold) = fixtures::example_one();
        let (tree, trace) = decode(&doc, &fixtures::oracle_tables(&doc, &gold, &WindowConfig::default())).unwrap();
        assert_eq!(tree, gold);
        assert_eq!(trace.total_skips(), 0);
        assert!(validate_tree(&tree, &doc).unwrap().is_empty());
    }

    fn three_events() -> Document {
        let sentence: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        Document::new(
            "adv",
            "now",
            vec![sentence],
            vec![
                Mention::event("A", "a", 0, TokenSpan::new(0, 1)),
                Mention::event("B", "b", 0, TokenSpan::new(1, 2)),
                Mention::event("C", "c", 0, TokenSpan::new(2, 3)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn adversarial_cycle_is_skipped_once() {
        let (doc, tables) = fixtures::adversarial_cycle();
        let (tree, trace) = decode(&doc, &tables).unwrap();
        assert!(validate_tree(&tree, &doc).unwrap().is_empty());
        assert_eq!(trace.total_skips(), 1);
        assert_eq!(trace.decisions[2].cycle_skips, 1);
        assert_eq!(trace.decisions[2].parent, MentionId::dct());
        assert!((trace.cycle_skip_fraction() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_mention_takes_argmax() {
        let doc = Document::new(
            "one",
            "now",
            vec![vec!["x".into()]],
            vec![Mention::event("x", "x", 0, TokenSpan::new(0, 1))],
        )
        .unwrap();
        let table = ScoreTable::from_raw(
            "x".into(),
            RelationLabel::ALL[..3]
                .iter()
                .enumerate()
                .map(|(i, &l)| (MentionId::dct(), l, i as f64)),
        );
        let (tree, trace) = decode(&doc, &[table]).unwrap();
        assert_eq!(tree.edges.len(), 2);
        assert_eq!(tree.edges[1], Edge::new("x", "DCT", RelationLabel::Overlap));
        assert_eq!(trace.total_skips(), 0);
    }

    #[test]
    fn ties_prefer_earlier_candidates_then_label_order() {
        let doc = three_events();
        let tables: Vec<_> = ["A", "B", "C"]
            .iter()
            .map(|&c| {
                let rows = ["A", "B", "C"]
                    .iter()
                    .filter(|&&p| p != c)
                    .map(|&p| MentionId::new(p))
                    .chain([MentionId::dct()])
                    .flat_map(|p| RelationLabel::ALL[..3].iter().rev().map(move |&l| (p.clone(), l, 0.0)))
                    .collect::<Vec<_>>();
                ScoreTable::from_raw(c.into(), rows)
            })
            .collect();
        let (tree, _) = decode(&doc, &tables).unwrap();
        for edge in &tree.edges[1..] {
            assert_eq!(edge.parent, MentionId::dct());
            assert_eq!(edge.label, RelationLabel::Before);
        }
    }

    #[test]
    fn malformed_tables_are_rejected() {
        let doc = three_events();
        assert!(decode(&doc, &[]).is_err());
        let bad = |rows: Vec<(MentionId, RelationLabel, f64)>| {
            let mut tables: Vec<_> = ["A", "B", "C"]
                .iter()
                .map(|&c| ScoreTable::from_raw(c.into(), vec![(MentionId::dct(), RelationLabel::Before, 0.0)]))
                .collect();
            tables[1] = ScoreTable::from_raw("B".into(), rows);
            decode(&doc, &tables)
        };
        assert!(bad(vec![(MentionId::root(), RelationLabel::Before, 0.0)]).is_err());
        assert!(bad(vec![(MentionId::dct(), RelationLabel::DependsOn, 0.0)]).is_err());
        assert!(bad(vec![("B".into(), RelationLabel::Before, 0.0)]).is_err());
        assert!(bad(vec![("zz".into(), RelationLabel::Before, 0.0)]).is_err());
    }

    #[test]
    fn skip_rate_arithmetic() {
        let decision = |skips| ChildDecision {
            child: "c".into(),
            parent: MentionId::dct(),
            label: RelationLabel::Before,
            probability: 1.0,
            cycle_skips: skips,
        };
        let mut trace = DecodeTrace::default();
        trace.decisions = (0..25).map(|i| decision(usize::from(i == 7))).collect();
        assert!((cycle_skip_rate(&[trace.clone()]).unwrap() - 0.04).abs() < 1e-15);

        let clean = DecodeTrace {
            doc_id: "x".into(),
            decisions: vec![decision(0); 5],
        };
        assert_eq!(cycle_skip_rate(&[clean]).unwrap(), 0.0);
        assert!(matches!(cycle_skip_rate(&[]), Err(Error::EmptyInput(_))));
    }
}
