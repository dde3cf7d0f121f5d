//! Hand-annotated reference documents.

use crate::candidates::{generate_candidates, WindowConfig};
use crate::document::{
    legal_labels, Document, Edge, Mention, MentionId, RelationLabel, TemporalDependencyTree, TokenSpan,
};
use crate::scores::ScoreTable;

fn tokens(sentence: &str) -> Vec<String> {
    sentence.split_whitespace().map(str::to_owned).collect()
}

/// The Kuchma/Yeltsin newswire snippet and its gold tree.
///
/// Mention ids are the event words plus `feb27` for the time expression.
/// Document order: signed, feb27, share, ruled, called, saying, create.
pub fn example_one() -> (Document, TemporalDependencyTree) {
    let sentences = vec![
        tokens("Kuchma and Yeltsin signed a cooperation plan on February 27 1998 ."),
        tokens("Russia and Ukraine share similar cultures , and Ukraine was ruled from Moscow for centuries ."),
        tokens("Yeltsin and Kuchma called for the ratification of the treaty , saying it would create a \" strong legal foundation \" ."),
    ];
    let mentions = vec![
        Mention::event("signed", "signed", 0, TokenSpan::new(3, 4)),
        Mention::timex("feb27", "February 27, 1998", 0, TokenSpan::new(8, 11)),
        Mention::event("share", "share", 1, TokenSpan::new(3, 4)),
        Mention::event("ruled", "ruled", 1, TokenSpan::new(10, 11)),
        Mention::event("called", "called", 2, TokenSpan::new(3, 4)),
        Mention::event("saying", "saying", 2, TokenSpan::new(11, 12)),
        Mention::event("create", "create", 2, TokenSpan::new(14, 15)),
    ];
    let doc = Document::new("example-1", "March 1, 1998", sentences, mentions)
        .expect("fixture document is well formed");

    use RelationLabel::*;
    let tree = TemporalDependencyTree::new(
        "example-1",
        vec![
            Edge::new("DCT", "ROOT", DependsOn),
            Edge::new("signed", "feb27", Overlap),
            Edge::new("feb27", "ROOT", DependsOn),
            Edge::new("share", "DCT", Overlap),
            Edge::new("ruled", "DCT", Before),
            Edge::new("called", "DCT", Before),
            Edge::new("saying", "called", Overlap),
            Edge::new("create", "saying", After),
        ],
    );
    (doc, tree)
}

/// Score tables that give the gold row of every mention probability one
/// (raw score 0 against −1000 for every other legal row).
pub fn oracle_tables(doc: &Document, gold: &TemporalDependencyTree, window: &WindowConfig) -> Vec<ScoreTable> {
    let parents = gold.parent_map();
    doc.mentions()
        .iter()
        .map(|m| {
            let mut set = generate_candidates(doc, &m.id, window).expect("mention of this document");
            let gold = parents.get(&m.id).copied();
            if let Some(g) = gold {
                if !set.candidates.contains(&g.parent) {
                    set.candidates.push(g.parent.clone());
                }
            }
            let rows = set.candidates.iter().flat_map(|p| {
                let kind = doc.get(p).expect("candidate of this document").kind;
                legal_labels(m.kind, kind).iter().map(move |&l| {
                    let hit = gold.is_some_and(|g| p == &g.parent && l == g.label);
                    (p.clone(), l, if hit { 0.0 } else { -1e3 })
                })
            });
            ScoreTable::from_raw(m.id.clone(), rows.collect::<Vec<_>>())
        })
        .collect()
}

/// Three events whose top-ranked parents form the cycle A→B→C→A.
///
/// Greedy decoding attaches A and B as ranked and must skip C's top row.
pub fn adversarial_cycle() -> (Document, Vec<ScoreTable>) {
    let sentence: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let doc = Document::new(
        "adversarial",
        "now",
        vec![sentence],
        vec![
            Mention::event("A", "a", 0, TokenSpan::new(0, 1)),
            Mention::event("B", "b", 0, TokenSpan::new(1, 2)),
            Mention::event("C", "c", 0, TokenSpan::new(2, 3)),
        ],
    )
    .expect("fixture document is well formed");
    let table = |child: &str, top: &str, other: &str| {
        ScoreTable::from_raw(
            child.into(),
            vec![
                (MentionId::dct(), RelationLabel::Before, 1.0),
                (top.into(), RelationLabel::Overlap, 3.0),
                (other.into(), RelationLabel::After, 0.0),
            ],
        )
    };
    let tables = vec![table("A", "B", "C"), table("B", "C", "A"), table("C", "A", "B")];
    (doc, tables)
}
