use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdp_core::corpus::{read_corpus, write_corpus};
use tdp_core::synthetic::{random_document, random_score_tables, random_tree, template_corpus};
use tdp_core::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Reachability by repeated relaxation over the full edge set.
fn reaches(partial: &[Edge], from: &MentionId, to: &MentionId) -> bool {
    let mut reached = vec![from.clone()];
    loop {
        let before = reached.len();
        for e in partial {
            if reached.contains(&e.child) && !reached.contains(&e.parent) {
                reached.push(e.parent.clone());
            }
        }
        if reached.len() == before {
            return reached.contains(to);
        }
    }
}

fn ids(n: usize) -> Vec<MentionId> {
    (0..n).map(|i| MentionId::new(format!("n{i}"))).collect()
}

fn edges_from(parent_of: &[Option<usize>], nodes: &[MentionId]) -> Vec<Edge> {
    parent_of
        .iter()
        .enumerate()
        .filter_map(|(c, p)| p.map(|p| Edge::new(nodes[c].clone(), nodes[p].clone(), RelationLabel::Before)))
        .collect()
}

#[test]
fn cycle_query_matches_reachability_exhaustively() {
    for n in 1..=5usize {
        let nodes = ids(n);
        let total = (n + 1).pow(n as u32);
        for code in 0..total {
            // Parent function: digit n means "no parent". Cycles in the
            // partial set are allowed; the query must still terminate.
            let mut c = code;
            let parent_of: Vec<Option<usize>> = (0..n)
                .map(|_| {
                    let d = c % (n + 1);
                    c /= n + 1;
                    (d < n).then_some(d)
                })
                .collect();
            let partial = edges_from(&parent_of, &nodes);
            for child in 0..n {
                for parent in 0..n {
                    let expected = reaches(&partial, &nodes[parent], &nodes[child]);
                    assert_eq!(
                        would_create_cycle(&partial, &nodes[child], &nodes[parent]),
                        expected,
                        "{parent_of:?} child {child} parent {parent}"
                    );
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn cycle_query_matches_reachability(
        n in 6usize..=8,
        raw in proptest::collection::vec(0usize..9, 8),
        child in 0usize..8,
        parent in 0usize..8,
    ) {
        let nodes = ids(n);
        let parent_of: Vec<Option<usize>> = raw[..n].iter().map(|&d| (d < n).then_some(d)).collect();
        let (child, parent) = (child % n, parent % n);
        let partial = edges_from(&parent_of, &nodes);
        prop_assert_eq!(
            would_create_cycle(&partial, &nodes[child], &nodes[parent]),
            reaches(&partial, &nodes[parent], &nodes[child])
        );
    }

    #[test]
    fn invariant_breaking_corruptions_are_reported(seed in any::<u64>(), which in 0usize..7) {
        let mut r = rng(seed);
        let doc = random_document("m", 10, &mut r);
        let tree = random_tree(&doc, &mut r);
        prop_assert!(validate_tree(&tree, &doc).unwrap().is_empty());
        let Some(broken) = corrupt(&doc, &tree, which, &mut r) else {
            return Ok(());
        };
        prop_assert!(!validate_tree(&broken, &doc).unwrap().is_empty(), "{:?}", broken);
    }

    #[test]
    fn stats_are_additive(seed in any::<u64>(), split in 0usize..6) {
        let mut r = rng(seed);
        let records: Vec<_> = (0..6)
            .map(|i| {
                let doc = random_document(&format!("d{i}"), 15, &mut r);
                let tree = random_tree(&doc, &mut r);
                (doc, tree)
            })
            .collect();
        let window = WindowConfig::new(2, 1);
        let whole = corpus_stats(&records, &window);
        let parts = corpus_stats(&records[..split], &window) + corpus_stats(&records[split..], &window);
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn decoded_trees_are_valid(seed in any::<u64>(), back in 0usize..4, forward in 0usize..3) {
        let mut r = rng(seed);
        let doc = random_document("p", 15, &mut r);
        let tables = random_score_tables(&doc, &WindowConfig::new(back, forward), &mut r);
        let (tree, trace) = decode(&doc, &tables).unwrap();
        prop_assert!(validate_tree(&tree, &doc).unwrap().is_empty());
        prop_assert_eq!(trace.decisions.len(), doc.mentions().len());
    }

    #[test]
    fn tree_against_itself_scores_one(seed in any::<u64>()) {
        let mut r = rng(seed);
        let doc = random_document("s", 12, &mut r);
        let tree = random_tree(&doc, &mut r);
        let report = evaluate(std::slice::from_ref(&tree), std::slice::from_ref(&tree)).unwrap();
        prop_assert_eq!(report.f1, 1.0);
        prop_assert_eq!(report.f1_with_root_edge, 1.0);
        prop_assert!(trees_equivalent(&tree, &tree).unwrap().equivalent);
    }

    #[test]
    fn closure_equivalence_is_symmetric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let doc = random_document("q", 6, &mut r);
        let a = random_tree(&doc, &mut r);
        let b = random_tree(&doc, &mut r);
        let ab = trees_equivalent(&a, &b).unwrap();
        let ba = trees_equivalent(&b, &a).unwrap();
        prop_assert_eq!(ab.equivalent, ba.equivalent);
        if let Some(w) = ab.witness {
            prop_assert_eq!(close(&b).get(&w.first, &w.second), Some(w.in_b));
            prop_assert_ne!(w.in_a, w.in_b);
        }
    }

    #[test]
    fn closing_twice_changes_nothing(seed in any::<u64>()) {
        let mut r = rng(seed);
        let doc = random_document("c", 10, &mut r);
        let m = close(&random_tree(&doc, &mut r));
        prop_assert_eq!(close_relations(&m).unwrap(), m);
    }

    #[test]
    fn corpora_survive_a_round_trip(seed in any::<u64>(), docs in 0usize..5) {
        let mut r = rng(seed);
        let records: Vec<_> = (0..docs)
            .map(|i| {
                let doc = random_document(&format!("rt{i}"), 10, &mut r);
                let tree = random_tree(&doc, &mut r);
                (doc, tree)
            })
            .collect();
        let mut buf = Vec::new();
        write_corpus(&records, &mut buf).unwrap();
        let back = read_corpus(buf.as_slice(), LoadOptions::default()).unwrap();
        prop_assert_eq!(back, records);
    }
}

/// One invariant-breaking edit of a valid tree, or `None` when the document
/// is too small for the requested kind of corruption.
fn corrupt(
    doc: &Document,
    tree: &TemporalDependencyTree,
    which: usize,
    r: &mut impl Rng,
) -> Option<TemporalDependencyTree> {
    let mut out = tree.clone();
    let n = out.edges.len();
    let i = r.random_range(0..n);
    match which {
        0 => {
            out.edges.remove(i);
        }
        1 => {
            let dup = out.edges[i].clone();
            out.edges.push(dup);
        }
        2 => out.edges[i].parent = out.edges[i].child.clone(),
        3 => out.edges[i].parent = MentionId::new("nowhere"),
        4 => {
            // A label the child/parent kinds do not allow.
            let e = &out.edges[i];
            let legal = legal_labels(doc.get(&e.child)?.kind, doc.get(&e.parent)?.kind);
            out.edges[i].label = *RelationLabel::ALL.iter().find(|l| !legal.contains(l))?;
        }
        5 => {
            // An event moved under ROOT or a timex under DCT.
            let e = out.edges.iter_mut().find(|e| !e.child.is_dct())?;
            e.parent = match doc.get(&e.child)?.kind {
                MentionKind::Event => MentionId::root(),
                _ => MentionId::dct(),
            };
        }
        _ => {
            // Re-point a node at one of its own descendants.
            let node = tree.edges[i].child.clone();
            let parents = tree.parent_map();
            let descendant = tree.edges.iter().map(|e| &e.child).find(|&c| {
                let mut cur = c;
                while let Some(up) = parents.get(cur) {
                    if up.parent == node {
                        return true;
                    }
                    cur = &up.parent;
                }
                false
            })?;
            out.edges.iter_mut().find(|e| e.child == node)?.parent = descendant.clone();
        }
    }
    Some(out)
}

#[test]
fn template_corpus_statistics_add_up() {
    let records = template_corpus(20, 5);
    let stats = corpus_stats(&records, &WindowConfig::default());
    let edges: usize = records.iter().map(|(_, t)| t.edges.len()).sum();
    let labels = stats.labels;
    assert_eq!(labels.before + labels.after + labels.overlap + labels.depends_on, edges);
    assert_eq!(stats.mentions, stats.events + stats.timexes + stats.documents);
    assert_eq!(stats.mention_parents_outside_window, 0);
}

#[test]
fn documents_load_without_gold_edges() {
    let (doc, tree) = fixtures::example_one();
    let mut record = CorpusRecord::from_parts(&doc, &tree);
    record.gold_edges.truncate(2);
    let line = serde_json::to_string(&record).unwrap();
    assert!(read_corpus(line.as_bytes(), LoadOptions::default()).is_err());
    let docs = corpus::read_documents(line.as_bytes(), LoadOptions::default()).unwrap();
    assert_eq!(docs, vec![doc]);
}
