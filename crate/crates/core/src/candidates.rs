//! Windowed parent candidates.
//!
//! A child may attach to ROOT, DCT, or any mention at most `back` positions
//! before it or `forward` positions after it in the mention sequence.
//! Candidates that admit no legal label for the child's kind are dropped, so
//! EVENT children never see ROOT and TIMEX children only see ROOT and other
//! TIMEX mentions.

use serde::{Deserialize, Serialize};

use crate::document::{
    legal_labels, Document, MentionId, RelationLabel, TemporalDependencyTree, DCT_INDEX,
    ROOT_INDEX,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Preceding mentions considered.
    pub back: usize,
    /// Following mentions considered.
    pub forward: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { back: 10, forward: 3 }
    }
}

impl WindowConfig {
    pub fn new(back: usize, forward: usize) -> Self {
        WindowConfig { back, forward }
    }

    /// Whether `parent_order` is inside the window of `child_order`.
    /// ROOT and DCT (negative orders) are never "in the window".
    pub fn contains(&self, child_order: i64, parent_order: i64) -> bool {
        parent_order >= 0
            && parent_order != child_order
            && parent_order >= child_order - self.back as i64
            && parent_order <= child_order + self.forward as i64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub child: MentionId,
    /// ROOT, DCT, then window mentions in document order (after filtering).
    pub candidates: Vec<MentionId>,
}

/// Node indices (into [`Document::nodes`]) of the candidates for the child
/// at node index `child`.
pub(crate) fn candidate_indices(doc: &Document, child: usize, cfg: &WindowConfig) -> Vec<usize> {
    let child_kind = doc.node(child).kind;
    let admits = |parent: usize| !legal_labels(child_kind, doc.node(parent).kind).is_empty();

    let mut out = Vec::with_capacity(cfg.back + cfg.forward + 2);
    out.extend([ROOT_INDEX, DCT_INDEX].into_iter().filter(|&p| admits(p)));
    let lo = child.saturating_sub(cfg.back).max(2);
    let hi = (child + cfg.forward).min(doc.nodes().len() - 1);
    out.extend((lo..=hi).filter(|&p| p != child && admits(p)));
    out
}

pub fn generate_candidates(doc: &Document, child: &MentionId, cfg: &WindowConfig) -> Result<CandidateSet> {
    let index = doc.require(child)?;
    if !doc.node(index).kind.is_textual() {
        return Err(Error::NotAMention(child.clone()));
    }
    let candidates = candidate_indices(doc, index, cfg)
        .into_iter()
        .map(|i| doc.node(i).id.clone())
        .collect();
    Ok(CandidateSet {
        child: child.clone(),
        candidates,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub candidates: CandidateSet,
    pub gold_parent: MentionId,
    pub gold_label: RelationLabel,
    /// The gold parent lies outside the window and was appended to the
    /// candidates.
    pub gold_out_of_window: bool,
}

/// One instance per EVENT/TIMEX mention, in document order.
///
/// Gold parents missing from the window are appended so that every
/// instance carries a training signal; such instances are flagged.
pub fn build_training_instances(
    doc: &Document,
    gold: &TemporalDependencyTree,
    cfg: &WindowConfig,
) -> Result<Vec<TrainingInstance>> {
    if gold.doc_id != doc.doc_id() {
        return Err(Error::DocIdMismatch {
            tree: gold.doc_id.clone(),
            document: doc.doc_id().to_owned(),
        });
    }
    let parents = gold.parent_map();
    doc.mentions()
        .iter()
        .map(|mention| {
            let mut candidates = generate_candidates(doc, &mention.id, cfg)?;
            let edge = parents.get(&mention.id).ok_or_else(|| Error::InvalidTree {
                doc_id: doc.doc_id().to_owned(),
                violations: vec![crate::Violation::MissingParent {
                    child: mention.id.clone(),
                }],
            })?;
            let out_of_window = !candidates.candidates.contains(&edge.parent);
            if out_of_window {
                candidates.candidates.push(edge.parent.clone());
            }
            Ok(TrainingInstance {
                candidates,
                gold_parent: edge.parent.clone(),
                gold_label: edge.label,
                gold_out_of_window: out_of_window,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::{Edge, Mention, TokenSpan};
    use crate::fixtures;

    fn ids(set: &CandidateSet) -> Vec<&str> {
        set.candidates.iter().map(MentionId::as_str).collect()
    }

    #[test]
    fn example_one_called() {
        let (doc, _) = fixtures::example_one();
        assert_eq!(doc.get(&"called".into()).unwrap().document_order, 4);
        let set = generate_candidates(&doc, &"called".into(), &WindowConfig::default()).unwrap();
        assert_eq!(ids(&set), ["DCT", "signed", "feb27", "share", "ruled", "saying", "create"]);
    }

    #[test]
    fn example_one_timex_keeps_root_only() {
        let (doc, _) = fixtures::example_one();
        let set = generate_candidates(&doc, &"feb27".into(), &WindowConfig::default()).unwrap();
        assert_eq!(ids(&set), ["ROOT"]);
    }

    #[test]
    fn first_mention_with_empty_window() {
        let (doc, _) = fixtures::example_one();
        let cfg = WindowConfig::new(10, 0);
        let set = generate_candidates(&doc, &"signed".into(), &cfg).unwrap();
        assert_eq!(ids(&set), ["DCT"]);
    }

    #[test]
    fn window_truncation() {
        let (doc, _) = fixtures::example_one();
        let set = generate_candidates(&doc, &"ruled".into(), &WindowConfig::new(1, 1)).unwrap();
        assert_eq!(ids(&set), ["DCT", "share", "called"]);
    }

    #[test]
    fn synthetic_nodes_are_not_children() {
        let (doc, _) = fixtures::example_one();
        let cfg = WindowConfig::default();
        assert!(matches!(
            generate_candidates(&doc, &MentionId::dct(), &cfg),
            Err(Error::NotAMention(_))
        ));
        assert!(generate_candidates(&doc, &"nope".into(), &cfg).is_err());
    }

    #[test]
    fn example_one_instances() {
        let (doc, tree) = fixtures::example_one();
        let instances = build_training_instances(&doc, &tree, &WindowConfig::default()).unwrap();
        assert_eq!(instances.len(), 7);
        let share = &instances[2];
        assert_eq!(share.candidates.child.as_str(), "share");
        assert_eq!(share.gold_parent, MentionId::dct());
        assert_eq!(share.gold_label, RelationLabel::Overlap);
        assert!(instances.iter().all(|i| !i.gold_out_of_window));
    }

    #[test]
    fn empty_document_has_no_instances() {
        let doc = Document::new("e", "now", vec![], vec![]).unwrap();
        let tree = TemporalDependencyTree::new("e", vec![Edge::new("DCT", "ROOT", RelationLabel::DependsOn)]);
        assert!(build_training_instances(&doc, &tree, &WindowConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn far_gold_parent_is_appended() {
        // 17 events in one sentence; the last one points 15 mentions back.
        let n = 17;
        let sentence: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let mentions = (0..n)
            .map(|i| Mention::event(format!("e{i}"), format!("w{i}"), 0, TokenSpan::new(i, i + 1)))
            .collect();
        let doc = Document::new("far", "now", vec![sentence], mentions).unwrap();
        let mut edges = vec![Edge::new("DCT", "ROOT", RelationLabel::DependsOn)];
        edges.extend((0..n).map(|i| {
            let parent = if i == n - 1 { "e1".to_owned() } else { "DCT".to_owned() };
            Edge::new(format!("e{i}").as_str(), parent.as_str(), RelationLabel::Before)
        }));
        let tree = TemporalDependencyTree::new("far", edges);
        assert!(crate::validate_tree(&tree, &doc).unwrap().is_empty());

        let instances = build_training_instances(&doc, &tree, &WindowConfig::default()).unwrap();
        let last = instances.last().unwrap();
        assert!(last.gold_out_of_window);
        assert_eq!(last.candidates.candidates.last().unwrap().as_str(), "e1");
        assert_eq!(instances.iter().filter(|i| i.gold_out_of_window).count(), 1);
    }
}
