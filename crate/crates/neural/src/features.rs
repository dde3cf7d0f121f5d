//! Hand-built pair features appended to every encoder output.

use serde::{Deserialize, Serialize};
use tdp_core::{Document, MentionId, MentionKind, WindowConfig};

use crate::Result;

/// Binary features of a (parent, child) pair.
///
/// Layout, for a window of `back` mentions before and `forward` after:
///
/// | slots | meaning |
/// |---|---|
/// | `back` | parent `-back ..= -1` mentions away |
/// | `forward` | parent `+1 ..= +forward` mentions away |
/// | 1 | out of range, or parent is ROOT/DCT |
/// | 1 | same sentence |
/// | 8 | child kind (EVENT, TIMEX) × parent kind (ROOT, DCT, TIMEX, EVENT) |
/// | 1 | parent is DCT |
/// | 1 | parent is ROOT |
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinguisticFeatureVector {
    pub values: Vec<f64>,
}

impl LinguisticFeatureVector {
    pub fn dim(window: &WindowConfig) -> usize {
        window.back + window.forward + 12
    }

    /// Slot of the distance bucket for `parent_order - child_order`.
    pub fn distance_slot(window: &WindowConfig, distance: Option<i64>) -> usize {
        let (back, forward) = (window.back as i64, window.forward as i64);
        match distance {
            Some(d) if (-back..0).contains(&d) => (back + d) as usize,
            Some(d) if (1..=forward).contains(&d) => (back + d - 1) as usize,
            _ => window.back + window.forward,
        }
    }

    pub fn same_sentence_slot(window: &WindowConfig) -> usize {
        window.back + window.forward + 1
    }

    pub fn kind_slot(window: &WindowConfig, child: MentionKind, parent: MentionKind) -> usize {
        let c = match child {
            MentionKind::Timex => 1,
            _ => 0,
        };
        let p = match parent {
            MentionKind::Root => 0,
            MentionKind::Dct => 1,
            MentionKind::Timex => 2,
            MentionKind::Event => 3,
        };
        window.back + window.forward + 2 + c * 4 + p
    }

    pub fn dct_slot(window: &WindowConfig) -> usize {
        window.back + window.forward + 10
    }

    pub fn root_slot(window: &WindowConfig) -> usize {
        window.back + window.forward + 11
    }

    pub fn is_set(&self, slot: usize) -> bool {
        self.values[slot] == 1.0
    }
}

pub fn extract_features(
    doc: &Document,
    parent: &MentionId,
    child: &MentionId,
    window: &WindowConfig,
) -> Result<LinguisticFeatureVector> {
    Ok(features_by_index(doc, doc.require(parent)?, doc.require(child)?, window))
}

pub(crate) fn features_by_index(doc: &Document, p: usize, c: usize, window: &WindowConfig) -> LinguisticFeatureVector {
    type F = LinguisticFeatureVector;
    let (parent, child) = (doc.node(p), doc.node(c));
    let mut values = vec![0.0; F::dim(window)];
    let distance = parent
        .kind
        .is_textual()
        .then(|| parent.document_order - child.document_order);
    values[F::distance_slot(window, distance)] = 1.0;
    if parent.kind.is_textual() && parent.sentence_index == child.sentence_index {
        values[F::same_sentence_slot(window)] = 1.0;
    }
    values[F::kind_slot(window, child.kind, parent.kind)] = 1.0;
    match parent.kind {
        MentionKind::Dct => values[F::dct_slot(window)] = 1.0,
        MentionKind::Root => values[F::root_slot(window)] = 1.0,
        _ => {}
    }
    LinguisticFeatureVector { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tdp_core::fixtures::example_one;

    type F = LinguisticFeatureVector;

    #[test]
    fn dct_parent() {
        let (doc, _) = example_one();
        let w = WindowConfig::default();
        let f = extract_features(&doc, &MentionId::dct(), &"share".into(), &w).unwrap();
        assert_eq!(f.values.len(), 25);
        assert!(f.is_set(F::dct_slot(&w)));
        assert!(f.is_set(F::distance_slot(&w, None)));
        assert!(!f.is_set(F::same_sentence_slot(&w)));
        assert_eq!(f.values.iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn two_back_same_sentence() {
        let (doc, _) = example_one();
        let w = WindowConfig::default();
        let f = extract_features(&doc, &"called".into(), &"create".into(), &w).unwrap();
        assert_eq!(F::distance_slot(&w, Some(-2)), 8);
        assert!(f.is_set(8));
        assert!(f.is_set(F::same_sentence_slot(&w)));
        assert!(f.is_set(F::kind_slot(&w, MentionKind::Event, MentionKind::Event)));
    }

    #[test]
    fn root_parent() {
        let (doc, _) = example_one();
        let w = WindowConfig::default();
        let f = extract_features(&doc, &MentionId::root(), &"feb27".into(), &w).unwrap();
        assert!(f.is_set(F::root_slot(&w)));
        let buckets = &f.values[..=w.back + w.forward];
        assert_eq!(buckets.iter().sum::<f64>(), 1.0);
        assert!(f.is_set(w.back + w.forward));
    }

    #[test]
    fn forward_and_far_buckets() {
        let w = WindowConfig::default();
        assert_eq!(F::distance_slot(&w, Some(-10)), 0);
        assert_eq!(F::distance_slot(&w, Some(-1)), 9);
        assert_eq!(F::distance_slot(&w, Some(1)), 10);
        assert_eq!(F::distance_slot(&w, Some(3)), 12);
        assert_eq!(F::distance_slot(&w, Some(4)), 13);
        assert_eq!(F::distance_slot(&w, Some(-11)), 13);
        assert_eq!(F::distance_slot(&w, Some(0)), 13);
    }
}
