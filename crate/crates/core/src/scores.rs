//! Per-child score tables.

use serde::{Deserialize, Serialize};

use crate::document::{MentionId, RelationLabel};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub parent: MentionId,
    pub label: RelationLabel,
    pub raw_score: f64,
    pub probability: f64,
}

/// Scores of every legal (candidate, label) pair of one child, normalized
/// by a single softmax across all rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub child: MentionId,
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    /// Builds a table from raw scores, filling in softmax probabilities.
    pub fn from_raw(child: MentionId, raw: impl IntoIterator<Item = (MentionId, RelationLabel, f64)>) -> Self {
        let mut rows: Vec<ScoreRow> = raw
            .into_iter()
            .map(|(parent, label, raw_score)| ScoreRow {
                parent,
                label,
                raw_score,
                probability: 0.0,
            })
            .collect();
        let probs = softmax(rows.iter().map(|r| r.raw_score));
        for (row, p) in rows.iter_mut().zip(probs) {
            row.probability = p;
        }
        ScoreTable { child, rows }
    }

    pub fn row(&self, parent: &MentionId, label: RelationLabel) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| &r.parent == parent && r.label == label)
    }

    /// Highest-probability row; ties go to the earlier row.
    pub fn argmax(&self) -> Option<&ScoreRow> {
        self.rows
            .iter()
            .reduce(|best, row| if row.probability > best.probability { row } else { best })
    }

    pub fn probability_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).sum()
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let scores: Vec<f64> = scores.into_iter().collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Negative log probability of the gold row.
pub fn ranking_loss(table: &ScoreTable, gold_parent: &MentionId, gold_label: RelationLabel) -> Result<f64> {
    let gold = table.row(gold_parent, gold_label).ok_or_else(|| Error::MissingGoldRow {
        child: table.child.clone(),
        parent: gold_parent.clone(),
        label: gold_label,
    })?;
    // log-sum-exp over raw scores keeps precision for tiny probabilities.
    let max = table.rows.iter().map(|r| r.raw_score).fold(f64::NEG_INFINITY, f64::max);
    let lse = max + table.rows.iter().map(|r| (r.raw_score - max).exp()).sum::<f64>().ln();
    Ok((lse - gold.raw_score).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(raw: &[f64]) -> ScoreTable {
        ScoreTable::from_raw(
            "c".into(),
            raw.iter()
                .enumerate()
                .map(|(i, &s)| (MentionId::new(format!("p{i}")), RelationLabel::Before, s)),
        )
    }

    #[test]
    fn uniform_loss_is_ln_rows() {
        let t = table(&[0.0; 4]);
        for row in &t.rows {
            assert!((row.probability - 0.25).abs() < 1e-15);
        }
        let loss = ranking_loss(&t, &"p2".into(), RelationLabel::Before).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        assert!((loss - 1.386).abs() < 1e-3);
    }

    #[test]
    fn certain_gold_has_zero_loss() {
        let t = table(&[0.0, -1e4, -1e4]);
        assert_eq!(t.rows[0].probability, 1.0);
        assert_eq!(ranking_loss(&t, &"p0".into(), RelationLabel::Before).unwrap(), 0.0);
    }

    #[test]
    fn missing_gold_row() {
        let t = table(&[0.0]);
        assert!(matches!(
            ranking_loss(&t, &"p0".into(), RelationLabel::After),
            Err(Error::MissingGoldRow { .. })
        ));
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(raw in prop::collection::vec(-50.0f64..50.0, 1..40)) {
            let t = table(&raw);
            prop_assert!((t.probability_sum() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn shift_keeps_argmax_and_loss(raw in prop::collection::vec(-20.0f64..20.0, 1..20), shift in -100.0f64..100.0) {
            let a = table(&raw);
            let shifted: Vec<f64> = raw.iter().map(|s| s + shift).collect();
            let b = table(&shifted);
            prop_assert_eq!(&a.argmax().unwrap().parent, &b.argmax().unwrap().parent);
            let la = ranking_loss(&a, &"p0".into(), RelationLabel::Before).unwrap();
            let lb = ranking_loss(&b, &"p0".into(), RelationLabel::Before).unwrap();
            prop_assert!((la - lb).abs() < 1e-9);
        }

        #[test]
        fn loss_decreases_with_gold_probability(raw in prop::collection::vec(-5.0f64..5.0, 2..10), bump in 0.01f64..3.0) {
            let a = table(&raw);
            let mut raised = raw.clone();
            raised[0] += bump;
            let b = table(&raised);
            let la = ranking_loss(&a, &"p0".into(), RelationLabel::Before).unwrap();
            let lb = ranking_loss(&b, &"p0".into(), RelationLabel::Before).unwrap();
            prop_assert!(la >= 0.0 && lb >= 0.0);
            prop_assert!(b.rows[0].probability > a.rows[0].probability);
            prop_assert!(lb < la);
        }
    }
}
