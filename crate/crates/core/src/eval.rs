//! Edge-level scores of predicted trees against gold trees.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::document::{Edge, MentionId, RelationLabel, TemporalDependencyTree};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCounts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl EdgeCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.correct, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.correct, self.gold)
    }

    /// Harmonic mean of precision and recall. Two empty edge sets score 1.
    pub fn f1(&self) -> f64 {
        if self.predicted == 0 && self.gold == 0 {
            return 1.0;
        }
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn add(&mut self, other: EdgeCounts) {
        self.correct += other.correct;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub correct: usize,
    pub total: usize,
}

impl CategoryCounts {
    /// `None` when the category has no children.
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }

    fn add(&mut self, other: CategoryCounts) {
        self.correct += other.correct;
        self.total += other.total;
    }
}

/// Kind of a child's gold parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParentCategory {
    Root,
    Dct,
    Timex,
    Event,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Labeled scores over mention edges (DCT→ROOT excluded).
    pub labeled: EdgeCounts,
    /// Parent-only scores over mention edges.
    pub unlabeled: EdgeCounts,
    /// Labeled scores counting the DCT→ROOT edge as well.
    pub labeled_with_root_edge: EdgeCounts,
    pub f1: f64,
    pub unlabeled_f1: f64,
    pub f1_with_root_edge: f64,
    /// Correct labeled mention edges over gold mention edges.
    pub accuracy: f64,
    pub children_of_root: CategoryCounts,
    pub children_of_dct: CategoryCounts,
    pub children_of_timex: CategoryCounts,
    pub children_of_event: CategoryCounts,
}

impl EvalReport {
    fn from_counts(
        labeled: EdgeCounts,
        unlabeled: EdgeCounts,
        with_root: EdgeCounts,
        categories: &BTreeMap<ParentCategory, CategoryCounts>,
    ) -> Self {
        let cat = |c| categories.get(&c).copied().unwrap_or_default();
        EvalReport {
            labeled,
            unlabeled,
            labeled_with_root_edge: with_root,
            f1: labeled.f1(),
            unlabeled_f1: unlabeled.f1(),
            f1_with_root_edge: with_root.f1(),
            accuracy: if labeled.gold == 0 && labeled.predicted == 0 {
                1.0
            } else {
                ratio(labeled.correct, labeled.gold)
            },
            children_of_root: cat(ParentCategory::Root),
            children_of_dct: cat(ParentCategory::Dct),
            children_of_timex: cat(ParentCategory::Timex),
            children_of_event: cat(ParentCategory::Event),
        }
    }

    pub fn category(&self, category: ParentCategory) -> CategoryCounts {
        match category {
            ParentCategory::Root => self.children_of_root,
            ParentCategory::Dct => self.children_of_dct,
            ParentCategory::Timex => self.children_of_timex,
            ParentCategory::Event => self.children_of_event,
        }
    }

    /// Plain-text summary table.
    pub fn to_table(&self) -> String {
        let acc = |c: CategoryCounts| match c.accuracy() {
            Some(a) => format!("{a:.4} ({}/{})", c.correct, c.total),
            None => "n/a".to_owned(),
        };
        format!(
            "metric                 value\n\
             labeled F1             {:.4}\n\
             unlabeled F1           {:.4}\n\
             F1 with DCT->ROOT      {:.4}\n\
             accuracy               {:.4}\n\
             children of ROOT       {}\n\
             children of DCT        {}\n\
             children of TIMEX      {}\n\
             children of EVENT      {}\n",
            self.f1,
            self.unlabeled_f1,
            self.f1_with_root_edge,
            self.accuracy,
            acc(self.children_of_root),
            acc(self.children_of_dct),
            acc(self.children_of_timex),
            acc(self.children_of_event),
        )
    }
}

/// Category of every child's parent, read off a valid tree: a non-DCT
/// parent is a TIMEX iff its own edge is `depends_on`.
pub fn parent_categories(tree: &TemporalDependencyTree) -> HashMap<&MentionId, ParentCategory> {
    let parents = tree.parent_map();
    tree.edges
        .iter()
        .map(|edge| {
            let category = if edge.parent.is_root() {
                ParentCategory::Root
            } else if edge.parent.is_dct() {
                ParentCategory::Dct
            } else {
                match parents.get(&edge.parent) {
                    Some(e) if e.label == RelationLabel::DependsOn => ParentCategory::Timex,
                    _ => ParentCategory::Event,
                }
            };
            (&edge.child, category)
        })
        .collect()
}

pub(crate) fn pair_trees<'a>(
    predicted: &'a [TemporalDependencyTree],
    gold: &'a [TemporalDependencyTree],
) -> Result<Vec<(&'a TemporalDependencyTree, &'a TemporalDependencyTree)>> {
    let index = |trees: &'a [TemporalDependencyTree]| {
        let mut map = HashMap::with_capacity(trees.len());
        for t in trees {
            if map.insert(t.doc_id.as_str(), t).is_some() {
                return Err(Error::DuplicateDocument(t.doc_id.clone()));
            }
        }
        Ok(map)
    };
    let by_id = index(predicted)?;
    let gold_ids = index(gold)?;
    let only_right: Vec<String> = gold
        .iter()
        .filter(|t| !by_id.contains_key(t.doc_id.as_str()))
        .map(|t| t.doc_id.clone())
        .collect();
    let only_left: Vec<String> = predicted
        .iter()
        .filter(|t| !gold_ids.contains_key(t.doc_id.as_str()))
        .map(|t| t.doc_id.clone())
        .collect();
    if !only_left.is_empty() || !only_right.is_empty() {
        return Err(Error::DocumentSetMismatch { only_left, only_right });
    }
    Ok(gold.iter().map(|g| (by_id[g.doc_id.as_str()], g)).collect())
}

/// Scores predicted trees against gold trees, matched by `doc_id`.
///
/// Counts are micro-averaged over the corpus. Per-category accuracies
/// partition children by the category of their gold parent.
pub fn evaluate(predicted: &[TemporalDependencyTree], gold: &[TemporalDependencyTree]) -> Result<EvalReport> {
    let mut labeled = EdgeCounts::default();
    let mut unlabeled = EdgeCounts::default();
    let mut with_root = EdgeCounts::default();
    let mut categories: BTreeMap<ParentCategory, CategoryCounts> = BTreeMap::new();

    for (pred, gold) in pair_trees(predicted, gold)? {
        let doc = document_counts(pred, gold);
        labeled.add(doc.labeled);
        unlabeled.add(doc.unlabeled);
        with_root.add(doc.with_root);
        for (category, counts) in doc.categories {
            categories.entry(category).or_default().add(counts);
        }
    }
    Ok(EvalReport::from_counts(labeled, unlabeled, with_root, &categories))
}

/// Per-document counts, exposed for micro-average checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DocumentCounts {
    pub labeled: EdgeCounts,
    pub unlabeled: EdgeCounts,
    pub with_root: EdgeCounts,
    pub categories: BTreeMap<ParentCategory, CategoryCounts>,
}

pub fn document_counts(pred: &TemporalDependencyTree, gold: &TemporalDependencyTree) -> DocumentCounts {
    let is_root_edge = |e: &Edge| e.child.is_dct();
    let pred_parents = pred.parent_map();
    let gold_categories = parent_categories(gold);
    let mut out = DocumentCounts::default();

    for edge in &pred.edges {
        out.with_root.predicted += 1;
        if !is_root_edge(edge) {
            out.labeled.predicted += 1;
            out.unlabeled.predicted += 1;
        }
    }
    for edge in &gold.edges {
        out.with_root.gold += 1;
        let hit = pred_parents.get(&edge.child);
        let parent_ok = hit.is_some_and(|p| p.parent == edge.parent);
        let label_ok = parent_ok && hit.is_some_and(|p| p.label == edge.label);
        out.with_root.correct += label_ok as usize;
        if is_root_edge(edge) {
            continue;
        }
        out.labeled.gold += 1;
        out.unlabeled.gold += 1;
        out.labeled.correct += label_ok as usize;
        out.unlabeled.correct += parent_ok as usize;
        let category = gold_categories[&edge.child];
        let counts = out.categories.entry(category).or_default();
        counts.total += 1;
        counts.correct += label_ok as usize;
    }
    out
}

/// Per-category accuracy change from `a` to `b` (`b − a`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryDelta {
    pub children_of_root: Option<f64>,
    pub children_of_dct: Option<f64>,
    pub children_of_timex: Option<f64>,
    pub children_of_event: Option<f64>,
}

pub fn category_breakdown_delta(a: &EvalReport, b: &EvalReport) -> CategoryDelta {
    let diff = |c: ParentCategory| Some(b.category(c).accuracy()? - a.category(c).accuracy()?);
    CategoryDelta {
        children_of_root: diff(ParentCategory::Root),
        children_of_dct: diff(ParentCategory::Dct),
        children_of_timex: diff(ParentCategory::Timex),
        children_of_event: diff(ParentCategory::Event),
    }
}
