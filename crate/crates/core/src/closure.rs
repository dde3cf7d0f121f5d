//! Relations implied by a temporal dependency tree.
//!
//! Edge labels compose along tree paths: `overlap` is treated as transitive
//! and acts as the identity, `before∘before = before`, `before∘overlap =
//! before`, and symmetrically for `after`. Mixed directions stay unknown, so
//! the tree's underspecification is preserved. `depends_on` edges carry no
//! temporal constraint and ROOT takes no part in the relation matrix.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::document::{MentionId, RelationLabel, TemporalDependencyTree};
use crate::eval::pair_trees;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalRelation {
    Before,
    After,
    Overlap,
    Unknown,
}

impl TemporalRelation {
    pub fn inverse(self) -> Self {
        match self {
            TemporalRelation::Before => TemporalRelation::After,
            TemporalRelation::After => TemporalRelation::Before,
            other => other,
        }
    }

    /// `rel(a, c)` given `rel(a, b) = self` and `rel(b, c) = next`.
    pub fn compose(self, next: Self) -> Self {
        use TemporalRelation::*;
        match (self, next) {
            (Unknown, _) | (_, Unknown) => Unknown,
            (Overlap, r) | (r, Overlap) => r,
            (Before, Before) => Before,
            (After, After) => After,
            (Before, After) | (After, Before) => Unknown,
        }
    }

    pub fn from_label(label: RelationLabel) -> Option<Self> {
        match label {
            RelationLabel::Before => Some(TemporalRelation::Before),
            RelationLabel::After => Some(TemporalRelation::After),
            RelationLabel::Overlap => Some(TemporalRelation::Overlap),
            RelationLabel::DependsOn => None,
        }
    }

    pub fn is_known(self) -> bool {
        self != TemporalRelation::Unknown
    }
}

impl fmt::Display for TemporalRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TemporalRelation::Before => "before",
            TemporalRelation::After => "after",
            TemporalRelation::Overlap => "overlap",
            TemporalRelation::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

/// Pairwise relations over a fixed node list; `get(a, b)` reads "a is
/// `rel` b".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "MatrixRecord", try_from = "MatrixRecord")]
pub struct RelationMatrix {
    nodes: Vec<MentionId>,
    index: HashMap<MentionId, usize>,
    relations: Vec<TemporalRelation>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRecord {
    nodes: Vec<MentionId>,
    relations: Vec<Vec<TemporalRelation>>,
}

impl From<RelationMatrix> for MatrixRecord {
    fn from(m: RelationMatrix) -> Self {
        let n = m.nodes.len();
        let relations = (0..n).map(|i| m.relations[i * n..(i + 1) * n].to_vec()).collect();
        MatrixRecord {
            nodes: m.nodes,
            relations,
        }
    }
}

impl TryFrom<MatrixRecord> for RelationMatrix {
    type Error = String;

    fn try_from(r: MatrixRecord) -> std::result::Result<Self, String> {
        let n = r.nodes.len();
        if r.relations.len() != n || r.relations.iter().any(|row| row.len() != n) {
            return Err(format!("relation matrix must be {n}x{n}"));
        }
        let mut m = RelationMatrix::unknown(r.nodes);
        m.relations = r.relations.into_iter().flatten().collect();
        Ok(m)
    }
}

impl RelationMatrix {
    /// All pairs unknown except the diagonal, which overlaps.
    pub fn unknown(nodes: Vec<MentionId>) -> Self {
        let n = nodes.len();
        let index = nodes.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut relations = vec![TemporalRelation::Unknown; n * n];
        for i in 0..n {
            relations[i * n + i] = TemporalRelation::Overlap;
        }
        RelationMatrix {
            nodes,
            index,
            relations,
        }
    }

    pub fn nodes(&self) -> &[MentionId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, a: &MentionId, b: &MentionId) -> Option<TemporalRelation> {
        let (i, j) = (*self.index.get(a)?, *self.index.get(b)?);
        Some(self.at(i, j))
    }

    pub fn at(&self, i: usize, j: usize) -> TemporalRelation {
        self.relations[i * self.nodes.len() + j]
    }

    /// Sets `rel(i, j)` and its inverse `rel(j, i)`.
    pub fn set_at(&mut self, i: usize, j: usize, rel: TemporalRelation) {
        let n = self.nodes.len();
        self.relations[i * n + j] = rel;
        self.relations[j * n + i] = rel.inverse();
    }

    pub fn set(&mut self, a: &MentionId, b: &MentionId, rel: TemporalRelation) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => {
                self.set_at(i, j, rel);
                true
            }
            _ => false,
        }
    }

    pub fn known_pairs(&self) -> usize {
        self.relations.iter().filter(|r| r.is_known()).count()
    }
}

/// Node list of a tree's matrix: DCT first, then children in edge order.
fn matrix_nodes(tree: &TemporalDependencyTree) -> Vec<MentionId> {
    let mut nodes = vec![MentionId::dct()];
    nodes.extend(
        tree.edges
            .iter()
            .map(|e| e.child.clone())
            .filter(|c| !c.is_dct() && !c.is_root()),
    );
    nodes
}

/// Every relation deducible from a valid tree.
///
/// Paths in a tree are unique, so each pair's relation is the composition of
/// the labels along the path between them; a `depends_on` edge cuts the
/// path. Walks stop early once the composition becomes unknown.
pub fn close(tree: &TemporalDependencyTree) -> RelationMatrix {
    let nodes = matrix_nodes(tree);
    let mut matrix = RelationMatrix::unknown(nodes);
    let n = matrix.len();

    // Undirected adjacency over temporal edges: (neighbour, rel(self, neighbour)).
    let mut adjacency: Vec<Vec<(usize, TemporalRelation)>> = vec![Vec::new(); n];
    for edge in &tree.edges {
        let (Some(rel), Some(&c), Some(&p)) = (
            TemporalRelation::from_label(edge.label),
            matrix.index.get(&edge.child),
            matrix.index.get(&edge.parent),
        ) else {
            continue;
        };
        adjacency[c].push((p, rel));
        adjacency[p].push((c, rel.inverse()));
    }

    let mut stack = Vec::new();
    let mut seen = vec![usize::MAX; n];
    for source in 0..n {
        stack.clear();
        stack.push((source, TemporalRelation::Overlap));
        seen[source] = source;
        while let Some((node, rel)) = stack.pop() {
            for &(next, step) in &adjacency[node] {
                if seen[next] == source {
                    continue;
                }
                seen[next] = source;
                let composed = rel.compose(step);
                if composed.is_known() {
                    matrix.relations[source * n + next] = composed;
                    stack.push((next, composed));
                }
            }
        }
    }
    matrix
}

/// A derived relation contradicting one already present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inconsistency {
    pub first: MentionId,
    pub second: MentionId,
    pub existing: TemporalRelation,
    pub derived: TemporalRelation,
}

impl fmt::Display for Inconsistency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} is {} {} but {} was derived",
            self.first, self.existing, self.second, self.derived
        )
    }
}

impl std::error::Error for Inconsistency {}

/// Closes an arbitrary constraint matrix under composition.
///
/// Known relations are never overwritten; a derived relation that
/// disagrees with a known one is reported as an [`Inconsistency`].
pub fn close_relations(constraints: &RelationMatrix) -> std::result::Result<RelationMatrix, Inconsistency> {
    let mut m = constraints.clone();
    let n = m.len();
    let mut queue: VecDeque<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && m.at(i, j).is_known())
        .collect();

    while let Some((i, j)) = queue.pop_front() {
        let rel = m.at(i, j);
        for k in 0..n {
            // rel(k, j) from rel(k, i) ∘ rel(i, j); rel(i, k) from rel(i, j) ∘ rel(j, k).
            let left = m.at(k, i).compose(rel);
            derive(&mut m, &mut queue, k, j, left)?;
            let right = rel.compose(m.at(j, k));
            derive(&mut m, &mut queue, i, k, right)?;
        }
    }
    Ok(m)
}

fn derive(
    m: &mut RelationMatrix,
    queue: &mut VecDeque<(usize, usize)>,
    i: usize,
    j: usize,
    rel: TemporalRelation,
) -> std::result::Result<(), Inconsistency> {
    if !rel.is_known() || i == j {
        return Ok(());
    }
    match m.at(i, j) {
        TemporalRelation::Unknown => {
            m.set_at(i, j, rel);
            queue.push_back((i, j));
            queue.push_back((j, i));
            Ok(())
        }
        existing if existing != rel => Err(Inconsistency {
            first: m.nodes[i].clone(),
            second: m.nodes[j].clone(),
            existing,
            derived: rel,
        }),
        _ => Ok(()),
    }
}

/// Outcome of comparing two trees by their closures.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Equivalence {
    pub equivalent: bool,
    /// First pair whose relations differ, with `(pair, rel in a, rel in b)`.
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub first: MentionId,
    pub second: MentionId,
    pub in_a: TemporalRelation,
    pub in_b: TemporalRelation,
}

/// Whether two trees over the same nodes imply identical relations.
///
/// Pairs are inspected in a fixed order: first every edge of `a` as
/// (child, parent), then all remaining pairs row by row over `a`'s nodes.
pub fn trees_equivalent(a: &TemporalDependencyTree, b: &TemporalDependencyTree) -> Result<Equivalence> {
    let ca = close(a);
    let cb = close(b);
    let mut na: Vec<_> = ca.nodes().to_vec();
    let mut nb: Vec<_> = cb.nodes().to_vec();
    na.sort();
    nb.sort();
    if na != nb {
        return Err(Error::NodeSetMismatch {
            doc_id: a.doc_id.clone(),
        });
    }

    let differs = |x: &MentionId, y: &MentionId| {
        let (ra, rb) = (ca.get(x, y)?, cb.get(x, y)?);
        (ra != rb).then(|| Witness {
            first: x.clone(),
            second: y.clone(),
            in_a: ra,
            in_b: rb,
        })
    };
    let edge_pairs = a
        .edges
        .iter()
        .filter(|e| !e.parent.is_root())
        .map(|e| (&e.child, &e.parent));
    let all_pairs = ca
        .nodes()
        .iter()
        .flat_map(|x| ca.nodes().iter().map(move |y| (x, y)));
    let witness = edge_pairs.chain(all_pairs).find_map(|(x, y)| differs(x, y));
    Ok(Equivalence {
        equivalent: witness.is_none(),
        witness,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentVerdict {
    ExactlyCorrect,
    ClosureEquivalent,
    Different,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub documents: Vec<(String, DocumentVerdict)>,
    pub exactly_correct: usize,
    pub closure_equivalent: usize,
    pub different: usize,
}

/// Classifies each predicted tree as identical to gold, equivalent under
/// closure, or different.
pub fn equivalence_aware_report(
    predicted: &[TemporalDependencyTree],
    gold: &[TemporalDependencyTree],
) -> Result<EquivalenceReport> {
    let mut report = EquivalenceReport::default();
    for (pred, gold) in pair_trees(predicted, gold)? {
        let mut pe = pred.edges.clone();
        let mut ge = gold.edges.clone();
        let key = |e: &crate::Edge| (e.child.clone(), e.parent.clone(), e.label);
        pe.sort_by_key(key);
        ge.sort_by_key(key);
        let verdict = if pe == ge {
            DocumentVerdict::ExactlyCorrect
        } else if trees_equivalent(pred, gold)?.equivalent {
            DocumentVerdict::ClosureEquivalent
        } else {
            DocumentVerdict::Different
        };
        match verdict {
            DocumentVerdict::ExactlyCorrect => report.exactly_correct += 1,
            DocumentVerdict::ClosureEquivalent => report.closure_equivalent += 1,
            DocumentVerdict::Different => report.different += 1,
        }
        report.documents.push((gold.doc_id.clone(), verdict));
    }
    Ok(report)
}
