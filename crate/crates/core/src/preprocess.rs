//! Training-data preprocessing: restricting an MR to what its reference
//! actually expresses.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::constraint::{check_tree_unterminated, ConstraintTracker, NodeId};
use crate::mr::{AnnotatedNode, AnnotatedTree, MrNode, MrTree};
use crate::ontology::{NodeKind, JOIN};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FilterError {
    #[error("annotated reference cannot be aligned with the MR")]
    NoValidAlignment,
}

/// Alignments are enumerated up to this many per subtree.
const MAX_ALIGNMENTS: usize = 256;

struct Aligner<'a> {
    tracker: &'a ConstraintTracker,
    join: Vec<bool>,
}

impl Aligner<'_> {
    /// Realized-node sets for aligning `spans` (in output order) with
    /// distinct children of `parent`.
    fn align_children(&self, spans: &[&AnnotatedNode], parent: NodeId) -> Vec<BTreeSet<NodeId>> {
        let candidates: Vec<NodeId> =
            if parent == usize::MAX { vec![0] } else { self.tracker.children(parent).to_vec() };
        let ordered = parent != usize::MAX && self.join[parent];
        let mut out = Vec::new();
        self.extend(spans, &candidates, ordered, 0, BTreeSet::new(), &mut out);
        out
    }

    fn extend(
        &self,
        spans: &[&AnnotatedNode],
        candidates: &[NodeId],
        ordered: bool,
        min_pos: usize,
        acc: BTreeSet<NodeId>,
        out: &mut Vec<BTreeSet<NodeId>>,
    ) {
        if out.len() >= MAX_ALIGNMENTS {
            return;
        }
        let Some((first, rest)) = spans.split_first() else {
            out.push(acc);
            return;
        };
        for (pos, &cand) in candidates.iter().enumerate() {
            if (ordered && pos < min_pos) || acc.contains(&cand) || self.tracker.label(cand) != first.label {
                continue;
            }
            let inner: Vec<&AnnotatedNode> = first.child_nodes().collect();
            for sub in self.align_children(&inner, cand) {
                let mut next = acc.clone();
                next.insert(cand);
                next.extend(sub);
                self.extend(rest, candidates, ordered, pos + 1, next, out);
            }
        }
    }
}

/// `(label, value)` of every leaf argument, with multiplicity.
type LeafBag = BTreeMap<(String, String), usize>;

fn annotated_leaves(n: &AnnotatedNode, bag: &mut LeafBag) {
    if n.kind == NodeKind::Argument && n.child_nodes().next().is_none() {
        *bag.entry((n.label.clone(), n.own_words().join(" "))).or_insert(0) += 1;
    }
    for c in n.child_nodes() {
        annotated_leaves(c, bag);
    }
}

/// How many realized leaves carry a value the reference spells out.
fn value_agreement(realized: &BTreeSet<NodeId>, leaves: &[Option<(String, String)>], reference: &LeafBag) -> usize {
    let mut ours = LeafBag::new();
    for &id in realized {
        if let Some(leaf) = &leaves[id] {
            *ours.entry(leaf.clone()).or_insert(0) += 1;
        }
    }
    ours.iter().map(|(k, &n)| n.min(reference.get(k).copied().unwrap_or(0))).sum()
}

/// Removes every MR node the reference does not express, except nodes left
/// out because an identical copy is expressed elsewhere (ellipsis), which
/// are kept whole. When several alignments fit the structure, the one whose
/// argument values agree most with the reference's spans wins.
pub fn filter_to_reference(mr: &MrTree, annotated: &AnnotatedTree) -> Result<MrTree, FilterError> {
    let tracker = ConstraintTracker::new(mr);
    let mut join = Vec::with_capacity(tracker.node_count());
    let mut leaves = Vec::with_capacity(tracker.node_count());
    mr.root().walk(&mut |n| {
        join.push(n.kind == NodeKind::DiscourseRelation && n.label == JOIN);
        leaves.push(n.value.clone().map(|v| (n.label.clone(), v)));
    });
    let aligner = Aligner { tracker: &tracker, join };
    let top: Vec<&AnnotatedNode> = annotated.top_nodes().collect();
    let mut reference = LeafBag::new();
    for n in &top {
        annotated_leaves(n, &mut reference);
    }
    let tokens = annotated.linearize();
    let mut best: Option<(usize, MrTree)> = None;
    for realized in aligner.align_children(&top, usize::MAX) {
        let score = value_agreement(&realized, &leaves, &reference);
        if best.as_ref().is_some_and(|(s, _)| *s >= score) {
            continue;
        }
        let mut keep = realized.clone();
        for &r in &realized {
            for &c in tracker.children(r) {
                if realized.contains(&c) {
                    continue;
                }
                let mate_realized = tracker.ellipsis_options(c).iter().any(|&y| y != c && realized.contains(&y));
                if mate_realized {
                    mark_subtree(&tracker, c, &mut keep);
                }
            }
        }
        let mut next_id = 0;
        let Some(root) = rebuild(mr.root(), &keep, &mut next_id) else {
            continue;
        };
        let filtered = MrTree::new(root);
        if check_tree_unterminated(&filtered, &tokens) {
            best = Some((score, filtered));
        }
    }
    best.map(|(_, t)| t).ok_or(FilterError::NoValidAlignment)
}

fn mark_subtree(tracker: &ConstraintTracker, id: NodeId, keep: &mut BTreeSet<NodeId>) {
    keep.insert(id);
    for &c in tracker.children(id) {
        mark_subtree(tracker, c, keep);
    }
}

fn rebuild(node: &MrNode, keep: &BTreeSet<NodeId>, next_id: &mut NodeId) -> Option<MrNode> {
    let id = *next_id;
    *next_id += 1;
    let kept_children: Vec<Option<MrNode>> = node.children.iter().map(|c| rebuild(c, keep, next_id)).collect();
    if !keep.contains(&id) {
        return None;
    }
    let children: Vec<MrNode> = kept_children.into_iter().flatten().collect();
    let value = if node.value.is_none() && children.is_empty() && node.kind == NodeKind::Argument {
        // nested argument realized without any of its subfields
        Some(node.surface_value())
    } else {
        node.value.clone()
    };
    Some(MrNode { kind: node.kind, label: node.label.clone(), children, value })
}
