//! Incremental tree-constraint checking for decoder output.
//!
//! A [`ConstraintTracker`] numbers the MR nodes in depth-first order and
//! records, for every node, the other nodes whose subtrees are structurally
//! identical to it (its ellipsis options). Decoding keeps a set of
//! [`AlignmentState`]s, one per way of aligning the output non-terminals
//! opened so far with MR nodes. Each token moves every state forward; a
//! token is rejected once no state survives.
//!
//! Rules enforced per state:
//!
//! * `[LABEL` must align with an uncovered child of the current parent
//!   carrying that label. Under a `JOIN`, children must follow MR order, so
//!   opening a later child elides the uncovered earlier ones.
//! * `]` and end-of-sequence elide whatever children of the node being
//!   closed were never opened.
//! * An elided node needs another member of its ellipsis group that is
//!   realized, either already or still reachable from the open path.
//!   States that can no longer meet this are dropped immediately, so every
//!   accepted prefix has at least one valid completion.
//!
//! Words are always accepted and never change the state.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::mr::{MrNode, MrTree};
use crate::ontology::{NodeKind, JOIN};
use crate::token::Token;

pub type NodeId = usize;

/// Fixed-capacity bit set over node ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeSet {
    words: Vec<u64>,
}

impl NodeSet {
    pub fn with_capacity(n: usize) -> Self {
        NodeSet { words: vec![0; n.div_ceil(64).max(1)] }
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.words.get(id / 64).is_some_and(|w| w & (1 << (id % 64)) != 0)
    }

    pub fn insert(&mut self, id: NodeId) {
        let w = id / 64;
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << (id % 64);
    }

    pub fn is_disjoint(&self, other: &NodeSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.words
            .iter()
            .enumerate()
            .flat_map(|(wi, &w)| (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| wi * 64 + b))
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }
}

/// Per-MR constraint structures. Immutable once built.
#[derive(Clone, Debug)]
pub struct ConstraintTracker {
    node_count: usize,
    /// `parent[id]`; the root's parent is the sentinel `node_count`.
    parent: Vec<NodeId>,
    /// Indexed by id, plus one trailing entry for the sentinel.
    children: Vec<Vec<NodeId>>,
    labels: Vec<String>,
    is_join: Vec<bool>,
    label_index: BTreeMap<String, Vec<NodeId>>,
    ellipsis_options: Vec<Vec<NodeId>>,
}

/// One hypothesis about how the output so far aligns with the MR.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlignmentState {
    parent: NodeId,
    coverage: NodeSet,
    elided: NodeSet,
}

impl AlignmentState {
    /// Current parent node; `None` at the root sentinel.
    pub fn parent(&self, tracker: &ConstraintTracker) -> Option<NodeId> {
        (self.parent != tracker.sentinel()).then_some(self.parent)
    }

    pub fn coverage(&self) -> &NodeSet {
        &self.coverage
    }

    pub fn elided_nodes(&self) -> &NodeSet {
        &self.elided
    }
}

/// Live alignment states, deduplicated and ordered.
pub type StateSet = BTreeSet<AlignmentState>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("token `{token}` rejected: no alignment state survives")]
pub struct Rejected {
    pub token: Token,
}

impl Rejected {
    pub fn surviving_states(&self) -> usize {
        0
    }
}

/// Structural key: label, value and children, with children sorted unless
/// the node is a `JOIN` (whose child order is meaningful).
fn structure_key(n: &MrNode) -> String {
    let mut child_keys: Vec<String> = n.children.iter().map(structure_key).collect();
    if !is_join_node(n) {
        child_keys.sort();
    }
    format!("{:?}:{}={}({})", n.kind, n.label, n.value.as_deref().unwrap_or(""), child_keys.join(","))
}

fn is_join_node(n: &MrNode) -> bool {
    n.kind == NodeKind::DiscourseRelation && n.label == JOIN
}

/// Groups of structurally identical subtrees. Every node maps to its group,
/// itself included.
pub fn compute_ellipsis_options(mr: &MrTree) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let tracker = ConstraintTracker::new(mr);
    (0..tracker.node_count).map(|id| (id, tracker.ellipsis_options[id].iter().copied().collect())).collect()
}

impl ConstraintTracker {
    pub fn new(mr: &MrTree) -> Self {
        let mut t = ConstraintTracker {
            node_count: 0,
            parent: Vec::new(),
            children: Vec::new(),
            labels: Vec::new(),
            is_join: Vec::new(),
            label_index: BTreeMap::new(),
            ellipsis_options: Vec::new(),
        };
        let mut keys = Vec::new();
        t.number(mr.root(), usize::MAX, &mut keys);
        let n = t.node_count;
        for p in t.parent.iter_mut() {
            if *p == usize::MAX {
                *p = n;
            }
        }
        t.children.push(vec![0]);
        let mut groups: HashMap<&str, Vec<NodeId>> = HashMap::new();
        for (id, k) in keys.iter().enumerate() {
            groups.entry(k.as_str()).or_default().push(id);
        }
        t.ellipsis_options = keys.iter().map(|k| groups[k.as_str()].clone()).collect();
        t
    }

    fn number(&mut self, node: &MrNode, parent: NodeId, keys: &mut Vec<String>) -> NodeId {
        let id = self.node_count;
        self.node_count += 1;
        self.parent.push(parent);
        self.children.push(Vec::new());
        self.labels.push(node.label.clone());
        self.is_join.push(is_join_node(node));
        self.label_index.entry(node.label.clone()).or_default().push(id);
        keys.push(structure_key(node));
        for c in &node.children {
            let cid = self.number(c, id, keys);
            self.children[id].push(cid);
        }
        id
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    fn sentinel(&self) -> NodeId {
        self.node_count
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        let p = self.parent[id];
        (p != self.sentinel()).then_some(p)
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id]
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id]
    }

    /// Node ids carrying `label`, ascending.
    pub fn nodes_with_label(&self, label: &str) -> &[NodeId] {
        self.label_index.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn label_index(&self) -> &BTreeMap<String, Vec<NodeId>> {
        &self.label_index
    }

    /// Members of `id`'s ellipsis group, `id` included, ascending.
    pub fn ellipsis_options(&self, id: NodeId) -> &[NodeId] {
        &self.ellipsis_options[id]
    }

    pub fn join_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count).filter(|&i| self.is_join[i])
    }

    pub fn initial_state(&self) -> AlignmentState {
        AlignmentState {
            parent: self.sentinel(),
            coverage: NodeSet::with_capacity(self.node_count),
            elided: NodeSet::with_capacity(self.node_count),
        }
    }

    pub fn initial_states(&self) -> StateSet {
        std::iter::once(self.initial_state()).collect()
    }

    fn open_path(&self, st: &AlignmentState) -> NodeSet {
        let mut path = NodeSet::with_capacity(self.node_count + 1);
        let mut p = st.parent;
        while p != self.sentinel() {
            path.insert(p);
            p = self.parent[p];
        }
        path
    }

    /// Whether `y` can still be opened by some continuation of `st`.
    fn realizable(&self, y: NodeId, st: &AlignmentState, open: &NodeSet) -> bool {
        let mut c = y;
        loop {
            if st.coverage.contains(c) || st.elided.contains(c) {
                return false;
            }
            let p = self.parent[c];
            if p == self.sentinel() {
                return true;
            }
            if st.coverage.contains(p) {
                return open.contains(p);
            }
            c = p;
        }
    }

    /// Every elided node has a group mate that is or can still be realized.
    fn viable(&self, st: &AlignmentState) -> bool {
        if st.elided.is_empty() {
            return true;
        }
        let open = self.open_path(st);
        st.elided.iter().all(|x| {
            self.ellipsis_options[x]
                .iter()
                .any(|&y| y != x && (st.coverage.contains(y) || self.realizable(y, st, &open)))
        })
    }

    fn elide_missing_children(&self, st: &mut AlignmentState, node: NodeId) {
        for &c in &self.children[node] {
            if !st.coverage.contains(c) && !st.elided.contains(c) {
                st.elided.insert(c);
            }
        }
    }

    fn step_state(&self, st: &AlignmentState, token: &Token, out: &mut StateSet) {
        match token {
            Token::Word(_) => {
                out.insert(st.clone());
            }
            Token::Open(label) => {
                for &cand in self.nodes_with_label(label) {
                    if self.parent[cand] != st.parent || st.coverage.contains(cand) || st.elided.contains(cand) {
                        continue;
                    }
                    let mut next = st.clone();
                    if st.parent != self.sentinel() && self.is_join[st.parent] {
                        for &sib in &self.children[st.parent] {
                            if sib == cand {
                                break;
                            }
                            if !next.coverage.contains(sib) {
                                next.elided.insert(sib);
                            }
                        }
                    }
                    next.parent = cand;
                    next.coverage.insert(cand);
                    if self.viable(&next) {
                        out.insert(next);
                    }
                }
            }
            Token::Close => {
                if st.parent == self.sentinel() {
                    return;
                }
                let mut next = st.clone();
                self.elide_missing_children(&mut next, st.parent);
                next.parent = self.parent[st.parent];
                if self.viable(&next) {
                    out.insert(next);
                }
            }
            Token::Eos => {
                if st.parent != self.sentinel() {
                    return;
                }
                let mut next = st.clone();
                self.elide_missing_children(&mut next, self.sentinel());
                if self.viable(&next) {
                    out.insert(next);
                }
            }
        }
    }

    /// Advances every state by one token.
    pub fn accept_token(&self, states: &StateSet, token: &Token) -> Result<StateSet, Rejected> {
        if token.is_word() {
            return Ok(states.clone());
        }
        let mut out = StateSet::new();
        for st in states {
            self.step_state(st, token, &mut out);
        }
        if out.is_empty() {
            Err(Rejected { token: token.clone() })
        } else {
            Ok(out)
        }
    }

    /// Whether `token` would be accepted, without committing.
    pub fn accepts(&self, states: &StateSet, token: &Token) -> bool {
        if token.is_word() {
            return true;
        }
        let mut out = StateSet::new();
        states.iter().any(|st| {
            self.step_state(st, token, &mut out);
            !out.is_empty()
        })
    }

    /// Replaces the score of every candidate that would be rejected with
    /// negative infinity.
    pub fn mask_scores(&self, states: &StateSet, candidates: &[Token], scores: &[f64]) -> Vec<f64> {
        candidates
            .iter()
            .zip(scores)
            .map(|(tok, &s)| if self.accepts(states, tok) { s } else { f64::NEG_INFINITY })
            .collect()
    }

    /// Index of the first rejected token, if any.
    pub fn first_rejection(&self, tokens: &[Token]) -> Option<usize> {
        let mut states = self.initial_states();
        for (i, t) in tokens.iter().enumerate() {
            match self.accept_token(&states, t) {
                Ok(s) => states = s,
                Err(_) => return Some(i),
            }
        }
        None
    }

    /// True iff the whole sequence is accepted and ends with an accepted
    /// end-of-sequence token.
    pub fn check(&self, tokens: &[Token]) -> bool {
        matches!(tokens.last(), Some(Token::Eos)) && self.first_rejection(tokens).is_none()
    }
}

pub fn build_constraints(mr: &MrTree) -> ConstraintTracker {
    ConstraintTracker::new(mr)
}

/// Whether `output` (ending with end-of-sequence) structurally matches `mr`.
pub fn check_tree(mr: &MrTree, output: &[Token]) -> bool {
    ConstraintTracker::new(mr).check(output)
}

/// Convenience for token streams without the trailing end marker.
pub fn check_tree_unterminated(mr: &MrTree, output: &[Token]) -> bool {
    let mut toks = output.to_vec();
    toks.push(Token::Eos);
    check_tree(mr, &toks)
}
