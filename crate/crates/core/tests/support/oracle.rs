//! Declarative reference for the set of valid output skeletons of an MR.
//!
//! Works on its own node arena and its own notion of subtree equality
//! (brute-force child matching), so it shares no code with the automaton.
//! A skeleton is valid iff it is produced by choosing a set of realized
//! nodes (closed under parents) such that every unrealized child of a
//! realized node has an identical subtree realized somewhere else, then
//! emitting each realized node with its realized children in any order,
//! except that `JOIN` children keep MR order.

#![allow(dead_code)]

use std::collections::BTreeSet;

use treenlg::mr::{MrNode, MrTree};
use treenlg::ontology::NodeKind;

pub struct Arena {
    pub labels: Vec<String>,
    pub kinds: Vec<NodeKind>,
    pub values: Vec<Option<String>>,
    pub children: Vec<Vec<usize>>,
    pub parent: Vec<Option<usize>>,
}

impl Arena {
    pub fn new(mr: &MrTree) -> Self {
        let mut a = Arena { labels: vec![], kinds: vec![], values: vec![], children: vec![], parent: vec![] };
        // iterative pre-order with an explicit stack
        let mut stack: Vec<(&MrNode, Option<usize>)> = vec![(mr.root(), None)];
        while let Some((n, p)) = stack.pop() {
            let id = a.labels.len();
            a.labels.push(n.label.clone());
            a.kinds.push(n.kind);
            a.values.push(n.value.clone());
            a.children.push(vec![]);
            a.parent.push(p);
            if let Some(p) = p {
                a.children[p].push(id);
            }
            for c in n.children.iter().rev() {
                stack.push((c, Some(id)));
            }
        }
        a
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_join(&self, id: usize) -> bool {
        self.kinds[id] == NodeKind::DiscourseRelation && self.labels[id] == "JOIN"
    }

    /// Structural equality; non-JOIN children compared as multisets by
    /// trying every pairing.
    pub fn same(&self, x: usize, y: usize) -> bool {
        if self.labels[x] != self.labels[y]
            || self.kinds[x] != self.kinds[y]
            || self.values[x] != self.values[y]
            || self.children[x].len() != self.children[y].len()
        {
            return false;
        }
        let cx = &self.children[x];
        let cy = &self.children[y];
        if self.is_join(x) {
            return cx.iter().zip(cy).all(|(&a, &b)| self.same(a, b));
        }
        let mut used = vec![false; cy.len()];
        self.match_all(cx, cy, &mut used)
    }

    fn match_all(&self, cx: &[usize], cy: &[usize], used: &mut [bool]) -> bool {
        let Some((&first, rest)) = cx.split_first() else {
            return true;
        };
        for j in 0..cy.len() {
            if !used[j] && self.same(first, cy[j]) {
                used[j] = true;
                if self.match_all(rest, cy, used) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }

    pub fn group(&self, x: usize) -> BTreeSet<usize> {
        (0..self.len()).filter(|&y| self.same(x, y)).collect()
    }
}

fn realized_sets(a: &Arena, node: usize) -> Vec<BTreeSet<usize>> {
    // node realized; each child independently realized or not
    let mut acc: Vec<BTreeSet<usize>> = vec![std::iter::once(node).collect()];
    for &c in &a.children[node] {
        let mut with_child = realized_sets(a, c);
        with_child.push(BTreeSet::new()); // child not realized
        let mut next = Vec::new();
        for base in &acc {
            for opt in &with_child {
                let mut s = base.clone();
                s.extend(opt.iter().copied());
                next.push(s);
            }
        }
        acc = next;
    }
    acc
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn emit(a: &Arena, node: usize, realized: &BTreeSet<usize>) -> Vec<Vec<String>> {
    let kids: Vec<usize> = a.children[node].iter().copied().filter(|c| realized.contains(c)).collect();
    let orders = if a.is_join(node) { vec![kids] } else { permutations(&kids) };
    let mut out = Vec::new();
    for order in orders {
        let mut partial: Vec<Vec<String>> = vec![vec![format!("[{}", a.labels[node])]];
        for c in order {
            let subs = emit(a, c, realized);
            let mut next = Vec::new();
            for p in &partial {
                for s in &subs {
                    let mut v = p.clone();
                    v.extend(s.iter().cloned());
                    next.push(v);
                }
            }
            partial = next;
        }
        for mut p in partial {
            p.push("]".to_string());
            out.push(p);
        }
    }
    out
}

/// Every valid non-terminal skeleton, as token strings without the end
/// marker.
pub fn valid_skeletons(mr: &MrTree) -> BTreeSet<Vec<String>> {
    let a = Arena::new(mr);
    let groups: Vec<BTreeSet<usize>> = (0..a.len()).map(|x| a.group(x)).collect();
    let mut out = BTreeSet::new();
    for realized in realized_sets(&a, 0) {
        let ok = realized.iter().all(|&r| {
            a.children[r]
                .iter()
                .all(|&c| realized.contains(&c) || groups[c].iter().any(|&y| y != c && realized.contains(&y)))
        });
        if ok {
            out.extend(emit(&a, 0, &realized));
        }
    }
    out
}

/// Tokens that may follow `prefix` according to `skeletons`; `"<eos>"`
/// when the prefix is itself complete.
pub fn valid_next(skeletons: &BTreeSet<Vec<String>>, prefix: &[String]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in skeletons {
        if s.len() >= prefix.len() && s[..prefix.len()] == *prefix {
            match s.get(prefix.len()) {
                Some(t) => out.insert(t.clone()),
                None => out.insert("<eos>".to_string()),
            };
        }
    }
    out
}

/// Candidate skeleton tokens for an MR: every label it uses, `]` and the
/// end marker.
pub fn candidate_tokens(mr: &MrTree) -> Vec<String> {
    let a = Arena::new(mr);
    let labels: BTreeSet<String> = a.labels.iter().map(|l| format!("[{l}")).collect();
    let mut v: Vec<String> = labels.into_iter().collect();
    v.push("]".into());
    v.push("<eos>".into());
    v
}
