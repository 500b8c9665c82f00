//! Placeholder substitution for sparse argument values.
//!
//! Values of the ontology's delexicalized arguments are replaced by
//! `__<LABEL>_<k>__` in both the MR and the annotated response, where `k`
//! counts distinct values of that label within one example. Equal values of
//! the same label share a placeholder unless numbering per occurrence is
//! requested.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mr::{AnnotatedNode, AnnotatedTree, Item, MrNode, MrTree};
use crate::ontology::{NodeKind, Ontology};
use crate::token::Token;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DelexError {
    #[error("placeholder `{0}` is not in this example's table")]
    UnknownPlaceholder(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelexEntry {
    pub placeholder: String,
    pub label: String,
    pub value: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelexTable {
    pub entries: Vec<DelexEntry>,
}

impl DelexTable {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, placeholder: &str) -> Option<&DelexEntry> {
        self.entries.iter().find(|e| e.placeholder == placeholder)
    }
}

pub fn is_placeholder(word: &str) -> bool {
    word.len() > 4 && word.starts_with("__") && word.ends_with("__")
}

pub fn placeholder(label: &str, k: usize) -> String {
    format!("__{}_{}__", label.to_ascii_uppercase(), k)
}

/// Accumulates one example's table across its MR and response.
pub struct Delexicalizer<'o> {
    ontology: &'o Ontology,
    share: bool,
    table: DelexTable,
    counters: BTreeMap<String, usize>,
}

impl<'o> Delexicalizer<'o> {
    pub fn new(ontology: &'o Ontology) -> Self {
        Delexicalizer { ontology, share: true, table: DelexTable::default(), counters: BTreeMap::new() }
    }

    /// Give every occurrence its own placeholder instead of sharing on
    /// equal values.
    pub fn number_each_occurrence(mut self) -> Self {
        self.share = false;
        self
    }

    fn placeholder_for(&mut self, label: &str, value: &str) -> String {
        if self.share {
            if let Some(e) = self.table.entries.iter().find(|e| e.label == label && e.value == value) {
                return e.placeholder.clone();
            }
        }
        let k = self.counters.entry(label.to_string()).or_insert(0);
        *k += 1;
        let p = placeholder(label, *k);
        self.table.entries.push(DelexEntry {
            placeholder: p.clone(),
            label: label.to_string(),
            value: value.to_string(),
        });
        p
    }

    fn node(&mut self, n: &MrNode) -> MrNode {
        let value = match &n.value {
            Some(v) if !v.is_empty() && self.ontology.is_delexicalized(&n.label) => {
                Some(self.placeholder_for(&n.label, v))
            }
            other => other.clone(),
        };
        MrNode {
            kind: n.kind,
            label: n.label.clone(),
            children: n.children.iter().map(|c| self.node(c)).collect(),
            value,
        }
    }

    pub fn mr(&mut self, mr: &MrTree) -> MrTree {
        MrTree::new(self.node(mr.root()))
    }

    fn span(&mut self, n: &AnnotatedNode) -> AnnotatedNode {
        let leaf = n.kind == NodeKind::Argument && n.child_nodes().next().is_none();
        if leaf && self.ontology.is_delexicalized(&n.label) {
            let words = n.own_words();
            if !words.is_empty() {
                let p = self.placeholder_for(&n.label, &words.join(" "));
                return AnnotatedNode::new(n.kind, &n.label, vec![Item::Word(p)]);
            }
        }
        AnnotatedNode::new(n.kind, &n.label, self.items(&n.items))
    }

    fn items(&mut self, items: &[Item]) -> Vec<Item> {
        items
            .iter()
            .map(|i| match i {
                Item::Word(w) => Item::Word(w.clone()),
                Item::Node(n) => Item::Node(self.span(n)),
            })
            .collect()
    }

    pub fn annotated(&mut self, ann: &AnnotatedTree) -> AnnotatedTree {
        AnnotatedTree::new(self.items(&ann.items))
    }

    pub fn finish(self) -> DelexTable {
        self.table
    }
}

pub fn delexicalize_mr(mr: &MrTree, ontology: &Ontology) -> (MrTree, DelexTable) {
    let mut d = Delexicalizer::new(ontology);
    let out = d.mr(mr);
    (out, d.finish())
}

pub fn delexicalize_annotated(ann: &AnnotatedTree, ontology: &Ontology) -> (AnnotatedTree, DelexTable) {
    let mut d = Delexicalizer::new(ontology);
    let out = d.annotated(ann);
    (out, d.finish())
}

/// Delexicalizes an MR and its reference with one shared table.
pub fn delexicalize_pair(mr: &MrTree, ann: &AnnotatedTree, ontology: &Ontology) -> (MrTree, AnnotatedTree, DelexTable) {
    let mut d = Delexicalizer::new(ontology);
    let m = d.mr(mr);
    let a = d.annotated(ann);
    (m, a, d.finish())
}

/// Substitutes placeholders back; multi-word values expand to several
/// word tokens.
pub fn relexicalize(tokens: &[Token], table: &DelexTable) -> Result<Vec<Token>, DelexError> {
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        match t {
            Token::Word(w) if is_placeholder(w) => {
                let e = table.lookup(w).ok_or_else(|| DelexError::UnknownPlaceholder(w.clone()))?;
                out.extend(e.value.split_whitespace().map(Token::word));
            }
            other => out.push(other.clone()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::{render, tokenize};

    #[test]
    fn low_temperature() {
        let o = Ontology::weather();
        let mr = MrTree::parse("[INFORM [temp_low 43 ] ]", &o).unwrap();
        let (d, table) = delexicalize_mr(&mr, &o);
        assert_eq!(d.to_string(), "[INFORM [temp_low __TEMP_LOW_1__ ] ]");
        assert_eq!(table.lookup("__TEMP_LOW_1__").unwrap().value, "43");
    }

    #[test]
    fn nothing_to_replace() {
        let o = Ontology::weather();
        let mr = MrTree::parse("[INFORM [condition sunny ] ]", &o).unwrap();
        let (d, table) = delexicalize_mr(&mr, &o);
        assert_eq!(d, mr);
        assert!(table.is_empty());
    }

    #[test]
    fn repeated_value_shares_placeholder() {
        let o = Ontology::weather();
        let mr = MrTree::parse(
            "[CONTRAST [INFORM [location [city Parker ] ] ] [INFORM [location [city Parker ] ] [location [city Aspen ] ] ] ]",
            &o,
        )
        .unwrap();
        let (d, table) = delexicalize_mr(&mr, &o);
        assert_eq!(
            d.to_string(),
            "[CONTRAST [INFORM [location [city __CITY_1__ ] ] ] [INFORM [location [city __CITY_1__ ] ] [location [city __CITY_2__ ] ] ] ]"
        );
        assert_eq!(table.entries.len(), 2);

        let mut numbered = Delexicalizer::new(&o).number_each_occurrence();
        let d = numbered.mr(&mr);
        assert!(d.to_string().contains("__CITY_3__"));
    }

    #[test]
    fn multi_word_value_is_one_token() {
        let o = Ontology::e2e();
        let ann = AnnotatedTree::parse("[INFORM [name The Golden Curry ] is nice ]", &o).unwrap();
        let (d, table) = delexicalize_annotated(&ann, &o);
        assert_eq!(d.to_string(), "[INFORM [name __NAME_1__ ] is nice ]");
        let back = relexicalize(&d.linearize(), &table).unwrap();
        assert_eq!(render(&back), ann.to_string());
    }

    #[test]
    fn relex_errors_and_identity() {
        let empty = DelexTable::default();
        let toks = tokenize("[INFORM hello ]");
        assert_eq!(relexicalize(&toks, &empty).unwrap(), toks);
        assert_eq!(
            relexicalize(&tokenize("__NAME_1__"), &empty),
            Err(DelexError::UnknownPlaceholder("__NAME_1__".into()))
        );
    }
}
