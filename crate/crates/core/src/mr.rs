//! Tree-structured meaning representations and tree-annotated responses.
//!
//! Both share one linearized form: `[LABEL` opens a node, `]` closes it and
//! everything else is a word. An MR keeps words only as the values of leaf
//! arguments; an annotated response may interleave words with child spans at
//! any level.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{NodeKind, Ontology, JOIN};
use crate::token::{render, tokenize, Token};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MrError {
    #[error("empty input")]
    EmptyInput,
    #[error("unbalanced brackets at token {position}")]
    UnbalancedBrackets { position: usize },
    #[error("unknown label `{label}` at token {position}")]
    UnknownLabel { label: String, position: usize },
    #[error("end-of-sequence marker before the end of input (token {position})")]
    MisplacedEos { position: usize },
    #[error("invalid MR structure: {0}")]
    InvalidStructure(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MrNode {
    pub kind: NodeKind,
    pub label: String,
    pub children: Vec<MrNode>,
    /// Terminal value of a leaf argument; `None` for every other node.
    pub value: Option<String>,
}

impl MrNode {
    pub fn relation(label: &str, children: Vec<MrNode>) -> Self {
        MrNode { kind: NodeKind::DiscourseRelation, label: label.to_string(), children, value: None }
    }

    pub fn act(label: &str, children: Vec<MrNode>) -> Self {
        MrNode { kind: NodeKind::DialogAct, label: label.to_string(), children, value: None }
    }

    pub fn arg(label: &str, value: &str) -> Self {
        MrNode {
            kind: NodeKind::Argument,
            label: label.to_string(),
            children: Vec::new(),
            value: Some(value.to_string()),
        }
    }

    pub fn nested(label: &str, subfields: Vec<MrNode>) -> Self {
        MrNode { kind: NodeKind::Argument, label: label.to_string(), children: subfields, value: None }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn emit(&self, out: &mut Vec<Token>) {
        out.push(Token::Open(self.label.clone()));
        if let Some(v) = &self.value {
            out.extend(v.split_whitespace().map(Token::word));
        }
        for c in &self.children {
            c.emit(out);
        }
        out.push(Token::Close);
    }

    pub fn linearize(&self) -> Vec<Token> {
        let mut out = Vec::new();
        self.emit(&mut out);
        out
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a MrNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(MrNode::node_count).sum::<usize>()
    }

    /// Leaf values below this node, space-joined in pre-order.
    pub fn surface_value(&self) -> String {
        let mut parts = Vec::new();
        self.walk(&mut |n| {
            if let Some(v) = &n.value {
                if !v.is_empty() {
                    parts.push(v.as_str());
                }
            }
        });
        parts.join(" ")
    }

    fn check(&self, ontology: &Ontology, parent: Option<(NodeKind, &str)>) -> Result<(), MrError> {
        let resolved = ontology
            .resolve_in(parent, &self.label)
            .filter(|r| r.kind == self.kind && r.label == self.label)
            .ok_or_else(|| MrError::UnknownLabel { label: self.label.clone(), position: 0 })?;
        match resolved.kind {
            NodeKind::Argument => {
                if self.is_leaf() != self.value.is_some() {
                    return Err(MrError::InvalidStructure(format!(
                        "argument `{}` must have a value iff it has no subfields",
                        self.label
                    )));
                }
            }
            _ => {
                if self.value.is_some() {
                    return Err(MrError::InvalidStructure(format!("`{}` cannot carry a value", self.label)));
                }
            }
        }
        for c in &self.children {
            c.check(ontology, Some((self.kind, &self.label)))?;
        }
        Ok(())
    }

    fn canonical(&self) -> MrNode {
        let mut children: Vec<MrNode> = self.children.iter().map(MrNode::canonical).collect();
        if self.kind == NodeKind::DialogAct {
            sort_arguments(&mut children);
        }
        MrNode { kind: self.kind, label: self.label.clone(), children, value: self.value.clone() }
    }
}

fn sort_arguments(children: &mut [MrNode]) {
    children.sort_by_cached_key(|c| (c.label.clone(), render(&c.linearize())));
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MrTree {
    root: MrNode,
}

impl MrTree {
    pub fn new(root: MrNode) -> Self {
        MrTree { root }
    }

    /// Builds a tree from top-level nodes, adding a `JOIN` above them
    /// when there is more than one.
    pub fn from_top_level(mut nodes: Vec<MrNode>) -> Result<Self, MrError> {
        match nodes.len() {
            0 => Err(MrError::EmptyInput),
            1 => Ok(MrTree::new(nodes.pop().unwrap())),
            _ => Ok(MrTree::new(MrNode::relation(JOIN, nodes))),
        }
    }

    pub fn root(&self) -> &MrNode {
        &self.root
    }

    pub fn into_root(self) -> MrNode {
        self.root
    }

    pub fn linearize(&self) -> Vec<Token> {
        self.root.linearize()
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    /// Checks every label and nesting rule against `ontology`.
    pub fn validate(&self, ontology: &Ontology) -> Result<(), MrError> {
        self.root.check(ontology, None)
    }

    /// Parses a linearized MR. Words are only legal as leaf argument values.
    pub fn parse(text: &str, ontology: &Ontology) -> Result<Self, MrError> {
        let tokens = tokenize(text);
        Self::from_tokens(&tokens, ontology)
    }

    pub fn from_tokens(tokens: &[Token], ontology: &Ontology) -> Result<Self, MrError> {
        let ann = parse_linearized(tokens, ontology)?;
        MrTree::from_annotated(&ann)
    }

    /// Converts an annotated tree whose only words are argument values.
    pub fn from_annotated(ann: &AnnotatedTree) -> Result<Self, MrError> {
        let mut nodes = Vec::new();
        for item in &ann.items {
            match item {
                Item::Word(w) => return Err(MrError::InvalidStructure(format!("word `{w}` outside any argument"))),
                Item::Node(n) => nodes.push(mr_node_from(n)?),
            }
        }
        MrTree::from_top_level(nodes)
    }

    /// Sorts arguments within every dialog act by label, breaking ties on
    /// the serialized subtree. Relation children keep their order.
    pub fn canonicalize(&self) -> MrTree {
        MrTree::new(self.root.canonical())
    }

    /// Renders the tree as an annotated tree whose words are the values.
    pub fn to_annotated(&self) -> AnnotatedTree {
        AnnotatedTree::new(vec![Item::Node(annotated_from(&self.root))])
    }

    /// Structure-only key: the canonical linearization with all values
    /// removed. Two MRs share a signature iff they differ only in values.
    pub fn signature(&self) -> String {
        let toks: Vec<Token> = self.canonicalize().linearize().into_iter().filter(|t| !t.is_word()).collect();
        render(&toks)
    }

    pub fn dialog_acts(&self) -> Vec<&MrNode> {
        let mut acts = Vec::new();
        self.root.walk(&mut |n| {
            if n.kind == NodeKind::DialogAct {
                acts.push(n);
            }
        });
        acts
    }

    pub fn flatten(&self) -> FlatMr {
        flatten(self)
    }
}

impl fmt::Display for MrTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(&self.linearize()))
    }
}

impl Serialize for MrTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn mr_node_from(n: &AnnotatedNode) -> Result<MrNode, MrError> {
    let mut words = Vec::new();
    let mut children = Vec::new();
    for item in &n.items {
        match item {
            Item::Word(w) => words.push(w.as_str()),
            Item::Node(c) => children.push(mr_node_from(c)?),
        }
    }
    let value = match n.kind {
        NodeKind::Argument if children.is_empty() => Some(words.join(" ")),
        _ if !words.is_empty() => {
            return Err(MrError::InvalidStructure(format!("`{}` mixes words with structure", n.label)))
        }
        _ => None,
    };
    Ok(MrNode { kind: n.kind, label: n.label.clone(), children, value })
}

fn annotated_from(n: &MrNode) -> AnnotatedNode {
    let mut items: Vec<Item> = match &n.value {
        Some(v) => v.split_whitespace().map(|w| Item::Word(w.to_string())).collect(),
        None => Vec::new(),
    };
    items.extend(n.children.iter().map(|c| Item::Node(annotated_from(c))));
    AnnotatedNode::new(n.kind, &n.label, items)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Item {
    Word(String),
    Node(AnnotatedNode),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AnnotatedNode {
    pub kind: NodeKind,
    pub label: String,
    pub items: Vec<Item>,
}

impl AnnotatedNode {
    pub fn new(kind: NodeKind, label: &str, items: Vec<Item>) -> Self {
        AnnotatedNode { kind, label: label.to_string(), items }
    }

    pub fn child_nodes(&self) -> impl Iterator<Item = &AnnotatedNode> {
        self.items.iter().filter_map(|i| match i {
            Item::Node(n) => Some(n),
            Item::Word(_) => None,
        })
    }

    /// Words directly below this node, not inside child spans.
    pub fn own_words(&self) -> Vec<&str> {
        self.items
            .iter()
            .filter_map(|i| match i {
                Item::Word(w) => Some(w.as_str()),
                Item::Node(_) => None,
            })
            .collect()
    }

    fn emit(&self, out: &mut Vec<Token>) {
        out.push(Token::Open(self.label.clone()));
        emit_items(&self.items, out);
        out.push(Token::Close);
    }
}

fn emit_items(items: &[Item], out: &mut Vec<Token>) {
    for item in items {
        match item {
            Item::Word(w) => out.push(Token::Word(w.clone())),
            Item::Node(n) => n.emit(out),
        }
    }
}

fn collect_words<'a>(items: &'a [Item], out: &mut Vec<&'a str>) {
    for item in items {
        match item {
            Item::Word(w) => out.push(w),
            Item::Node(n) => collect_words(&n.items, out),
        }
    }
}

/// A response with its span annotation; top-level items may mix words and
/// spans.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct AnnotatedTree {
    pub items: Vec<Item>,
}

impl AnnotatedTree {
    pub fn new(items: Vec<Item>) -> Self {
        AnnotatedTree { items }
    }

    pub fn parse(text: &str, ontology: &Ontology) -> Result<Self, MrError> {
        parse_linearized(&tokenize(text), ontology)
    }

    pub fn linearize(&self) -> Vec<Token> {
        let mut out = Vec::new();
        emit_items(&self.items, &mut out);
        out
    }

    /// Surface text: all words in order.
    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        collect_words(&self.items, &mut out);
        out
    }

    pub fn surface(&self) -> String {
        self.words().join(" ")
    }

    pub fn top_nodes(&self) -> impl Iterator<Item = &AnnotatedNode> {
        self.items.iter().filter_map(|i| match i {
            Item::Node(n) => Some(n),
            Item::Word(_) => None,
        })
    }
}

impl fmt::Display for AnnotatedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(&self.linearize()))
    }
}

/// Parses a linearized annotated tree. A trailing end-of-sequence token is
/// allowed and dropped. Labels are resolved against `ontology` with the
/// enclosing node determining whether a structural label, an argument or a
/// subfield is expected; display suffixes like `_1` are stripped.
pub fn parse_linearized(tokens: &[Token], ontology: &Ontology) -> Result<AnnotatedTree, MrError> {
    let body = match tokens.split_last() {
        Some((Token::Eos, rest)) => rest,
        Some(_) => tokens,
        None => return Err(MrError::EmptyInput),
    };
    if body.is_empty() {
        return Err(MrError::EmptyInput);
    }
    let mut top: Vec<Item> = Vec::new();
    let mut stack: Vec<AnnotatedNode> = Vec::new();
    for (position, tok) in body.iter().enumerate() {
        match tok {
            Token::Open(raw) => {
                let parent = stack.last().map(|n| (n.kind, n.label.as_str()));
                let resolved = ontology
                    .resolve_in(parent, raw)
                    .ok_or_else(|| MrError::UnknownLabel { label: raw.clone(), position })?;
                stack.push(AnnotatedNode::new(resolved.kind, &resolved.label, Vec::new()));
            }
            Token::Close => {
                let node = stack.pop().ok_or(MrError::UnbalancedBrackets { position })?;
                match stack.last_mut() {
                    Some(p) => p.items.push(Item::Node(node)),
                    None => top.push(Item::Node(node)),
                }
            }
            Token::Word(w) => match stack.last_mut() {
                Some(p) => p.items.push(Item::Word(w.clone())),
                None => top.push(Item::Word(w.clone())),
            },
            Token::Eos => return Err(MrError::MisplacedEos { position }),
        }
    }
    if !stack.is_empty() {
        return Err(MrError::UnbalancedBrackets { position: body.len() });
    }
    Ok(AnnotatedTree::new(top))
}

/// Argument key/value list with keys numbered by the 1-based index of the
/// dialog act they belong to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatMr(pub Vec<(String, String)>);

impl fmt::Display for FlatMr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}[{v}]")?;
        }
        Ok(())
    }
}

/// Drops discourse structure. Acts are numbered in pre-order; within an act
/// arguments are alphabetical and nested arguments flatten to the
/// space-joined values of their subfields.
pub fn flatten(mr: &MrTree) -> FlatMr {
    let mut out = Vec::new();
    for (i, act) in mr.dialog_acts().into_iter().enumerate() {
        let mut args: Vec<&MrNode> = act.children.iter().collect();
        args.sort_by_cached_key(|a| (a.label.clone(), render(&a.linearize())));
        for a in args {
            out.push((format!("{}{}", a.label, i + 1), a.surface_value()));
        }
    }
    FlatMr(out)
}
