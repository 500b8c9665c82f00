use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use crate::constraint::check_tree;
use crate::mr::{AnnotatedNode, AnnotatedTree, Item, MrNode, MrTree};
use crate::ontology::{NodeKind, JOIN};
use crate::token::{render, Token};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RealizeError {
    #[error("no template for `{0}`")]
    NoTemplate(String),
    #[error("realization does not match its MR: {0}")]
    Inconsistent(String),
}

fn words(text: &str) -> Vec<Item> {
    text.split_whitespace().map(|w| Item::Word(w.to_string())).collect()
}

struct Realizer<'r, R> {
    rng: &'r mut R,
    ellipsis_prob: f64,
    /// Arguments realized so far, by rendered subtree.
    realized: BTreeSet<String>,
}

impl<R: Rng> Realizer<'_, R> {
    fn pick<'a>(&mut self, options: &[&'a str]) -> &'a str {
        options.choose(self.rng).expect("non-empty options")
    }

    /// Whether to drop an argument whose double was already realized.
    fn elide(&mut self, n: &MrNode) -> bool {
        let key = render(&n.linearize());
        if self.realized.contains(&key) && self.rng.random_bool(self.ellipsis_prob) {
            return true;
        }
        self.realized.insert(key);
        false
    }

    fn arg_node(&self, n: &MrNode) -> AnnotatedNode {
        let items = if n.children.is_empty() {
            words(n.value.as_deref().unwrap_or(""))
        } else {
            let mut items = Vec::new();
            for (i, c) in n.children.iter().enumerate() {
                if i > 0 {
                    let sep = match (n.label.as_str(), c.label.as_str()) {
                        ("date_time_range", "end_weekday") => "through",
                        ("date_time", "day") => "",
                        _ => ",",
                    };
                    items.extend(words(sep));
                }
                items.push(Item::Node(self.arg_node(c)));
            }
            items
        };
        AnnotatedNode::new(NodeKind::Argument, &n.label, items)
    }

    fn with_lead(&self, lead: &str, n: &MrNode, tail: &str) -> Vec<Item> {
        let mut v = words(lead);
        v.push(Item::Node(self.arg_node(n)));
        v.extend(words(tail));
        v
    }

    fn date_phrase(&mut self, n: &MrNode) -> Vec<Item> {
        let lead = match n.children.first().map(|c| c.label.as_str()) {
            Some("weekday") => "on",
            Some("start_weekday") => "from",
            _ => "",
        };
        self.with_lead(lead, n, "")
    }

    fn phrase(&mut self, act: &str, n: &MrNode, precip_type: Option<&MrNode>) -> Result<Vec<Item>, RealizeError> {
        let label = n.label.as_str();
        let p = match label {
            "date_time" | "date_time_range" => self.date_phrase(n),
            "location" => {
                let lead = self.pick(&["in", "for"]);
                self.with_lead(lead, n, "")
            }
            "condition" => {
                let lead = match act {
                    "YES" => self.pick(&["expect", "there will be"]),
                    "NO" => self.pick(&["there won't be any", "don't expect"]),
                    _ => self.pick(&["it will be", "expect", "look for"]),
                };
                self.with_lead(lead, n, "")
            }
            "condition_not" => {
                let lead = self.pick(&["is not expecting any", "will not see any"]);
                self.with_lead(lead, n, "")
            }
            "temp" => {
                if self.rng.random_bool(0.5) {
                    self.with_lead("it is", n, "degrees")
                } else {
                    self.with_lead("temperatures around", n, "")
                }
            }
            "temp_high" => {
                let lead = self.pick(&["a high of", "highs around"]);
                self.with_lead(lead, n, "")
            }
            "temp_low" => {
                let lead = self.pick(&["a low of", "lows near"]);
                self.with_lead(lead, n, "")
            }
            "precip_chance" | "precip_chance_summary" => {
                let mut v = if label == "precip_chance" {
                    self.with_lead("a", n, "percent chance of")
                } else {
                    self.with_lead("a", n, "chance of")
                };
                match precip_type {
                    Some(t) => v.push(Item::Node(self.arg_node(t))),
                    None => v.extend(words("precipitation")),
                }
                v
            }
            "precip_type" => self.with_lead("some", n, ""),
            "wind_speed" => self.with_lead("winds up to", n, "mph"),
            "sunrise_time" => self.with_lead("sunrise at", n, ""),
            "sunset_time" => self.with_lead("sunset at", n, ""),
            "attire" => {
                let lead = self.pick(&["you should bring", "bring"]);
                self.with_lead(lead, n, "")
            }
            "attire_not" => {
                let lead = self.pick(&["you won't need", "no need for"]);
                self.with_lead(lead, n, "")
            }
            "activity" => {
                let lead = self.pick(&["it's a great day for", "go ahead with"]);
                self.with_lead(lead, n, "")
            }
            "activity_not" => {
                let lead = self.pick(&["it's not a good day for", "skip"]);
                self.with_lead(lead, n, "")
            }
            "error_reason" => self.with_lead("that is", n, ""),
            other => return Err(RealizeError::NoTemplate(other.to_string())),
        };
        Ok(p)
    }

    fn act(&mut self, n: &MrNode) -> Result<AnnotatedNode, RealizeError> {
        let mut framing = Vec::new();
        let mut content = Vec::new();
        let precip_type = n.children.iter().find(|c| c.label == "precip_type");
        let has_chance = n.children.iter().any(|c| c.label == "precip_chance" || c.label == "precip_chance_summary");
        let mut type_inline = None;
        if let (true, Some(t)) = (has_chance, precip_type) {
            if !self.elide(t) {
                type_inline = Some(t);
            }
        }
        for c in &n.children {
            if c.label == "precip_type" && has_chance {
                continue;
            }
            if self.elide(c) {
                continue;
            }
            let phrase = self.phrase(&n.label, c, type_inline)?;
            if c.label.starts_with("precip_chance") {
                type_inline = None;
            }
            match c.label.as_str() {
                "date_time" | "date_time_range" | "location" => framing.push(phrase),
                _ => content.push(phrase),
            }
        }
        // the chance was elided but the type was not
        if let Some(t) = type_inline {
            content.push(self.with_lead("some", t, ""));
        }
        if framing.len() == 2 && self.rng.random_bool(0.5) {
            framing.swap(0, 1);
        }
        let mut items = match n.label.as_str() {
            "YES" => words("yes ,"),
            "NO" => words("no ,"),
            "ERROR" => words("sorry ,"),
            "INFORM" | "RECOMMEND" => Vec::new(),
            other => return Err(RealizeError::NoTemplate(other.to_string())),
        };
        let framing_first = n.label == "INFORM" || self.rng.random_bool(0.5);
        let mut body = Vec::new();
        let k = content.len();
        for (i, p) in content.into_iter().enumerate() {
            if i > 0 {
                body.extend(words(if i + 1 == k { "and" } else { "," }));
            }
            body.extend(p);
        }
        let frame: Vec<Item> = framing.into_iter().flatten().collect();
        if framing_first {
            let had_frame = !frame.is_empty();
            items.extend(frame);
            if had_frame && !body.is_empty() {
                items.extend(words(","));
            }
            items.extend(body);
        } else {
            items.extend(body);
            items.extend(frame);
        }
        Ok(AnnotatedNode::new(NodeKind::DialogAct, &n.label, items))
    }

    fn relation(&mut self, n: &MrNode, top: bool) -> Result<AnnotatedNode, RealizeError> {
        let mut items = Vec::new();
        match n.label.as_str() {
            JOIN => {
                let k = n.children.len();
                for (i, c) in n.children.iter().enumerate() {
                    if i > 0 && !top {
                        items.extend(words(if i + 1 == k { "and" } else { "," }));
                    }
                    items.push(Item::Node(self.node(c, false)?));
                    if top {
                        items.extend(words("."));
                    }
                }
            }
            "CONTRAST" => {
                for (i, c) in n.children.iter().enumerate() {
                    if i > 0 {
                        let connective = self.pick(&[", but", ", but", ". however ,", ", although"]);
                        items.extend(words(connective));
                    }
                    items.push(Item::Node(self.node(c, false)?));
                }
            }
            "JUSTIFY" => {
                let nucleus_first = self.rng.random_bool(0.7);
                let (first, rest): (Vec<&MrNode>, &str) = if nucleus_first {
                    (n.children.iter().collect(), self.pick(&[", because", ", since", ", as"]))
                } else {
                    (n.children.iter().rev().collect(), self.pick(&[", so", ". so"]))
                };
                for (i, c) in first.into_iter().enumerate() {
                    if i > 0 {
                        items.extend(words(rest));
                    }
                    items.push(Item::Node(self.node(c, false)?));
                }
            }
            other => return Err(RealizeError::NoTemplate(other.to_string())),
        }
        Ok(AnnotatedNode::new(NodeKind::DiscourseRelation, &n.label, items))
    }

    fn node(&mut self, n: &MrNode, top: bool) -> Result<AnnotatedNode, RealizeError> {
        match n.kind {
            NodeKind::DiscourseRelation => self.relation(n, top),
            NodeKind::DialogAct => self.act(n),
            NodeKind::Argument => Err(RealizeError::NoTemplate(n.label.clone())),
        }
    }
}

/// Template realization of a weather MR. The result always passes the tree
/// check against `mr`.
pub fn realize<R: Rng>(mr: &MrTree, ellipsis_prob: f64, rng: &mut R) -> Result<AnnotatedTree, RealizeError> {
    let mut r = Realizer { rng, ellipsis_prob, realized: BTreeSet::new() };
    let root = r.node(mr.root(), true)?;
    let sentence_final = root.items.last().is_some_and(|i| matches!(i, Item::Word(w) if w == "."));
    let mut items = vec![Item::Node(root)];
    if !sentence_final {
        items.extend(words("."));
    }
    let tree = AnnotatedTree::new(items);
    let mut toks = tree.linearize();
    toks.push(Token::Eos);
    if !check_tree(mr, &toks) {
        return Err(RealizeError::Inconsistent(tree.to_string()));
    }
    Ok(tree)
}
