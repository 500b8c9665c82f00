//! Legal labels for meaning representations: dialog acts, discourse
//! relations and (possibly nested) arguments.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The three kinds of non-terminal that can appear in an MR.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    DiscourseRelation,
    DialogAct,
    Argument,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentSpec {
    pub name: String,
    /// Admits a `<name>_not` variant.
    #[serde(default)]
    pub negatable: bool,
    /// Admits a `<name>_summary` variant.
    #[serde(default)]
    pub summarizable: bool,
    #[serde(default)]
    pub subfields: Vec<String>,
}

impl ArgumentSpec {
    pub fn leaf(name: &str) -> Self {
        ArgumentSpec { name: name.to_string(), negatable: false, summarizable: false, subfields: Vec::new() }
    }

    pub fn negatable(mut self) -> Self {
        self.negatable = true;
        self
    }

    pub fn summarizable(mut self) -> Self {
        self.summarizable = true;
        self
    }

    pub fn with_subfields(mut self, subfields: &[&str]) -> Self {
        self.subfields = subfields.iter().map(|s| s.to_string()).collect();
        self
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OntologyError {
    #[error("label `{0}` is declared in more than one label class")]
    OverlappingLabel(String),
    #[error("argument `{argument}` declares subfield `{subfield}` more than once")]
    DuplicateSubfield { argument: String, subfield: String },
    #[error("delexicalized argument `{0}` is not declared")]
    UnknownDelexArgument(String),
}

/// A label after resolution against the ontology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedLabel {
    pub kind: NodeKind,
    /// Canonical spelling as declared.
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    dialog_acts: BTreeSet<String>,
    discourse_relations: BTreeSet<String>,
    arguments: BTreeMap<String, ArgumentSpec>,
    delexicalized_args: BTreeSet<String>,
}

/// Label of the relation inserted above multiple top-level nodes.
pub const JOIN: &str = "JOIN";

impl Ontology {
    pub fn new(
        dialog_acts: impl IntoIterator<Item = String>,
        discourse_relations: impl IntoIterator<Item = String>,
        arguments: impl IntoIterator<Item = ArgumentSpec>,
        delexicalized_args: impl IntoIterator<Item = String>,
    ) -> Result<Self, OntologyError> {
        let ontology = Ontology {
            dialog_acts: dialog_acts.into_iter().collect(),
            discourse_relations: discourse_relations.into_iter().collect(),
            arguments: arguments.into_iter().map(|a| (a.name.clone(), a)).collect(),
            delexicalized_args: delexicalized_args.into_iter().collect(),
        };
        ontology.validate()?;
        Ok(ontology)
    }

    fn validate(&self) -> Result<(), OntologyError> {
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let all = self.dialog_acts.iter().chain(self.discourse_relations.iter()).cloned().chain(self.argument_labels());
        for label in all {
            if !seen.insert(label.to_ascii_lowercase()) {
                return Err(OntologyError::OverlappingLabel(label));
            }
        }
        for arg in self.arguments.values() {
            let mut subs = BTreeSet::new();
            for sub in &arg.subfields {
                if !subs.insert(sub.to_ascii_lowercase()) {
                    return Err(OntologyError::DuplicateSubfield { argument: arg.name.clone(), subfield: sub.clone() });
                }
            }
        }
        for d in &self.delexicalized_args {
            if self.resolve_any_argument(d).is_none() {
                return Err(OntologyError::UnknownDelexArgument(d.clone()));
            }
        }
        Ok(())
    }

    /// Top-level argument labels including `_not` and `_summary` variants.
    fn argument_labels(&self) -> impl Iterator<Item = String> + '_ {
        self.arguments.values().flat_map(|a| {
            let mut v = vec![a.name.clone()];
            if a.negatable {
                v.push(format!("{}_not", a.name));
            }
            if a.summarizable {
                v.push(format!("{}_summary", a.name));
            }
            v
        })
    }

    /// The weather-domain ontology: acts, relations, arguments and nested
    /// subfields as collected for the weather dataset.
    pub fn weather() -> Self {
        let acts = ["INFORM", "RECOMMEND", "YES", "NO", "ERROR"];
        let rels = [JOIN, "CONTRAST", "JUSTIFY"];
        let date_time = ["year", "month", "day", "weekday", "colloquial"];
        let date_time_range = [
            "start_year",
            "start_month",
            "start_day",
            "start_weekday",
            "end_year",
            "end_month",
            "end_day",
            "end_weekday",
            "colloquial",
        ];
        let location = ["city", "region", "country", "colloquial"];
        let args = vec![
            ArgumentSpec::leaf("date_time").with_subfields(&date_time),
            ArgumentSpec::leaf("date_time_range").with_subfields(&date_time_range),
            ArgumentSpec::leaf("location").with_subfields(&location),
            ArgumentSpec::leaf("attire").negatable(),
            ArgumentSpec::leaf("activity").negatable(),
            ArgumentSpec::leaf("condition").negatable(),
            ArgumentSpec::leaf("humidity").negatable(),
            ArgumentSpec::leaf("precip_amount"),
            ArgumentSpec::leaf("precip_amount_unit"),
            ArgumentSpec::leaf("precip_chance"),
            ArgumentSpec::leaf("precip_chance_summary"),
            ArgumentSpec::leaf("precip_type"),
            ArgumentSpec::leaf("sunrise_time"),
            ArgumentSpec::leaf("temp"),
            ArgumentSpec::leaf("temp_high").summarizable(),
            ArgumentSpec::leaf("temp_low").summarizable(),
            ArgumentSpec::leaf("temp_unit"),
            ArgumentSpec::leaf("wind_speed").negatable(),
            ArgumentSpec::leaf("wind_speed_unit"),
            ArgumentSpec::leaf("sunset_time"),
            ArgumentSpec::leaf("task"),
            ArgumentSpec::leaf("bad_arg"),
            ArgumentSpec::leaf("bad_value"),
            ArgumentSpec::leaf("error_reason"),
        ];
        let delex = [
            "temp",
            "temp_high",
            "temp_low",
            "precip_chance",
            "day",
            "month",
            "year",
            "start_day",
            "start_month",
            "start_year",
            "end_day",
            "end_month",
            "end_year",
            "city",
            "region",
            "country",
            "weekday",
            "start_weekday",
            "end_weekday",
        ];
        Ontology::new(
            acts.iter().map(|s| s.to_string()),
            rels.iter().map(|s| s.to_string()),
            args,
            delex.iter().map(|s| s.to_string()),
        )
        .expect("built-in weather ontology is well formed")
    }

    /// Restaurant-domain ontology with E2E slot names.
    pub fn e2e() -> Self {
        let args =
            ["name", "eatType", "food", "priceRange", "customerRating", "rating", "area", "familyFriendly", "near"]
                .iter()
                .map(|n| ArgumentSpec::leaf(n))
                .collect::<Vec<_>>();
        Ontology::new(
            ["INFORM".to_string()],
            [JOIN.to_string(), "CONTRAST".to_string()],
            args,
            ["name".to_string(), "near".to_string()],
        )
        .expect("built-in e2e ontology is well formed")
    }

    /// Returns a copy with an extra top-level argument.
    pub fn with_argument(&self, arg: ArgumentSpec) -> Result<Self, OntologyError> {
        let mut o = self.clone();
        o.arguments.insert(arg.name.clone(), arg);
        o.validate()?;
        Ok(o)
    }

    pub fn dialog_acts(&self) -> impl Iterator<Item = &str> {
        self.dialog_acts.iter().map(String::as_str)
    }

    pub fn discourse_relations(&self) -> impl Iterator<Item = &str> {
        self.discourse_relations.iter().map(String::as_str)
    }

    pub fn arguments(&self) -> impl Iterator<Item = &ArgumentSpec> {
        self.arguments.values()
    }

    pub fn argument(&self, name: &str) -> Option<&ArgumentSpec> {
        self.arguments.get(name)
    }

    pub fn is_delexicalized(&self, label: &str) -> bool {
        self.delexicalized_args.contains(label)
    }

    /// Every label that can open a span, in canonical spelling.
    pub fn all_labels(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> =
            self.dialog_acts.iter().chain(self.discourse_relations.iter()).cloned().collect();
        out.extend(self.argument_labels());
        for a in self.arguments.values() {
            out.extend(a.subfields.iter().cloned());
        }
        out
    }

    fn find_ci<'a>(set: impl Iterator<Item = &'a String>, label: &str) -> Option<String> {
        set.into_iter().find(|l| l.eq_ignore_ascii_case(label)).cloned()
    }

    /// Resolves a label that may appear directly below a dialog act.
    pub fn resolve_top_argument(&self, label: &str) -> Option<String> {
        Self::find_ci(self.argument_labels().collect::<Vec<_>>().iter(), label)
    }

    /// Resolves a subfield of `parent` (canonical parent spelling).
    pub fn resolve_subfield(&self, parent: &str, label: &str) -> Option<String> {
        let base = self.base_argument(parent)?;
        Self::find_ci(base.subfields.iter(), label)
    }

    fn resolve_any_argument(&self, label: &str) -> Option<String> {
        self.resolve_top_argument(label)
            .or_else(|| self.arguments.values().find_map(|a| Self::find_ci(a.subfields.iter(), label)))
    }

    /// The declaring argument for a top-level argument label or variant.
    fn base_argument(&self, label: &str) -> Option<&ArgumentSpec> {
        if let Some(a) = self.arguments.get(label) {
            return Some(a);
        }
        let stripped = label.strip_suffix("_not").or_else(|| label.strip_suffix("_summary"))?;
        self.arguments.get(stripped)
    }

    /// Resolves an act or relation label, ignoring case.
    pub fn resolve_structural(&self, label: &str) -> Option<ResolvedLabel> {
        if let Some(l) = Self::find_ci(self.discourse_relations.iter(), label) {
            return Some(ResolvedLabel { kind: NodeKind::DiscourseRelation, label: l });
        }
        Self::find_ci(self.dialog_acts.iter(), label).map(|l| ResolvedLabel { kind: NodeKind::DialogAct, label: l })
    }

    /// Resolves `label` given the kind and canonical label of the
    /// enclosing node (`None` at top level). Display suffixes such as the
    /// `_1` in `INFORM_1` are stripped when the raw label is unknown.
    pub fn resolve_in(&self, parent: Option<(NodeKind, &str)>, label: &str) -> Option<ResolvedLabel> {
        let attempt = |l: &str| -> Option<ResolvedLabel> {
            match parent {
                None | Some((NodeKind::DiscourseRelation, _)) => self.resolve_structural(l),
                Some((NodeKind::DialogAct, _)) => {
                    self.resolve_top_argument(l).map(|label| ResolvedLabel { kind: NodeKind::Argument, label })
                }
                Some((NodeKind::Argument, p)) => {
                    self.resolve_subfield(p, l).map(|label| ResolvedLabel { kind: NodeKind::Argument, label })
                }
            }
        };
        attempt(label).or_else(|| strip_display_suffix(label).and_then(attempt))
    }

    /// Whether `label` is known anywhere in the ontology.
    pub fn knows(&self, label: &str) -> bool {
        let known = |l: &str| self.resolve_structural(l).is_some() || self.resolve_any_argument(l).is_some();
        known(label) || strip_display_suffix(label).is_some_and(known)
    }
}

/// `INFORM_2` -> `INFORM`; `None` when there is no numeric suffix.
pub fn strip_display_suffix(label: &str) -> Option<&str> {
    let (head, tail) = label.rsplit_once('_')?;
    if !head.is_empty() && !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) {
        Some(head)
    } else {
        None
    }
}
