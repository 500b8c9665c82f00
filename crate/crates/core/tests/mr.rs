use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use treenlg::delex::{delexicalize_pair, is_placeholder, relexicalize};
use treenlg::mr::{AnnotatedNode, Item};
use treenlg::preprocess::filter_to_reference;
use treenlg::random::{random_mr, toy_ontology, RandomMrConfig};
use treenlg::token::{render, Token};
use treenlg::weather::{synthesize_corpus, WeatherConfig};
use treenlg::{check_tree, AnnotatedTree, MrNode, MrTree, NodeKind, Ontology};

fn act_triples(mr: &MrTree) -> Vec<(String, String, String)> {
    let mut out = Vec::new();
    mr.root().walk(&mut |n| {
        if n.kind == NodeKind::DialogAct {
            for a in &n.children {
                out.push((n.label.clone(), a.label.clone(), render(&a.linearize())));
            }
        }
    });
    out.sort();
    out
}

#[test]
fn random_trees_round_trip() {
    let o = toy_ontology();
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let cfg = RandomMrConfig { max_nodes: 12, ..RandomMrConfig::default() };
    for _ in 0..1000 {
        let mr = random_mr(&mut rng, &cfg);
        let text = mr.to_string();
        assert_eq!(MrTree::parse(&text, &o).unwrap(), mr);
        let ann = mr.to_annotated();
        assert_eq!(AnnotatedTree::parse(&ann.to_string(), &o).unwrap(), ann);

        let c = mr.canonicalize();
        assert_eq!(c.canonicalize(), c);
        assert_eq!(act_triples(&c), act_triples(&mr));
        assert_eq!(c.signature(), mr.signature());
    }
}

#[test]
fn annotated_responses_round_trip() {
    let o = Ontology::weather();
    let c = synthesize_corpus(300, 52, 1.0, &WeatherConfig::default()).unwrap();
    for r in &c.train {
        let a = AnnotatedTree::parse(&r.annotated_response, &o).unwrap();
        assert_eq!(a.to_string(), r.annotated_response);
        assert_eq!(a.surface(), r.response);
    }
}

/// Rendered subtree → number of occurrences anywhere in the tree.
fn occurrences(mr: &MrTree) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    mr.root().walk(&mut |n| *m.entry(render(&n.linearize())).or_insert(0) += 1);
    m
}

/// Removes the `k`-th argument (pre-order over act children) if it is not
/// the only argument of its act.
fn delete_argument(n: &MrNode, k: &mut usize, target: usize) -> MrNode {
    let mut out = n.clone();
    if n.kind == NodeKind::DialogAct {
        let mut kept = Vec::new();
        for c in &n.children {
            let hit = *k == target && n.children.len() > 1;
            *k += 1;
            if !hit {
                kept.push(c.clone());
            }
        }
        out.children = kept;
    } else {
        out.children = n.children.iter().map(|c| delete_argument(c, k, target)).collect();
    }
    out
}

fn nth_argument(mr: &MrTree, target: usize) -> Option<String> {
    let mut k = 0;
    let mut found = None;
    mr.root().walk(&mut |n| {
        if n.kind == NodeKind::DialogAct {
            for c in &n.children {
                if k == target && n.children.len() > 1 {
                    found = Some(render(&c.linearize()));
                }
                k += 1;
            }
        }
    });
    found
}

#[test]
fn filtering_recovers_programmatic_deletions() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let cfg =
        RandomMrConfig { values: vec!["x".into(), "y".into(), "z".into(), "w".into()], ..RandomMrConfig::default() };
    let mut deleted = 0;
    for _ in 0..600 {
        let mr = random_mr(&mut rng, &cfg);
        let n_args: usize = mr.dialog_acts().iter().map(|a| a.children.len()).sum();
        if n_args == 0 {
            continue;
        }
        let target = rng.random_range(0..n_args);
        let Some(victim) = nth_argument(&mr, target) else {
            continue;
        };
        if occurrences(&mr)[&victim] > 1 {
            continue;
        }
        let expected = MrTree::new(delete_argument(mr.root(), &mut 0, target));
        let reference = expected.to_annotated();
        let filtered = filter_to_reference(&mr, &reference).unwrap();
        assert_eq!(filtered, expected, "mr = {mr}");
        let mut toks = reference.linearize();
        toks.push(Token::Eos);
        assert!(check_tree(&filtered, &toks));
        deleted += 1;
    }
    assert!(deleted > 200);
}

#[test]
fn filtering_keeps_elided_repeats() {
    let o = Ontology::weather();
    let c = synthesize_corpus(400, 54, 1.0, &WeatherConfig::default()).unwrap();
    for r in &c.train {
        let mr = MrTree::parse(&r.mr, &o).unwrap();
        let a = AnnotatedTree::parse(&r.annotated_response, &o).unwrap();
        assert_eq!(filter_to_reference(&mr, &a).unwrap(), mr);
    }
    let mr = MrTree::parse("[INFORM [condition sunny ] [temp 40 ] ]", &o).unwrap();
    let bad = AnnotatedTree::parse("[CONTRAST [INFORM [condition sunny ] ] ]", &o).unwrap();
    assert!(filter_to_reference(&mr, &bad).is_err());
}

#[test]
fn flattening_numbers_arguments_by_act() {
    let o = Ontology::weather();
    let c = synthesize_corpus(100, 55, 1.0, &WeatherConfig::default()).unwrap();
    for r in &c.train {
        let mr = MrTree::parse(&r.mr, &o).unwrap();
        let flat = mr.flatten();
        let mut expected = Vec::new();
        for (i, act) in mr.dialog_acts().iter().enumerate() {
            let mut labels: Vec<String> = act.children.iter().map(|a| format!("{}{}", a.label, i + 1)).collect();
            labels.sort();
            expected.extend(labels);
        }
        let keys: Vec<String> = flat.0.iter().map(|(k, _)| k.clone()).collect();
        assert_eq!(keys, expected);
    }
    let single = MrTree::parse("[INFORM [temp 40 ] ]", &o).unwrap();
    assert_eq!(single.flatten().to_string(), "temp1[40]");
}

fn leaf_words<'a>(n: &'a AnnotatedNode, ontology: &Ontology, out: &mut Vec<&'a str>) {
    let leaf = n.child_nodes().next().is_none();
    if n.kind == NodeKind::Argument && leaf && ontology.is_delexicalized(&n.label) {
        out.extend(n.own_words());
    }
    for c in n.child_nodes() {
        leaf_words(c, ontology, out);
    }
}

#[test]
fn delexicalization_round_trips() {
    let o = Ontology::weather();
    let c = synthesize_corpus(300, 56, 1.0, &WeatherConfig::default()).unwrap();
    for r in &c.train {
        let mr = MrTree::parse(&r.mr, &o).unwrap();
        let a = AnnotatedTree::parse(&r.annotated_response, &o).unwrap();
        let (dm, da, table) = delexicalize_pair(&mr, &a, &o);
        let mut words = Vec::new();
        for item in &da.items {
            if let Item::Node(n) = item {
                leaf_words(n, &o, &mut words);
            }
        }
        assert!(words.iter().all(|w| is_placeholder(w)), "{da}");
        let back = relexicalize(&da.linearize(), &table).unwrap();
        assert_eq!(back, a.linearize());
        let back_mr = relexicalize(&dm.linearize(), &table).unwrap();
        assert_eq!(back_mr, mr.linearize());
    }
}
