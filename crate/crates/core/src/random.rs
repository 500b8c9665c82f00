//! Random ontology-valid MRs over a small label alphabet, for property
//! tests and fuzzing. Small alphabets make repeated (elidable) subtrees
//! common.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::mr::{MrNode, MrTree};
use crate::ontology::{ArgumentSpec, Ontology, JOIN};

/// Ontology used by the generator: two acts, three relations, three leaf
/// arguments and one nested argument with two subfields.
pub fn toy_ontology() -> Ontology {
    Ontology::new(
        ["INFORM".to_string(), "RECOMMEND".to_string()],
        [JOIN.to_string(), "CONTRAST".to_string(), "JUSTIFY".to_string()],
        vec![
            ArgumentSpec::leaf("a").negatable(),
            ArgumentSpec::leaf("b"),
            ArgumentSpec::leaf("c"),
            ArgumentSpec::leaf("n").with_subfields(&["s", "t"]),
        ],
        ["b".to_string()],
    )
    .expect("toy ontology is well formed")
}

#[derive(Clone, Debug)]
pub struct RandomMrConfig {
    pub max_nodes: usize,
    /// Probability that the root is a discourse relation.
    pub relation_root: f64,
    pub max_depth: usize,
    pub values: Vec<String>,
}

impl Default for RandomMrConfig {
    fn default() -> Self {
        RandomMrConfig { max_nodes: 7, relation_root: 0.7, max_depth: 3, values: vec!["x".into(), "y".into()] }
    }
}

fn random_arg<R: Rng>(rng: &mut R, cfg: &RandomMrConfig) -> MrNode {
    match rng.random_range(0..5) {
        0 => {
            let mut subs = vec![MrNode::arg("s", cfg.values.choose(rng).unwrap())];
            if rng.random_bool(0.4) {
                subs.push(MrNode::arg("t", cfg.values.choose(rng).unwrap()));
            }
            MrNode::nested("n", subs)
        }
        k => {
            let label = ["a", "b", "c", "a_not"][k - 1];
            MrNode::arg(label, cfg.values.choose(rng).unwrap())
        }
    }
}

fn random_act<R: Rng>(rng: &mut R, cfg: &RandomMrConfig) -> MrNode {
    let label = if rng.random_bool(0.8) { "INFORM" } else { "RECOMMEND" };
    let n = rng.random_range(0..=3);
    let args = (0..n).map(|_| random_arg(rng, cfg)).collect();
    MrNode::act(label, args)
}

fn random_node<R: Rng>(rng: &mut R, cfg: &RandomMrConfig, depth: usize) -> MrNode {
    let relation = depth < cfg.max_depth && rng.random_bool(if depth == 0 { cfg.relation_root } else { 0.25 });
    if !relation {
        return random_act(rng, cfg);
    }
    let label = ["JOIN", "CONTRAST", "JUSTIFY"][rng.random_range(0..3)];
    let n = rng.random_range(1..=3);
    let mut children: Vec<MrNode> = (0..n).map(|_| random_node(rng, cfg, depth + 1)).collect();
    if rng.random_bool(0.2) {
        // repeat a sibling to create a group of identical acts
        let dup = children[rng.random_range(0..children.len())].clone();
        children.push(dup);
    }
    MrNode::relation(label, children)
}

/// Draws trees until one fits within `cfg.max_nodes`.
pub fn random_mr<R: Rng>(rng: &mut R, cfg: &RandomMrConfig) -> MrTree {
    loop {
        let root = random_node(rng, cfg, 0);
        if root.node_count() <= cfg.max_nodes {
            return MrTree::new(root);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_trees_are_valid_and_bounded() {
        let o = toy_ontology();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = RandomMrConfig::default();
        for _ in 0..200 {
            let t = random_mr(&mut rng, &cfg);
            assert!(t.node_count() <= 7);
            t.validate(&o).unwrap();
        }
    }
}
