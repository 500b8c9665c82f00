//! Tree accuracy, corpus BLEU-4 and lexical diversity.
//!
//! Text metrics work on pre-tokenized word streams; nothing is normalized
//! behind the caller's back.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::check_tree;
use crate::mr::MrTree;
use crate::token::Token;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
const MAX_N: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("nothing to evaluate")]
    EmptyCorpus,
    #[error("{hypotheses} hypotheses but {references} reference groups")]
    LengthMismatch { hypotheses: usize, references: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeAccuracy {
    pub accuracy: f64,
    pub flags: Vec<bool>,
}

/// Fraction of predictions whose structure matches their MR. Missing end
/// markers are supplied.
pub fn tree_accuracy(pairs: &[(MrTree, Vec<Token>)]) -> Result<TreeAccuracy, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let flags: Vec<bool> = pairs
        .iter()
        .map(|(mr, toks)| {
            if toks.last() == Some(&Token::Eos) {
                check_tree(mr, toks)
            } else {
                let mut full = toks.clone();
                full.push(Token::Eos);
                check_tree(mr, &full)
            }
        })
        .collect();
    let ok = flags.iter().filter(|&&f| f).count();
    Ok(TreeAccuracy { accuracy: ok as f64 / flags.len() as f64, flags })
}

/// Plain words of a token stream: brackets, labels and the end marker
/// dropped.
pub fn surface_words(tokens: &[Token]) -> Vec<String> {
    tokens
        .iter()
        .filter_map(|t| match t {
            Token::Word(w) => Some(w.clone()),
            _ => None,
        })
        .collect()
}

fn ngram_counts<T: AsRef<str>>(words: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut m = HashMap::new();
    if words.len() >= n {
        for w in words.windows(n) {
            *m.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    m
}

#[derive(Clone, Copy, Debug, Default)]
struct Stats {
    matches: [usize; MAX_N],
    totals: [usize; MAX_N],
    hyp_len: usize,
    ref_len: usize,
}

fn sentence_stats<T: AsRef<str>>(hyp: &[T], refs: &[Vec<T>]) -> Stats {
    let mut s = Stats { hyp_len: hyp.len(), ..Default::default() };
    // closest reference length, shorter on ties
    s.ref_len = refs.iter().map(Vec::len).min_by_key(|&r| (r.abs_diff(hyp.len()), r)).unwrap_or(0);
    for n in 1..=MAX_N {
        let h = ngram_counts(hyp, n);
        let mut max_ref: HashMap<&Vec<&str>, usize> = HashMap::new();
        let ref_counts: Vec<_> = refs.iter().map(|r| ngram_counts(r, n)).collect();
        for rc in &ref_counts {
            for (g, &c) in rc {
                if h.contains_key(g) {
                    let e = max_ref.entry(g).or_insert(0);
                    *e = (*e).max(c);
                }
            }
        }
        s.totals[n - 1] = hyp.len().saturating_sub(n - 1);
        s.matches[n - 1] = h.iter().map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0))).sum();
    }
    s
}

fn combine(s: &Stats, smooth: bool) -> f64 {
    if s.hyp_len == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 0..MAX_N {
        let (m, t) = if smooth && n > 0 {
            (s.matches[n] as f64 + 1.0, s.totals[n] as f64 + 1.0)
        } else {
            (s.matches[n] as f64, s.totals[n] as f64)
        };
        if m == 0.0 || t == 0.0 {
            return 0.0;
        }
        log_sum += (m / t).ln();
    }
    let bp = if s.hyp_len < s.ref_len { (1.0 - s.ref_len as f64 / s.hyp_len as f64).exp() } else { 1.0 };
    bp * (log_sum / MAX_N as f64).exp()
}

/// Corpus BLEU-4 against one or more references per hypothesis, without
/// smoothing.
pub fn bleu4<T: AsRef<str>>(hypotheses: &[Vec<T>], references: &[Vec<Vec<T>>]) -> Result<f64, MetricsError> {
    if hypotheses.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    if hypotheses.len() != references.len() {
        return Err(MetricsError::LengthMismatch { hypotheses: hypotheses.len(), references: references.len() });
    }
    let mut total = Stats::default();
    for (h, r) in hypotheses.iter().zip(references) {
        let s = sentence_stats(h, r);
        for n in 0..MAX_N {
            total.matches[n] += s.matches[n];
            total.totals[n] += s.totals[n];
        }
        total.hyp_len += s.hyp_len;
        total.ref_len += s.ref_len;
    }
    Ok(combine(&total, false))
}

/// Sentence BLEU-4 with add-one smoothing on 2- to 4-gram precisions.
pub fn sentence_bleu<T: AsRef<str>>(hypothesis: &[T], references: &[Vec<T>]) -> f64 {
    combine(&sentence_stats(hypothesis, references), true)
}

/// For every flat-MR group, the index of the hypothesis scoring highest
/// against that group's references (first one on ties).
pub fn select_best_per_flat_mr<K, T>(
    groups: &BTreeMap<K, Vec<Vec<T>>>,
    references: &BTreeMap<K, Vec<Vec<T>>>,
) -> BTreeMap<K, usize>
where
    K: Ord + Clone,
    T: AsRef<str>,
{
    let none = Vec::new();
    groups
        .iter()
        .map(|(k, hyps)| {
            let refs = references.get(k).unwrap_or(&none);
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (i, h) in hyps.iter().enumerate() {
                let s = sentence_bleu(h, refs);
                if s > best_score {
                    best = i;
                    best_score = s;
                }
            }
            (k.clone(), best)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diversity {
    pub unique_tokens: usize,
    pub unique_trigrams: usize,
    pub shannon_entropy_bits: f64,
    pub conditional_bigram_entropy_bits: f64,
}

fn entropy_bits<K: Eq + Hash>(counts: &HashMap<K, usize>) -> f64 {
    let total: usize = counts.values().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    // fixed summation order keeps the result bit-identical across runs
    let mut cs: Vec<usize> = counts.values().copied().collect();
    cs.sort_unstable();
    let h: f64 = cs
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Token statistics of a set of hypotheses. The conditional entropy of a
/// token given its predecessor treats sentence starts as a predecessor of
/// their own, so it never exceeds the token entropy.
pub fn diversity<T: AsRef<str>>(hypotheses: &[Vec<T>]) -> Diversity {
    let mut unigrams: HashMap<&str, usize> = HashMap::new();
    let mut trigrams: HashMap<[&str; 3], usize> = HashMap::new();
    let mut bigrams: HashMap<(Option<&str>, &str), usize> = HashMap::new();
    let mut firsts: HashMap<Option<&str>, usize> = HashMap::new();
    for h in hypotheses {
        let ws: Vec<&str> = h.iter().map(AsRef::as_ref).collect();
        for (i, &w) in ws.iter().enumerate() {
            *unigrams.entry(w).or_insert(0) += 1;
            let prev = if i == 0 { None } else { Some(ws[i - 1]) };
            *bigrams.entry((prev, w)).or_insert(0) += 1;
            *firsts.entry(prev).or_insert(0) += 1;
        }
        for t in ws.windows(3) {
            *trigrams.entry([t[0], t[1], t[2]]).or_insert(0) += 1;
        }
    }
    Diversity {
        unique_tokens: unigrams.len(),
        unique_trigrams: trigrams.len(),
        shannon_entropy_bits: entropy_bits(&unigrams),
        conditional_bigram_entropy_bits: (entropy_bits(&bigrams) - entropy_bits(&firsts)).max(0.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub index: usize,
    pub mr: String,
    /// Empty when decoding failed.
    pub prediction: String,
    pub tree_valid: bool,
    pub decode_failed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub examples: usize,
    pub decode_failures: usize,
    pub tree_accuracy: f64,
    pub bleu4: f64,
    pub diversity: Diversity,
    pub records: Vec<ExampleRecord>,
}

/// Scores decoded outputs: tree accuracy over every example (failures count
/// as misses), corpus BLEU-4 of surface words with failures as empty
/// hypotheses, and diversity of the successful outputs.
pub fn evaluate(
    predictions: &[(MrTree, Option<Vec<Token>>)],
    references: &[Vec<Vec<String>>],
) -> Result<EvalReport, MetricsError> {
    if predictions.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    if predictions.len() != references.len() {
        return Err(MetricsError::LengthMismatch { hypotheses: predictions.len(), references: references.len() });
    }
    let mut records = Vec::with_capacity(predictions.len());
    let mut hyps = Vec::with_capacity(predictions.len());
    let mut produced = Vec::new();
    for (index, (mr, toks)) in predictions.iter().enumerate() {
        let (prediction, tree_valid) = match toks {
            Some(t) => {
                let words = surface_words(t);
                produced.push(words.clone());
                hyps.push(words);
                (crate::token::render(t), tree_accuracy(&[(mr.clone(), t.clone())])?.flags[0])
            }
            None => {
                hyps.push(Vec::new());
                (String::new(), false)
            }
        };
        records.push(ExampleRecord {
            index,
            mr: mr.to_string(),
            prediction,
            tree_valid,
            decode_failed: toks.is_none(),
        });
    }
    let valid = records.iter().filter(|r| r.tree_valid).count();
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        examples: records.len(),
        decode_failures: records.iter().filter(|r| r.decode_failed).count(),
        tree_accuracy: valid as f64 / records.len() as f64,
        bleu4: bleu4(&hyps, references)?,
        diversity: diversity(&produced),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identical_is_one_disjoint_is_zero() {
        let h = vec![w("the cat sat on the mat")];
        assert!((bleu4(&h, &[vec![w("the cat sat on the mat")]]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(bleu4(&h, &[vec![w("a dog lay under a rug")]]).unwrap(), 0.0);
        let empty: Vec<Vec<&str>> = vec![];
        assert_eq!(bleu4(&empty, &[]), Err(MetricsError::EmptyCorpus));
    }

    #[test]
    fn repeated_token_has_zero_entropy() {
        let d = diversity(&[w("a a a a")]);
        assert_eq!(d.unique_tokens, 1);
        assert_eq!(d.shannon_entropy_bits, 0.0);
        assert_eq!(d.unique_trigrams, 1);
    }

    #[test]
    fn uniform_tokens_have_log_entropy() {
        let d = diversity(&[w("a b c d e f g h")]);
        assert!((d.shannon_entropy_bits - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_groups_select_identity() {
        let mut g = BTreeMap::new();
        g.insert("x", vec![w("hello there")]);
        let r: BTreeMap<&str, Vec<Vec<&str>>> = BTreeMap::new();
        assert_eq!(select_best_per_flat_mr(&g, &r)["x"], 0);
    }
}
