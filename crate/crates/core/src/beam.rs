//! Beam search over a [`Scorer`], optionally masked by the constraint
//! automaton so every finished hypothesis realizes the MR exactly.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::{check_tree, ConstraintTracker, StateSet};
use crate::mr::MrTree;
use crate::scorer::{MrContext, Scorer, ScorerError, TokenId, CLOSE_ID, EOS_ID, UNK_ID};
use crate::token::Token;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    Constrained,
    Unconstrained,
    RerankByTreeAccuracy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub beam_size: usize,
    /// Maximum number of generated tokens, end marker included. `None`
    /// means twice the MR linearization length plus 64.
    pub max_length: Option<usize>,
    pub mode: DecodeMode,
    pub length_penalty: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig { beam_size: 10, max_length: None, mode: DecodeMode::Constrained, length_penalty: 0.0 }
    }
}

impl DecodeConfig {
    pub fn max_length_for(&self, mr: &MrTree) -> usize {
        self.max_length.unwrap_or(2 * mr.linearize().len() + 64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Generated tokens without the end marker.
    pub tokens: Vec<Token>,
    pub ids: Vec<TokenId>,
    /// Sum of per-step log-probabilities, end marker included.
    pub logprob: f64,
    /// Ranking score after the length penalty.
    pub score: f64,
    pub tree_valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Best first.
    pub candidates: Vec<Candidate>,
}

impl DecodeResult {
    pub fn best(&self) -> &Candidate {
        &self.candidates[0]
    }
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("no hypothesis finished within {max_length} tokens")]
    DecodingFailed {
        max_length: usize,
        /// Highest-scoring unfinished hypothesis, if any survived.
        partial: Option<Box<Candidate>>,
    },
    #[error("label `{0}` of the MR is missing from the scorer vocabulary")]
    MissingLabel(String),
    #[error("invalid decode configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

#[derive(Clone)]
struct Hyp {
    ids: Vec<TokenId>,
    logprob: f64,
    states: Option<StateSet>,
}

fn rank_score(logprob: f64, len: usize, penalty: f64) -> f64 {
    if penalty == 0.0 {
        logprob
    } else {
        logprob / ((5.0 + len as f64) / 6.0).powf(penalty)
    }
}

/// Higher score first; ties go to the lexicographically smaller id
/// sequence.
fn by_score(a: (f64, &[TokenId]), b: (f64, &[TokenId])) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Ids of the `k` best finite entries, best first, ties on smaller id.
fn top_k(scores: &[f64], ids: impl Iterator<Item = TokenId>, k: usize) -> Vec<TokenId> {
    let mut v: Vec<TokenId> = ids.filter(|&i| scores[i as usize].is_finite()).collect();
    let cmp = |a: &TokenId, b: &TokenId| scores[*b as usize].total_cmp(&scores[*a as usize]).then(a.cmp(b));
    if v.len() > k {
        v.select_nth_unstable_by(k, cmp);
        v.truncate(k);
    }
    v.sort_unstable_by(cmp);
    v
}

struct Decoder<'a> {
    mr: &'a MrTree,
    scorer: &'a dyn Scorer,
    config: &'a DecodeConfig,
    tracker: Option<ConstraintTracker>,
    /// Structural ids the tracker can ever accept.
    structural: Vec<TokenId>,
    is_structural: Vec<bool>,
    context: MrContext,
}

impl<'a> Decoder<'a> {
    fn new(mr: &'a MrTree, scorer: &'a dyn Scorer, config: &'a DecodeConfig) -> Result<Self, DecodeError> {
        let vocab = scorer.vocab();
        let constrained = config.mode == DecodeMode::Constrained;
        let tracker = constrained.then(|| ConstraintTracker::new(mr));
        let mut is_structural = vec![false; vocab.len()];
        for (id, item) in vocab.iter() {
            is_structural[id as usize] = !Token::from_item(item).is_word();
        }
        let mut structural = vec![CLOSE_ID, EOS_ID];
        let mut labels: Vec<String> = Vec::new();
        mr.root().walk(&mut |n| labels.push(n.label.clone()));
        labels.sort();
        labels.dedup();
        for l in labels {
            let open = Token::open(l.as_str());
            match vocab.get(&open.to_string()) {
                Some(id) => structural.push(id),
                None => return Err(DecodeError::MissingLabel(l)),
            }
        }
        structural.sort_unstable();
        Ok(Decoder { mr, scorer, config, tracker, structural, is_structural, context: MrContext::new(mr, vocab) })
    }

    /// Up to `beam_size` successors of `h`, best first.
    fn expand(&self, h: &Hyp) -> Result<Vec<Hyp>, DecodeError> {
        let lp = self.scorer.logprobs(&h.ids, &self.context)?;
        let k = self.config.beam_size;
        let vocab_len = lp.len() as TokenId;
        let mut out = Vec::new();
        let child = |id: TokenId, states: Option<StateSet>| {
            let mut ids = h.ids.clone();
            ids.push(id);
            Hyp { ids, logprob: h.logprob + lp[id as usize], states }
        };
        match (&self.tracker, &h.states) {
            (Some(t), Some(states)) => {
                let words = (0..vocab_len).filter(|&i| !self.is_structural[i as usize] && i != UNK_ID);
                for id in top_k(&lp, words, k) {
                    out.push(child(id, Some(states.clone())));
                }
                for &id in &self.structural {
                    if !lp[id as usize].is_finite() {
                        continue;
                    }
                    let tok = self.scorer.vocab().token(id);
                    if let Ok(next) = t.accept_token(states, &tok) {
                        out.push(child(id, Some(next)));
                    }
                }
            }
            _ => {
                for id in top_k(&lp, (0..vocab_len).filter(|&i| i != UNK_ID), k) {
                    out.push(child(id, None));
                }
            }
        }
        Ok(out)
    }

    fn finish(&self, h: Hyp) -> Candidate {
        let body = &h.ids[..h.ids.len() - usize::from(h.ids.last() == Some(&EOS_ID))];
        let tokens = self.scorer.vocab().tokens(body);
        let mut full = tokens.clone();
        full.push(Token::Eos);
        Candidate {
            tree_valid: check_tree(self.mr, &full),
            score: rank_score(h.logprob, h.ids.len(), self.config.length_penalty),
            ids: body.to_vec(),
            logprob: h.logprob,
            tokens,
        }
    }

    fn run(&self) -> Result<DecodeResult, DecodeError> {
        let k = self.config.beam_size;
        let max_length = self.config.max_length_for(self.mr);
        let mut live =
            vec![Hyp { ids: Vec::new(), logprob: 0.0, states: self.tracker.as_ref().map(|t| t.initial_states()) }];
        let mut finished: Vec<Hyp> = Vec::new();
        for _ in 0..max_length {
            if live.is_empty() || finished.len() >= k {
                break;
            }
            let mut next = Vec::new();
            for h in &live {
                next.extend(self.expand(h)?);
            }
            let penalty = self.config.length_penalty;
            next.sort_by(|a, b| {
                by_score(
                    (rank_score(a.logprob, a.ids.len(), penalty), &a.ids),
                    (rank_score(b.logprob, b.ids.len(), penalty), &b.ids),
                )
            });
            live.clear();
            for h in next {
                if live.len() >= k {
                    break;
                }
                if h.ids.last() == Some(&EOS_ID) {
                    finished.push(h);
                } else {
                    live.push(h);
                }
            }
        }
        if finished.is_empty() {
            return Err(DecodeError::DecodingFailed {
                max_length,
                partial: live.into_iter().next().map(|h| Box::new(self.finish(h))),
            });
        }
        let mut candidates: Vec<Candidate> = finished.into_iter().map(|h| self.finish(h)).collect();
        candidates.sort_by(|a, b| by_score((a.score, &a.ids), (b.score, &b.ids)));
        if self.config.mode == DecodeMode::RerankByTreeAccuracy {
            candidates = rerank_by_tree_accuracy(candidates, self.mr);
        }
        Ok(DecodeResult { candidates })
    }
}

pub fn decode(mr: &MrTree, scorer: &dyn Scorer, config: &DecodeConfig) -> Result<DecodeResult, DecodeError> {
    if config.beam_size == 0 {
        return Err(DecodeError::InvalidConfig("beam size must be positive".into()));
    }
    if config.max_length.is_some_and(|m| m < 2) {
        return Err(DecodeError::InvalidConfig("max length must be at least 2".into()));
    }
    Decoder::new(mr, scorer, config)?.run()
}

/// Stable partition: tree-valid candidates first, each class keeping its
/// incoming order.
pub fn rerank_by_tree_accuracy(candidates: Vec<Candidate>, mr: &MrTree) -> Vec<Candidate> {
    let (mut valid, invalid): (Vec<Candidate>, Vec<Candidate>) = candidates
        .into_iter()
        .map(|mut c| {
            let mut full = c.tokens.clone();
            full.push(Token::Eos);
            c.tree_valid = check_tree(mr, &full);
            c
        })
        .partition(|c| c.tree_valid);
    valid.extend(invalid);
    valid
}
