//! Next-token distributions for the decoder.
//!
//! A [`Scorer`] maps an output prefix and the MR being realized to a
//! log-probability for every vocabulary item. The decoder only ever needs
//! this interface, so a neural model can be plugged in through
//! [`ExternalScorer`] while tests use [`UniformScorer`] or the
//! [`NGramModel`].

mod external;
mod ngram;
mod vocab;

use thiserror::Error;

pub use external::{serve, ExternalScorer, Handshake, Request, Response};
pub use ngram::{NGramConfig, NGramModel};
pub use vocab::{MrContext, TokenId, Vocabulary, CLOSE_ID, EOS_ID, UNK_ID};

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("token id {0} is outside the vocabulary")]
    UnknownToken(TokenId),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("external scorer unavailable: {0}")]
    ScorerUnavailable(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait Scorer: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    /// Log-probabilities over the whole vocabulary for the token following
    /// `prefix`.
    fn logprobs(&self, prefix: &[TokenId], context: &MrContext) -> Result<Vec<f64>, ScorerError>;
}

/// Every token equally likely.
pub struct UniformScorer {
    vocab: Vocabulary,
}

impl UniformScorer {
    pub fn new(vocab: Vocabulary) -> Self {
        UniformScorer { vocab }
    }
}

impl Scorer for UniformScorer {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn logprobs(&self, prefix: &[TokenId], _context: &MrContext) -> Result<Vec<f64>, ScorerError> {
        self.vocab.check_ids(prefix)?;
        let n = self.vocab.len();
        Ok(vec![-(n as f64).ln(); n])
    }
}

/// `ln(sum(exp(x)))`, stable for large negative inputs.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
