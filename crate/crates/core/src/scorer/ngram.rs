use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MrContext, Scorer, ScorerError, TokenId, Vocabulary};
use crate::mr::MrTree;
use crate::token::Token;

/// Padding symbol for the start of a sequence. It never appears as a
/// prediction target, so it has no vocabulary id.
const BOS: TokenId = TokenId::MAX;
const FORMAT: &str = "treenlg-ngram";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NGramConfig {
    pub order: usize,
    pub discount: f64,
    /// Signatures with at least this many training examples get their own
    /// sub-model.
    pub min_signature_examples: usize,
}

impl Default for NGramConfig {
    fn default() -> Self {
        NGramConfig { order: 4, discount: 0.75, min_signature_examples: 5 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct ContextCounts {
    total: u64,
    /// Sorted by token id.
    next: Vec<(TokenId, u64)>,
}

/// Counts for every context length `0..order`.
#[derive(Clone, Debug, PartialEq)]
struct Counts {
    tables: Vec<HashMap<Vec<TokenId>, ContextCounts>>,
}

impl Counts {
    fn train<'a>(order: usize, seqs: impl Iterator<Item = &'a [TokenId]>) -> Self {
        let mut raw: Vec<HashMap<Vec<TokenId>, BTreeMap<TokenId, u64>>> = vec![HashMap::new(); order];
        for seq in seqs {
            let mut padded = vec![BOS; order - 1];
            padded.extend_from_slice(seq);
            for i in order - 1..padded.len() {
                let target = padded[i];
                for (k, table) in raw.iter_mut().enumerate() {
                    let ctx = padded[i - k..i].to_vec();
                    *table.entry(ctx).or_default().entry(target).or_insert(0) += 1;
                }
            }
        }
        let tables = raw
            .into_iter()
            .map(|t| {
                t.into_iter()
                    .map(|(ctx, next)| {
                        let total = next.values().sum();
                        (ctx, ContextCounts { total, next: next.into_iter().collect() })
                    })
                    .collect()
            })
            .collect();
        Counts { tables }
    }

    /// Interpolated absolute discounting over `base`, shortest context
    /// first.
    fn distribution(&self, history: &[TokenId], discount: f64, base: Vec<f64>) -> Vec<f64> {
        let order = self.tables.len();
        let mut padded: Vec<TokenId> = vec![BOS; (order - 1).saturating_sub(history.len())];
        let keep = history.len().min(order - 1);
        padded.extend_from_slice(&history[history.len() - keep..]);
        let mut p = base;
        for (k, table) in self.tables.iter().enumerate() {
            let ctx = &padded[padded.len() - k..];
            let Some(c) = table.get(ctx) else { continue };
            let total = c.total as f64;
            let backoff = discount * c.next.len() as f64 / total;
            for x in p.iter_mut() {
                *x *= backoff;
            }
            for &(t, n) in &c.next {
                p[t as usize] += (n as f64 - discount).max(0.0) / total;
            }
        }
        p
    }

    fn truncate(&mut self) {
        self.tables.pop();
    }

    fn to_stored(&self) -> Vec<StoredContext> {
        let mut out: Vec<StoredContext> = self
            .tables
            .iter()
            .flat_map(|t| t.iter().map(|(ctx, c)| StoredContext { context: ctx.clone(), next: c.next.clone() }))
            .collect();
        out.sort_by(|a, b| (a.context.len(), &a.context).cmp(&(b.context.len(), &b.context)));
        out
    }

    fn from_stored(order: usize, stored: Vec<StoredContext>, vocab_len: usize) -> Result<Self, ScorerError> {
        let mut tables: Vec<HashMap<Vec<TokenId>, ContextCounts>> = vec![HashMap::new(); order];
        for s in stored {
            let k = s.context.len();
            if k >= order {
                return Err(ScorerError::Format(format!("context of length {k} in an order-{order} model")));
            }
            if let Some(&(bad, _)) = s.next.iter().find(|(t, _)| *t as usize >= vocab_len) {
                return Err(ScorerError::UnknownToken(bad));
            }
            let total = s.next.iter().map(|(_, n)| n).sum();
            if total == 0 {
                return Err(ScorerError::Format("context with no continuations".into()));
            }
            let mut next = s.next;
            next.sort_unstable();
            tables[k].insert(s.context, ContextCounts { total, next });
        }
        Ok(Counts { tables })
    }
}

#[derive(Serialize, Deserialize)]
struct StoredContext {
    context: Vec<TokenId>,
    next: Vec<(TokenId, u64)>,
}

#[derive(Serialize, Deserialize)]
struct StoredModel {
    format: String,
    version: u32,
    config: NGramConfig,
    vocab: Vocabulary,
    global: Vec<StoredContext>,
    signatures: BTreeMap<String, Vec<StoredContext>>,
}

/// Backoff n-gram model over linearized annotated responses, with optional
/// per-signature sub-models layered on the global one.
#[derive(Clone, Debug, PartialEq)]
pub struct NGramModel {
    config: NGramConfig,
    vocab: Vocabulary,
    global: Counts,
    by_signature: BTreeMap<String, Counts>,
}

fn with_eos(mut ids: Vec<TokenId>, vocab: &Vocabulary) -> Vec<TokenId> {
    let eos = vocab.id(&Token::Eos);
    if ids.last() != Some(&eos) {
        ids.push(eos);
    }
    ids
}

impl NGramModel {
    /// Trains on `(mr, annotated response tokens)` pairs. The vocabulary
    /// holds every item of every MR and response.
    pub fn train(corpus: &[(MrTree, Vec<Token>)], config: NGramConfig) -> Result<Self, ScorerError> {
        Self::train_with_vocab(corpus, std::iter::empty(), config)
    }

    /// Like [`NGramModel::train`], but also reserves ids for `extra` tokens,
    /// e.g. every ontology label, so unseen MRs never hit a missing label.
    pub fn train_with_vocab(
        corpus: &[(MrTree, Vec<Token>)],
        extra: impl IntoIterator<Item = Token>,
        config: NGramConfig,
    ) -> Result<Self, ScorerError> {
        if corpus.is_empty() {
            return Err(ScorerError::EmptyCorpus);
        }
        if config.order == 0 {
            return Err(ScorerError::Format("order must be at least 1".into()));
        }
        if !(config.discount > 0.0 && config.discount < 1.0) {
            return Err(ScorerError::Format(format!("discount {} not in (0, 1)", config.discount)));
        }
        let mut vocab = Vocabulary::new();
        for (mr, toks) in corpus {
            for t in mr.linearize().iter().chain(toks) {
                vocab.add_token(t);
            }
        }
        for t in extra {
            vocab.add_token(&t);
        }
        let seqs: Vec<(String, Vec<TokenId>)> =
            corpus.iter().map(|(mr, toks)| (mr.signature(), with_eos(vocab.ids(toks), &vocab))).collect();
        let global = Counts::train(config.order, seqs.iter().map(|(_, s)| s.as_slice()));

        let mut groups: BTreeMap<&str, Vec<&[TokenId]>> = BTreeMap::new();
        for (sig, s) in &seqs {
            groups.entry(sig).or_default().push(s);
        }
        let by_signature = groups
            .into_iter()
            .filter(|(_, v)| v.len() >= config.min_signature_examples)
            .map(|(sig, v)| (sig.to_string(), Counts::train(config.order, v.into_iter())))
            .collect();
        Ok(NGramModel { config, vocab, global, by_signature })
    }

    pub fn order(&self) -> usize {
        self.global.tables.len()
    }

    pub fn config(&self) -> &NGramConfig {
        &self.config
    }

    pub fn signatures(&self) -> impl Iterator<Item = &str> {
        self.by_signature.keys().map(String::as_str)
    }

    /// The same model with its highest-order counts removed.
    pub fn truncated(&self) -> NGramModel {
        let mut m = self.clone();
        if m.order() > 1 {
            m.global.truncate();
            for c in m.by_signature.values_mut() {
                c.truncate();
            }
            m.config.order -= 1;
        }
        m
    }

    /// Global-model probabilities, ignoring any sub-model.
    pub fn global_probs(&self, prefix: &[TokenId]) -> Vec<f64> {
        let n = self.vocab.len();
        self.global.distribution(prefix, self.config.discount, vec![1.0 / n as f64; n])
    }

    pub fn probs(&self, prefix: &[TokenId], context: &MrContext) -> Vec<f64> {
        let global = self.global_probs(prefix);
        match self.by_signature.get(&context.signature) {
            Some(sub) => sub.distribution(prefix, self.config.discount, global),
            None => global,
        }
    }

    /// Total natural-log likelihood of `seq` (an end marker is appended if
    /// missing).
    pub fn sequence_logprob(&self, seq: &[TokenId], context: Option<&MrContext>) -> f64 {
        let seq = with_eos(seq.to_vec(), &self.vocab);
        (0..seq.len())
            .map(|i| {
                let p = match context {
                    Some(c) => self.probs(&seq[..i], c),
                    None => self.global_probs(&seq[..i]),
                };
                p[seq[i] as usize].ln()
            })
            .sum()
    }

    /// Per-token perplexity over a set of sequences.
    pub fn perplexity(&self, data: &[(MrContext, Vec<TokenId>)]) -> f64 {
        let mut ll = 0.0;
        let mut n = 0usize;
        for (ctx, seq) in data {
            ll += self.sequence_logprob(seq, Some(ctx));
            n += seq.len() + usize::from(seq.last() != Some(&self.vocab.id(&Token::Eos)));
        }
        (-ll / n.max(1) as f64).exp()
    }

    pub fn to_json(&self) -> String {
        let stored = StoredModel {
            format: FORMAT.into(),
            version: VERSION,
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            global: self.global.to_stored(),
            signatures: self.by_signature.iter().map(|(k, c)| (k.clone(), c.to_stored())).collect(),
        };
        serde_json::to_string(&stored).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScorerError> {
        let s: StoredModel = serde_json::from_str(text).map_err(|e| ScorerError::Format(e.to_string()))?;
        if s.format != FORMAT {
            return Err(ScorerError::Format(format!("unexpected format `{}`", s.format)));
        }
        if s.version != VERSION {
            return Err(ScorerError::Format(format!("unsupported version {}", s.version)));
        }
        let order = s.config.order;
        let v = s.vocab.len();
        let global = Counts::from_stored(order, s.global, v)?;
        let by_signature = s
            .signatures
            .into_iter()
            .map(|(k, c)| Ok((k, Counts::from_stored(order, c, v)?)))
            .collect::<Result<_, ScorerError>>()?;
        Ok(NGramModel { config: s.config, vocab: s.vocab, global, by_signature })
    }

    pub fn save(&self, path: &Path) -> Result<(), ScorerError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ScorerError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Scorer for NGramModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn logprobs(&self, prefix: &[TokenId], context: &MrContext) -> Result<Vec<f64>, ScorerError> {
        self.vocab.check_ids(prefix)?;
        Ok(self.probs(prefix, context).into_iter().map(f64::ln).collect())
    }
}
