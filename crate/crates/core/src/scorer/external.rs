//! Newline-delimited JSON protocol for scorers living in another process.
//!
//! The server first writes `{"vocab_size": n}`. Each request is
//! `{"id", "prefix", "context"}` and is answered by `{"id", "logprobs"}`
//! with exactly `n` entries.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{log_sum_exp, MrContext, Scorer, ScorerError, TokenId, Vocabulary};

const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Serialize, Deserialize)]
pub struct Handshake {
    pub vocab_size: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub prefix: Vec<TokenId>,
    pub context: Vec<TokenId>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprobs: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    next_id: u64,
}

impl Connection {
    fn read_line(&mut self) -> Result<String, ScorerError> {
        let mut line = String::new();
        let n = self.reader.read_line(&mut line).map_err(|e| ScorerError::ScorerUnavailable(e.to_string()))?;
        if n == 0 {
            return Err(ScorerError::ScorerUnavailable("scorer closed its output".into()));
        }
        Ok(line)
    }
}

/// Scorer backed by a child process (or any pair of streams). Requests on
/// one connection are serialized.
pub struct ExternalScorer {
    vocab: Vocabulary,
    conn: Mutex<Connection>,
    child: Option<Child>,
}

impl ExternalScorer {
    pub fn spawn(command: &mut Command, vocab: Vocabulary) -> Result<Self, ScorerError> {
        let mut child = command
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| ScorerError::ScorerUnavailable(format!("cannot start scorer: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut s = Self::from_streams(BufReader::new(stdout), stdin, vocab)?;
        s.child = Some(child);
        Ok(s)
    }

    /// Connects over already-open streams and performs the handshake.
    pub fn from_streams(
        reader: impl BufRead + Send + 'static,
        writer: impl Write + Send + 'static,
        vocab: Vocabulary,
    ) -> Result<Self, ScorerError> {
        let mut conn = Connection { reader: Box::new(reader), writer: Box::new(writer), next_id: 0 };
        let line = conn.read_line()?;
        let hs: Handshake =
            serde_json::from_str(&line).map_err(|e| ScorerError::ProtocolViolation(format!("bad handshake: {e}")))?;
        if hs.vocab_size != vocab.len() {
            return Err(ScorerError::ProtocolViolation(format!(
                "scorer vocabulary has {} entries, expected {}",
                hs.vocab_size,
                vocab.len()
            )));
        }
        Ok(ExternalScorer { vocab, conn: Mutex::new(conn), child: None })
    }

    fn validate(&self, r: Response, id: u64) -> Result<Vec<f64>, ScorerError> {
        if r.id != id {
            return Err(ScorerError::ProtocolViolation(format!("response id {} for request {id}", r.id)));
        }
        if let Some(e) = r.error {
            return Err(ScorerError::ScorerUnavailable(e));
        }
        let raw = r.logprobs.ok_or_else(|| ScorerError::ProtocolViolation("response without logprobs".into()))?;
        if raw.len() != self.vocab.len() {
            return Err(ScorerError::ProtocolViolation(format!(
                "{} log-probabilities for a vocabulary of {}",
                raw.len(),
                self.vocab.len()
            )));
        }
        // JSON has no -inf; null stands for probability zero
        let lp: Vec<f64> = raw.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect();
        if lp.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(ScorerError::ProtocolViolation("non-numeric log-probability".into()));
        }
        let total = log_sum_exp(&lp).exp();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(ScorerError::ProtocolViolation(format!("probabilities sum to {total}")));
        }
        Ok(lp)
    }
}

impl Scorer for ExternalScorer {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn logprobs(&self, prefix: &[TokenId], context: &MrContext) -> Result<Vec<f64>, ScorerError> {
        self.vocab.check_ids(prefix)?;
        let mut conn = self.conn.lock().map_err(|_| ScorerError::ScorerUnavailable("connection poisoned".into()))?;
        let id = conn.next_id;
        conn.next_id += 1;
        let req = Request { id, prefix: prefix.to_vec(), context: context.token_ids.clone() };
        let mut line = serde_json::to_string(&req).expect("request serializes");
        line.push('\n');
        conn.writer
            .write_all(line.as_bytes())
            .and_then(|_| conn.writer.flush())
            .map_err(|e| ScorerError::ScorerUnavailable(e.to_string()))?;
        let reply = conn.read_line()?;
        drop(conn);
        let r: Response = serde_json::from_str(&reply)
            .map_err(|e| ScorerError::ProtocolViolation(format!("malformed response: {e}")))?;
        self.validate(r, id)
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if let Some(mut c) = self.child.take() {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

/// Answers protocol requests with `scorer` until `reader` is exhausted.
/// Failed requests get an `error` field rather than ending the session.
pub fn serve(scorer: &dyn Scorer, reader: impl BufRead, mut writer: impl Write) -> std::io::Result<()> {
    let vocab = scorer.vocab();
    let hs = Handshake { vocab_size: vocab.len() };
    writeln!(writer, "{}", serde_json::to_string(&hs).expect("handshake serializes"))?;
    writer.flush()?;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let resp = match serde_json::from_str::<Request>(&line) {
            Ok(req) => {
                let ctx = MrContext::from_ids(&req.context, vocab);
                match scorer.logprobs(&req.prefix, &ctx) {
                    Ok(lp) => Response {
                        id: req.id,
                        logprobs: Some(lp.into_iter().map(|x| x.is_finite().then_some(x)).collect()),
                        error: None,
                    },
                    Err(e) => Response { id: req.id, logprobs: None, error: Some(e.to_string()) },
                }
            }
            Err(e) => Response { id: 0, logprobs: None, error: Some(format!("malformed request: {e}")) },
        };
        writeln!(writer, "{}", serde_json::to_string(&resp).expect("response serializes"))?;
        writer.flush()?;
    }
    Ok(())
}
