use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context as _};
use treenlg::metrics::evaluate as score;
use treenlg::token::tokenize;

use super::{read_corpus, DecodedExample};
use crate::config::Context;
use crate::manifest::{manifest_path, Recorder};
use crate::{io, EvaluateArgs, Outcome};

fn read_predictions(path: &Path) -> anyhow::Result<Vec<DecodedExample>> {
    let text = io::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

/// References are every corpus response sharing the prediction's MR.
pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> anyhow::Result<Outcome> {
    let mut rec = Recorder::new("evaluate", serde_json::json!({ "ontology": ctx.ontology_name }))?;
    rec.input(&args.predictions);
    rec.input(&args.corpus);
    let preds = read_predictions(&args.predictions)?;
    let corpus = read_corpus(&args.corpus)?;
    if preds.len() != corpus.len() {
        bail!("{} predictions for {} corpus lines", preds.len(), corpus.len());
    }
    let mut by_mr: BTreeMap<&str, Vec<Vec<String>>> = BTreeMap::new();
    for r in &corpus {
        by_mr.entry(r.mr.as_str()).or_default().push(r.response.split_whitespace().map(str::to_string).collect());
    }
    let mut items = Vec::with_capacity(preds.len());
    let mut refs = Vec::with_capacity(preds.len());
    for (i, (p, r)) in preds.iter().zip(&corpus).enumerate() {
        let mr = r.parse_mr(&ctx.ontology).with_context(|| format!("corpus line {}", i + 1))?;
        if p.mr != mr.to_string() {
            bail!("prediction {} was decoded from a different MR than corpus line {}", p.index, i + 1);
        }
        items.push((mr, p.tokens.as_deref().map(tokenize)));
        refs.push(by_mr[r.mr.as_str()].clone());
    }
    rec.phase("read");
    let report = score(&items, &refs)?;
    rec.phase("score");
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    io::write(&args.out, text.as_bytes())?;
    rec.output(&args.out);
    eprintln!(
        "tree accuracy {:.4}, BLEU-4 {:.4}, {} decode failures of {}",
        report.tree_accuracy, report.bleu4, report.decode_failures, report.examples
    );
    rec.finish(manifest_path(&args.out))?;
    Ok(Outcome::Clean)
}
