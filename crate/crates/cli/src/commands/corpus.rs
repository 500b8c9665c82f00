use std::path::Path;

use anyhow::Context as _;
use serde::{Deserialize, Serialize};
use treenlg::corpus::{CorpusRecord, RecordContext};
use treenlg::delex::{delexicalize_pair, relexicalize, DelexTable};
use treenlg::mr::parse_linearized;
use treenlg::token::tokenize;
use treenlg::{build_constraints, MrTree, Ontology, Token};

use super::read_corpus;
use crate::config::Context;
use crate::manifest::{manifest_path, Recorder};
use crate::{io, DelexArgs, Outcome, RelexArgs, ValidateArgs};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationFailure {
    /// 1-based line number in the corpus file.
    pub line: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Non-blank lines checked.
    pub lines: usize,
    pub failures: Vec<ValidationFailure>,
}

fn check_line(line: &str, o: &Ontology) -> Result<(), String> {
    let rec: CorpusRecord = serde_json::from_str(line).map_err(|e| format!("malformed line: {e}"))?;
    let mr = rec.parse_mr(o).map_err(|e| format!("mr: {e}"))?;
    let ann = rec.parse_annotated(o).map_err(|e| format!("annotated_response: {e}"))?;
    let mut toks = ann.linearize();
    toks.push(Token::Eos);
    match build_constraints(&mr).first_rejection(&toks) {
        None => Ok(()),
        Some(k) => Err(format!("annotated_response does not match the MR: token {} (`{}`) rejected", k + 1, toks[k])),
    }
}

pub fn validate(ctx: &Context, args: &ValidateArgs) -> anyhow::Result<Outcome> {
    let mut rec = Recorder::new("validate", serde_json::json!({ "ontology": ctx.ontology_name }))?;
    rec.input(&args.corpus);
    let text = io::read_to_string(&args.corpus)?;
    let lines: Vec<(usize, &str)> =
        text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l)).collect();
    rec.phase("read");
    let results = ctx.map(&lines, |_, (_, l)| check_line(l, &ctx.ontology));
    rec.phase("check");
    let failures: Vec<ValidationFailure> = lines
        .iter()
        .zip(results)
        .filter_map(|((line, _), r)| r.err().map(|error| ValidationFailure { line: *line, error }))
        .collect();
    let report = ValidationReport { lines: lines.len(), failures };
    eprintln!("validated {} lines, {} failing", report.lines, report.failures.len());
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    let out = args.report.clone().unwrap_or_else(|| "-".into());
    io::write(&out, text.as_bytes())?;
    rec.output(&out);
    rec.finish(manifest_path(&out))?;
    Ok(if report.failures.is_empty() { Outcome::Clean } else { Outcome::Failures })
}

/// A corpus line with placeholder values and the table restoring them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelexRecord {
    pub query: String,
    pub context: RecordContext,
    pub mr: String,
    pub response: String,
    pub annotated_response: String,
    pub delex_table: DelexTable,
}

pub fn delex(ctx: &Context, args: &DelexArgs) -> anyhow::Result<Outcome> {
    let mut rec = Recorder::new("delex", serde_json::json!({ "ontology": ctx.ontology_name }))?;
    rec.input(&args.input);
    let records = read_corpus(&args.input)?;
    let out: Vec<anyhow::Result<DelexRecord>> = ctx.map(&records, |i, r| {
        let err = || format!("line {}", i + 1);
        let mr = r.parse_mr(&ctx.ontology).with_context(err)?;
        let ann = r.parse_annotated(&ctx.ontology).with_context(err)?;
        let (m, a, table) = delexicalize_pair(&mr, &ann, &ctx.ontology);
        Ok(DelexRecord {
            query: r.query.clone(),
            context: r.context.clone(),
            mr: m.to_string(),
            response: a.surface(),
            annotated_response: a.to_string(),
            delex_table: table,
        })
    });
    let out = out.into_iter().collect::<anyhow::Result<Vec<_>>>()?;
    rec.phase("delex");
    io::write(&args.out, &io::jsonl(&out)?)?;
    rec.output(&args.out);
    rec.finish(manifest_path(&args.out))?;
    Ok(Outcome::Clean)
}

fn restore(r: &DelexRecord, o: &Ontology) -> anyhow::Result<CorpusRecord> {
    let mr_toks = relexicalize(&tokenize(&r.mr), &r.delex_table)?;
    let mr = MrTree::from_tokens(&mr_toks, o)?;
    let ann_toks = relexicalize(&tokenize(&r.annotated_response), &r.delex_table)?;
    let ann = parse_linearized(&ann_toks, o)?;
    Ok(CorpusRecord {
        query: r.query.clone(),
        context: r.context.clone(),
        mr: mr.to_string(),
        response: ann.surface(),
        annotated_response: ann.to_string(),
    })
}

pub fn relex(ctx: &Context, args: &RelexArgs) -> anyhow::Result<Outcome> {
    let mut rec = Recorder::new("relex", serde_json::json!({ "ontology": ctx.ontology_name }))?;
    rec.input(&args.input);
    let records = read_delex(&args.input)?;
    let out: Vec<anyhow::Result<CorpusRecord>> =
        ctx.map(&records, |i, r| restore(r, &ctx.ontology).with_context(|| format!("line {}", i + 1)));
    let out = out.into_iter().collect::<anyhow::Result<Vec<_>>>()?;
    rec.phase("relex");
    io::write(&args.out, &io::jsonl(&out)?)?;
    rec.output(&args.out);
    rec.finish(manifest_path(&args.out))?;
    Ok(Outcome::Clean)
}

fn read_delex(path: &Path) -> anyhow::Result<Vec<DelexRecord>> {
    let text = io::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}
