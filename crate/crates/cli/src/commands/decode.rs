use anyhow::Context as _;
use serde::{Deserialize, Serialize};
use treenlg::beam::{decode as beam_decode, DecodeConfig, DecodeError};
use treenlg::delex::{delexicalize_mr, DelexTable};
use treenlg::scorer::{NGramModel, Scorer, UniformScorer};
use treenlg::token::render;
use treenlg::{check_tree, MrTree, Token};

use super::read_corpus;
use crate::config::{Context, FileConfig};
use crate::manifest::{manifest_path, Recorder};
use crate::{io, DecodeArgs, Outcome};

/// One line of `decode` output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodedExample {
    pub index: usize,
    pub mr: String,
    /// Best annotated output with values restored; absent when decoding failed.
    pub tokens: Option<String>,
    pub score: Option<f64>,
    pub logprob: Option<f64>,
    pub tree_valid: bool,
    pub failure: Option<String>,
}

#[derive(Serialize)]
struct Settings<'a> {
    decode: &'a DecodeConfig,
    delexicalize: bool,
    uniform: bool,
    jobs: usize,
}

/// Restores placeholder values; a placeholder missing from the table is
/// kept as written.
fn restore(tokens: &[Token], table: &DelexTable) -> Vec<Token> {
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        match t {
            Token::Word(w) => match table.lookup(w) {
                Some(e) => out.extend(e.value.split_whitespace().map(Token::word)),
                None => out.push(t.clone()),
            },
            _ => out.push(t.clone()),
        }
    }
    out
}

fn decode_one(
    index: usize,
    mr: &MrTree,
    ctx: &Context,
    model: &dyn Scorer,
    config: &DecodeConfig,
    delexicalize: bool,
) -> anyhow::Result<DecodedExample> {
    let (input, table) =
        if delexicalize { delexicalize_mr(mr, &ctx.ontology) } else { (mr.clone(), DelexTable::default()) };
    let mut out = DecodedExample {
        index,
        mr: mr.to_string(),
        tokens: None,
        score: None,
        logprob: None,
        tree_valid: false,
        failure: None,
    };
    match beam_decode(&input, model, config) {
        Ok(r) => {
            let best = r.best();
            let mut toks = restore(&best.tokens, &table);
            out.tokens = Some(render(&toks));
            out.score = Some(best.score);
            out.logprob = Some(best.logprob);
            toks.push(Token::Eos);
            out.tree_valid = check_tree(mr, &toks);
        }
        Err(e @ (DecodeError::DecodingFailed { .. } | DecodeError::MissingLabel(_))) => {
            out.failure = Some(e.to_string());
        }
        Err(e) => return Err(e).with_context(|| format!("decoding example {}", index + 1)),
    }
    Ok(out)
}

pub fn decode(ctx: &Context, file: &FileConfig, args: &DecodeArgs) -> anyhow::Result<Outcome> {
    let config = file.decode(args.mode, args.beam, args.max_length, args.length_penalty)?;
    let delexicalize = file.delexicalize(args.no_delex);
    let mut rec =
        Recorder::new("decode", Settings { decode: &config, delexicalize, uniform: args.uniform, jobs: ctx.jobs })?;
    rec.input(&args.corpus);
    rec.input(&args.model);
    let records = read_corpus(&args.corpus)?;
    let mrs = records
        .iter()
        .enumerate()
        .map(|(i, r)| r.parse_mr(&ctx.ontology).with_context(|| format!("corpus line {}", i + 1)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let model_text = io::read_to_string(&args.model)?;
    let model = NGramModel::from_json(&model_text).with_context(|| format!("loading {}", args.model.display()))?;
    let uniform;
    let scorer: &dyn Scorer = if args.uniform {
        uniform = UniformScorer::new(model.vocab().clone());
        &uniform
    } else {
        &model
    };
    rec.phase("load");
    let results = ctx
        .map(&mrs, |i, mr| decode_one(i, mr, ctx, scorer, &config, delexicalize))
        .into_iter()
        .collect::<anyhow::Result<Vec<_>>>()?;
    rec.phase("decode");
    io::write(&args.out, &io::jsonl(&results)?)?;
    rec.output(&args.out);
    let failed = results.iter().filter(|r| r.failure.is_some()).count();
    let valid = results.iter().filter(|r| r.tree_valid).count();
    eprintln!("decoded {} MRs: {} tree-valid, {} failed", results.len(), valid, failed);
    rec.finish(manifest_path(&args.out))?;
    Ok(if failed == 0 { Outcome::Clean } else { Outcome::Failures })
}
