use serde::Serialize;
use treenlg::corpus::parse_records;
use treenlg::delex::delexicalize_pair;
use treenlg::scorer::Scorer;
use treenlg::scorer::{NGramConfig, NGramModel};
use treenlg::{MrTree, Token};

use super::read_corpus;
use crate::config::{Context, FileConfig};
use crate::manifest::{manifest_path, Recorder};
use crate::{OntologyName, Outcome, TrainArgs};

#[derive(Serialize)]
struct Settings {
    ngram: NGramConfig,
    delexicalize: bool,
    ontology: OntologyName,
}

pub fn train(ctx: &Context, file: &FileConfig, args: &TrainArgs) -> anyhow::Result<Outcome> {
    let ngram = file.ngram(args.order, args.discount, args.min_signature_examples)?;
    let delexicalize = file.delexicalize(args.no_delex);
    let mut rec =
        Recorder::new("train-scorer", Settings { ngram: ngram.clone(), delexicalize, ontology: ctx.ontology_name })?;
    rec.input(&args.corpus);
    let records = read_corpus(&args.corpus)?;
    let parsed = parse_records(&records, &ctx.ontology)?;
    let pairs: Vec<(MrTree, Vec<Token>)> = parsed
        .iter()
        .map(|(mr, ann)| {
            if delexicalize {
                let (m, a, _) = delexicalize_pair(mr, ann, &ctx.ontology);
                (m, a.linearize())
            } else {
                (mr.clone(), ann.linearize())
            }
        })
        .collect();
    rec.phase("read");
    // every label is reserved so unseen MR structures still decode
    let labels = ctx.ontology.all_labels().into_iter().map(Token::open);
    let model = NGramModel::train_with_vocab(&pairs, labels, ngram)?;
    rec.phase("train");
    crate::io::write(&args.out, model.to_json().as_bytes())?;
    rec.output(&args.out);
    eprintln!(
        "trained order-{} model on {} examples: {} vocabulary entries, {} structure sub-models",
        model.order(),
        pairs.len(),
        model.vocab().len(),
        model.signatures().count()
    );
    rec.finish(manifest_path(&args.out))?;
    Ok(Outcome::Clean)
}
