mod corpus;
mod decode;
mod evaluate;
mod synthesize;
mod train;

pub use corpus::{delex, relex, validate, DelexRecord, ValidationFailure, ValidationReport};
pub use decode::{decode, DecodedExample};
pub use evaluate::evaluate;
pub use synthesize::synthesize;
pub use train::train;

use std::path::Path;

use anyhow::Context as _;
use treenlg::corpus::{read_jsonl, CorpusRecord};

fn read_corpus(path: &Path) -> anyhow::Result<Vec<CorpusRecord>> {
    read_jsonl(crate::io::open(path)?).with_context(|| format!("reading corpus {}", path.display()))
}
