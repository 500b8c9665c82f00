//! Settings file and flag resolution. Every setting resolves as
//! command-line flag, then config file, then built-in default.

use std::path::Path;

use anyhow::{bail, Context as _};
use serde::{Deserialize, Serialize};
use treenlg::beam::{DecodeConfig, DecodeMode};
use treenlg::scorer::NGramConfig;
use treenlg::weather::WeatherConfig;
use treenlg::Ontology;

use crate::{GlobalArgs, ModeArg, OntologyName};

pub const DEFAULT_ORDER: usize = 10;
pub const DEFAULT_N: usize = 1000;
pub const DEFAULT_TRAIN_RATIO: f64 = 0.8;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub jobs: Option<usize>,
    pub ontology: Option<OntologyName>,
    /// Shared by training and decoding so the two cannot disagree.
    pub delexicalize: Option<bool>,
    pub synthesize: SynthesizeSection,
    pub train: TrainSection,
    pub decode: DecodeSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesizeSection {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub train_ratio: Option<f64>,
    /// Generator parameters; missing fields keep their defaults.
    pub weather: Option<WeatherConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub order: Option<usize>,
    pub discount: Option<f64>,
    pub min_signature_examples: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeSection {
    pub mode: Option<ModeArg>,
    pub beam_size: Option<usize>,
    pub max_length: Option<usize>,
    pub length_penalty: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn delexicalize(&self, no_delex_flag: bool) -> bool {
        !no_delex_flag && self.delexicalize.unwrap_or(true)
    }

    pub fn ngram(
        &self,
        order: Option<usize>,
        discount: Option<f64>,
        min_sig: Option<usize>,
    ) -> anyhow::Result<NGramConfig> {
        let d = NGramConfig::default();
        let c = NGramConfig {
            order: order.or(self.train.order).unwrap_or(DEFAULT_ORDER),
            discount: discount.or(self.train.discount).unwrap_or(d.discount),
            min_signature_examples: min_sig.or(self.train.min_signature_examples).unwrap_or(d.min_signature_examples),
        };
        if c.order == 0 {
            bail!("order must be at least 1");
        }
        if !(c.discount > 0.0 && c.discount < 1.0) {
            bail!("discount must lie strictly between 0 and 1, got {}", c.discount);
        }
        Ok(c)
    }

    pub fn decode(
        &self,
        mode: Option<ModeArg>,
        beam: Option<usize>,
        max_length: Option<usize>,
        length_penalty: Option<f64>,
    ) -> anyhow::Result<DecodeConfig> {
        let d = DecodeConfig::default();
        let mode = match mode.or(self.decode.mode) {
            None => d.mode,
            Some(ModeArg::Constrained) => DecodeMode::Constrained,
            Some(ModeArg::Unconstrained) => DecodeMode::Unconstrained,
            Some(ModeArg::Rerank) => DecodeMode::RerankByTreeAccuracy,
        };
        let c = DecodeConfig {
            beam_size: beam.or(self.decode.beam_size).unwrap_or(d.beam_size),
            max_length: max_length.or(self.decode.max_length).or(d.max_length),
            mode,
            length_penalty: length_penalty.or(self.decode.length_penalty).unwrap_or(d.length_penalty),
        };
        if c.beam_size == 0 {
            bail!("beam width must be at least 1");
        }
        if !c.length_penalty.is_finite() || c.length_penalty < 0.0 {
            bail!("length penalty must be a non-negative number");
        }
        Ok(c)
    }
}

/// Settings every command needs.
pub struct Context {
    pub jobs: usize,
    pub ontology_name: OntologyName,
    pub ontology: Ontology,
    pool: rayon::ThreadPool,
}

impl Context {
    pub fn resolve(global: &GlobalArgs, file: &FileConfig) -> anyhow::Result<Self> {
        let jobs = global.jobs.or(file.jobs).unwrap_or(1);
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        let ontology_name = global.ontology.or(file.ontology).unwrap_or(OntologyName::Weather);
        let ontology = match ontology_name {
            OntologyName::Weather => Ontology::weather(),
            OntologyName::E2e => Ontology::e2e(),
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
        Ok(Context { jobs, ontology_name, ontology, pool })
    }

    /// Maps `f` over `items` on the worker pool, keeping input order.
    pub fn map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(usize, &T) -> R + Sync + Send) -> Vec<R> {
        use rayon::prelude::*;
        self.pool.install(|| items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect())
    }
}
