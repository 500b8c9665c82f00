//! Synthetic weather corpus: query scenarios, sampled forecasts, rule-built
//! MRs and template realizations.
//!
//! Every example draws from its own random stream derived from the corpus
//! seed and its index, so corpora can be generated in parallel and still
//! come out identical.

mod forecast;
mod realize;
mod rules;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusRecord, RecordContext};
use crate::mr::{AnnotatedTree, MrTree};

pub use forecast::{
    generate_forecast, sample_scenario, Forecast, ForecastPoint, Granularity, QueryScenario, Question, SunTimes,
};
pub use realize::{realize, RealizeError};
pub use rules::{build_mr, precip_bucket, similar_periods, summarize, Period};

/// A normal distribution clamped to `[min, max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl GaussianSpec {
    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> f64 {
        use rand_distr::{Distribution, Normal};
        let n = Normal::new(self.mean, self.sd.max(0.0)).expect("finite normal parameters");
        n.sample(rng).clamp(self.min, self.max)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub city: String,
    #[serde(default)]
    pub region: Option<String>,
}

impl Location {
    pub fn new(city: &str, region: &str) -> Self {
        Location { city: city.to_string(), region: Some(region.to_string()) }
    }

    pub fn describe(&self) -> String {
        match &self.region {
            Some(r) => format!("{}, {}", self.city, r),
            None => self.city.clone(),
        }
    }
}

/// Pairs of attribute values that may be contrasted. Lookups are
/// symmetric regardless of the order pairs were listed in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OppositionTable {
    pub pairs: Vec<(String, String)>,
}

impl OppositionTable {
    pub fn opposes(&self, a: &str, b: &str) -> bool {
        self.pairs.iter().any(|(x, y)| (x == a && y == b) || (x == b && y == a))
    }
}

impl Default for OppositionTable {
    fn default() -> Self {
        let pairs = [
            ("sunny", "cloudy"),
            ("sunny", "rain"),
            ("clear", "fog"),
            ("warm", "cold snap"),
            ("dry", "rain"),
            ("dry", "snow"),
            ("sunny", "snow"),
            ("rain", "snow"),
        ];
        OppositionTable { pairs: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect() }
    }
}

/// Everything the generator samples from. Loadable from TOML; missing
/// fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeatherConfig {
    pub temperature: GaussianSpec,
    pub cloud_coverage: GaussianSpec,
    pub wind_speed: GaussianSpec,
    /// Requests starting more than this many days after the reference date
    /// get an error instead of a forecast.
    pub max_days_ahead: i64,
    pub unknown_location_prob: f64,
    pub out_of_range_prob: f64,
    pub boolean_prob: f64,
    pub attire_prob: f64,
    pub activity_prob: f64,
    /// Chance of omitting an argument already realized elsewhere.
    pub ellipsis_prob: f64,
    pub oppositions: OppositionTable,
    pub locations: Vec<Location>,
    pub unknown_locations: Vec<Location>,
}

impl Default for WeatherConfig {
    fn default() -> Self {
        let loc = |c: &str, r: &str| Location::new(c, r);
        WeatherConfig {
            temperature: GaussianSpec { mean: 60.0, sd: 15.0, min: -10.0, max: 110.0 },
            cloud_coverage: GaussianSpec { mean: 45.0, sd: 30.0, min: 0.0, max: 100.0 },
            wind_speed: GaussianSpec { mean: 10.0, sd: 7.0, min: 0.0, max: 60.0 },
            max_days_ahead: 7,
            unknown_location_prob: 0.05,
            out_of_range_prob: 0.05,
            boolean_prob: 0.2,
            attire_prob: 0.1,
            activity_prob: 0.08,
            ellipsis_prob: 0.6,
            oppositions: OppositionTable::default(),
            locations: vec![
                loc("Parker", "Colorado"),
                loc("Aspen", "Colorado"),
                loc("Seattle", "Washington"),
                loc("Portland", "Oregon"),
                loc("Austin", "Texas"),
                loc("Boston", "Massachusetts"),
                loc("Chicago", "Illinois"),
                loc("Miami", "Florida"),
                loc("San Francisco", "California"),
                loc("New York", "New York"),
                loc("Denver", "Colorado"),
                loc("Phoenix", "Arizona"),
            ],
            unknown_locations: vec![loc("Springfield", "Nowhere"), loc("Eldorado", "Atlantis")],
        }
    }
}

/// One synthesized example before serialization.
#[derive(Clone, Debug, PartialEq)]
pub struct WeatherExample {
    pub scenario: QueryScenario,
    pub mr: MrTree,
    pub annotated: AnnotatedTree,
}

impl WeatherExample {
    pub fn to_record(&self) -> CorpusRecord {
        CorpusRecord {
            query: self.scenario.query.clone(),
            context: RecordContext {
                reference_datetime: self.scenario.reference.format("%Y-%m-%dT%H:%M:%S").to_string(),
                location: self.scenario.home.describe(),
            },
            mr: self.mr.to_string(),
            response: self.annotated.surface(),
            annotated_response: self.annotated.to_string(),
        }
    }
}

/// The random stream of example `index` in a corpus seeded with `seed`.
pub fn example_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn synthesize_example(seed: u64, index: u64, config: &WeatherConfig) -> Result<WeatherExample, RealizeError> {
    let mut rng = example_rng(seed, index);
    let scenario = sample_scenario(&mut rng, config);
    let forecast = generate_forecast(&scenario, config, &mut rng);
    let mr = build_mr(&scenario, &forecast, config, &mut rng);
    let annotated = realize(&mr, config.ellipsis_prob, &mut rng)?;
    Ok(WeatherExample { scenario, mr, annotated })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesizedCorpus {
    pub train: Vec<CorpusRecord>,
    pub test: Vec<CorpusRecord>,
    /// Fraction of test MRs whose structure never occurs in training.
    pub unseen_signature_fraction: f64,
}

/// Generates `n` examples; the first `round(n * train_ratio)` go to the
/// training split.
pub fn synthesize_corpus(
    n: usize,
    seed: u64,
    train_ratio: f64,
    config: &WeatherConfig,
) -> Result<SynthesizedCorpus, RealizeError> {
    let examples = (0..n as u64).map(|i| synthesize_example(seed, i, config)).collect::<Result<Vec<_>, _>>()?;
    let n_train = ((n as f64) * train_ratio.clamp(0.0, 1.0)).round() as usize;
    let (train, test) = examples.split_at(n_train.min(n));
    let fraction = unseen_signature_fraction(
        &train.iter().map(|e| e.mr.clone()).collect::<Vec<_>>(),
        &test.iter().map(|e| e.mr.clone()).collect::<Vec<_>>(),
    );
    Ok(SynthesizedCorpus {
        train: train.iter().map(WeatherExample::to_record).collect(),
        test: test.iter().map(WeatherExample::to_record).collect(),
        unseen_signature_fraction: fraction,
    })
}

/// Share of `test` MRs whose value-free structure is absent from `train`.
pub fn unseen_signature_fraction(train: &[MrTree], test: &[MrTree]) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let seen: BTreeSet<String> = train.iter().map(MrTree::signature).collect();
    let unseen = test.iter().filter(|m| !seen.contains(&m.signature())).count();
    unseen as f64 / test.len() as f64
}
