use std::collections::BTreeMap;

use anyhow::bail;
use serde::Serialize;
use treenlg::weather::{synthesize_example, unseen_signature_fraction, WeatherConfig, WeatherExample};

use crate::config::{Context, FileConfig, DEFAULT_N, DEFAULT_TRAIN_RATIO};
use crate::manifest::Recorder;
use crate::{io, Outcome, SynthesizeArgs};

#[derive(Serialize)]
struct Settings<'a> {
    n: usize,
    seed: u64,
    train_ratio: f64,
    jobs: usize,
    weather: &'a WeatherConfig,
}

#[derive(Serialize)]
struct Stats {
    train: usize,
    test: usize,
    /// Share of test MRs whose value-free structure never occurs in train.
    unseen_signature_fraction: f64,
    /// Number of dialog acts per MR → examples, over both splits.
    act_counts: BTreeMap<usize, usize>,
}

pub fn synthesize(ctx: &Context, file: &FileConfig, args: &SynthesizeArgs) -> anyhow::Result<Outcome> {
    let s = &file.synthesize;
    let n = args.n.or(s.n).unwrap_or(DEFAULT_N);
    let seed = args.seed.or(s.seed).unwrap_or(0);
    let ratio = args.train_ratio.or(s.train_ratio).unwrap_or(DEFAULT_TRAIN_RATIO);
    if n == 0 {
        bail!("--n must be at least 1");
    }
    if !(0.0..=1.0).contains(&ratio) {
        bail!("--train-ratio must lie in [0, 1], got {ratio}");
    }
    let weather = s.weather.clone().unwrap_or_default();
    let mut rec =
        Recorder::new("synthesize", Settings { n, seed, train_ratio: ratio, jobs: ctx.jobs, weather: &weather })?;
    rec.seed("synthesize", seed);

    let indices: Vec<u64> = (0..n as u64).collect();
    let examples = ctx
        .map(&indices, |_, &i| synthesize_example(seed, i, &weather))
        .into_iter()
        .collect::<Result<Vec<WeatherExample>, _>>()?;
    rec.phase("generate");

    let n_train = ((n as f64) * ratio).round() as usize;
    let (train, test) = examples.split_at(n_train.min(n));
    let mrs = |xs: &[WeatherExample]| xs.iter().map(|e| e.mr.clone()).collect::<Vec<_>>();
    let mut act_counts = BTreeMap::new();
    for e in &examples {
        *act_counts.entry(e.mr.dialog_acts().len()).or_insert(0) += 1;
    }
    let stats = Stats {
        train: train.len(),
        test: test.len(),
        unseen_signature_fraction: unseen_signature_fraction(&mrs(train), &mrs(test)),
        act_counts,
    };
    let records = |xs: &[WeatherExample]| xs.iter().map(WeatherExample::to_record).collect::<Vec<_>>();
    let dir = &args.out_dir;
    for (name, part) in [("train.jsonl", train), ("test.jsonl", test)] {
        let path = dir.join(name);
        io::write(&path, &io::jsonl(&records(part))?)?;
        rec.output(&path);
    }
    let stats_path = dir.join("stats.json");
    let mut text = serde_json::to_string_pretty(&stats)?;
    text.push('\n');
    io::write(&stats_path, text.as_bytes())?;
    rec.output(&stats_path);
    rec.phase("write");
    eprintln!(
        "wrote {} train / {} test examples; unseen structure fraction {:.3}",
        stats.train, stats.test, stats.unseen_signature_fraction
    );
    rec.finish(Some(dir.join("manifest.json")))?;
    Ok(Outcome::Clean)
}
