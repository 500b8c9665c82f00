use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::CommandFactory;
use serde_json::Value;
use tempfile::TempDir;
use treenlg::corpus::CorpusRecord;
use treenlg::metrics::EvalReport;
use treenlg::weather::{synthesize_corpus, WeatherConfig};
use treenlg::{check_tree, AnnotatedTree, MrTree, Ontology, Token};
use treenlg_cli::{Cli, DecodedExample, ValidationReport};

fn treenlg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treenlg")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let o = treenlg(dir, args);
    assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn lines(path: PathBuf) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// A synthesized corpus plus a model trained on its training split.
fn workspace(n: &str, seed: &str) -> TempDir {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["synthesize", "--n", n, "--seed", seed, "--out-dir", "data"]);
    ok(d, &["train-scorer", "--corpus", "data/train.jsonl", "--out", "model.json"]);
    t
}

#[test]
fn synthesize_counts_and_splits() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["synthesize", "--n", "10", "--seed", "3", "--train-ratio", "1", "--out-dir", "a"]);
    assert_eq!(lines(d.join("a/train.jsonl")).len(), 10);
    assert_eq!(lines(d.join("a/test.jsonl")).len(), 0);

    ok(d, &["synthesize", "--n", "100", "--seed", "3", "--train-ratio", "0.8", "--out-dir", "b"]);
    assert_eq!(lines(d.join("b/train.jsonl")).len(), 80);
    assert_eq!(lines(d.join("b/test.jsonl")).len(), 20);
    let stats = json(d.join("b/stats.json"));
    let hist: u64 = stats["act_counts"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(hist, 100);
}

#[test]
fn synthesize_is_reproducible_and_matches_the_library() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["synthesize", "--n", "120", "--seed", "9", "--out-dir", "x"]);
    ok(d, &["synthesize", "--n", "120", "--seed", "9", "--out-dir", "y", "--jobs", "3"]);
    for f in ["train.jsonl", "test.jsonl", "stats.json"] {
        assert_eq!(std::fs::read(d.join("x").join(f)).unwrap(), std::fs::read(d.join("y").join(f)).unwrap());
    }
    let c = synthesize_corpus(120, 9, 0.8, &WeatherConfig::default()).unwrap();
    let mut expected = Vec::new();
    treenlg::corpus::write_jsonl(&mut expected, &c.train).unwrap();
    assert_eq!(std::fs::read(d.join("x/train.jsonl")).unwrap(), expected);
    let frac = json(d.join("x/stats.json"))["unseen_signature_fraction"].as_f64().unwrap();
    assert_eq!(frac, c.unseen_signature_fraction);
}

/// Independent check: a line is good iff it parses and its annotated
/// response passes the constraint check against its MR.
fn line_is_good(line: &str, o: &Ontology) -> bool {
    let Ok(r) = serde_json::from_str::<CorpusRecord>(line) else {
        return false;
    };
    let (Ok(mr), Ok(a)) = (MrTree::parse(&r.mr, o), AnnotatedTree::parse(&r.annotated_response, o)) else {
        return false;
    };
    let mut toks = a.linearize();
    toks.push(Token::Eos);
    check_tree(&mr, &toks)
}

#[test]
fn validate_reports_corrupted_lines() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["synthesize", "--n", "60", "--seed", "4", "--train-ratio", "1", "--out-dir", "data"]);
    let o = ok(d, &["validate", "--corpus", "data/train.jsonl"]);
    let report: ValidationReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((report.lines, report.failures.len()), (60, 0));

    // one dropped closing bracket
    let mut ls = lines(d.join("data/train.jsonl"));
    let mut r: CorpusRecord = serde_json::from_str(&ls[6]).unwrap();
    let cut = r.annotated_response.rfind(" ]").unwrap();
    r.annotated_response.replace_range(cut..cut + 2, "");
    ls[6] = serde_json::to_string(&r).unwrap();
    std::fs::write(d.join("one.jsonl"), ls.join("\n") + "\n").unwrap();
    let o = treenlg(d, &["validate", "--corpus", "one.jsonl", "--report", "one.json"]);
    assert_eq!(code(&o), 1);
    let report: ValidationReport = serde_json::from_value(json(d.join("one.json"))).unwrap();
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].line, 7);
    assert!(d.join("one.json.manifest.json").exists());

    // assorted corruptions, counted line by line
    let onto = Ontology::weather();
    let mut ls = lines(d.join("data/train.jsonl"));
    for (i, l) in ls.iter_mut().enumerate() {
        let mut r: CorpusRecord = serde_json::from_str(l).unwrap();
        match i % 7 {
            0 => *l = l.replace("\"mr\"", "\"mrr\""),
            1 => r.annotated_response = r.annotated_response.replacen("[INFORM", "[INFORMAL", 1),
            2 => r.mr.push_str(" ]"),
            3 => {
                r.annotated_response = format!("{} {}", r.annotated_response, r.annotated_response);
            }
            _ => {}
        }
        if !(1..=3).contains(&(i % 7)) {
            continue;
        }
        *l = serde_json::to_string(&r).unwrap();
    }
    let expected = ls.iter().filter(|l| !line_is_good(l, &onto)).count();
    assert!(expected >= 20);
    std::fs::write(d.join("many.jsonl"), ls.join("\n") + "\n").unwrap();
    let o = treenlg(d, &["validate", "--corpus", "many.jsonl"]);
    assert_eq!(code(&o), 1);
    let report: ValidationReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report.failures.len(), expected);
}

fn decode(d: &Path, out: &str, extra: &[&str]) -> (i32, Vec<DecodedExample>) {
    let mut args = vec!["decode", "--corpus", "data/test.jsonl", "--model", "model.json", "--out", out];
    args.extend_from_slice(extra);
    let o = treenlg(d, &args);
    let c = code(&o);
    assert!(c == 0 || c == 1, "{}", String::from_utf8_lossy(&o.stderr));
    let preds = lines(d.join(out)).iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    (c, preds)
}

fn evaluate(d: &Path, preds: &str) -> EvalReport {
    let out = format!("{preds}.report.json");
    ok(d, &["evaluate", "--predictions", preds, "--corpus", "data/test.jsonl", "--out", &out]);
    serde_json::from_value(json(d.join(out))).unwrap()
}

#[test]
fn decoding_modes_compare_as_expected() {
    let t = workspace("400", "5");
    let d = t.path();

    let (c, preds) = decode(d, "constrained.jsonl", &[]);
    assert_eq!(preds.len(), 80);
    let failed = preds.iter().filter(|p| p.failure.is_some()).count();
    assert_eq!(c, if failed > 0 { 1 } else { 0 });
    let report = evaluate(d, "constrained.jsonl");
    let succeeded = report.records.iter().filter(|r| !r.decode_failed).count();
    assert!(succeeded > 0);
    assert!(report.records.iter().filter(|r| !r.decode_failed).all(|r| r.tree_valid));
    assert_eq!(report.decode_failures, failed);

    let (_, _) = decode(d, "uniform.jsonl", &["--mode", "unconstrained", "--uniform"]);
    let uniform = evaluate(d, "uniform.jsonl");
    assert!(uniform.tree_accuracy < 0.5, "{}", uniform.tree_accuracy);

    decode(d, "unconstrained.jsonl", &["--mode", "unconstrained"]);
    decode(d, "rerank.jsonl", &["--mode", "rerank"]);
    let unc = evaluate(d, "unconstrained.jsonl");
    let rr = evaluate(d, "rerank.jsonl");
    assert!(rr.tree_accuracy >= unc.tree_accuracy);
    // per example, reranking never loses a valid output
    for (a, b) in unc.records.iter().zip(&rr.records) {
        assert!(!a.tree_valid || b.tree_valid, "example {}", a.index);
    }
    assert!(report.tree_accuracy > unc.tree_accuracy);
}

#[test]
fn parallel_decoding_keeps_input_order() {
    let t = workspace("150", "6");
    let d = t.path();
    decode(d, "one.jsonl", &["--jobs", "1"]);
    decode(d, "four.jsonl", &["--jobs", "4"]);
    assert_eq!(std::fs::read(d.join("one.jsonl")).unwrap(), std::fs::read(d.join("four.jsonl")).unwrap());
    let preds: Vec<DecodedExample> =
        lines(d.join("four.jsonl")).iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(preds.iter().enumerate().all(|(i, p)| p.index == i));
    let m = json(d.join("four.jsonl.manifest.json"));
    assert_eq!(m["command"], "decode");
    assert_eq!(m["config"]["jobs"], 4);
    for key in ["tool_version", "seeds", "inputs", "outputs", "timings_seconds"] {
        assert!(m.get(key).is_some(), "{key}");
    }
}

#[test]
fn delex_then_relex_restores_the_corpus() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["synthesize", "--n", "80", "--seed", "8", "--train-ratio", "1", "--out-dir", "data"]);
    ok(d, &["delex", "--input", "data/train.jsonl", "--out", "delex.jsonl"]);
    let text = std::fs::read_to_string(d.join("delex.jsonl")).unwrap();
    assert!(text.contains("__CITY_1__"));
    ok(d, &["relex", "--input", "delex.jsonl", "--out", "back.jsonl"]);
    assert_eq!(std::fs::read(d.join("back.jsonl")).unwrap(), std::fs::read(d.join("data/train.jsonl")).unwrap());
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    std::fs::write(d.join("cfg.toml"), "[synthesize]\nn = 30\nseed = 11\n\n[synthesize.weather]\nboolean_prob = 0.9\n")
        .unwrap();
    ok(d, &["--config", "cfg.toml", "synthesize", "--out-dir", "a"]);
    ok(d, &["--config", "cfg.toml", "synthesize", "--n", "20", "--out-dir", "b"]);
    ok(d, &["synthesize", "--out-dir", "c", "--train-ratio", "0.01"]);
    let cfg = |dir: &str| json(d.join(dir).join("manifest.json"))["config"].clone();
    assert_eq!((cfg("a")["n"].as_u64(), cfg("a")["seed"].as_u64()), (Some(30), Some(11)));
    assert_eq!(cfg("a")["weather"]["boolean_prob"], 0.9);
    assert_eq!(cfg("a")["weather"]["max_days_ahead"], 7);
    assert_eq!((cfg("b")["n"].as_u64(), cfg("b")["seed"].as_u64()), (Some(20), Some(11)));
    assert_eq!((cfg("c")["n"].as_u64(), cfg("c")["seed"].as_u64()), (Some(1000), Some(0)));
    assert_eq!(json(d.join("a/manifest.json"))["seeds"]["synthesize"], 11);
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    std::fs::write(d.join("bad.toml"), "[synthesize]\nnumber = 3\n").unwrap();
    for args in [
        vec!["synthesize"],
        vec!["decode", "--corpus", "x"],
        vec!["frobnicate"],
        vec!["--config", "bad.toml", "synthesize", "--out-dir", "o"],
        vec!["--config", "missing.toml", "synthesize", "--out-dir", "o"],
        vec!["validate", "--corpus", "missing.jsonl"],
        vec!["synthesize", "--n", "0", "--out-dir", "o"],
        vec!["synthesize", "--train-ratio", "1.5", "--out-dir", "o"],
        vec!["--jobs", "0", "synthesize", "--out-dir", "o"],
    ] {
        assert_eq!(code(&treenlg(d, &args)), 2, "{args:?}");
    }
    assert_eq!(code(&treenlg(d, &["--help"])), 0);
}

#[test]
fn every_flag_is_documented() {
    let cmd = Cli::command();
    let mut seen = 0;
    for sub in cmd.get_subcommands() {
        assert!(sub.get_about().is_some(), "{}", sub.get_name());
        for arg in sub.get_arguments() {
            if arg.get_long().is_some() && arg.get_id() != "help" {
                assert!(arg.get_help().is_some(), "{} --{}", sub.get_name(), arg.get_id());
                seen += 1;
            }
        }
    }
    assert!(seen > 20);
    let t = TempDir::new().unwrap();
    let help = String::from_utf8(ok(t.path(), &["decode", "--help"]).stdout).unwrap();
    for flag in ["--corpus", "--model", "--mode", "--beam", "--max-length", "--length-penalty", "--jobs", "--config"] {
        assert!(help.contains(flag), "{flag}");
    }
}
