use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use structmbr::corpus::load_corpus;
use structmbr::engine::{cutoff_transform, mbr_select, CutoffDelta, CutoffMode};
use structmbr::metrics::evaluate_method;
use structmbr::utility::{build_utility_matrix, save_matrix};
use structmbr::{MbrResult, Method, UtilityBackend, UtilityMatrix};

fn structmbr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_structmbr")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = structmbr(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

/// Generates a small labelled corpus and returns its path.
fn corpus(dir: &Path, extra: &[&str]) -> PathBuf {
    let path = dir.join("corpus.jsonl");
    let mut args = vec!["gen-synth", "--out", s(&path), "--n-spaces", "20", "--seed", "7"];
    args.extend_from_slice(extra);
    ok(&args);
    path
}

fn token_matrices(path: &Path) -> (structmbr::Corpus, Vec<UtilityMatrix>) {
    let c = load_corpus(path).unwrap();
    let m = c.spaces.iter().map(|s| build_utility_matrix(s, &UtilityBackend::TokenF1).unwrap()).collect();
    (c, m)
}

#[test]
fn decode_writes_one_line_per_space_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), &[]);
    let out = dir.path().join("decode.jsonl");
    ok(&["decode", "--corpus", s(&c), "--out", s(&out)]);
    let records = lines(&out);
    assert_eq!(records.len(), 20);
    let (corpus, matrices) = token_matrices(&c);
    for ((r, space), m) in records.iter().zip(&corpus.spaces).zip(&matrices) {
        assert_eq!(r["id"], space.id.as_str());
        let want = mbr_select(m, &space.weights(), false).unwrap();
        assert_eq!(r["selected"].as_u64().unwrap() as usize, want.selected);
    }
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("decode.jsonl.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "decode");
    assert_eq!(manifest["inputs"]["corpus"]["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["finished_at"].is_string());
}

#[test]
fn cluster_without_inputs_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), &[]);
    let out = structmbr(&["decode", "--corpus", s(&c), "--out", s(&dir.path().join("x")), "--method", "cluster"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--embeddings") && err.contains("--gold-clusters"), "{err}");

    let out = structmbr(&["decode", "--corpus", s(&c), "--out", s(&dir.path().join("x")), "--method", "embed"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--embeddings"));
}

#[test]
fn cutoff_decode_matches_library_composition() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), &[]);
    let out = dir.path().join("cutoff.jsonl");
    ok(&["decode", "--corpus", s(&c), "--out", s(&out), "--method", "cutoff", "--tau", "0.918", "--delta", "0"]);
    let (corpus, matrices) = token_matrices(&c);
    for ((r, space), m) in lines(&out).iter().zip(&corpus.spaces).zip(&matrices) {
        let t = cutoff_transform(m, 0.918, CutoffDelta::Value(0.0), CutoffMode::Absolute);
        let want = mbr_select(&t, &space.weights(), true).unwrap();
        let got: MbrResult = serde_json::from_value(r.clone()).unwrap();
        assert_eq!(got.selected, want.selected);
        assert_eq!(got.ranking, want.ranking);
        assert_eq!(got.scores, want.scores);
    }
}

#[test]
fn eval_on_test_split_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), &["--compromise"]);
    let split = dir.path().join("split");
    ok(&["split", "--corpus", s(&c), "--out-dir", s(&split), "--seed", "3"]);
    let test = split.join("test.jsonl");
    let (corpus, matrices) = token_matrices(&test);
    for (flags, method) in [
        (vec![], Method::Standard { exclude_self: false }),
        (
            vec!["--method", "cluster", "--gold-clusters"],
            Method::Cluster { clusters: structmbr::engine::ClusterSource::Gold, exclude_self: true },
        ),
    ] {
        let out = dir.path().join("eval.jsonl");
        let mut args = vec!["eval", "--corpus", s(&test), "--out", s(&out)];
        args.extend(flags);
        ok(&args);
        let summary = lines(&out).pop().unwrap()["summary"].clone();
        let want = evaluate_method(&corpus, &matrices, None, &method).unwrap();
        assert_eq!(summary["co"].to_string(), serde_json::to_string(&want.co).unwrap());
        assert_eq!(summary["corc"].to_string(), serde_json::to_string(&want.corc).unwrap());
        assert_eq!(summary["n_spaces"], corpus.len());
    }
}

#[test]
fn gen_synth_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    let (ea, eb) = (dir.path().join("ea"), dir.path().join("eb"));
    ok(&["gen-synth", "--seed", "42", "--out", s(&a), "--emit-embeddings", s(&ea)]);
    ok(&["gen-synth", "--seed", "42", "--out", s(&b), "--emit-embeddings", s(&eb)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    for entry in fs::read_dir(&ea).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(ea.join(&name)).unwrap(), fs::read(eb.join(&name)).unwrap());
    }
}

#[test]
fn demo_prints_mixture_mean_for_squared_error() {
    let stdout = ok(&["demo-continuous", "--weights", "0.6,0.4", "--means", "-2,3"]);
    assert!(stdout.lines().any(|l| l == "optimum: 0.000"), "{stdout}");

    let stdout = ok(&["demo-continuous", "--utility", "rbf", "--weights", "0.7,0.3", "--means", "-2,3"]);
    let optimum: f64 = stdout.lines().next().unwrap().trim_start_matches("optimum: ").parse().unwrap();
    assert!((optimum + 2.0).abs() < 0.05, "{stdout}");
}

#[test]
fn sweep_writes_trace_and_choice() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), &["--compromise"]);
    let out = dir.path().join("sweep.jsonl");
    ok(&["sweep", "--corpus", s(&c), "--out", s(&out), "--grid-steps", "8", "--top-k", "3"]);
    let records = lines(&out);
    // 8 thresholds x 2 modes x 3 deltas, then the choice.
    assert_eq!(records.len(), 8 * 2 * 3 + 1);
    let chosen = &records.last().unwrap()["chosen"];
    assert!(chosen["val_co"].is_number());
    assert!(dir.path().join("sweep.jsonl.manifest.json").exists());
}

#[test]
fn matrix_directory_input_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), &[]);
    let (corpus, _) = token_matrices(&c);
    let mats = dir.path().join("mats");
    fs::create_dir(&mats).unwrap();
    // Arbitrary utilities: the decoded selections must follow the files.
    let mut want = Vec::new();
    for space in &corpus.spaces {
        let m = UtilityMatrix::from_fn(space.len(), "external:test", |i, j| ((i * 31 + j * 17) % 11) as f64 / 10.0)
            .unwrap();
        want.push(mbr_select(&m, &space.weights(), false).unwrap().selected);
        save_matrix(&m, mats.join(&space.id)).unwrap();
    }
    let out = dir.path().join("d.jsonl");
    ok(&["decode", "--corpus", s(&c), "--matrix", s(&mats), "--out", s(&out)]);
    let got: Vec<usize> = lines(&out).iter().map(|r| r["selected"].as_u64().unwrap() as usize).collect();
    assert_eq!(got, want);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("d.jsonl.manifest.json")).unwrap()).unwrap();
    assert!(manifest["inputs"]["matrices"]["sha256"].is_string());
}

#[test]
fn data_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{not json\n").unwrap();
    let out = structmbr(&["decode", "--corpus", s(&bad), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let missing = structmbr(&["decode", "--corpus", s(&dir.path().join("absent.jsonl")), "--out", "o"]);
    assert_eq!(missing.status.code(), Some(1));
}
