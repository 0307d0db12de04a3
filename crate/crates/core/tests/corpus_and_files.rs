mod common;

use std::collections::BTreeSet;
use std::fs;

use common::*;
use structmbr::corpus::{generate_synthetic, load_corpus, save_corpus, split_corpus, SynthConfig};
use structmbr::utility::{
    build_utility_matrix, char_ngram_f, load_embeddings, load_matrix, save_embeddings, save_matrix, token_f1,
};
use structmbr::{Candidate, Corpus, EmbeddingSet, OutcomeSpace, UtilityBackend};

fn space(id: &str, texts: &[&str]) -> OutcomeSpace {
    OutcomeSpace {
        id: id.into(),
        context: "ctx".into(),
        candidates: texts.iter().map(|t| Candidate::new(*t)).collect(),
    }
}

#[test]
fn generated_corpus_reloads_field_by_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synth.jsonl");
    let original = generate_synthetic(&SynthConfig { include_compromise: true, ..SynthConfig::default() }).unwrap();
    save_corpus(&original, &path).unwrap();
    let loaded = load_corpus(&path).unwrap();
    assert_eq!(loaded.len(), 100);
    for (a, b) in original.spaces.iter().zip(&loaded.spaces) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.context, b.context);
        assert_eq!(a.candidates.len(), b.candidates.len());
        for (x, y) in a.candidates.iter().zip(&b.candidates) {
            assert_eq!(x.text, y.text);
            assert_eq!(x.label, y.label);
            assert_eq!(x.weight.to_bits(), y.weight.to_bits());
        }
    }
}

#[test]
fn unknown_fields_are_ignored_and_not_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    fs::write(
        &path,
        "{\"id\":\"q1\",\"context\":\"c\",\"extra\":1,\"candidates\":[{\"text\":\"a\",\"score\":3},{\"text\":\"b\",\"weight\":0.5}]}\n",
    )
    .unwrap();
    let corpus = load_corpus(&path).unwrap();
    assert_eq!(corpus.spaces[0].weights(), vec![1.0, 0.5]);
    let out = dir.path().join("out.jsonl");
    save_corpus(&corpus, &out).unwrap();
    let text = fs::read_to_string(&out).unwrap();
    assert!(!text.contains("extra") && !text.contains("score"));
}

#[test]
fn thousand_spaces_split_eight_one_one() {
    let spaces: Vec<OutcomeSpace> = (0..1000).map(|i| space(&format!("q{i}"), &["a", "b"])).collect();
    let corpus = Corpus::new(spaces, "t").unwrap();
    let (train, val, test) = split_corpus(&corpus, [0.8, 0.1, 0.1], 7).unwrap();
    assert_eq!((train.len(), val.len(), test.len()), (800, 100, 100));
}

#[test]
fn split_is_deterministic_and_seed_sensitive() {
    let spaces: Vec<OutcomeSpace> = (0..100).map(|i| space(&format!("q{i}"), &["a", "b"])).collect();
    let corpus = Corpus::new(spaces, "t").unwrap();
    let ids = |c: &Corpus| c.spaces.iter().map(|s| s.id.clone()).collect::<Vec<_>>();
    let a = split_corpus(&corpus, [0.8, 0.1, 0.1], 3).unwrap();
    let b = split_corpus(&corpus, [0.8, 0.1, 0.1], 3).unwrap();
    let c = split_corpus(&corpus, [0.8, 0.1, 0.1], 4).unwrap();
    assert_eq!((ids(&a.0), ids(&a.1), ids(&a.2)), (ids(&b.0), ids(&b.1), ids(&b.2)));
    assert_ne!((ids(&a.0), ids(&a.1)), (ids(&c.0), ids(&c.1)));

    let mut union: Vec<String> = [ids(&a.0), ids(&a.1), ids(&a.2)].concat();
    assert_eq!(union.len(), 100);
    union.sort();
    union.dedup();
    assert_eq!(union.len(), 100);
    assert!(split_corpus(&corpus, [0.8, 0.1, 0.2], 3).is_err());
}

#[test]
fn generator_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig::default();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    save_corpus(&generate_synthetic(&cfg).unwrap(), &a).unwrap();
    save_corpus(&generate_synthetic(&cfg).unwrap(), &b).unwrap();
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn default_synthetic_within_cluster_f1_exceeds_cross_by_point_three() {
    let corpus = generate_synthetic(&SynthConfig::default()).unwrap();
    let (mut within, mut cross) = ((0.0, 0usize), (0.0, 0usize));
    for space in &corpus.spaces {
        let labels = space.labels().unwrap();
        for i in 0..space.len() {
            for j in 0..space.len() {
                if i == j {
                    continue;
                }
                let f = token_f1(&space.candidates[i].text, &space.candidates[j].text);
                let slot = if labels[i] == labels[j] { &mut within } else { &mut cross };
                slot.0 += f;
                slot.1 += 1;
            }
        }
    }
    let gap = within.0 / within.1 as f64 - cross.0 / cross.1 as f64;
    assert!(gap >= 0.3, "within-cross gap {gap}");
}

#[test]
fn disjoint_vocabularies_have_zero_cross_f1_and_are_recoverable() {
    let cfg = SynthConfig { noise_rate: 0.0, shared_vocab: 0, n_spaces: 20, ..SynthConfig::default() };
    for space in &generate_synthetic(&cfg).unwrap().spaces {
        let labels = space.labels().unwrap();
        let n = space.len();
        let f = |i: usize, j: usize| token_f1(&space.candidates[i].text, &space.candidates[j].text);
        for i in 0..n {
            for j in 0..n {
                if labels[i] != labels[j] {
                    assert_eq!(f(i, j), 0.0);
                }
            }
        }
        // Single linkage on F1 > 0 recovers the gold partition.
        let mut comp: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for j in 0..n {
                if f(i, j) > 0.0 {
                    let (a, b) = (comp[i], comp[j]);
                    for c in comp.iter_mut().filter(|c| **c == b) {
                        *c = a;
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert_eq!(comp[i] == comp[j], labels[i] == labels[j], "space {}", space.id);
            }
        }
    }
}

#[test]
fn hand_computed_utilities() {
    assert!((token_f1("a b c d", "a b x") - 4.0 / 7.0).abs() < 1e-12);
    let expected = (0.75 + 2.0 / 3.0) / 2.0;
    assert!((char_ngram_f("abcd", "abce", 2, 1.0) - expected).abs() < 1e-12);
}

#[test]
fn matrix_matches_double_loop() {
    let corpus = generate_synthetic(&SynthConfig { n_spaces: 3, ..SynthConfig::default() }).unwrap();
    for backend in [UtilityBackend::TokenF1, UtilityBackend::CharNgramF { order: 4, beta: 2.0 }] {
        for space in &corpus.spaces {
            let m = build_utility_matrix(space, &backend).unwrap();
            let t = space.texts();
            for i in 0..t.len() {
                for j in 0..t.len() {
                    let want = match backend {
                        UtilityBackend::TokenF1 => naive_token_f1(t[i], t[j]),
                        UtilityBackend::CharNgramF { order, beta } => char_ngram_f(t[i], t[j], order, beta),
                    };
                    assert_eq!(m.values()[i * t.len() + j], want as f32);
                }
            }
        }
    }
}

#[test]
fn double_save_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let space = &generate_synthetic(&SynthConfig { n_spaces: 1, ..SynthConfig::default() }).unwrap().spaces[0];
    let m = token_matrix(space);
    save_matrix(&m, dir.path().join("a")).unwrap();
    let reloaded = load_matrix(dir.path().join("a")).unwrap();
    save_matrix(&reloaded, dir.path().join("b")).unwrap();
    assert_eq!(fs::read(dir.path().join("a.umat.bin")).unwrap(), fs::read(dir.path().join("b.umat.bin")).unwrap());
    assert_eq!(reloaded, m);

    let e = EmbeddingSet::new(3, 8, (0..24).map(|i| i as f32 * 0.37 - 4.0).collect()).unwrap();
    save_embeddings(&e, dir.path().join("e")).unwrap();
    let back = load_embeddings(dir.path().join("e"), false).unwrap();
    assert_eq!(back.vectors(), e.vectors());
    let unit = load_embeddings(dir.path().join("e"), true).unwrap();
    for i in 0..3 {
        assert!((unit.norm(i) - 1.0).abs() < 1e-6);
    }
}

fn write_external_matrix(base: &std::path::Path, n: usize, kind: &str, values: &[f32]) {
    let meta = serde_json::json!({ "n": n, "dtype": "f32le", "order": "row-major", "kind": kind });
    fs::write(base.with_extension("umat.json"), meta.to_string()).unwrap();
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(base.with_extension("umat.bin"), bytes).unwrap();
}

fn write_external_embeddings(base: &std::path::Path, n: usize, d: usize, values: &[f32]) {
    let meta = serde_json::json!({ "n": n, "d": d, "dtype": "f32le", "order": "row-major", "normalized": true });
    fs::write(base.with_extension("emb.json"), meta.to_string()).unwrap();
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(base.with_extension("emb.bin"), bytes).unwrap();
}

#[test]
fn externally_written_files_load() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("q7");
    // What an external neural scorer would write for 5 candidates.
    let values: Vec<f32> = (0..25).map(|p| if p % 6 == 0 { 1.0 } else { 0.8 + (p as f32) * 0.001 }).collect();
    write_external_matrix(&base, 5, "external:bertscore", &values);
    let m = load_matrix(&base).unwrap();
    assert_eq!((m.n(), m.kind()), (5, "external:bertscore"));
    assert!(m.values().iter().all(|v| v.is_finite()));
    assert_eq!(m.values(), &values[..]);
    assert!(m.max_asymmetry() > 0.0);

    let s = 1.0 / 2f32.sqrt();
    let rows = [s, s, 0.0, 0.0, 1.0, 0.0, s, s, 0.0];
    write_external_embeddings(&base, 3, 3, &rows);
    let e = load_embeddings(&base, false).unwrap();
    assert!(e.is_normalized());
    assert!((e.cosine(0, 2).unwrap() - 1.0).abs() < 1e-6);

    // Identical strings under an external scorer: entries near 1.
    write_external_matrix(&base, 2, "external:bertscore", &[1.0, 0.995, 0.995, 1.0]);
    let m = load_matrix(&base).unwrap();
    assert!(m.values().iter().all(|v| (0.99..=1.0).contains(v)));
}

#[test]
fn malformed_external_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("bad");
    write_external_matrix(&base, 2, "k", &[1.0, 0.5, 0.5]);
    assert!(load_matrix(&base).unwrap_err().to_string().contains("payload length mismatch"));

    let meta = serde_json::json!({ "n": 2, "dtype": "f64le", "order": "row-major", "kind": "k" });
    fs::write(base.with_extension("umat.json"), meta.to_string()).unwrap();
    assert!(load_matrix(&base).is_err());

    write_external_embeddings(&base, 2, 2, &[3.0, 0.0, 0.0, 1.0]);
    assert!(load_embeddings(&base, false).is_err());
}

#[test]
fn labels_survive_round_trip_in_first_appearance_order() {
    let s = OutcomeSpace {
        id: "q".into(),
        context: String::new(),
        candidates: vec![
            Candidate::labelled("x y", "list"),
            Candidate::labelled("x z", "prose"),
            Candidate::labelled("x w", "list"),
        ],
    };
    let corpus = Corpus::new(vec![s], "t").unwrap();
    let mut buf = Vec::new();
    corpus.write_to(&mut buf).unwrap();
    let back = Corpus::read_from(&buf[..], "t").unwrap();
    let labels: BTreeSet<&str> = back.spaces[0].labels().unwrap().into_iter().collect();
    assert_eq!(labels, BTreeSet::from(["list", "prose"]));
    let (assignment, names) = structmbr::ClusterAssignment::from_names(&back.spaces[0].labels().unwrap()).unwrap();
    assert_eq!(names, vec!["list", "prose"]);
    assert_eq!(assignment.labels(), &[0, 1, 0]);
}
