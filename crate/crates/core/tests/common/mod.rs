//! Brute-force reference implementations used as test oracles.
//!
//! Nothing here calls into the library's scoring, ranking, or metric code;
//! only data types and file formats are shared.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use structmbr::corpus::{generate_synthetic, synthetic_embeddings, SynthConfig};
use structmbr::engine::{CutoffDelta, CutoffMode};
use structmbr::{Corpus, EmbeddingSet, OutcomeSpace, UtilityBackend, UtilityMatrix};

/// Weighted mean utility of each hypothesis over a reference set, by double
/// loop. `u` returns `None` for a comparison that does not count.
pub fn brute_scores(
    n: usize,
    w: &[f64],
    hyps: &[usize],
    refs: &[usize],
    exclude_self: bool,
    u: impl Fn(usize, usize) -> Option<f64>,
) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for &h in hyps {
        let mut num = 0.0;
        let mut den = 0.0;
        for &j in refs {
            if exclude_self && h == j {
                continue;
            }
            if let Some(v) = u(h, j) {
                num += w[j] * v;
                den += w[j];
            }
        }
        out[h] = if den > 0.0 { num / den } else { 0.0 };
    }
    out
}

/// First index (in `hyps` order) attaining the maximum score.
pub fn argmax(scores: &[f64], hyps: &[usize]) -> usize {
    let mut best = hyps[0];
    for &h in hyps {
        if scores[h] > scores[best] {
            best = h;
        }
    }
    best
}

pub fn all(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub fn entry(m: &UtilityMatrix, i: usize, j: usize) -> f64 {
    f64::from(m.values()[i * m.n() + j])
}

pub fn standard_oracle(m: &UtilityMatrix, w: &[f64], exclude_self: bool) -> (usize, Vec<f64>) {
    let idx = all(m.n());
    let s = brute_scores(m.n(), w, &idx, &idx, exclude_self, |h, j| Some(entry(m, h, j)));
    (argmax(&s, &idx), s)
}

pub fn cutoff_oracle(m: &UtilityMatrix, w: &[f64], tau: f64, delta: CutoffDelta, mode: CutoffMode) -> usize {
    let n = m.n();
    let mut top = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                top = top.max(entry(m, i, j));
            }
        }
    }
    let threshold = match mode {
        CutoffMode::Absolute => tau,
        CutoffMode::DeviationFromMax => top - tau,
    };
    let idx = all(n);
    let s = brute_scores(n, w, &idx, &idx, true, |h, j| {
        let v = entry(m, h, j);
        if v >= threshold {
            Some(v)
        } else {
            match delta {
                CutoffDelta::Value(d) => Some(f64::from(d as f32)),
                CutoffDelta::Drop => None,
            }
        }
    });
    argmax(&s, &idx)
}

/// Groups candidates by label in first-appearance order.
pub fn groups<S: AsRef<str>>(labels: &[S]) -> Vec<Vec<usize>> {
    let mut order: Vec<&str> = Vec::new();
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        let l = l.as_ref();
        if !members.contains_key(l) {
            order.push(l);
        }
        members.entry(l).or_default().push(i);
    }
    order.into_iter().map(|l| members[l].clone()).collect()
}

/// Dominant group: largest total weight, ties to the group whose first member
/// comes first.
pub fn dominant(groups: &[Vec<usize>], w: &[f64]) -> usize {
    let mass = |g: &Vec<usize>| g.iter().map(|&i| w[i]).sum::<f64>();
    let mut best = 0;
    for (c, g) in groups.iter().enumerate() {
        let (a, b) = (mass(g), mass(&groups[best]));
        if a > b || (a == b && g[0] < groups[best][0]) {
            best = c;
        }
    }
    best
}

pub fn within_group_oracle(m: &UtilityMatrix, w: &[f64], members: &[usize], exclude_self: bool) -> (usize, Vec<f64>) {
    let s = brute_scores(m.n(), w, members, members, exclude_self, |h, j| Some(entry(m, h, j)));
    (argmax(&s, members), s)
}

pub fn cluster_oracle(m: &UtilityMatrix, w: &[f64], groups: &[Vec<usize>], exclude_self: bool) -> usize {
    within_group_oracle(m, w, &groups[dominant(groups, w)], exclude_self).0
}

pub fn naive_cosine(e: &EmbeddingSet, i: usize, j: usize) -> f64 {
    let (a, b) = (e.row(i), e.row(j));
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for k in 0..e.d() {
        let (x, y) = (f64::from(a[k]), f64::from(b[k]));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

pub fn embed_oracle(m: &UtilityMatrix, e: &EmbeddingSet, thr: Option<f64>, w: &[f64], exclude_self: bool) -> usize {
    let idx = all(m.n());
    let s = brute_scores(m.n(), w, &idx, &idx, exclude_self, |h, j| {
        let mut sim = (naive_cosine(e, h, j) + 1.0) / 2.0;
        if let Some(t) = thr {
            if sim < t {
                sim = 0.0;
            }
        }
        Some(f64::from((entry(m, h, j) * sim) as f32))
    });
    argmax(&s, &idx)
}

/// Fractional ranks by counting: 1 + #smaller + (#equal - 1) / 2.
pub fn naive_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let less = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    if va == 0.0 || vb == 0.0 {
        None
    } else {
        Some(cov / (va * vb).sqrt())
    }
}

pub fn naive_spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&naive_ranks(a), &naive_ranks(b))
}

pub fn token_matrix(space: &OutcomeSpace) -> UtilityMatrix {
    structmbr::utility::build_utility_matrix(space, &UtilityBackend::TokenF1).unwrap()
}

/// Assorted labelled spaces with random weights and embeddings, each with at
/// most 50 candidates.
pub fn random_spaces(count: usize, seed: u64) -> Vec<(OutcomeSpace, UtilityMatrix, EmbeddingSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let compromise = rng.random_bool(0.3);
        let lo = rng.random_range(if compromise { 2 } else { 1 }..=4);
        let hi = rng.random_range(lo..=6);
        let per = rng.random_range(2..=7);
        let cfg = SynthConfig {
            n_spaces: 5,
            clusters_per_space: (lo, hi),
            candidates_per_cluster: per,
            vocab_per_cluster: rng.random_range(4..=16),
            shared_vocab: rng.random_range(0..=8),
            tokens_per_candidate: (3, rng.random_range(3..=12)),
            noise_rate: rng.random_range(0.0..0.3),
            separation: rng.random_range(0.5..6.0),
            include_compromise: compromise,
            seed: rng.random(),
        };
        let corpus = generate_synthetic(&cfg).unwrap();
        for mut space in corpus.spaces {
            if out.len() == count {
                break;
            }
            assert!(space.len() <= 50);
            space.id = format!("rand-{seed}-{}", out.len());
            for c in &mut space.candidates {
                c.weight = rng.random_range(0.25..2.0);
            }
            let m = token_matrix(&space);
            let e = synthetic_embeddings(&space, 16, rng.random_range(0.2..1.2), rng.random()).unwrap();
            out.push((space, m, e));
        }
    }
    out
}

/// A corpus and its matrices.
pub fn with_matrices(corpus: Corpus) -> (Corpus, Vec<UtilityMatrix>) {
    let matrices = corpus.spaces.iter().map(token_matrix).collect();
    (corpus, matrices)
}

/// Multiset token F1 by repeated removal from a list.
pub fn naive_token_f1(a: &str, b: &str) -> f64 {
    let ta: Vec<String> = a.split_whitespace().map(str::to_lowercase).collect();
    let tb: Vec<String> = b.split_whitespace().map(str::to_lowercase).collect();
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let mut pool = tb.clone();
    let mut overlap = 0.0;
    for t in &ta {
        if let Some(p) = pool.iter().position(|x| x == t) {
            pool.remove(p);
            overlap += 1.0;
        }
    }
    if overlap == 0.0 {
        return 0.0;
    }
    let (p, r) = (overlap / ta.len() as f64, overlap / tb.len() as f64);
    2.0 * p * r / (p + r)
}
