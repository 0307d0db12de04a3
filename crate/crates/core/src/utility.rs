//! Pairwise utilities, utility matrices, embedding sets, and their file formats.
//!
//! Matrix files are a `<name>.umat.json` metadata object plus
//! `<name>.umat.bin` holding `n * n` little-endian `f32` values in row-major
//! order. Embedding files follow the same layout as `<name>.emb.json` /
//! `<name>.emb.bin` with `n * d` values. External scorers write these files;
//! the loaders here are the only gate they pass through.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::OutcomeSpace;
use crate::error::{Error, Result};

pub const KIND_TOKEN_F1: &str = "token_f1";
pub const KIND_CHAR_NGRAM: &str = "char_ngram_f";

const DTYPE: &str = "f32le";
const ORDER: &str = "row-major";
const NORM_TOLERANCE: f64 = 1e-6;

type Bag = HashMap<String, u32>;

fn token_bag(text: &str) -> Bag {
    let mut bag = Bag::new();
    for tok in text.split_whitespace() {
        *bag.entry(tok.to_lowercase()).or_insert(0) += 1;
    }
    bag
}

fn ngram_bag(chars: &[char], order: usize) -> Bag {
    let mut bag = Bag::new();
    for w in chars.windows(order) {
        *bag.entry(w.iter().collect()).or_insert(0) += 1;
    }
    bag
}

fn overlap(a: &Bag, b: &Bag) -> u32 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().map(|(k, &c)| large.get(k).map_or(0, |&d| c.min(d))).sum()
}

fn total(bag: &Bag) -> u32 {
    bag.values().sum()
}

fn bag_f1(a: &Bag, b: &Bag) -> f64 {
    let (ta, tb) = (total(a), total(b));
    match (ta, tb) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ => 2.0 * f64::from(overlap(a, b)) / f64::from(ta + tb),
    }
}

/// F_beta for hypothesis bag `a` against reference bag `b`; `None` if both are empty.
fn bag_fbeta(a: &Bag, b: &Bag, beta: f64) -> Option<f64> {
    let (ta, tb) = (total(a), total(b));
    match (ta, tb) {
        (0, 0) => None,
        (0, _) | (_, 0) => Some(0.0),
        _ => {
            let m = f64::from(overlap(a, b));
            let p = m / f64::from(ta);
            let r = m / f64::from(tb);
            if p + r == 0.0 {
                return Some(0.0);
            }
            let b2 = beta * beta;
            Some((1.0 + b2) * p * r / (b2 * p + r))
        }
    }
}

/// Token-level F1 over lowercased whitespace tokens, counted as multisets.
///
/// Two empty strings score 1; exactly one empty string scores 0.
pub fn token_f1(a: &str, b: &str) -> f64 {
    bag_f1(&token_bag(a), &token_bag(b))
}

/// Mean character n-gram F_beta over orders `1..=n`, with `a` as hypothesis.
///
/// Whitespace is ignored. Orders where neither string has an n-gram are
/// skipped; if every order is skipped the strings are both empty and score 1.
///
/// Panics if `n` is outside `1..=10` or `beta` is not positive.
pub fn char_ngram_f(a: &str, b: &str, n: usize, beta: f64) -> f64 {
    assert!((1..=10).contains(&n), "n-gram order must be in 1..=10, got {n}");
    assert!(beta > 0.0, "beta must be positive, got {beta}");
    let feats_a = CharFeatures::new(a, n);
    let feats_b = CharFeatures::new(b, n);
    feats_a.score(&feats_b, beta)
}

struct CharFeatures(Vec<Bag>);

impl CharFeatures {
    fn new(text: &str, n: usize) -> Self {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        CharFeatures((1..=n).map(|k| ngram_bag(&chars, k)).collect())
    }

    fn score(&self, reference: &CharFeatures, beta: f64) -> f64 {
        let (sum, count) = self
            .0
            .iter()
            .zip(&reference.0)
            .filter_map(|(h, r)| bag_fbeta(h, r, beta))
            .fold((0.0, 0usize), |(s, c), f| (s + f, c + 1));
        if count == 0 {
            1.0
        } else {
            sum / count as f64
        }
    }
}

/// A built-in utility function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum UtilityBackend {
    TokenF1,
    CharNgramF { order: usize, beta: f64 },
}

impl UtilityBackend {
    /// Resolves a backend from its identifier (`token-f1`, `char-ngram`).
    pub fn from_name(name: &str, order: usize, beta: f64) -> Result<Self> {
        let backend = match name.replace('_', "-").as_str() {
            "token-f1" => UtilityBackend::TokenF1,
            "char-ngram" | "char-ngram-f" | "chrf" => UtilityBackend::CharNgramF { order, beta },
            other => return Err(Error::config(format!("unknown utility backend {other:?}"))),
        };
        backend.validate()?;
        Ok(backend)
    }

    pub fn validate(&self) -> Result<()> {
        if let UtilityBackend::CharNgramF { order, beta } = *self {
            if !(1..=10).contains(&order) {
                return Err(Error::config(format!("n-gram order must be in 1..=10, got {order}")));
            }
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::config(format!("beta must be positive, got {beta}")));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            UtilityBackend::TokenF1 => KIND_TOKEN_F1,
            UtilityBackend::CharNgramF { .. } => KIND_CHAR_NGRAM,
        }
    }

    /// Utility of hypothesis `a` against reference `b`.
    pub fn score(&self, a: &str, b: &str) -> f64 {
        match *self {
            UtilityBackend::TokenF1 => token_f1(a, b),
            UtilityBackend::CharNgramF { order, beta } => char_ngram_f(a, b, order, beta),
        }
    }

    /// Whether `score(a, b) == score(b, a)` for all inputs.
    pub fn is_symmetric(&self) -> bool {
        match *self {
            UtilityBackend::TokenF1 => true,
            UtilityBackend::CharNgramF { beta, .. } => beta == 1.0,
        }
    }
}

/// N x N pairwise utilities `u(h_i, h_j)` for one outcome space, row = hypothesis.
///
/// Entries are stored as `f32` so that the file format round-trips exactly.
/// A transformed matrix may additionally carry a mask of dropped
/// comparisons, which estimators leave out of the reference set.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix {
    n: usize,
    values: Vec<f32>,
    kind: String,
    dropped: Option<Vec<bool>>,
}

impl UtilityMatrix {
    pub fn new(n: usize, values: Vec<f32>, kind: impl Into<String>) -> Result<Self> {
        if n == 0 {
            return Err(Error::data("utility matrix must have n > 0"));
        }
        if values.len() != n * n {
            return Err(Error::data(format!("utility matrix has {} values, expected {n}x{n}", values.len())));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite utility at ({}, {})", pos / n, pos % n)));
        }
        Ok(UtilityMatrix { n, values, kind: kind.into(), dropped: None })
    }

    /// Builds a matrix from an entry function evaluated in row-major order.
    pub fn from_fn(n: usize, kind: impl Into<String>, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i, j) as f32);
            }
        }
        Self::new(n, values, kind)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        f64::from(self.values[i * self.n + j])
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// False when comparison `(i, j)` was dropped by a transform.
    pub fn is_active(&self, i: usize, j: usize) -> bool {
        self.dropped.as_ref().is_none_or(|d| !d[i * self.n + j])
    }

    pub fn has_dropped(&self) -> bool {
        self.dropped.as_ref().is_some_and(|d| d.iter().any(|&x| x))
    }

    pub(crate) fn with_dropped(mut self, dropped: Vec<bool>) -> Self {
        debug_assert_eq!(dropped.len(), self.n * self.n);
        self.dropped = Some(dropped);
        self
    }

    /// Restriction to the given candidate indices, in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> UtilityMatrix {
        let k = idx.len();
        let mut values = Vec::with_capacity(k * k);
        let mut dropped = self.dropped.as_ref().map(|_| Vec::with_capacity(k * k));
        for &i in idx {
            for &j in idx {
                values.push(self.values[i * self.n + j]);
                if let (Some(out), Some(src)) = (dropped.as_mut(), self.dropped.as_ref()) {
                    out.push(src[i * self.n + j]);
                }
            }
        }
        UtilityMatrix { n: k, values, kind: self.kind.clone(), dropped }
    }

    /// Smallest and largest off-diagonal entries (the diagonal for n = 1).
    pub fn off_diagonal_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j || self.n == 1 {
                    lo = lo.min(self.get(i, j));
                    hi = hi.max(self.get(i, j));
                }
            }
        }
        (lo, hi)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Computes `u(candidate_i, candidate_j)` for every ordered pair.
///
/// Rows are computed in parallel; every entry is an independent function of
/// its pair so the result does not depend on scheduling.
pub fn build_utility_matrix(space: &OutcomeSpace, backend: &UtilityBackend) -> Result<UtilityMatrix> {
    backend.validate()?;
    let texts = space.texts();
    let n = texts.len();
    let rows: Vec<Vec<f32>> = match *backend {
        UtilityBackend::TokenF1 => {
            let bags: Vec<Bag> = texts.iter().map(|t| token_bag(t)).collect();
            (0..n).into_par_iter().map(|i| bags.iter().map(|b| bag_f1(&bags[i], b) as f32).collect()).collect()
        }
        UtilityBackend::CharNgramF { order, beta } => {
            let feats: Vec<CharFeatures> = texts.iter().map(|t| CharFeatures::new(t, order)).collect();
            (0..n).into_par_iter().map(|i| feats.iter().map(|f| feats[i].score(f, beta) as f32).collect()).collect()
        }
    };
    UtilityMatrix::new(n, rows.concat(), backend.kind())
}

/// N x d embedding vectors, one row per candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    n: usize,
    d: usize,
    vectors: Vec<f32>,
    normalized: bool,
}

impl EmbeddingSet {
    pub fn new(n: usize, d: usize, vectors: Vec<f32>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::data(format!("embedding set must have n, d > 0 (got {n}x{d})")));
        }
        if vectors.len() != n * d {
            return Err(Error::data(format!("embedding set has {} values, expected {n}x{d}", vectors.len())));
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite embedding value in row {}", pos / d)));
        }
        Ok(EmbeddingSet { n, d, vectors, normalized: false })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::data("embedding rows have differing lengths"));
        }
        Self::new(rows.len(), d, rows.iter().flatten().map(|&x| x as f32).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.d..(i + 1) * self.d]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&x| f64::from(x)).collect()
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt()
    }

    /// Rows rescaled to unit Euclidean norm.
    pub fn normalized(&self) -> Result<Self> {
        let mut vectors = Vec::with_capacity(self.vectors.len());
        for i in 0..self.n {
            let norm = self.norm(i);
            if norm == 0.0 {
                return Err(Error::data(format!("zero-norm row {i}")));
            }
            vectors.extend(self.row(i).iter().map(|&x| (f64::from(x) / norm) as f32));
        }
        Ok(EmbeddingSet { n: self.n, d: self.d, vectors, normalized: true })
    }

    /// Cosine similarity of rows `i` and `j`, clamped to [-1, 1].
    /// Identical rows give exactly 1.
    pub fn cosine(&self, i: usize, j: usize) -> Result<f64> {
        let dot = |a: &[f32], b: &[f32]| -> f64 { a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum() };
        let (ri, rj) = (self.row(i), self.row(j));
        let (sii, sjj) = (dot(ri, ri), dot(rj, rj));
        if sii == 0.0 {
            return Err(Error::data(format!("zero-norm row {i}")));
        }
        if sjj == 0.0 {
            return Err(Error::data(format!("zero-norm row {j}")));
        }
        Ok((dot(ri, rj) / (sii * sjj).sqrt()).clamp(-1.0, 1.0))
    }

    pub fn subset(&self, idx: &[usize]) -> EmbeddingSet {
        let vectors = idx.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        EmbeddingSet { n: idx.len(), d: self.d, vectors, normalized: self.normalized }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixMeta {
    n: usize,
    dtype: String,
    order: String,
    kind: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingMeta {
    n: usize,
    d: usize,
    dtype: String,
    order: String,
    normalized: bool,
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn strip_known(base: &Path, ext: &str) -> PathBuf {
    let s = base.to_string_lossy();
    for suffix in [format!(".{ext}.json"), format!(".{ext}.bin")] {
        if let Some(stem) = s.strip_suffix(&suffix) {
            return PathBuf::from(stem);
        }
    }
    base.to_path_buf()
}

/// Metadata and payload paths of a matrix file pair. `base` may be the bare
/// name or either of the two files.
pub fn matrix_paths(base: impl AsRef<Path>) -> (PathBuf, PathBuf) {
    let base = strip_known(base.as_ref(), "umat");
    (with_suffix(&base, ".umat.json"), with_suffix(&base, ".umat.bin"))
}

/// Metadata and payload paths of an embedding file pair.
pub fn embedding_paths(base: impl AsRef<Path>) -> (PathBuf, PathBuf) {
    let base = strip_known(base.as_ref(), "emb");
    (with_suffix(&base, ".emb.json"), with_suffix(&base, ".emb.bin"))
}

fn encode_f32(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn decode_f32(bytes: &[u8]) -> Vec<f32> {
    bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect()
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json { path: path.into(), source: e })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json { path: path.into(), source: e })
}

fn check_layout(path: &Path, dtype: &str, order: &str) -> Result<()> {
    if dtype != DTYPE {
        return Err(Error::data(format!("{}: unsupported dtype {dtype:?}", path.display())));
    }
    if order != ORDER {
        return Err(Error::data(format!("{}: unsupported order {order:?}", path.display())));
    }
    Ok(())
}

fn read_payload(path: &Path, expected: usize) -> Result<Vec<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 4 {
        return Err(Error::data(format!(
            "{}: payload length mismatch ({} bytes, expected {})",
            path.display(),
            bytes.len(),
            expected * 4
        )));
    }
    Ok(decode_f32(&bytes))
}

/// Writes a matrix as `<base>.umat.json` + `<base>.umat.bin`.
pub fn save_matrix(m: &UtilityMatrix, base: impl AsRef<Path>) -> Result<()> {
    if m.has_dropped() {
        return Err(Error::config("matrices with dropped comparisons have no file representation"));
    }
    let (meta_path, bin_path) = matrix_paths(base);
    let meta = MatrixMeta { n: m.n, dtype: DTYPE.into(), order: ORDER.into(), kind: m.kind.clone() };
    write_json(&meta_path, &meta)?;
    fs::write(&bin_path, encode_f32(&m.values)).map_err(|e| Error::io(&bin_path, e))
}

pub fn load_matrix(base: impl AsRef<Path>) -> Result<UtilityMatrix> {
    let (meta_path, bin_path) = matrix_paths(base);
    let meta: MatrixMeta = read_json(&meta_path)?;
    check_layout(&meta_path, &meta.dtype, &meta.order)?;
    let values = read_payload(&bin_path, meta.n * meta.n)?;
    UtilityMatrix::new(meta.n, values, meta.kind).map_err(|e| Error::data(format!("{}: {e}", bin_path.display())))
}

/// Writes embeddings as `<base>.emb.json` + `<base>.emb.bin`.
pub fn save_embeddings(e: &EmbeddingSet, base: impl AsRef<Path>) -> Result<()> {
    let (meta_path, bin_path) = embedding_paths(base);
    let meta = EmbeddingMeta { n: e.n, d: e.d, dtype: DTYPE.into(), order: ORDER.into(), normalized: e.normalized };
    write_json(&meta_path, &meta)?;
    fs::write(&bin_path, encode_f32(&e.vectors)).map_err(|e| Error::io(&bin_path, e))
}

/// Loads embeddings; with `normalize` every row is rescaled to unit norm.
///
/// A file that declares `normalized: true` must have unit rows (within 1e-6).
pub fn load_embeddings(base: impl AsRef<Path>, normalize: bool) -> Result<EmbeddingSet> {
    let (meta_path, bin_path) = embedding_paths(base);
    let meta: EmbeddingMeta = read_json(&meta_path)?;
    check_layout(&meta_path, &meta.dtype, &meta.order)?;
    let values = read_payload(&bin_path, meta.n * meta.d)?;
    let mut set =
        EmbeddingSet::new(meta.n, meta.d, values).map_err(|e| Error::data(format!("{}: {e}", bin_path.display())))?;
    if meta.normalized {
        for i in 0..set.n {
            let norm = set.norm(i);
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::data(format!(
                    "{}: row {i} has norm {norm} but the file declares normalized rows",
                    bin_path.display()
                )));
            }
        }
        set.normalized = true;
    }
    if normalize && !set.normalized {
        set = set.normalized()?;
    }
    Ok(set)
}
