//! Outcome spaces, corpus files, splitting, and the seeded synthetic generator.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::utility::EmbeddingSet;

/// Label given to synthetic candidates that blend two clusters.
pub const COMPROMISE_LABEL: &str = "compromise";

fn default_weight() -> f64 {
    1.0
}

/// One sampled generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

impl Candidate {
    pub fn new(text: impl Into<String>) -> Self {
        Candidate { text: text.into(), label: None, weight: 1.0 }
    }

    pub fn labelled(text: impl Into<String>, label: impl Into<String>) -> Self {
        Candidate { text: text.into(), label: Some(label.into()), weight: 1.0 }
    }
}

/// A context together with its candidate generations.
///
/// Candidate order is the canonical index order for every matrix and
/// embedding set that refers to this space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpace {
    pub id: String,
    pub context: String,
    pub candidates: Vec<Candidate>,
}

impl OutcomeSpace {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.text.as_str()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.candidates.iter().map(|c| c.weight).collect()
    }

    pub fn is_labelled(&self) -> bool {
        self.candidates.first().is_some_and(|c| c.label.is_some())
    }

    /// Gold labels, when every candidate carries one.
    pub fn labels(&self) -> Option<Vec<&str>> {
        self.candidates.iter().map(|c| c.label.as_deref()).collect()
    }

    /// Checks every invariant of an outcome space.
    pub fn validate(&self) -> Result<()> {
        let id = &self.id;
        if self.candidates.len() < 2 {
            return Err(Error::data(format!("space {id}: fewer than 2 candidates")));
        }
        for (i, c) in self.candidates.iter().enumerate() {
            if c.text.trim().is_empty() {
                return Err(Error::data(format!("space {id}: candidate {i} has empty text")));
            }
            if !c.weight.is_finite() || c.weight < 0.0 {
                return Err(Error::data(format!("space {id}: candidate {i} has invalid weight {}", c.weight)));
            }
        }
        if self.candidates.iter().all(|c| c.weight == 0.0) {
            return Err(Error::data(format!("space {id}: all candidate weights are zero")));
        }
        let labelled = self.candidates.iter().filter(|c| c.label.is_some()).count();
        if labelled != 0 && labelled != self.candidates.len() {
            return Err(Error::data(format!(
                "space {id}: mixed labelling ({labelled} of {} candidates labelled)",
                self.candidates.len()
            )));
        }
        Ok(())
    }
}

/// An ordered collection of outcome spaces with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub spaces: Vec<OutcomeSpace>,
    pub provenance: String,
}

impl Corpus {
    /// Builds a corpus, validating every space and id uniqueness.
    pub fn new(spaces: Vec<OutcomeSpace>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for space in &spaces {
            space.validate()?;
            if !seen.insert(space.id.as_str()) {
                return Err(Error::data(format!("duplicate space id {:?}", space.id)));
            }
        }
        Ok(Corpus { spaces, provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    pub fn is_labelled(&self) -> bool {
        self.spaces.iter().all(OutcomeSpace::is_labelled)
    }

    /// Serializes the corpus as line-delimited JSON records.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        for space in &self.spaces {
            serde_json::to_writer(&mut w, space)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Parses line-delimited records. Blank lines are skipped.
    pub fn read_from(r: impl BufRead, provenance: impl Into<String>) -> Result<Self> {
        let mut spaces = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in r.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let space: OutcomeSpace =
                serde_json::from_str(&line).map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
            space.validate().map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
            if !seen.insert(space.id.clone()) {
                return Err(Error::Parse { line: lineno, message: format!("duplicate space id {:?}", space.id) });
            }
            spaces.push(space);
        }
        Ok(Corpus { spaces, provenance: provenance.into() })
    }
}

/// Reads a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Corpus::read_from(BufReader::new(file), path.display().to_string())
}

/// Writes a corpus file.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    corpus.write_to(&mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Partitions a corpus into train/validation/test by a seeded permutation.
///
/// Validation and test sizes are `floor(n * fraction)`; the remainder goes to
/// training. Spaces keep their original relative order inside each split.
pub fn split_corpus(corpus: &Corpus, fractions: [f64; 3], seed: u64) -> Result<(Corpus, Corpus, Corpus)> {
    if corpus.is_empty() {
        return Err(Error::config("cannot split an empty corpus"));
    }
    if fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
        return Err(Error::config(format!("split fractions must lie in (0,1): {fractions:?}")));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("split fractions sum to {total}, expected 1")));
    }

    let n = corpus.len();
    // Guard against products like 0.7 * 10 = 6.999...
    let n_val = ((n as f64) * fractions[1] + 1e-9).floor() as usize;
    let n_test = ((n as f64) * fractions[2] + 1e-9).floor() as usize;
    let n_train = n - n_val - n_test;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let take = |idx: &[usize], tag: &str| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        Corpus {
            spaces: idx.iter().map(|&i| corpus.spaces[i].clone()).collect(),
            provenance: format!("{}#{tag}(seed={seed})", corpus.provenance),
        }
    };
    Ok((
        take(&order[..n_train], "train"),
        take(&order[n_train..n_train + n_val], "val"),
        take(&order[n_train + n_val..], "test"),
    ))
}

/// Parameters of the synthetic outcome-space generator.
///
/// Each cluster draws tokens from its own vocabulary (Zipf-weighted, so some
/// members are more central than others). With probability `1/(1+separation)`
/// a token comes from a vocabulary shared by all clusters instead, which
/// bounds the expected cross-cluster token F1 by the same quantity. Noise
/// replaces tokens by junk that matches nothing in particular. A compromise
/// candidate alternates the most frequent tokens of the two largest clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_spaces: usize,
    /// Inclusive range for the number of clusters per space.
    pub clusters_per_space: (usize, usize),
    pub candidates_per_cluster: usize,
    pub vocab_per_cluster: usize,
    pub shared_vocab: usize,
    /// Inclusive range of tokens per candidate.
    pub tokens_per_candidate: (usize, usize),
    pub noise_rate: f64,
    pub separation: f64,
    pub include_compromise: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_spaces: 100,
            clusters_per_space: (2, 4),
            candidates_per_cluster: 5,
            vocab_per_cluster: 12,
            shared_vocab: 6,
            tokens_per_candidate: (8, 12),
            noise_rate: 0.05,
            separation: 3.0,
            include_compromise: false,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.clusters_per_space;
        if self.n_spaces == 0 {
            return Err(Error::config("n_spaces must be positive"));
        }
        if lo < 1 || hi > 8 || lo > hi {
            return Err(Error::config(format!("clusters_per_space must be a range within [1, 8], got {lo}..={hi}")));
        }
        if self.candidates_per_cluster == 0 || self.vocab_per_cluster == 0 {
            return Err(Error::config("candidates_per_cluster and vocab_per_cluster must be positive"));
        }
        let (tlo, thi) = self.tokens_per_candidate;
        if tlo == 0 || tlo > thi {
            return Err(Error::config(format!(
                "tokens_per_candidate must be a non-empty positive range, got {tlo}..={thi}"
            )));
        }
        if !(0.0..0.5).contains(&self.noise_rate) {
            return Err(Error::config(format!("noise_rate must lie in [0, 0.5), got {}", self.noise_rate)));
        }
        if self.separation.is_nan() || self.separation <= 0.0 {
            return Err(Error::config(format!("separation must be > 0, got {}", self.separation)));
        }
        if lo * self.candidates_per_cluster + usize::from(self.include_compromise) < 2 {
            return Err(Error::config("configuration can produce spaces with fewer than 2 candidates"));
        }
        if self.include_compromise && lo < 2 {
            return Err(Error::config("compromise candidates need at least 2 clusters per space"));
        }
        Ok(())
    }

    /// Probability that a token is drawn from the shared vocabulary.
    pub fn shared_rate(&self) -> f64 {
        if self.shared_vocab == 0 {
            0.0
        } else {
            1.0 / (1.0 + self.separation)
        }
    }
}

struct TokenSampler<'a> {
    cfg: &'a SynthConfig,
    zipf: WeightedIndex<f64>,
}

impl TokenSampler<'_> {
    fn token(&self, cluster: usize, rng: &mut ChaCha8Rng) -> String {
        let token = if self.cfg.shared_vocab > 0 && rng.random_bool(self.cfg.shared_rate()) {
            format!("sh{}", rng.random_range(0..self.cfg.shared_vocab))
        } else {
            format!("c{cluster}w{}", self.zipf.sample(rng))
        };
        if self.cfg.noise_rate > 0.0 && rng.random_bool(self.cfg.noise_rate) {
            format!("nz{}", rng.random_range(0..100_000u32))
        } else {
            token
        }
    }

    fn length(&self, rng: &mut ChaCha8Rng) -> usize {
        let (lo, hi) = self.cfg.tokens_per_candidate;
        rng.random_range(lo..=hi)
    }
}

/// Generates a corpus with known latent cluster structure.
///
/// Space `i` is generated from its own ChaCha stream, so a space does not
/// depend on how many spaces precede it.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Corpus> {
    cfg.validate()?;
    let zipf_weights: Vec<f64> = (0..cfg.vocab_per_cluster).map(|w| 1.0 / (w as f64 + 1.0)).collect();
    let sampler = TokenSampler { cfg, zipf: WeightedIndex::new(zipf_weights).expect("positive weights") };

    let mut spaces = Vec::with_capacity(cfg.n_spaces);
    for i in 0..cfg.n_spaces {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);

        let k = rng.random_range(cfg.clusters_per_space.0..=cfg.clusters_per_space.1);
        let mut candidates = Vec::new();
        for cluster in 0..k {
            for _ in 0..cfg.candidates_per_cluster {
                let len = sampler.length(&mut rng);
                let text: Vec<String> = (0..len).map(|_| sampler.token(cluster, &mut rng)).collect();
                candidates.push(Candidate::labelled(text.join(" "), format!("s{cluster}")));
            }
        }
        if cfg.include_compromise {
            // All clusters have equal size, so the two largest are 0 and 1.
            // Alternating their top-ranked tokens makes it typical of both.
            let len = sampler.length(&mut rng).max(2);
            let text: Vec<String> =
                (0..len).map(|t| format!("c{}w{}", t % 2, (t / 2) % cfg.vocab_per_cluster)).collect();
            candidates.push(Candidate::labelled(text.join(" "), COMPROMISE_LABEL));
        }
        candidates.shuffle(&mut rng);

        spaces.push(OutcomeSpace {
            id: format!("synth-{i:05}"),
            context: format!("synthetic context {i}"),
            candidates,
        });
    }
    Corpus::new(spaces, format!("synthetic(seed={})", cfg.seed))
}

/// Unit-normalized embeddings that encode a space's gold labels.
///
/// Every label gets a random direction; candidates are that direction plus
/// isotropic Gaussian noise of norm roughly `spread`. Compromise candidates
/// sit at the midpoint of the first two labels' directions.
pub fn synthetic_embeddings(space: &OutcomeSpace, dim: usize, spread: f64, seed: u64) -> Result<EmbeddingSet> {
    let labels = space
        .labels()
        .ok_or_else(|| Error::data(format!("space {}: synthetic embeddings need gold labels", space.id)))?;
    if dim == 0 {
        return Err(Error::config("embedding dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut names: Vec<&str> = Vec::new();
    for l in &labels {
        if *l != COMPROMISE_LABEL && !names.contains(l) {
            names.push(l);
        }
    }
    let mut centers: Vec<Vec<f64>> = names
        .iter()
        .map(|_| unit(&(0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>()))
        .collect();
    if centers.is_empty() {
        centers.push(unit(&(0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>()));
    }
    let compromise = if centers.len() >= 2 {
        unit(&centers[0].iter().zip(&centers[1]).map(|(a, b)| a + b).collect::<Vec<_>>())
    } else {
        centers[0].clone()
    };

    let scale = spread / (dim as f64).sqrt();
    let mut vectors = Vec::with_capacity(space.len() * dim);
    for l in &labels {
        let center = match names.iter().position(|n| n == l) {
            Some(c) => &centers[c],
            None => &compromise,
        };
        let v: Vec<f64> = center.iter().map(|x| x + scale * rng.sample::<f64, _>(StandardNormal)).collect();
        vectors.extend(unit(&v).into_iter().map(|x| x as f32));
    }
    EmbeddingSet::new(space.len(), dim, vectors)?.normalized()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}
