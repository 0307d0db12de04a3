//! Threshold sweeps for utility cut-off and embedding-cosine thresholds.
//!
//! Every setting is scored by cluster optimality on the training data; the
//! `top_k` best are re-scored on validation data and the best of those wins.

use std::io::Write;

use rand::seq::{index, IndexedRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::select_k_detailed;
use crate::corpus::Corpus;
use crate::engine::{CutoffDelta, CutoffMode, Method};
use crate::error::{Error, Result};
use crate::metrics::evaluate_method;
use crate::utility::{EmbeddingSet, UtilityMatrix};

/// Number of thresholds in a default sweep.
pub const DEFAULT_GRID_STEPS: usize = 50;
pub const DEFAULT_TOP_K: usize = 10;
pub const DEFAULT_FLOOR_SUBSAMPLES: usize = 200;
pub const DEFAULT_FLOOR_SUBSAMPLE_SIZE: usize = 40;

/// A labelled corpus with its aligned matrices (and embeddings, if any).
#[derive(Debug, Clone, Copy)]
pub struct LabelledSet<'a> {
    pub corpus: &'a Corpus,
    pub matrices: &'a [UtilityMatrix],
    pub embeddings: Option<&'a [EmbeddingSet]>,
}

impl<'a> LabelledSet<'a> {
    pub fn new(corpus: &'a Corpus, matrices: &'a [UtilityMatrix]) -> Self {
        LabelledSet { corpus, matrices, embeddings: None }
    }

    pub fn with_embeddings(mut self, embeddings: &'a [EmbeddingSet]) -> Self {
        self.embeddings = Some(embeddings);
        self
    }

    fn check(&self, role: &str) -> Result<()> {
        if self.corpus.is_empty() {
            return Err(Error::config(format!("{role} corpus is empty")));
        }
        if !self.corpus.is_labelled() {
            return Err(Error::data(format!("{role} corpus is not labelled")));
        }
        if self.matrices.len() != self.corpus.len() {
            return Err(Error::config(format!(
                "{role}: {} matrices for {} spaces",
                self.matrices.len(),
                self.corpus.len()
            )));
        }
        Ok(())
    }
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Strictly increasing thresholds.
    pub grid: Vec<f64>,
    pub modes: Vec<CutoffMode>,
    pub deltas: Vec<CutoffDelta>,
    pub top_k: usize,
}

impl SweepConfig {
    /// Absolute thresholds with zero replacement over the given grid.
    pub fn absolute(grid: Vec<f64>) -> Self {
        SweepConfig {
            grid,
            modes: vec![CutoffMode::Absolute],
            deltas: vec![CutoffDelta::Value(0.0)],
            top_k: DEFAULT_TOP_K,
        }
    }

    /// Every mode and replacement with a grid spanning the observed
    /// off-diagonal utilities of the training matrices.
    pub fn data_driven(matrices: &[UtilityMatrix], steps: usize) -> Result<Self> {
        let (lo, hi) = matrices
            .iter()
            .map(UtilityMatrix::off_diagonal_range)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (lo, hi)| (a.min(lo), b.max(hi)));
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::data("training utilities do not span a range to sweep"));
        }
        Ok(SweepConfig {
            grid: linspace(lo, hi, steps),
            modes: vec![CutoffMode::Absolute, CutoffMode::DeviationFromMax],
            deltas: vec![CutoffDelta::Value(0.0), CutoffDelta::Value(-1.0), CutoffDelta::Drop],
            top_k: DEFAULT_TOP_K,
        })
    }

    /// A grid spanning the observed rescaled cosine similarities.
    pub fn data_driven_cosine(embeddings: &[EmbeddingSet], steps: usize) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for e in embeddings {
            for i in 0..e.n() {
                for j in i + 1..e.n() {
                    let s = (e.cosine(i, j)? + 1.0) / 2.0;
                    lo = lo.min(s);
                    hi = hi.max(s);
                }
            }
        }
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::data("training similarities do not span a range to sweep"));
        }
        Ok(SweepConfig::absolute(linspace(lo, hi, steps)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::config("empty threshold grid"));
        }
        if self.grid.iter().any(|t| !t.is_finite()) || self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("threshold grid must be finite and strictly increasing"));
        }
        if self.modes.is_empty() || self.deltas.is_empty() {
            return Err(Error::config("sweep needs at least one mode and one delta"));
        }
        if self.top_k == 0 {
            return Err(Error::config("top_k must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum Setting {
    Cutoff { tau: f64, mode: CutoffMode, delta: CutoffDelta },
    Cosine { threshold: f64 },
}

impl Setting {
    pub fn method(&self) -> Method {
        match *self {
            Setting::Cutoff { tau, mode, delta } => Method::Cutoff { tau, delta, mode },
            Setting::Cosine { threshold } => Method::Embed { cos_threshold: Some(threshold), exclude_self: true },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingScore {
    pub setting: Setting,
    pub train_co: f64,
    pub train_corc: Option<f64>,
    /// Present for the `top_k` settings that were validated.
    pub val_co: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Every setting, best training CO first.
    pub ranked: Vec<SettingScore>,
    pub chosen: SettingScore,
    pub top_k: usize,
}

impl SweepResult {
    pub fn chosen_val_co(&self) -> f64 {
        self.chosen.val_co.expect("chosen setting is validated")
    }

    /// One line per setting (the full trace) and a final `chosen` line.
    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for s in &self.ranked {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut w, &serde_json::json!({ "chosen": self.chosen, "top_k": self.top_k }))?;
        w.write_all(b"\n")
    }
}

fn run_sweep(settings: Vec<Setting>, train: &LabelledSet, val: &LabelledSet, top_k: usize) -> Result<SweepResult> {
    let scored: Vec<SettingScore> = settings
        .par_iter()
        .map(|s| {
            let report = evaluate_method(train.corpus, train.matrices, train.embeddings, &s.method())?;
            Ok(SettingScore { setting: *s, train_co: report.co, train_corc: report.corc, val_co: None })
        })
        .collect::<Result<_>>()?;

    // Stable sort keeps enumeration order (threshold, then mode, then delta) among ties.
    let mut ranked = scored;
    ranked.sort_by(|a, b| b.train_co.total_cmp(&a.train_co));

    let k = top_k.min(ranked.len());
    let val_scores: Vec<f64> = ranked[..k]
        .par_iter()
        .map(|s| evaluate_method(val.corpus, val.matrices, val.embeddings, &s.setting.method()).map(|r| r.co))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, s) in val_scores.iter().enumerate() {
        ranked[i].val_co = Some(*s);
        if *s > val_scores[best] {
            best = i;
        }
    }
    Ok(SweepResult { chosen: ranked[best].clone(), ranked, top_k: k })
}

/// Sweeps utility cut-off settings (threshold x mode x delta).
pub fn sweep_cutoff(train: &LabelledSet, val: &LabelledSet, cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    train.check("training")?;
    val.check("validation")?;
    let mut settings = Vec::new();
    for &tau in &cfg.grid {
        for &mode in &cfg.modes {
            for &delta in &cfg.deltas {
                settings.push(Setting::Cutoff { tau, mode, delta });
            }
        }
    }
    run_sweep(settings, train, val, cfg.top_k)
}

/// Sweeps the rescaled-cosine threshold of structure-embedding MBR.
/// Only `cfg.grid` and `cfg.top_k` are used.
pub fn sweep_cosine_threshold(train: &LabelledSet, val: &LabelledSet, cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    train.check("training")?;
    val.check("validation")?;
    for (role, set) in [("training", train), ("validation", val)] {
        match set.embeddings {
            Some(e) if e.len() == set.corpus.len() => {}
            _ => return Err(Error::config(format!("{role} set needs one embedding set per space"))),
        }
    }
    let settings = cfg.grid.iter().map(|&threshold| Setting::Cosine { threshold }).collect();
    run_sweep(settings, train, val, cfg.top_k)
}

/// Outcome of [`tune_silhouette_floor`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorTuning {
    pub floor: f64,
    /// Fraction of subsamples whose number of clusters was predicted exactly.
    pub accuracy: f64,
    /// `(floor, accuracy)` for every grid value.
    pub trace: Vec<(f64, f64)>,
    pub subsamples: usize,
}

/// Picks the silhouette floor that best predicts the number of gold
/// structures.
///
/// Draws `subsamples` random subsets of at most `size` candidates from random
/// spaces (seeded), runs k selection over `k in [2, 6]` once per subset, and
/// scores each floor by how often "k = 1 below the floor, best k otherwise"
/// equals the number of distinct labels in the subset. Ties go to the
/// earliest grid value.
pub fn tune_silhouette_floor(
    corpus: &Corpus,
    embeddings: &[EmbeddingSet],
    grid: &[f64],
    subsamples: usize,
    size: usize,
    seed: u64,
) -> Result<FloorTuning> {
    if grid.is_empty() || grid.iter().any(|f| !f.is_finite()) {
        return Err(Error::config("floor grid must be non-empty and finite"));
    }
    if subsamples == 0 || size < 3 {
        return Err(Error::config("need at least one subsample of at least 3 candidates"));
    }
    if !corpus.is_labelled() {
        return Err(Error::data("floor tuning needs a labelled corpus"));
    }
    if embeddings.len() != corpus.len() {
        return Err(Error::config(format!("{} embedding sets for {} spaces", embeddings.len(), corpus.len())));
    }
    let eligible: Vec<usize> = (0..corpus.len()).filter(|&i| corpus.spaces[i].len() >= 3).collect();
    if eligible.is_empty() {
        return Err(Error::data("no space has 3 or more candidates"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(usize, Vec<usize>)> = (0..subsamples)
        .map(|_| {
            let s = *eligible.choose(&mut rng).expect("non-empty");
            let n = corpus.spaces[s].len();
            let mut idx = index::sample(&mut rng, n, size.min(n)).into_vec();
            idx.sort_unstable();
            (s, idx)
        })
        .collect();

    let outcomes: Vec<(usize, usize, f64)> = draws
        .par_iter()
        .enumerate()
        .map(|(i, (s, idx))| {
            let labels = corpus.spaces[*s].labels().expect("checked labelled");
            let mut gold: Vec<&str> = idx.iter().map(|&j| labels[j]).collect();
            gold.sort_unstable();
            gold.dedup();
            let sub = embeddings[*s].subset(idx);
            let k_max = 6.min(idx.len() - 1);
            let sel = select_k_detailed(&sub, 2, k_max, f64::NEG_INFINITY, seed.wrapping_add(i as u64))?;
            Ok((gold.len(), sel.assignment.k(), sel.best_silhouette))
        })
        .collect::<Result<_>>()?;

    let trace: Vec<(f64, f64)> = grid
        .iter()
        .map(|&floor| {
            let hits = outcomes.iter().filter(|(gold, k, sil)| *gold == if *sil < floor { 1 } else { *k }).count();
            (floor, hits as f64 / outcomes.len() as f64)
        })
        .collect();
    let mut best = 0;
    for (i, t) in trace.iter().enumerate() {
        if t.1 > trace[best].1 {
            best = i;
        }
    }
    Ok(FloorTuning { floor: trace[best].0, accuracy: trace[best].1, trace, subsamples })
}
