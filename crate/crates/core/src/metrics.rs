//! Cluster optimality (CO) and cluster-optimal rank correlation (CORC).
//!
//! Both compare a method's decisions on an annotated outcome space with the
//! MBR solution conditioned on a gold structure, always computed from the
//! base (untransformed) utility matrix.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, COMPROMISE_LABEL};
use crate::engine::{conditional_mbr, mbr_select, MbrResult, Method};
use crate::error::{Error, Result};
use crate::utility::{EmbeddingSet, UtilityMatrix};

/// Fractional (average) ranks, 1-based.
pub fn fractional_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // positions start..end share the mean of ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho with tie correction (Pearson correlation of fractional ranks).
///
/// Returns `Ok(None)` when either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::config(format!("spearman: lengths differ ({} vs {})", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::config("spearman needs at least 2 observations"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::data("spearman: NaN input"));
    }
    let (ra, rb) = (fractional_ranks(a), fractional_ranks(b));
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mean, y - mean);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(None);
    }
    Ok(Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)))
}

/// Neumaier-compensated mean.
fn stable_mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut count = 0usize;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        count += 1;
    }
    (count > 0).then(|| (sum + comp) / count as f64)
}

/// Which gold structures CORC averages over in each space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorcMode {
    /// Every structure with at least two members.
    #[default]
    AllStructures,
    /// Only the structure of the standard-MBR selection.
    StandardSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Self-exclusion used by the conditional reference solutions.
    pub exclude_self: bool,
    /// Singleton clusters with this label count as CO misses when selected.
    pub compromise_label: Option<String>,
    pub corc_mode: CorcMode,
}

impl MetricConfig {
    /// Conditional references matching a method's self-exclusion.
    pub fn for_method(method: &Method) -> Self {
        MetricConfig {
            exclude_self: method.exclude_self(),
            compromise_label: Some(COMPROMISE_LABEL.to_string()),
            corc_mode: CorcMode::AllStructures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceEval {
    pub id: String,
    pub selected: usize,
    /// Gold structure of the selected candidate.
    pub structure: String,
    pub co_hit: bool,
    /// Mean Spearman rho over structures with a defined correlation.
    pub mean_rho: Option<f64>,
    /// The selection was a singleton compromise candidate.
    #[serde(default)]
    pub compromise_miss: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub n_spaces: usize,
    pub co: f64,
    /// `None` if no space yields a defined rank correlation.
    pub corc: Option<f64>,
    /// Spaces left out of CORC because every rho was undefined.
    pub undefined_rho_spaces: usize,
    pub compromise_misses: usize,
    pub per_space: Vec<SpaceEval>,
}

impl EvalReport {
    /// One JSON line per space followed by a summary line.
    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for s in &self.per_space {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        let summary = serde_json::json!({
            "summary": {
                "method": self.method,
                "n_spaces": self.n_spaces,
                "co": self.co,
                "corc": self.corc,
                "undefined_rho_spaces": self.undefined_rho_spaces,
                "compromise_misses": self.compromise_misses,
            }
        });
        serde_json::to_writer(&mut w, &summary)?;
        w.write_all(b"\n")
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<24} {:>8} {:>6} {:>9}\n", "space", "selected", "CO", "mean rho");
        for s in &self.per_space {
            let rho = s.mean_rho.map_or("-".to_string(), |r| format!("{r:.4}"));
            out.push_str(&format!(
                "{:<24} {:>8} {:>6} {:>9}\n",
                s.id,
                s.selected,
                if s.co_hit { "hit" } else { "miss" },
                rho
            ));
        }
        let corc = self.corc.map_or("undefined".to_string(), |c| format!("{c:.4}"));
        out.push_str(&format!("{}: CO = {:.4}, CORC = {} over {} spaces\n", self.method, self.co, corc, self.n_spaces));
        if self.compromise_misses > 0 {
            out.push_str(&format!(
                "note: {} selections were singleton compromise candidates (counted as misses)\n",
                self.compromise_misses
            ));
        }
        out
    }
}

fn check_shapes(corpus: &Corpus, matrices: &[UtilityMatrix], results: &[MbrResult]) -> Result<()> {
    if !corpus.is_labelled() {
        return Err(Error::data("CO/CORC need a fully labelled corpus"));
    }
    if matrices.len() != corpus.len() || results.len() != corpus.len() {
        return Err(Error::config(format!(
            "{} spaces, {} matrices, {} results",
            corpus.len(),
            matrices.len(),
            results.len()
        )));
    }
    for (space, m) in corpus.spaces.iter().zip(matrices) {
        if m.n() != space.len() {
            return Err(Error::data(format!(
                "space {}: matrix has {} candidates, space has {}",
                space.id,
                m.n(),
                space.len()
            )));
        }
    }
    Ok(())
}

fn evaluate_space(
    labels: &[&str],
    weights: &[f64],
    base: &UtilityMatrix,
    result: &MbrResult,
    cfg: &MetricConfig,
) -> Result<(bool, bool, Option<f64>)> {
    let chosen = labels[result.selected];
    let size = labels.iter().filter(|l| **l == chosen).count();
    let is_compromise = cfg.compromise_label.as_deref() == Some(chosen);
    let (co_hit, compromise_miss) = if size == 1 {
        (!is_compromise, is_compromise)
    } else {
        let oracle = conditional_mbr(base, labels, chosen, weights, cfg.exclude_self)?;
        (oracle.selected == result.selected, false)
    };

    let structures: Vec<&str> = match cfg.corc_mode {
        CorcMode::AllStructures => labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect(),
        CorcMode::StandardSelection => {
            let standard = mbr_select(base, weights, cfg.exclude_self)?;
            vec![labels[standard.selected]]
        }
    };
    let key = result.ordering_key();
    let mut rhos = Vec::new();
    for s in structures {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == s).collect();
        if members.len() < 2 {
            continue;
        }
        let oracle = conditional_mbr(base, labels, s, weights, cfg.exclude_self)?;
        let method_scores: Vec<f64> = members.iter().map(|&i| key[i]).collect();
        let oracle_scores: Vec<f64> = members.iter().map(|&i| oracle.scores[i]).collect();
        if let Some(rho) = spearman(&method_scores, &oracle_scores)? {
            rhos.push(rho);
        }
    }
    Ok((co_hit, compromise_miss, stable_mean(rhos)))
}

/// CO and CORC of precomputed method results against conditional references.
pub fn evaluate(
    corpus: &Corpus,
    matrices: &[UtilityMatrix],
    results: &[MbrResult],
    cfg: &MetricConfig,
) -> Result<EvalReport> {
    check_shapes(corpus, matrices, results)?;
    let per_space: Vec<SpaceEval> = corpus
        .spaces
        .par_iter()
        .zip(matrices.par_iter())
        .zip(results.par_iter())
        .map(|((space, m), r)| {
            let labels = space.labels().expect("checked labelled");
            let weights = space.weights();
            let (co_hit, compromise_miss, mean_rho) = evaluate_space(&labels, &weights, m, r, cfg)?;
            Ok(SpaceEval {
                id: space.id.clone(),
                selected: r.selected,
                structure: labels[r.selected].to_string(),
                co_hit,
                mean_rho,
                compromise_miss,
            })
        })
        .collect::<Result<_>>()?;

    let method = results.first().map_or_else(String::new, |r| r.method.clone());
    let co = stable_mean(per_space.iter().map(|s| if s.co_hit { 1.0 } else { 0.0 })).unwrap_or(0.0);
    let corc = stable_mean(per_space.iter().filter_map(|s| s.mean_rho));
    Ok(EvalReport {
        method,
        n_spaces: per_space.len(),
        co,
        corc,
        undefined_rho_spaces: per_space.iter().filter(|s| s.mean_rho.is_none()).count(),
        compromise_misses: per_space.iter().filter(|s| s.compromise_miss).count(),
        per_space,
    })
}

/// Decodes every space with `method` (in parallel, output in corpus order).
pub fn decode_corpus(
    corpus: &Corpus,
    matrices: &[UtilityMatrix],
    embeddings: Option<&[EmbeddingSet]>,
    method: &Method,
) -> Result<Vec<MbrResult>> {
    if matrices.len() != corpus.len() {
        return Err(Error::config(format!("{} matrices for {} spaces", matrices.len(), corpus.len())));
    }
    if let Some(e) = embeddings {
        if e.len() != corpus.len() {
            return Err(Error::config(format!("{} embedding sets for {} spaces", e.len(), corpus.len())));
        }
    }
    corpus
        .spaces
        .par_iter()
        .enumerate()
        .map(|(i, space)| method.decode(space, &matrices[i], embeddings.map(|e| &e[i])))
        .collect()
}

/// Decodes with `method` and evaluates with conditional references that
/// share the method's self-exclusion.
pub fn evaluate_method(
    corpus: &Corpus,
    matrices: &[UtilityMatrix],
    embeddings: Option<&[EmbeddingSet]>,
    method: &Method,
) -> Result<EvalReport> {
    let results = decode_corpus(corpus, matrices, embeddings, method)?;
    let mut report = evaluate(corpus, matrices, &results, &MetricConfig::for_method(method))?;
    report.method = method.name().to_string();
    Ok(report)
}

/// Cluster optimality of a method over a labelled corpus.
pub fn cluster_optimality(
    corpus: &Corpus,
    matrices: &[UtilityMatrix],
    embeddings: Option<&[EmbeddingSet]>,
    method: &Method,
) -> Result<f64> {
    evaluate_method(corpus, matrices, embeddings, method).map(|r| r.co)
}

/// Cluster-optimal rank correlation of a method over a labelled corpus.
pub fn corc(
    corpus: &Corpus,
    matrices: &[UtilityMatrix],
    embeddings: Option<&[EmbeddingSet]>,
    method: &Method,
) -> Result<Option<f64>> {
    evaluate_method(corpus, matrices, embeddings, method).map(|r| r.corc)
}
