//! MBR selection rules and the continuous bimodal demonstration.
//!
//! Every estimator here works on a precomputed [`UtilityMatrix`] whose row
//! `h` holds `u(h, y_j)` against each pseudo-reference `y_j`. Expected
//! utility of `h` is the weighted mean of its row over the reference set,
//! with weights renormalized per row after optional self-exclusion and
//! dropped comparisons. Ties are always broken toward the lower index.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::clustering::{self, AssignmentSource, ClusterAssignment};
use crate::corpus::OutcomeSpace;
use crate::error::{Error, Result};
use crate::utility::{EmbeddingSet, UtilityMatrix};

/// Selected candidate, full ranking, and per-candidate scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbrResult {
    pub selected: usize,
    /// Candidate indices, best first.
    pub ranking: Vec<usize>,
    /// Per-candidate expected utility under the method.
    pub scores: Vec<f64>,
    pub method: String,
    /// For cluster-restricted ranking: rank of each candidate's cluster
    /// (0 = dominant). Ranking is by cluster rank first, then score.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_rank: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, Value>,
}

impl MbrResult {
    fn from_scores(scores: Vec<f64>, members: &[usize], method: &str) -> Self {
        let ranking = rank_desc(members, &scores);
        MbrResult {
            selected: ranking[0],
            ranking,
            scores,
            method: method.to_string(),
            group_rank: None,
            diagnostics: BTreeMap::new(),
        }
    }

    /// A real-valued key whose descending order reproduces the method's ranking
    /// (up to ties in score). Equals `scores` unless the method ranks by group,
    /// in which case it is the negated dense rank of (group, score).
    pub fn ordering_key(&self) -> Vec<f64> {
        let Some(groups) = &self.group_rank else {
            return self.scores.clone();
        };
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| groups[a].cmp(&groups[b]).then(self.scores[b].total_cmp(&self.scores[a])));
        let mut key = vec![0.0; order.len()];
        let mut dense = 0.0;
        for (pos, &i) in order.iter().enumerate() {
            if pos > 0 {
                let prev = order[pos - 1];
                if groups[prev] != groups[i] || self.scores[prev] != self.scores[i] {
                    dense += 1.0;
                }
            }
            key[i] = -dense;
        }
        key
    }
}

/// Sorts `members` by score descending, then index ascending.
fn rank_desc(members: &[usize], scores: &[f64]) -> Vec<usize> {
    let mut order = members.to_vec();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Uniform importance weights.
pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

fn check_weights(m: &UtilityMatrix, weights: &[f64]) -> Result<()> {
    if weights.len() != m.n() {
        return Err(Error::config(format!("{} weights for a {}-candidate matrix", weights.len(), m.n())));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::data("weights must be finite and non-negative"));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::data("all weights are zero"));
    }
    Ok(())
}

/// Expected utility of each member against the other members as references.
/// A row without any usable reference scores 0.
fn restricted_scores(m: &UtilityMatrix, weights: &[f64], members: &[usize], exclude_self: bool, out: &mut [f64]) {
    for &h in members {
        let mut num = 0.0;
        let mut den = 0.0;
        for &j in members {
            if (exclude_self && j == h) || !m.is_active(h, j) {
                continue;
            }
            num += weights[j] * m.get(h, j);
            den += weights[j];
        }
        out[h] = if den > 0.0 { num / den } else { 0.0 };
    }
}

/// Monte Carlo expected utility of every candidate.
///
/// `score[h] = sum_j w_j u(h, j) / sum_j w_j` over the reference set of `h`:
/// all candidates, minus `h` itself when `exclude_self`, minus comparisons a
/// transform dropped.
pub fn expected_utilities(m: &UtilityMatrix, weights: &[f64], exclude_self: bool) -> Result<Vec<f64>> {
    check_weights(m, weights)?;
    if exclude_self && m.n() == 1 {
        return Err(Error::config("cannot exclude self-comparisons with a single candidate"));
    }
    let all: Vec<usize> = (0..m.n()).collect();
    let mut scores = vec![0.0; m.n()];
    restricted_scores(m, weights, &all, exclude_self, &mut scores);
    Ok(scores)
}

/// Standard MBR: argmax of expected utility.
pub fn mbr_select(m: &UtilityMatrix, weights: &[f64], exclude_self: bool) -> Result<MbrResult> {
    let scores = expected_utilities(m, weights, exclude_self)?;
    let all: Vec<usize> = (0..m.n()).collect();
    let mut result = MbrResult::from_scores(scores, &all, "standard");
    result.diagnostics.insert("exclude_self".into(), json!(exclude_self));
    Ok(result)
}

/// Cut-off threshold for BERTScore-style matrices and any other kind.
pub const DEFAULT_CUTOFF_TAU: f64 = 0.918;
/// Cut-off threshold for matrices whose kind names BLEURT.
pub const BLEURT_CUTOFF_TAU: f64 = 0.512;
/// Rescaled-cosine threshold for structure-embedding MBR.
pub const DEFAULT_COS_THRESHOLD: f64 = 0.918;

/// Default cut-off threshold for a matrix `kind` tag.
pub fn default_cutoff_tau(kind: &str) -> f64 {
    if kind.to_ascii_lowercase().contains("bleurt") {
        BLEURT_CUTOFF_TAU
    } else {
        DEFAULT_CUTOFF_TAU
    }
}

/// How the cut-off threshold is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    /// Keep entries `>= tau`.
    Absolute,
    /// Keep entries `>= max_offdiag - tau`.
    DeviationFromMax,
}

impl fmt::Display for CutoffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutoffMode::Absolute => "absolute",
            CutoffMode::DeviationFromMax => "deviation_from_max",
        })
    }
}

impl FromStr for CutoffMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "absolute" => Ok(CutoffMode::Absolute),
            "deviation_from_max" | "deviation" => Ok(CutoffMode::DeviationFromMax),
            _ => Err(Error::config(format!("unknown cut-off mode {s:?}"))),
        }
    }
}

/// Replacement for sub-threshold comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum CutoffDelta {
    Value(f64),
    /// Remove the comparison from the reference set and renormalize.
    Drop,
}

impl fmt::Display for CutoffDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutoffDelta::Value(v) => write!(f, "{v}"),
            CutoffDelta::Drop => f.write_str("drop"),
        }
    }
}

impl FromStr for CutoffDelta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("drop") {
            return Ok(CutoffDelta::Drop);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(CutoffDelta::Value(v)),
            _ => Err(Error::config(format!("delta must be a number or \"drop\", got {s:?}"))),
        }
    }
}

impl From<CutoffDelta> for String {
    fn from(d: CutoffDelta) -> String {
        d.to_string()
    }
}

impl TryFrom<String> for CutoffDelta {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Replaces comparisons below the threshold by `delta` (or drops them).
///
/// The diagonal is always replaced: cut-off MBR runs self-exclusive, so the
/// diagonal is never consulted.
pub fn cutoff_transform(m: &UtilityMatrix, tau: f64, delta: CutoffDelta, mode: CutoffMode) -> UtilityMatrix {
    let n = m.n();
    let threshold = match mode {
        CutoffMode::Absolute => tau,
        CutoffMode::DeviationFromMax => m.off_diagonal_range().1 - tau,
    };
    let fill = match delta {
        CutoffDelta::Value(v) => v as f32,
        CutoffDelta::Drop => 0.0,
    };
    let mut values = Vec::with_capacity(n * n);
    let mut dropped = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j);
            let keep = i != j && m.is_active(i, j) && v >= threshold;
            if keep {
                values.push(m.row(i)[j]);
            } else {
                values.push(fill);
                dropped[i * n + j] = matches!(delta, CutoffDelta::Drop) || !m.is_active(i, j);
            }
        }
    }
    let kind = format!("transformed:cutoff(mode={mode},tau={tau},delta={delta};{})", m.kind());
    let out = UtilityMatrix::new(n, values, kind).expect("finite entries");
    if dropped.iter().any(|&d| d) {
        out.with_dropped(dropped)
    } else {
        out
    }
}

/// Utility cut-off MBR (always self-exclusive).
pub fn cutoff_mbr(
    m: &UtilityMatrix,
    weights: &[f64],
    tau: f64,
    delta: CutoffDelta,
    mode: CutoffMode,
) -> Result<MbrResult> {
    let transformed = cutoff_transform(m, tau, delta, mode);
    let mut result = mbr_select(&transformed, weights, true)?;
    result.method = "cutoff".into();
    result.diagnostics.insert("tau".into(), json!(tau));
    result.diagnostics.insert("delta".into(), json!(delta.to_string()));
    result.diagnostics.insert("mode".into(), json!(mode.to_string()));
    Ok(result)
}

/// MBR restricted to the dominant cluster, with a two-stage full ranking.
///
/// The dominant cluster has the largest total weight (ties: smallest lowest
/// member index). Hypotheses and references are both restricted to a
/// candidate's own cluster. The ranking lists clusters in dominance order and
/// candidates within each by within-cluster expected utility.
pub fn cluster_mbr(
    m: &UtilityMatrix,
    assignment: &ClusterAssignment,
    weights: &[f64],
    exclude_self: bool,
) -> Result<MbrResult> {
    check_weights(m, weights)?;
    if assignment.n() != m.n() {
        return Err(Error::config(format!("assignment covers {} candidates, matrix has {}", assignment.n(), m.n())));
    }
    let clusters: Vec<Vec<usize>> = (0..assignment.k()).map(|c| assignment.members(c)).collect();
    let mass: Vec<f64> = clusters.iter().map(|c| c.iter().map(|&i| weights[i]).sum()).collect();
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(clusters[a][0].cmp(&clusters[b][0])));

    let mut scores = vec![0.0; m.n()];
    let mut group_rank = vec![0; m.n()];
    let mut ranking = Vec::with_capacity(m.n());
    for (rank, &c) in order.iter().enumerate() {
        restricted_scores(m, weights, &clusters[c], exclude_self, &mut scores);
        for &i in &clusters[c] {
            group_rank[i] = rank;
        }
        ranking.extend(rank_desc(&clusters[c], &scores));
    }
    let dominant = order[0];
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("k".into(), json!(assignment.k()));
    diagnostics.insert("cluster_sizes".into(), json!(assignment.sizes()));
    diagnostics.insert("dominant_cluster".into(), json!(dominant));
    diagnostics.insert("dominant_size".into(), json!(clusters[dominant].len()));
    diagnostics.insert("exclude_self".into(), json!(exclude_self));
    Ok(MbrResult {
        selected: ranking[0],
        ranking,
        scores,
        method: "cluster".into(),
        group_rank: Some(group_rank),
        diagnostics,
    })
}

/// Scales each comparison by the rescaled cosine `(cos + 1) / 2` of the two
/// candidates' embeddings; rescaled similarities below `cos_threshold` become 0.
pub fn embedding_weighted_matrix(
    m: &UtilityMatrix,
    e: &EmbeddingSet,
    cos_threshold: Option<f64>,
) -> Result<UtilityMatrix> {
    if e.n() != m.n() {
        return Err(Error::config(format!("embedding set has {} rows, matrix has {} candidates", e.n(), m.n())));
    }
    let n = m.n();
    let mut sim = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = (e.cosine(i, j)? + 1.0) / 2.0;
            if cos_threshold.is_some_and(|t| s < t) {
                s = 0.0;
            }
            sim[i * n + j] = s;
            sim[j * n + i] = s;
        }
    }
    let threshold = cos_threshold.map_or("none".to_string(), |t| t.to_string());
    let kind = format!("transformed:embed(cos_threshold={threshold};{})", m.kind());
    let out = UtilityMatrix::from_fn(n, kind, |i, j| m.get(i, j) * sim[i * n + j])?;
    Ok(if m.has_dropped() {
        let mask = (0..n * n).map(|p| !m.is_active(p / n, p % n)).collect();
        out.with_dropped(mask)
    } else {
        out
    })
}

/// Structure-embedding MBR.
pub fn embedding_mbr(
    m: &UtilityMatrix,
    e: &EmbeddingSet,
    cos_threshold: Option<f64>,
    weights: &[f64],
    exclude_self: bool,
) -> Result<MbrResult> {
    let weighted = embedding_weighted_matrix(m, e, cos_threshold)?;
    let mut result = mbr_select(&weighted, weights, exclude_self)?;
    result.method = "embed".into();
    result.diagnostics.insert("cos_threshold".into(), cos_threshold.map_or(Value::Null, |t| json!(t)));
    Ok(result)
}

/// MBR solution conditioned on structure `s`: hypotheses and references are
/// both the candidates labelled `s`.
///
/// `scores` has one entry per candidate (0 for non-members) while `ranking`
/// lists only the members of `s`.
pub fn conditional_mbr<S: AsRef<str>>(
    m: &UtilityMatrix,
    labels: &[S],
    s: &str,
    weights: &[f64],
    exclude_self: bool,
) -> Result<MbrResult> {
    check_weights(m, weights)?;
    if labels.len() != m.n() {
        return Err(Error::config(format!("{} labels for a {}-candidate matrix", labels.len(), m.n())));
    }
    let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].as_ref() == s).collect();
    if members.is_empty() {
        return Err(Error::data(format!("unknown structure label {s:?}")));
    }
    if exclude_self && members.len() < 2 {
        return Err(Error::data(format!("structure {s:?} has a single member; self-exclusive MBR needs at least 2")));
    }
    let mut scores = vec![0.0; m.n()];
    restricted_scores(m, weights, &members, exclude_self, &mut scores);
    let mut result = MbrResult::from_scores(scores, &members, "conditional");
    result.diagnostics.insert("structure".into(), json!(s));
    result.diagnostics.insert("exclude_self".into(), json!(exclude_self));
    Ok(result)
}

/// Where cluster-restricted MBR gets its clusters from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ClusterSource {
    /// Annotated labels of the outcome space.
    Gold,
    /// k-means on embeddings with silhouette selection of k.
    Kmeans { k_min: usize, k_max: usize, silhouette_floor: f64, seed: u64 },
}

/// A selection rule together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Standard { exclude_self: bool },
    Cutoff { tau: f64, delta: CutoffDelta, mode: CutoffMode },
    Cluster { clusters: ClusterSource, exclude_self: bool },
    Embed { cos_threshold: Option<f64>, exclude_self: bool },
}

impl Method {
    pub fn standard() -> Self {
        Method::Standard { exclude_self: false }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Standard { .. } => "standard",
            Method::Cutoff { .. } => "cutoff",
            Method::Cluster { .. } => "cluster",
            Method::Embed { .. } => "embed",
        }
    }

    pub fn exclude_self(&self) -> bool {
        match *self {
            Method::Standard { exclude_self }
            | Method::Cluster { exclude_self, .. }
            | Method::Embed { exclude_self, .. } => exclude_self,
            Method::Cutoff { .. } => true,
        }
    }

    pub fn needs_embeddings(&self) -> bool {
        matches!(self, Method::Embed { .. } | Method::Cluster { clusters: ClusterSource::Kmeans { .. }, .. })
    }

    /// Runs the method on one outcome space.
    pub fn decode(
        &self,
        space: &OutcomeSpace,
        m: &UtilityMatrix,
        embeddings: Option<&EmbeddingSet>,
    ) -> Result<MbrResult> {
        if m.n() != space.len() {
            return Err(Error::data(format!(
                "space {}: matrix has {} candidates, space has {}",
                space.id,
                m.n(),
                space.len()
            )));
        }
        let weights = space.weights();
        let need_embeddings =
            || embeddings.ok_or_else(|| Error::config(format!("method {} needs embeddings", self.name())));
        match self {
            Method::Standard { exclude_self } => mbr_select(m, &weights, *exclude_self),
            Method::Cutoff { tau, delta, mode } => cutoff_mbr(m, &weights, *tau, *delta, *mode),
            Method::Embed { cos_threshold, exclude_self } => {
                embedding_mbr(m, need_embeddings()?, *cos_threshold, &weights, *exclude_self)
            }
            Method::Cluster { clusters, exclude_self } => {
                let assignment = match clusters {
                    ClusterSource::Gold => {
                        let labels = space
                            .labels()
                            .ok_or_else(|| Error::data(format!("space {}: gold clusters need labels", space.id)))?;
                        ClusterAssignment::from_names(&labels)?.0
                    }
                    ClusterSource::Kmeans { k_min, k_max, silhouette_floor, seed } => {
                        let e = need_embeddings()?;
                        if e.n() != space.len() {
                            return Err(Error::data(format!(
                                "space {}: {} embeddings for {} candidates",
                                space.id,
                                e.n(),
                                space.len()
                            )));
                        }
                        let e = if e.is_normalized() { e.clone() } else { e.normalized()? };
                        // Small spaces cannot support k_max clusters; k = n is all singletons.
                        let k_max = (*k_max).min(space.len().saturating_sub(1));
                        if k_max < *k_min {
                            ClusterAssignment::single(space.len(), AssignmentSource::Kmeans)?
                        } else {
                            clustering::select_k(&e, *k_min, k_max, *silhouette_floor, *seed)?
                        }
                    }
                };
                cluster_mbr(m, &assignment, &weights, *exclude_self)
            }
        }
    }
}

/// Two-component Gaussian mixture on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub stds: [f64; 2],
}

impl MixtureSpec {
    pub fn new(weights: [f64; 2], means: [f64; 2], stds: [f64; 2]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) || (weights[0] + weights[1] - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!("mixture weights must be positive and sum to 1, got {weights:?}")));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::config("mixture means must be finite"));
        }
        if stds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::config(format!("mixture stds must be positive, got {stds:?}")));
        }
        Ok(MixtureSpec { weights, means, stds })
    }

    pub fn mean(&self) -> f64 {
        self.weights[0] * self.means[0] + self.weights[1] * self.means[1]
    }

    pub fn density(&self, x: f64) -> f64 {
        (0..2)
            .map(|k| {
                let z = (x - self.means[k]) / self.stds[k];
                self.weights[k] * (-0.5 * z * z).exp() / (self.stds[k] * (2.0 * std::f64::consts::PI).sqrt())
            })
            .sum()
    }
}

/// Utility on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContinuousUtility {
    /// `u(h, y) = -(h - y)^2`
    NegSquaredError,
    /// `u(h, y) = exp(-(h - y)^2 / (2 b^2))`
    Rbf { bandwidth: f64 },
}

impl ContinuousUtility {
    pub fn eval(&self, h: f64, y: f64) -> f64 {
        match *self {
            ContinuousUtility::NegSquaredError => -(h - y) * (h - y),
            ContinuousUtility::Rbf { bandwidth } => (-(h - y) * (h - y) / (2.0 * bandwidth * bandwidth)).exp(),
        }
    }
}

/// Evenly spaced evaluation points `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Grid {
    /// A grid spanning every component mean +- 6 standard deviations.
    pub fn covering(mix: &MixtureSpec, steps: usize) -> Grid {
        let lo = (0..2).map(|k| mix.means[k] - 6.0 * mix.stds[k]).fold(f64::INFINITY, f64::min);
        let hi = (0..2).map(|k| mix.means[k] + 6.0 * mix.stds[k]).fold(f64::NEG_INFINITY, f64::max);
        Grid { lo, hi, steps }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.steps - 1) as f64
    }

    /// Point `i`. Written as a convex combination so grids symmetric about 0
    /// have exactly mirrored points.
    pub fn point(&self, i: usize) -> f64 {
        let last = (self.steps - 1) as f64;
        ((last - i as f64) * self.lo + i as f64 * self.hi) / last
    }
}

/// Closed-form expected utility `E_{Y ~ mix}[u(h, Y)]`.
pub fn expected_continuous_utility(mix: &MixtureSpec, utility: ContinuousUtility, h: f64) -> f64 {
    (0..2)
        .map(|k| {
            let (w, mu, sd) = (mix.weights[k], mix.means[k], mix.stds[k]);
            match utility {
                ContinuousUtility::NegSquaredError => -w * ((h - mu) * (h - mu) + sd * sd),
                ContinuousUtility::Rbf { bandwidth } => {
                    let var = bandwidth * bandwidth + sd * sd;
                    w * bandwidth / var.sqrt() * (-(h - mu) * (h - mu) / (2.0 * var)).exp()
                }
            }
        })
        .sum()
}

/// Expected-utility curve over a grid and its argmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousDemo {
    pub optimum: f64,
    pub optimum_index: usize,
    pub grid_step: f64,
    pub curve: Vec<(f64, f64)>,
}

/// MBR on a two-component Gaussian mixture, solved exactly on a grid.
pub fn demo_continuous(mix: &MixtureSpec, utility: ContinuousUtility, grid: Grid) -> Result<ContinuousDemo> {
    if !(grid.lo.is_finite() && grid.hi.is_finite()) || grid.hi <= grid.lo {
        return Err(Error::config(format!("degenerate grid [{}, {}]", grid.lo, grid.hi)));
    }
    if grid.steps < 1000 {
        return Err(Error::config(format!("grid needs at least 1000 steps, got {}", grid.steps)));
    }
    for k in 0..2 {
        let (mu, sd) = (mix.means[k], mix.stds[k]);
        if grid.lo > mu - 4.0 * sd || grid.hi < mu + 4.0 * sd {
            return Err(Error::config(format!(
                "grid [{}, {}] does not cover component {k} mean +- 4 std",
                grid.lo, grid.hi
            )));
        }
    }
    if let ContinuousUtility::Rbf { bandwidth } = utility {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::config(format!("bandwidth must be positive, got {bandwidth}")));
        }
    }
    let curve: Vec<(f64, f64)> = (0..grid.steps)
        .map(|i| {
            let h = grid.point(i);
            (h, expected_continuous_utility(mix, utility, h))
        })
        .collect();
    let mut best = 0;
    for (i, &(_, v)) in curve.iter().enumerate() {
        if v > curve[best].1 {
            best = i;
        }
    }
    Ok(ContinuousDemo { optimum: curve[best].0, optimum_index: best, grid_step: grid.step(), curve })
}
