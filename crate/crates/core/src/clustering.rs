//! k-means over candidate embeddings and silhouette-based choice of k.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::utility::EmbeddingSet;

pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_MAX_ITERS: usize = 100;
/// Placeholder floor below which the best silhouette falls back to k = 1.
pub const DEFAULT_SILHOUETTE_FLOOR: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentSource {
    Kmeans,
    Gold,
}

/// Candidate-to-cluster labels; every cluster in `0..k` is non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
    sizes: Vec<usize>,
    source: AssignmentSource,
}

impl ClusterAssignment {
    pub fn from_labels(labels: Vec<usize>, source: AssignmentSource) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::data("empty cluster assignment"));
        }
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::data(format!("cluster {empty} of {k} has no members")));
        }
        Ok(ClusterAssignment { labels, k, sizes, source })
    }

    /// Everything in one cluster.
    pub fn single(n: usize, source: AssignmentSource) -> Result<Self> {
        Self::from_labels(vec![0; n], source)
    }

    /// Gold clusters from label names, numbered by first appearance.
    /// Returns the assignment and the name of each cluster.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<(Self, Vec<String>)> {
        let mut seen: Vec<String> = Vec::new();
        let mut labels = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            let idx = match seen.iter().position(|s| s == name) {
                Some(i) => i,
                None => {
                    seen.push(name.to_string());
                    seen.len() - 1
                }
            };
            labels.push(idx);
        }
        Ok((Self::from_labels(labels, AssignmentSource::Gold)?, seen))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn source(&self) -> AssignmentSource {
        self.source
    }

    /// Member indices of cluster `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == c).collect()
    }

    /// Whether the two assignments induce the same partition.
    pub fn same_partition(&self, other: &ClusterAssignment) -> bool {
        if self.n() != other.n() || self.k != other.k {
            return false;
        }
        let mut map = vec![usize::MAX; self.k];
        for (&a, &b) in self.labels.iter().zip(&other.labels) {
            if map[a] == usize::MAX {
                map[a] = b;
            } else if map[a] != b {
                return false;
            }
        }
        let mut image = map.clone();
        image.sort_unstable();
        image.dedup();
        image.len() == self.k
    }
}

/// Result of a k-means run, including the per-iteration WCSS trace.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub assignment: ClusterAssignment,
    pub centroids: Vec<Vec<f64>>,
    pub wcss: f64,
    /// WCSS after every Lloyd iteration of the winning restart.
    pub trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn points(e: &EmbeddingSet) -> Vec<Vec<f64>> {
    (0..e.n()).map(|i| e.row_f64(i)).collect()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn plus_plus_init(pts: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = pts.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = pts.iter().map(|p| sq_dist(p, &pts[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            // Rounding can leave `pick` on a zero-distance point; fall back to the farthest.
            if d2[pick] <= 0.0 {
                pick = (0..n).max_by(|&a, &b| d2[a].total_cmp(&d2[b]).then(b.cmp(&a))).unwrap_or(0);
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            if free.is_empty() {
                rng.random_range(0..n)
            } else {
                free[rng.random_range(0..free.len())]
            }
        };
        chosen.push(next);
        for (i, p) in pts.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &pts[next]));
        }
    }
    chosen.into_iter().map(|i| pts[i].clone()).collect()
}

struct Run {
    labels: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    trace: Vec<f64>,
}

fn lloyd(pts: &[Vec<f64>], k: usize, max_iters: usize, rng: &mut ChaCha8Rng) -> Run {
    let n = pts.len();
    let d = pts[0].len();
    let mut centroids = plus_plus_init(pts, k, rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut trace = Vec::new();

    for _ in 0..max_iters.max(1) {
        let mut next: Vec<usize> = pts.iter().map(|p| nearest(p, &centroids)).collect();

        // Empty-cluster repair: move the point farthest from its centroid.
        let mut sizes = vec![0usize; k];
        for &l in &next {
            sizes[l] += 1;
        }
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| sizes[next[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(&pts[a], &centroids[next[a]])
                        .total_cmp(&sq_dist(&pts[b], &centroids[next[b]]))
                        .then(b.cmp(&a))
                })
                .expect("k <= n leaves a cluster with two members");
            sizes[next[donor]] -= 1;
            next[donor] = c;
            sizes[c] = 1;
            centroids[c] = pts[donor].clone();
        }

        for (c, centroid) in centroids.iter_mut().enumerate() {
            let mut mean = vec![0.0; d];
            for (p, _) in pts.iter().zip(&next).filter(|(_, &l)| l == c) {
                for (m, x) in mean.iter_mut().zip(p) {
                    *m += x;
                }
            }
            let size = sizes[c] as f64;
            for m in &mut mean {
                *m /= size;
            }
            *centroid = mean;
        }

        let wcss: f64 = pts.iter().zip(&next).map(|(p, &l)| sq_dist(p, &centroids[l])).sum();
        trace.push(wcss);
        let converged = next == labels;
        labels = next;
        if converged {
            break;
        }
    }
    Run { labels, centroids, trace }
}

/// k-means with k-means++ seeding; best of `restarts` runs by WCSS.
///
/// Distances are Euclidean on the rows as given (normalize beforehand for
/// cosine-like geometry). Restart `r` uses ChaCha stream `r` of `seed`, and
/// WCSS ties go to the lower restart index.
pub fn kmeans_fit(e: &EmbeddingSet, k: usize, seed: u64, max_iters: usize, restarts: usize) -> Result<KMeansFit> {
    let n = e.n();
    if k == 0 || k > n {
        return Err(Error::config(format!("k = {k} is invalid for {n} points")));
    }
    if max_iters == 0 || restarts == 0 {
        return Err(Error::config("max_iters and restarts must be positive"));
    }
    let pts = points(e);
    let mut best: Option<Run> = None;
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let run = lloyd(&pts, k, max_iters, &mut rng);
        let better = match &best {
            None => true,
            Some(b) => run.trace.last() < b.trace.last(),
        };
        if better {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");
    Ok(KMeansFit {
        assignment: ClusterAssignment::from_labels(run.labels, AssignmentSource::Kmeans)?,
        centroids: run.centroids,
        wcss: *run.trace.last().expect("at least one iteration"),
        trace: run.trace,
    })
}

pub fn kmeans(e: &EmbeddingSet, k: usize, seed: u64, max_iters: usize, restarts: usize) -> Result<ClusterAssignment> {
    kmeans_fit(e, k, seed, max_iters, restarts).map(|f| f.assignment)
}

/// Within-cluster sum of squared Euclidean distances to cluster means.
pub fn wcss(e: &EmbeddingSet, a: &ClusterAssignment) -> f64 {
    let pts = points(e);
    (0..a.k())
        .map(|c| {
            let members = a.members(c);
            let mut mean = vec![0.0; e.d()];
            for &i in &members {
                for (m, x) in mean.iter_mut().zip(&pts[i]) {
                    *m += x;
                }
            }
            mean.iter_mut().for_each(|m| *m /= members.len() as f64);
            members.iter().map(|&i| sq_dist(&pts[i], &mean)).sum::<f64>()
        })
        .sum()
}

/// Mean silhouette coefficient. Points in singleton clusters contribute 0.
pub fn silhouette(e: &EmbeddingSet, a: &ClusterAssignment) -> Result<f64> {
    if a.k() < 2 {
        return Err(Error::config("silhouette needs at least 2 clusters"));
    }
    if a.n() != e.n() {
        return Err(Error::config(format!("assignment covers {} points, embeddings have {}", a.n(), e.n())));
    }
    let pts = points(e);
    let n = pts.len();
    let labels = a.labels();
    let mut total = 0.0;
    for i in 0..n {
        if a.sizes()[labels[i]] == 1 {
            continue;
        }
        let mut sums = vec![0.0; a.k()];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += sq_dist(&pts[i], &pts[j]).sqrt();
            }
        }
        let own = labels[i];
        let intra = sums[own] / (a.sizes()[own] - 1) as f64;
        let inter =
            (0..a.k()).filter(|&c| c != own).map(|c| sums[c] / a.sizes()[c] as f64).fold(f64::INFINITY, f64::min);
        let denom = intra.max(inter);
        if denom > 0.0 {
            total += (inter - intra) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Outcome of a silhouette sweep over k.
#[derive(Debug, Clone)]
pub struct KSelection {
    pub assignment: ClusterAssignment,
    /// `(k, silhouette)` for every k tried.
    pub silhouettes: Vec<(usize, f64)>,
    pub best_silhouette: f64,
}

/// Runs k-means for each k in `kmin..=kmax` and keeps the best silhouette;
/// falls back to a single cluster if that silhouette is below `floor`.
pub fn select_k_detailed(e: &EmbeddingSet, kmin: usize, kmax: usize, floor: f64, seed: u64) -> Result<KSelection> {
    if kmin < 2 || kmin > kmax {
        return Err(Error::config(format!("invalid k range {kmin}..={kmax}")));
    }
    if kmax > e.n() {
        return Err(Error::config(format!("k_max = {kmax} exceeds the {} candidates", e.n())));
    }
    let mut silhouettes = Vec::new();
    let mut best: Option<(f64, ClusterAssignment)> = None;
    for k in kmin..=kmax {
        let assignment = kmeans(e, k, seed, DEFAULT_MAX_ITERS, DEFAULT_RESTARTS)?;
        let s = silhouette(e, &assignment)?;
        silhouettes.push((k, s));
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, assignment));
        }
    }
    let (best_silhouette, assignment) = best.expect("non-empty k range");
    let assignment =
        if best_silhouette < floor { ClusterAssignment::single(e.n(), AssignmentSource::Kmeans)? } else { assignment };
    Ok(KSelection { assignment, silhouettes, best_silhouette })
}

pub fn select_k(e: &EmbeddingSet, kmin: usize, kmax: usize, floor: f64, seed: u64) -> Result<ClusterAssignment> {
    select_k_detailed(e, kmin, kmax, floor, seed).map(|s| s.assignment)
}
