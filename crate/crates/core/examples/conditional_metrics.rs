//! Cluster optimality (CO) and cluster-optimal rank correlation (CORC) of
//! several methods on a synthetic corpus with compromise candidates.
//!
//! Run with `cargo run --release --example conditional_metrics`.

use structmbr::corpus::{generate_synthetic, synthetic_embeddings};
use structmbr::engine::{ClusterSource, CutoffDelta, CutoffMode};
use structmbr::metrics::evaluate_method;
use structmbr::utility::build_utility_matrix;
use structmbr::{Method, SynthConfig, UtilityBackend};

fn main() -> structmbr::Result<()> {
    let cfg = SynthConfig { n_spaces: 200, include_compromise: true, seed: 3, ..SynthConfig::default() };
    let corpus = generate_synthetic(&cfg)?;
    let matrices = corpus
        .spaces
        .iter()
        .map(|s| build_utility_matrix(s, &UtilityBackend::TokenF1))
        .collect::<structmbr::Result<Vec<_>>>()?;
    let embeddings = corpus
        .spaces
        .iter()
        .enumerate()
        .map(|(i, s)| synthetic_embeddings(s, 32, 0.3, i as u64))
        .collect::<structmbr::Result<Vec<_>>>()?;

    let methods = [
        ("standard", Method::Standard { exclude_self: false }),
        ("cutoff", Method::Cutoff { tau: 0.3, delta: CutoffDelta::Value(0.0), mode: CutoffMode::Absolute }),
        ("embed", Method::Embed { cos_threshold: Some(0.918), exclude_self: true }),
        (
            "k-means",
            Method::Cluster {
                clusters: ClusterSource::Kmeans { k_min: 2, k_max: 6, silhouette_floor: 0.15, seed: 0 },
                exclude_self: true,
            },
        ),
        ("gold", Method::Cluster { clusters: ClusterSource::Gold, exclude_self: true }),
    ];
    println!("{:<10} {:>6} {:>8} {:>11}", "method", "CO", "CORC", "compromise");
    for (name, method) in &methods {
        let r = evaluate_method(&corpus, &matrices, Some(&embeddings), method)?;
        let corc = r.corc.map_or("-".into(), |c| format!("{c:.4}"));
        println!("{:<10} {:>6.3} {:>8} {:>11}", name, r.co, corc, r.compromise_misses);
    }
    Ok(())
}
