//! Structure embeddings: scale each utility by the rescaled cosine similarity
//! of the two candidates, or learn clusters from the embeddings with k-means.
//!
//! Run with `cargo run --example structure_embeddings`.

use structmbr::corpus::{generate_synthetic, synthetic_embeddings};
use structmbr::engine::{embedding_mbr, ClusterSource, DEFAULT_COS_THRESHOLD};
use structmbr::tuning::{linspace, tune_silhouette_floor, DEFAULT_FLOOR_SUBSAMPLES, DEFAULT_FLOOR_SUBSAMPLE_SIZE};
use structmbr::utility::build_utility_matrix;
use structmbr::{Method, SynthConfig, UtilityBackend};

fn main() -> structmbr::Result<()> {
    let cfg =
        SynthConfig { n_spaces: 1, clusters_per_space: (3, 3), include_compromise: true, ..SynthConfig::default() };
    let corpus = generate_synthetic(&cfg)?;
    let space = &corpus.spaces[0];
    let m = build_utility_matrix(space, &UtilityBackend::TokenF1)?;
    let e = synthetic_embeddings(space, 32, 0.3, 1)?.normalized()?;
    let labels = space.labels().expect("labelled");

    for thr in [None, Some(DEFAULT_COS_THRESHOLD)] {
        let r = embedding_mbr(&m, &e, thr, &space.weights(), true)?;
        println!("embed, threshold {thr:?}: {} ({})", r.selected, labels[r.selected]);
    }

    let kmeans = Method::Cluster {
        clusters: ClusterSource::Kmeans { k_min: 2, k_max: 6, silhouette_floor: 0.15, seed: 0 },
        exclude_self: true,
    };
    let r = kmeans.decode(space, &m, Some(&e))?;
    println!("k-means cluster MBR: {} ({})", r.selected, labels[r.selected]);
    println!("diagnostics: {}", serde_json::to_string(&r.diagnostics).unwrap_or_default());

    // Tune the fallback-to-one-cluster floor on k-prediction accuracy.
    let cfg = SynthConfig { n_spaces: 40, clusters_per_space: (1, 4), seed: 9, ..SynthConfig::default() };
    let corpus = generate_synthetic(&cfg)?;
    let embeddings = corpus
        .spaces
        .iter()
        .enumerate()
        .map(|(i, s)| synthetic_embeddings(s, 32, 0.3, i as u64))
        .collect::<structmbr::Result<Vec<_>>>()?;
    let tuned = tune_silhouette_floor(
        &corpus,
        &embeddings,
        &linspace(0.0, 0.6, 25),
        DEFAULT_FLOOR_SUBSAMPLES,
        DEFAULT_FLOOR_SUBSAMPLE_SIZE,
        0,
    )?;
    println!(
        "silhouette floor {:.3}: k predicted exactly in {:.1}% of subsamples",
        tuned.floor,
        100.0 * tuned.accuracy
    );
    Ok(())
}
