//! Utility matrices and embeddings computed elsewhere travel as `.umat` and
//! `.emb` file pairs: a JSON header next to little-endian f32 data.
//!
//! Run with `cargo run --example matrix_files`.

use structmbr::engine::{embedding_mbr, mbr_select, uniform_weights};
use structmbr::utility::{embedding_paths, load_embeddings, load_matrix, matrix_paths, save_embeddings, save_matrix};
use structmbr::{EmbeddingSet, UtilityMatrix};

fn main() -> structmbr::Result<()> {
    let dir = std::env::temp_dir().join("structmbr-example-files");
    std::fs::create_dir_all(&dir).map_err(|source| structmbr::Error::Io { path: dir.clone(), source })?;

    let m = UtilityMatrix::from_fn(3, "external:bleurt", |i, j| if i == j { 1.0 } else { 0.4 + 0.1 * (i + j) as f64 })?;
    let e = EmbeddingSet::from_rows(&[vec![1.0, 0.0], vec![0.9, 0.1], vec![0.0, 1.0]])?;
    save_matrix(&m, dir.join("space-0"))?;
    save_embeddings(&e, dir.join("space-0"))?;
    let (meta, bin) = matrix_paths(dir.join("space-0"));
    println!("matrix: {} + {}", meta.display(), bin.display());
    println!("embeddings: {:?}", embedding_paths(dir.join("space-0")));

    let m = load_matrix(dir.join("space-0"))?;
    let e = load_embeddings(dir.join("space-0"), true)?;
    let w = uniform_weights(m.n());
    println!("kind {}, standard pick {}", m.kind(), mbr_select(&m, &w, false)?.selected);
    println!("embedding-weighted pick {}", embedding_mbr(&m, &e, None, &w, true)?.selected);
    Ok(())
}
