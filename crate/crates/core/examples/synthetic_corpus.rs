//! Generate a seeded labelled corpus, write it as JSON Lines and split it.
//!
//! Run with `cargo run --example synthetic_corpus`.

use structmbr::corpus::{generate_synthetic, load_corpus, save_corpus, split_corpus};
use structmbr::SynthConfig;

fn main() -> structmbr::Result<()> {
    let cfg = SynthConfig { n_spaces: 50, include_compromise: true, ..SynthConfig::default() };
    let corpus = generate_synthetic(&cfg)?;

    let first = &corpus.spaces[0];
    println!("{} has {} candidates:", first.id, first.len());
    for c in first.candidates.iter().take(4) {
        println!("  [{}] {}", c.label.as_deref().unwrap_or("?"), c.text);
    }

    let path = std::env::temp_dir().join("structmbr-example-corpus.jsonl");
    save_corpus(&corpus, &path)?;
    assert_eq!(load_corpus(&path)?.spaces, corpus.spaces);

    let (train, val, test) = split_corpus(&corpus, [0.8, 0.1, 0.1], 0)?;
    println!("wrote {}; split {}/{}/{}", path.display(), train.len(), val.len(), test.len());
    Ok(())
}
