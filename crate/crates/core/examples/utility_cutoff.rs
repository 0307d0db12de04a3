//! Utility cut-off: comparisons below a threshold stop counting as support.
//!
//! Run with `cargo run --example utility_cutoff`.

use structmbr::engine::{cutoff_mbr, cutoff_transform, mbr_select, CutoffDelta, CutoffMode};
use structmbr::UtilityMatrix;

fn main() -> structmbr::Result<()> {
    // Two groups, {0, 1, 2} and {3, 4}, that agree internally but not with
    // each other. Candidate 5 is moderately close to everyone.
    let group = |i: usize| {
        if i < 3 {
            0
        } else if i < 5 {
            1
        } else {
            2
        }
    };
    let m = UtilityMatrix::from_fn(6, "example", |i, j| match (group(i), group(j)) {
        _ if i == j => 1.0,
        (2, _) | (_, 2) => 0.6,
        (a, b) if a == b => 0.95,
        _ => 0.2,
    })?;
    let w = vec![1.0; 6];

    println!("standard: {}", mbr_select(&m, &w, true)?.selected);
    for (label, delta, mode, tau) in [
        ("absolute 0.918, zero", CutoffDelta::Value(0.0), CutoffMode::Absolute, 0.918),
        ("absolute 0.918, drop", CutoffDelta::Drop, CutoffMode::Absolute, 0.918),
        ("0.1 below max, -1", CutoffDelta::Value(-1.0), CutoffMode::DeviationFromMax, 0.1),
    ] {
        let r = cutoff_mbr(&m, &w, tau, delta, mode)?;
        println!("{label:<22} -> {} (scores {:.3?})", r.selected, r.scores);
    }

    let t = cutoff_transform(&m, 0.918, CutoffDelta::Value(0.0), CutoffMode::Absolute);
    println!("transformed row 5: {:?}", t.row(5));
    Ok(())
}
