//! Cluster MBR: decode inside the dominant structure so that a candidate
//! straddling two structures cannot win on split support.
//!
//! Run with `cargo run --example cluster_mbr`.

use structmbr::engine::{cluster_mbr, mbr_select, ClusterSource};
use structmbr::utility::build_utility_matrix;
use structmbr::{Candidate, ClusterAssignment, Method, OutcomeSpace, UtilityBackend};

fn main() -> structmbr::Result<()> {
    let labelled = [
        ("def inc ( x ) : return x + 1", "def"),
        ("def inc ( n ) : return n + 1", "def"),
        ("def inc ( x ) : return 1 + x", "def"),
        ("def inc ( v ) : return v + 1", "def"),
        ("inc = lambda x : x + 1", "lambda"),
        ("inc = lambda n : n + 1", "lambda"),
        ("inc = lambda x : 1 + x", "lambda"),
        ("def inc = lambda x : return x + 1", "compromise"),
    ];
    let space = OutcomeSpace {
        id: "increment".into(),
        context: String::new(),
        candidates: labelled.iter().map(|(t, l)| Candidate::labelled(*t, *l)).collect(),
    };
    let m = build_utility_matrix(&space, &UtilityBackend::TokenF1)?;
    let w = space.weights();

    let standard = mbr_select(&m, &w, false)?;
    println!("standard MBR: {}", space.candidates[standard.selected].text);

    let labels = space.labels().expect("labelled");
    let (assignment, names) = ClusterAssignment::from_names(&labels)?;
    let r = cluster_mbr(&m, &assignment, &w, true)?;
    println!("cluster MBR:  {}", space.candidates[r.selected].text);
    println!("clusters {names:?}, group rank {:?}", r.group_rank.as_deref().unwrap_or_default());

    // The same through the method enum.
    let method = Method::Cluster { clusters: ClusterSource::Gold, exclude_self: true };
    assert_eq!(method.decode(&space, &m, None)?.selected, r.selected);
    Ok(())
}
