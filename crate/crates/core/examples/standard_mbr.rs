//! Plain MBR over a handful of candidate strings.
//!
//! Run with `cargo run --example standard_mbr`.

use structmbr::engine::{mbr_select, uniform_weights};
use structmbr::utility::build_utility_matrix;
use structmbr::{Candidate, OutcomeSpace, UtilityBackend};

fn main() -> structmbr::Result<()> {
    let space = OutcomeSpace {
        id: "greeting".into(),
        context: "Translate: Bonjour tout le monde".into(),
        candidates: ["hello world", "hello everyone", "hi world", "hello to the whole world", "greetings all"]
            .into_iter()
            .map(Candidate::new)
            .collect(),
    };
    let m = build_utility_matrix(&space, &UtilityBackend::TokenF1)?;
    let r = mbr_select(&m, &uniform_weights(space.len()), false)?;

    for &i in &r.ranking {
        println!("{:>7.4}  {}", r.scores[i], space.candidates[i].text);
    }
    println!("selected: {:?}", space.candidates[r.selected].text);
    Ok(())
}
