//! Tune the cut-off threshold on a training split and confirm it on a
//! validation split.
//!
//! Run with `cargo run --release --example threshold_sweep`.

use structmbr::corpus::{generate_synthetic, split_corpus};
use structmbr::tuning::{sweep_cutoff, LabelledSet, Setting, SweepConfig};
use structmbr::utility::build_utility_matrix;
use structmbr::{Corpus, SynthConfig, UtilityBackend, UtilityMatrix};

fn matrices(c: &Corpus) -> structmbr::Result<Vec<UtilityMatrix>> {
    c.spaces.iter().map(|s| build_utility_matrix(s, &UtilityBackend::TokenF1)).collect()
}

fn describe(s: &Setting) -> String {
    match s {
        Setting::Cutoff { tau, mode, delta } => format!("tau {tau:.3} {mode:?} {delta:?}"),
        Setting::Cosine { threshold } => format!("cosine {threshold:.3}"),
    }
}

fn main() -> structmbr::Result<()> {
    let cfg = SynthConfig { n_spaces: 300, include_compromise: true, seed: 11, ..SynthConfig::default() };
    let (train, val, _) = split_corpus(&generate_synthetic(&cfg)?, [0.8, 0.1, 0.1], 0)?;
    let (tm, vm) = (matrices(&train)?, matrices(&val)?);

    let sweep = SweepConfig::data_driven(&tm, 25)?;
    let result = sweep_cutoff(&LabelledSet::new(&train, &tm), &LabelledSet::new(&val, &vm), &sweep)?;

    println!("top settings by training CO:");
    for s in &result.ranked[..result.top_k] {
        println!("  {:<40} train {:.3}  val {:.3}", describe(&s.setting), s.train_co, s.val_co.unwrap_or(f64::NAN));
    }
    println!("chosen: {} (validation CO {:.3})", describe(&result.chosen.setting), result.chosen_val_co());
    Ok(())
}
