//! The continuous analogue: under squared error the MBR optimum of a bimodal
//! mixture is its mean, which lies between the modes; a local RBF utility
//! picks the heavier mode instead.
//!
//! Run with `cargo run --example continuous_bimodal`.

use structmbr::engine::{demo_continuous, ContinuousUtility, Grid};
use structmbr::MixtureSpec;

fn main() -> structmbr::Result<()> {
    let mix = MixtureSpec::new([0.7, 0.3], [-2.0, 3.0], [1.0, 1.0])?;
    println!("mixture mean {:.3}, density there {:.4}", mix.mean(), mix.density(mix.mean()));
    for utility in [ContinuousUtility::NegSquaredError, ContinuousUtility::Rbf { bandwidth: 1.0 }] {
        let demo = demo_continuous(&mix, utility, Grid::covering(&mix, 10_001))?;
        println!(
            "{utility:?}: optimum {:.3} (grid step {:.4}), density there {:.4}",
            demo.optimum,
            demo.grid_step,
            mix.density(demo.optimum)
        );
    }
    Ok(())
}
