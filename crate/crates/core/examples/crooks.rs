// Generalized Crooks relation between forward and θ-reverse distributions.

use std::f64::consts::PI;

use qfluct::fluctuation::{crooks_check, forward_distribution, reverse_distribution, CrooksReport};
use qfluct::presets;

pub fn run() -> qfluct::Result<Vec<CrooksReport>> {
    let ctx = presets::incovariant_context()?;
    let fwd = forward_distribution(&ctx)?;
    [0.0, -PI / 8.0, -PI / 4.0]
        .into_iter()
        .map(|theta| crooks_check(&fwd, &reverse_distribution(&ctx, theta)?, theta))
        .collect()
}

fn main() -> qfluct::Result<()> {
    for r in run()? {
        println!(
            "θ = {:+.4}: {} pairs, |ratio| slope {:.12}, phase slope {:+.12} (expect {:+.12}), max residual {:.1e}",
            r.theta,
            r.pairs.len(),
            r.magnitude_slope.unwrap_or(f64::NAN),
            r.phase_slope.unwrap_or(f64::NAN),
            -2.0 * r.theta,
            r.max_residual()
        );
    }
    Ok(())
}
