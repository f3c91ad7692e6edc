// Simulated two-point measurement: exact and sampled joint outcome tables, and the
// quasi-probabilities reconstructed from them.

use qfluct::fluctuation::{forward_distribution, Direction};
use qfluct::presets;
use qfluct::tpm::{exact_joint, reconstruct, sample};

/// (shots, mean total deviation over `seeds` seeds); shots = 0 is the exact table.
pub fn run(shot_counts: &[u64], seeds: u64) -> qfluct::Result<Vec<(u64, f64)>> {
    let ctx = presets::incovariant_context()?;
    let exact = forward_distribution(&ctx)?;
    let joint = exact_joint(&ctx, Direction::Forward)?;
    let mut out = vec![(0, reconstruct(&joint, &ctx)?.total_deviation(&exact))];
    for &shots in shot_counts {
        let mut sum = 0.0;
        for seed in 0..seeds {
            sum += reconstruct(&sample(&joint, shots, seed)?, &ctx)?.total_deviation(&exact);
        }
        out.push((shots, sum / seeds as f64));
    }
    Ok(out)
}

fn main() -> qfluct::Result<()> {
    for (shots, dev) in run(&[1_000, 10_000, 100_000, 1_000_000], 10)? {
        match shots {
            0 => println!("exact table      Σ|q - q_exact| = {dev:.2e}"),
            n => println!("{n:>9} shots  Σ|q - q_exact| = {dev:.4}"),
        }
    }
    Ok(())
}
