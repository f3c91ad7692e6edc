// The θ-family of reverse channels: one member for a covariant channel, a continuum otherwise.

use std::f64::consts::PI;

use qfluct::presets::{P, S};
use qfluct::reversal::{check_time_reversal_symmetry, ReversalFamily};
use qfluct::{build_covariant, build_incovariant, stationary_state};

/// (label, distances of the θ-reverse from the forward channel at each θ, time-reversal symmetric?)
pub fn run(thetas: &[f64]) -> qfluct::Result<Vec<(String, Vec<f64>, bool)>> {
    let mut out = Vec::new();
    for ch in [build_incovariant(P, S)?, build_covariant(P, S)?] {
        let gamma = stationary_state(&ch)?;
        let symmetric = check_time_reversal_symmetry(&ch, &gamma)?.symmetric;
        let family = ReversalFamily::new(ch.clone(), gamma)?;
        let d = thetas
            .iter()
            .map(|&t| family.distance_to_forward(t))
            .collect::<qfluct::Result<_>>()?;
        out.push((ch.label().to_owned(), d, symmetric));
    }
    Ok(out)
}

fn main() -> qfluct::Result<()> {
    let thetas: Vec<f64> = (0..=8).map(|k| -PI + k as f64 * PI / 4.0).collect();
    for (label, distances, symmetric) in run(&thetas)? {
        println!("{label} (reverse equals forward: {symmetric})");
        for (t, d) in thetas.iter().zip(distances) {
            println!("  θ = {t:+.4}  ‖S_θ − S‖ = {d:.3e}");
        }
    }
    Ok(())
}
