// Fluctuation theorems for a user-built qutrit channel: a random unitary followed by
// partial relaxation towards a fixed state.

use qfluct::fluctuation::{crooks_check, forward_distribution, integral_ft, reverse_distribution, ProcessContext};
use qfluct::{random, ComplexMatrix, DensityMatrix, KrausChannel, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn channel(seed: u64) -> qfluct::Result<KrausChannel> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let u = KrausChannel::unitary("u", random::unitary(3, &mut rng))?;
    // reset to |0>, |1>, |2> with weights 0.5, 0.3, 0.2
    let weights: [f64; 3] = [0.5, 0.3, 0.2];
    let mut kraus = Vec::new();
    for (target, w) in weights.iter().enumerate() {
        for source in 0..3 {
            let mut k = ComplexMatrix::zeros(3);
            k[(target, source)] = C64::new(w.sqrt(), 0.0);
            kraus.push(k);
        }
    }
    let reset = KrausChannel::new("reset", kraus)?;
    let relax = KrausChannel::mixture("relax", &[(0.6, &KrausChannel::identity(3)), (0.4, &reset)])?;
    Ok(u.then(&relax)?.with_label("custom"))
}

/// (integral FT residual at θ = 0.7, Crooks residual at θ = 0.7, number of atoms)
pub fn run(seed: u64) -> qfluct::Result<(f64, f64, usize)> {
    let ch = channel(seed)?;
    let rho = DensityMatrix::new(ComplexMatrix::diag(&[0.6, 0.3, 0.1]))?;
    let ctx = ProcessContext::new(ch, rho)?;
    let fwd = forward_distribution(&ctx)?;
    let theta = 0.7;
    let crooks = crooks_check(&fwd, &reverse_distribution(&ctx, theta)?, theta)?;
    Ok((
        (integral_ft(&fwd, theta) - 1.0).norm(),
        crooks.max_residual(),
        fwd.support().count(),
    ))
}

fn main() -> qfluct::Result<()> {
    let (ift, crooks, atoms) = run(11)?;
    println!("{atoms} atoms; integral FT residual {ift:.1e}; Crooks residual {crooks:.1e}");
    Ok(())
}
