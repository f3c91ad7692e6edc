// Forward quasi-probability distribution of entropy production and its real marginal.

use qfluct::fluctuation::{forward_distribution, marginalize_real, QuasiProbDistribution};
use qfluct::presets;

pub fn run() -> qfluct::Result<(QuasiProbDistribution, QuasiProbDistribution)> {
    let ctx = presets::incovariant_context()?;
    let dist = forward_distribution(&ctx)?;
    let marginal = marginalize_real(&dist)?;
    Ok((dist, marginal))
}

fn main() -> qfluct::Result<()> {
    let (dist, marginal) = run()?;
    println!("{:>10} {:>10} {:>12} {:>12}", "Re ω", "Im ω", "Re q", "Im q");
    for a in dist.support() {
        println!(
            "{:>10.4} {:>10.4} {:>12.6} {:>12.6}",
            a.omega.re, a.omega.im, a.q.re, a.q.im
        );
    }
    println!("\nreal marginal");
    for a in marginal.support() {
        let mark = if a.q.re < 0.0 { "  <- negative" } else { "" };
        println!("{:>10.4} {:>12.6}{mark}", a.omega.re, a.q.re);
    }
    Ok(())
}
