//! Two-point generalized measurement on qubits.
//!
//! The first measurement `M_{(μ,r)} = L_r Φ_μ` acts before the channel and the second
//! `M'_{(ν,s)} = Φ'_ν L_s` after it, with `L = {Π_0/√2, Π_1/√2, 1/2, S/2}` and
//! `S = Π_0 + iΠ_1` built from the stationary-state projectors. The 64 joint outcome
//! probabilities determine the quasi-probability distribution linearly.
//!
//! Outcomes are linearized as `m = 4μ + r` and `m' = 4ν + s` with `r, s ∈ 0..4`.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::channels::{KrausChannel, StationaryState};
use crate::error::{Error, Result};
use crate::fluctuation::{entropy_production, Direction, ProcessContext, QuasiProbDistribution, TransitionIndex};
use crate::matcore::{ComplexMatrix, C64, I, ONE, ZERO};
use crate::state::DensityMatrix;
use crate::tolerance::Tolerances;

pub const OUTCOMES: usize = 8;

const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `Π_i A Π_j = Σ_r c^{ij}_r L_r A L_r†`, indexed `[i][j][r]`.
pub const C_TABLE: [[[C64; 4]; 2]; 2] = [
    [
        [c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        [c(-1.0, -1.0), c(-1.0, -1.0), c(2.0, 0.0), c(0.0, 2.0)],
    ],
    [
        [c(-1.0, 1.0), c(-1.0, 1.0), c(2.0, 0.0), c(0.0, -2.0)],
        [c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
    ],
];

fn require_qubit(dim: usize) -> Result<()> {
    if dim != 2 {
        return Err(Error::UnsupportedDimension { dim });
    }
    Ok(())
}

/// `[Π_0/√2, Π_1/√2, 1/2, S/2]` in the eigenbasis of γ.
pub fn l_operators(gamma: &StationaryState) -> Result<[ComplexMatrix; 4]> {
    require_qubit(gamma.dim())?;
    let pis = gamma.projectors();
    let h = C64::new(0.5f64.sqrt(), 0.0);
    let half = C64::new(0.5, 0.0);
    let s = &pis[0].scale(ONE) + &pis[1].scale(I);
    Ok([
        pis[0].scale(h),
        pis[1].scale(h),
        ComplexMatrix::identity(2).scale(half),
        s.scale(half),
    ])
}

/// The coefficient table and the linear map from outcome probabilities to atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTables {
    pub c: [[[C64; 4]; 2]; 2],
}

impl Default for CoefficientTables {
    fn default() -> Self {
        Self::standard()
    }
}

impl CoefficientTables {
    pub fn standard() -> Self {
        Self { c: C_TABLE }
    }

    /// `α^ω_{mm'} = Σ δ(ω − ω_tuple) c^{ij}_r c^{lk}_s` for the forward protocol, one 8×8 matrix
    /// per atom of the forward distribution, ordered as its atoms.
    pub fn alpha(&self, ctx: &ProcessContext) -> Result<Vec<(C64, ComplexMatrix)>> {
        require_qubit(ctx.dim())?;
        let tol = ctx.tolerances();
        let mut out: Vec<(C64, ComplexMatrix)> = Vec::new();
        for index in TransitionIndex::all(2) {
            let omega = entropy_production(index, ctx)?;
            let slot = match out
                .iter()
                .position(|(w, _)| (w.re - omega.re).abs().max((w.im - omega.im).abs()) <= tol.cluster)
            {
                Some(pos) => pos,
                None => {
                    out.push((omega, ComplexMatrix::zeros(OUTCOMES)));
                    out.len() - 1
                }
            };
            let matrix = &mut out[slot].1;
            for r in 0..4 {
                for s in 0..4 {
                    matrix[(4 * index.mu + r, 4 * index.nu + s)] +=
                        self.c[index.i][index.j][r] * self.c[index.l][index.k][s];
                }
            }
        }
        out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        Ok(out)
    }
}

/// Sixteen measurement operators for one run of the protocol.
#[derive(Debug, Clone)]
pub struct MeasurementProtocol {
    first: Vec<ComplexMatrix>,
    second: Vec<ComplexMatrix>,
    direction: Direction,
}

impl MeasurementProtocol {
    pub fn first(&self) -> &[ComplexMatrix] {
        &self.first
    }

    pub fn second(&self) -> &[ComplexMatrix] {
        &self.second
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn completeness_deviation(&self) -> f64 {
        let dev = |ops: &[ComplexMatrix]| {
            ops.iter()
                .fold(ComplexMatrix::zeros(2), |acc, m| &acc + &(&m.adjoint() * m))
                .max_abs_diff(&ComplexMatrix::identity(2))
        };
        dev(&self.first).max(dev(&self.second))
    }
}

fn assemble(
    before: &DensityMatrix,
    after: &DensityMatrix,
    gamma: &StationaryState,
    direction: Direction,
    tol: &Tolerances,
) -> Result<MeasurementProtocol> {
    let l = l_operators(gamma)?;
    let mut first = Vec::with_capacity(OUTCOMES);
    let mut second = Vec::with_capacity(OUTCOMES);
    for phi in before.projectors() {
        first.extend(l.iter().map(|lr| lr * phi));
    }
    for phi in after.projectors() {
        second.extend(l.iter().map(|ls| phi * ls));
    }
    let protocol = MeasurementProtocol {
        first,
        second,
        direction,
    };
    let deviation = protocol.completeness_deviation();
    if deviation > tol.measurement_completeness {
        return Err(Error::CompletenessViolation { deviation });
    }
    Ok(protocol)
}

/// `M_{(μ,r)} = L_r Φ^I_μ`, `M'_{(ν,s)} = Φ^F_ν L_s`.
pub fn build_protocol(ctx: &ProcessContext) -> Result<MeasurementProtocol> {
    require_qubit(ctx.dim())?;
    assemble(
        ctx.rho_i(),
        ctx.rho_f(),
        ctx.gamma(),
        Direction::Forward,
        ctx.tolerances(),
    )
}

/// Same layout with `Φ^I` and `Φ^F` exchanged, for a run of `𝒩̃^θ` on `ρ^F`.
pub fn build_reverse_protocol(ctx: &ProcessContext, theta: f64) -> Result<MeasurementProtocol> {
    require_qubit(ctx.dim())?;
    assemble(
        ctx.rho_f(),
        ctx.rho_i(),
        ctx.gamma(),
        Direction::Reverse { theta },
        ctx.tolerances(),
    )
}

/// Joint outcome probabilities `P(m, m')`, row-major in `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution {
    probs: Vec<f64>,
    shots: Option<u64>,
    direction: Direction,
}

impl JointDistribution {
    pub fn new(probs: Vec<f64>, shots: Option<u64>, direction: Direction) -> Result<Self> {
        if probs.len() != OUTCOMES * OUTCOMES {
            return Err(Error::DimensionMismatch {
                op: "joint distribution",
                left: OUTCOMES * OUTCOMES,
                right: probs.len(),
            });
        }
        Ok(Self {
            probs,
            shots,
            direction,
        })
    }

    pub fn get(&self, m: usize, mprime: usize) -> f64 {
        self.probs[m * OUTCOMES + mprime]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `None` for exact distributions.
    pub fn shots(&self) -> Option<u64> {
        self.shots
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `m,mprime,p` rows, preceded by `header` lines written as `# ` comments.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("m,mprime,p\n");
        for m in 0..OUTCOMES {
            for mp in 0..OUTCOMES {
                let _ = writeln!(out, "{m},{mp},{:.16e}", self.get(m, mp));
            }
        }
        out
    }

    /// Parses the output of [`to_csv`](Self::to_csv); comment lines are skipped.
    pub fn from_csv(text: &str, shots: Option<u64>, direction: Direction) -> Result<Self> {
        let mut probs = vec![f64::NAN; OUTCOMES * OUTCOMES];
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("m,mprime,p") {
            return Err(Error::Numerical("joint csv: missing `m,mprime,p` header".into()));
        }
        for line in lines {
            let fields: Vec<&str> = line.trim().split(',').collect();
            let parsed = match fields.as_slice() {
                [m, mp, p] => m
                    .parse::<usize>()
                    .ok()
                    .zip(mp.parse::<usize>().ok())
                    .zip(p.parse::<f64>().ok()),
                _ => None,
            };
            match parsed {
                Some(((m, mp), p)) if m < OUTCOMES && mp < OUTCOMES => probs[m * OUTCOMES + mp] = p,
                _ => return Err(Error::Numerical(format!("joint csv: bad row `{line}`"))),
            }
        }
        if probs.iter().any(|p| p.is_nan()) {
            return Err(Error::Numerical("joint csv: missing rows".into()));
        }
        Self::new(probs, shots, direction)
    }
}

/// `P(m, m') = Tr[M'_{m'} 𝒩(M_m ρ M_m†) M'_{m'}†]` with `ρ = ρ^I` for a forward protocol and
/// `ρ = ρ^F` for a reverse one.
pub fn joint_distribution(
    proto: &MeasurementProtocol,
    ctx: &ProcessContext,
    channel: &KrausChannel,
) -> Result<JointDistribution> {
    require_qubit(channel.dim())?;
    let rho = match proto.direction {
        Direction::Reverse { .. } => ctx.rho_f(),
        _ => ctx.rho_i(),
    };
    let mut probs = Vec::with_capacity(OUTCOMES * OUTCOMES);
    for m in &proto.first {
        let image = channel.apply(&m.sandwich(rho.matrix()))?;
        for mp in &proto.second {
            probs.push(mp.sandwich(&image).trace().re);
        }
    }
    JointDistribution::new(probs, None, proto.direction)
}

/// Exact joint distribution for the forward protocol, or the reverse one under `𝒩̃^θ`.
pub fn exact_joint(ctx: &ProcessContext, direction: Direction) -> Result<JointDistribution> {
    match direction {
        Direction::Reverse { theta } => {
            let proto = build_reverse_protocol(ctx, theta)?;
            joint_distribution(&proto, ctx, &ctx.reverse_channel(theta)?)
        }
        _ => joint_distribution(&build_protocol(ctx)?, ctx, ctx.channel()),
    }
}

/// Applies the coefficient tables to `P(m, m')`.
///
/// Tuple weights are `Σ_rs c^{ij}_r c^{lk}_s P(4μ+r, 4ν+s)` forward and
/// `Σ_rs c^{kl}_r c^{ji}_s P(4ν+r, 4μ+s)` reverse, clustered exactly as the direct
/// distributions are. Sampled inputs are not renormalized.
pub fn reconstruct(joint: &JointDistribution, ctx: &ProcessContext) -> Result<QuasiProbDistribution> {
    require_qubit(ctx.dim())?;
    let table = &C_TABLE;
    let reverse = matches!(joint.direction, Direction::Reverse { .. });
    let mut points = Vec::with_capacity(64);
    for t in TransitionIndex::all(2) {
        let omega = entropy_production(t, ctx)?;
        let mut q = ZERO;
        for r in 0..4 {
            for s in 0..4 {
                q += if reverse {
                    table[t.k][t.l][r] * table[t.j][t.i][s] * joint.get(4 * t.nu + r, 4 * t.mu + s)
                } else {
                    table[t.i][t.j][r] * table[t.l][t.k][s] * joint.get(4 * t.mu + r, 4 * t.nu + s)
                };
            }
        }
        points.push(if reverse { (-omega.conj(), q) } else { (omega, q) });
    }
    let dist = QuasiProbDistribution::from_weighted(points, joint.direction, ctx.tolerances());
    if joint.shots.is_none() {
        let leakage = marginal_leakage(joint, ctx)?.max((dist.total() - ONE).norm());
        if leakage > ctx.tolerances().leakage {
            return Err(Error::InconsistentContext { leakage });
        }
    }
    Ok(dist)
}

/// Largest gap between `Σ_{m'} P(m, m')` and the first-outcome probability the context predicts.
///
/// The tables always return unit total mass, so a joint distribution taken from a different
/// context only shows up in its marginals.
fn marginal_leakage(joint: &JointDistribution, ctx: &ProcessContext) -> Result<f64> {
    let (proto, rho) = match joint.direction {
        Direction::Reverse { theta } => (build_reverse_protocol(ctx, theta)?, ctx.rho_f()),
        _ => (build_protocol(ctx)?, ctx.rho_i()),
    };
    let mut worst: f64 = 0.0;
    for (m, op) in proto.first.iter().enumerate() {
        let predicted = op.sandwich(rho.matrix()).trace().re;
        let observed: f64 = (0..OUTCOMES).map(|mp| joint.get(m, mp)).sum();
        worst = worst.max((predicted - observed).abs());
    }
    Ok(worst)
}

/// Multinomial draw of `shots` outcomes from an exact joint distribution.
///
/// Tiny negative entries (numerical noise) are clamped to zero and the rest renormalized. The
/// draw is a sequence of conditional binomials over the 64 outcomes in index order, so a given
/// `(seed, shots)` gives the same counts on every platform.
pub fn sample(joint: &JointDistribution, shots: u64, seed: u64) -> Result<JointDistribution> {
    if shots == 0 {
        return Err(Error::InvalidShots);
    }
    let clamp = Tolerances::DEFAULT.probability_clamp;
    let mut probs = joint.probs.clone();
    for p in &mut probs {
        if *p < -clamp {
            return Err(Error::NotPositive { min_eigenvalue: *p });
        }
        *p = p.max(0.0);
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::Numerical("joint distribution has no mass".into()));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut remaining_shots = shots;
    let mut remaining_mass = total;
    let mut counts = vec![0u64; probs.len()];
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (slot, &p) in probs.iter().enumerate() {
        if remaining_shots == 0 {
            break;
        }
        if slot == last {
            counts[slot] = remaining_shots;
            break;
        }
        let share = (p / remaining_mass).clamp(0.0, 1.0);
        let drawn = Binomial::new(remaining_shots, share)
            .map_err(|e| Error::Numerical(e.to_string()))?
            .sample(&mut rng);
        counts[slot] = drawn;
        remaining_shots -= drawn;
        remaining_mass -= p;
    }
    let n = shots as f64;
    JointDistribution::new(
        counts.into_iter().map(|k| k as f64 / n).collect(),
        Some(shots),
        joint.direction,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{build_covariant, KrausChannel};
    use crate::fluctuation::{forward_distribution, reverse_distribution};
    use crate::presets;
    use crate::random;
    use rand_chacha::ChaCha8Rng;

    fn random_context(rng: &mut ChaCha8Rng) -> ProcessContext {
        loop {
            let ch = random::channel(2, 3, rng);
            let rho = random::density_matrix(2, rng);
            if let Ok(ctx) = ProcessContext::new(ch, rho) {
                return ctx;
            }
        }
    }

    fn random_matrix(rng: &mut ChaCha8Rng) -> ComplexMatrix {
        use rand::Rng;
        ComplexMatrix::from_vec(
            2,
            (0..4)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn coefficient_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..20 {
            let st = StationaryState::from_density(random::density_matrix(2, &mut rng));
            let l = l_operators(&st).unwrap();
            let pis = st.projectors();
            let a = random_matrix(&mut rng);
            for i in 0..2 {
                for j in 0..2 {
                    let target = &(&pis[i] * &a) * &pis[j];
                    let lhs = (0..4).fold(ComplexMatrix::zeros(2), |acc, r| {
                        &acc + &(&(&l[r] * &a) * &l[r].adjoint()).scale(C_TABLE[i][j][r])
                    });
                    let rhs = (0..4).fold(ComplexMatrix::zeros(2), |acc, r| {
                        &acc + &(&(&l[r].adjoint() * &a) * &l[r]).scale(C_TABLE[j][i][r])
                    });
                    assert!(lhs.approx_eq(&target, 1e-12));
                    assert!(rhs.approx_eq(&target, 1e-12));
                }
            }
        }
    }

    #[test]
    fn protocols_are_complete() {
        let ctx = presets::incovariant_context().unwrap();
        assert!(build_protocol(&ctx).unwrap().completeness_deviation() < 1e-12);
        assert!(build_reverse_protocol(&ctx, 0.0).unwrap().completeness_deviation() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let ctx = random_context(&mut rng);
            assert!(build_protocol(&ctx).unwrap().completeness_deviation() < 1e-10);
        }
    }

    #[test]
    fn qutrits_are_unsupported() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let ch = random::channel(3, 2, &mut rng);
        let ctx = ProcessContext::new(ch, random::density_matrix(3, &mut rng)).unwrap();
        assert!(matches!(
            build_protocol(&ctx),
            Err(Error::UnsupportedDimension { dim: 3 })
        ));
    }

    #[test]
    fn identity_channel_reconstructs_single_atom() {
        let gamma = StationaryState::from_density(DensityMatrix::maximally_mixed(2));
        let ctx = ProcessContext::with_stationary(KrausChannel::identity(2), gamma, DensityMatrix::maximally_mixed(2))
            .unwrap();
        let joint = exact_joint(&ctx, Direction::Forward).unwrap();
        assert!((joint.total() - 1.0).abs() < 1e-12);
        let dist = reconstruct(&joint, &ctx).unwrap();
        let support: Vec<_> = dist.support().collect();
        assert_eq!(support.len(), 1);
        assert!(support[0].omega.norm() < 1e-12 && (support[0].q - 1.0).norm() < 1e-12);
    }

    #[test]
    fn exact_reconstruction_matches_direct() {
        for ctx in [
            presets::incovariant_context().unwrap(),
            presets::covariant_context().unwrap(),
        ] {
            let joint = exact_joint(&ctx, Direction::Forward).unwrap();
            assert!(joint.probs().iter().all(|&p| p >= -1e-12));
            assert!((joint.total() - 1.0).abs() < 1e-10);
            let direct = forward_distribution(&ctx).unwrap();
            assert!(reconstruct(&joint, &ctx).unwrap().max_abs_diff(&direct) < 1e-10);

            for theta in [0.0, -std::f64::consts::FRAC_PI_8] {
                let joint = exact_joint(&ctx, Direction::Reverse { theta }).unwrap();
                let direct = reverse_distribution(&ctx, theta).unwrap();
                assert!(reconstruct(&joint, &ctx).unwrap().max_abs_diff(&direct) < 1e-10);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..10 {
            let ctx = random_context(&mut rng);
            let joint = exact_joint(&ctx, Direction::Forward).unwrap();
            let direct = forward_distribution(&ctx).unwrap();
            assert!(reconstruct(&joint, &ctx).unwrap().max_abs_diff(&direct) < 1e-10);
        }
    }

    #[test]
    fn alpha_matrices_agree_with_reconstruction() {
        let ctx = presets::incovariant_context().unwrap();
        let joint = exact_joint(&ctx, Direction::Forward).unwrap();
        let direct = forward_distribution(&ctx).unwrap();
        for (omega, alpha) in CoefficientTables::standard().alpha(&ctx).unwrap() {
            let mut q = ZERO;
            for m in 0..OUTCOMES {
                for mp in 0..OUTCOMES {
                    q += alpha[(m, mp)] * joint.get(m, mp);
                }
            }
            assert!((q - direct.q_at(omega)).norm() < 1e-10);
        }
    }

    #[test]
    fn mismatched_context_leaks_mass() {
        let inc = presets::incovariant_context().unwrap();
        let other = ProcessContext::new(
            build_covariant(presets::P, presets::S).unwrap(),
            DensityMatrix::new(ComplexMatrix::diag(&[0.7, 0.3])).unwrap(),
        )
        .unwrap();
        let joint = exact_joint(&inc, Direction::Forward).unwrap();
        assert!(matches!(
            reconstruct(&joint, &other),
            Err(Error::InconsistentContext { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let ctx = presets::incovariant_context().unwrap();
        let joint = exact_joint(&ctx, Direction::Forward).unwrap();
        let text = joint.to_csv(&["generated".into()]);
        assert!(text.starts_with("# generated\nm,mprime,p\n0,0,"));
        assert_eq!(text.lines().count(), 66);
        let back = JointDistribution::from_csv(&text, None, Direction::Forward).unwrap();
        assert_eq!(back, joint);
    }

    #[test]
    fn sampling_basics() {
        let ctx = presets::incovariant_context().unwrap();
        let joint = exact_joint(&ctx, Direction::Forward).unwrap();
        let one = sample(&joint, 1, 5).unwrap();
        assert_eq!(one.probs().iter().filter(|&&p| p == 1.0).count(), 1);
        assert_eq!(one.probs().iter().filter(|&&p| p == 0.0).count(), 63);
        assert_eq!(sample(&joint, 1000, 9).unwrap(), sample(&joint, 1000, 9).unwrap());
        assert_ne!(sample(&joint, 1000, 9).unwrap(), sample(&joint, 1000, 10).unwrap());
        assert!(matches!(sample(&joint, 0, 1), Err(Error::InvalidShots)));
        let big = sample(&joint, 1_000_000, 3).unwrap();
        assert!((big.total() - 1.0).abs() < 1e-12);
        assert!(big.max_abs_diff(&joint) < 5e-3);
    }

    #[test]
    fn sampled_reconstruction_is_unbiased() {
        let ctx = presets::incovariant_context().unwrap();
        let joint = exact_joint(&ctx, Direction::Forward).unwrap();
        let exact = reconstruct(&joint, &ctx).unwrap();
        let runs: Vec<QuasiProbDistribution> = (0..100)
            .map(|seed| reconstruct(&sample(&joint, 10_000, seed).unwrap(), &ctx).unwrap())
            .collect();
        let n = runs.len() as f64;
        for atom in exact.atoms() {
            let values: Vec<C64> = runs.iter().map(|d| d.q_at(atom.omega)).collect();
            let mean: C64 = values.iter().sum::<C64>() / n;
            for part in [|z: C64| z.re, |z: C64| z.im] {
                let xs: Vec<f64> = values.iter().map(|&z| part(z)).collect();
                let m = part(mean);
                let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
                let se = (var / n).sqrt();
                if se > 0.0 {
                    let z = (m - part(atom.q)) / se;
                    assert!(z.abs() < 5.0, "atom {:?} z = {z}", atom.omega);
                }
            }
        }
    }
}
