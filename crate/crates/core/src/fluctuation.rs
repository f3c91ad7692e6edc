//! Transition amplitudes, complex entropy production and quasi-probability distributions.
//!
//! A forward process is fixed by a channel `𝒩`, its stationary state `γ = Σ r_i Π_i` and an
//! input state `ρ^I = Σ p^I_μ Φ^I_μ` with output `ρ^F = 𝒩(ρ^I) = Σ p^F_ν Φ^F_ν`. Each index tuple
//! `(μ, ν, i, j, k, l)` carries an amplitude
//!
//! ```text
//! T = Tr[𝒩(Π_i Φ^I_μ Π_j) Π_k Φ^F_ν Π_l]
//! ```
//!
//! and a complex entropy production `ω`. Summing `p^I_μ T` over tuples that share `ω` gives the
//! forward distribution.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::Serialize;

use crate::channels::{stationary_state_with, KrausChannel, StationaryState};
use crate::error::{Error, Result};
use crate::matcore::{log_hermitian, ComplexMatrix, C64, ZERO};
use crate::reversal::rotated_reverse_with;
use crate::state::DensityMatrix;
use crate::tolerance::Tolerances;

/// Everything that defines one forward process.
#[derive(Debug, Clone)]
pub struct ProcessContext {
    channel: KrausChannel,
    gamma: StationaryState,
    rho_i: DensityMatrix,
    rho_f: DensityMatrix,
    tol: Tolerances,
}

impl ProcessContext {
    /// Computes `γ` from the channel and `ρ^F = 𝒩(ρ^I)`.
    pub fn new(channel: KrausChannel, rho_i: DensityMatrix) -> Result<Self> {
        Self::with_tolerances(channel, rho_i, Tolerances::DEFAULT)
    }

    pub fn with_tolerances(channel: KrausChannel, rho_i: DensityMatrix, tol: Tolerances) -> Result<Self> {
        let gamma = stationary_state_with(&channel, &tol)?;
        Self::build(channel, gamma, rho_i, tol)
    }

    /// Uses a caller-supplied stationary state, checked against the channel.
    pub fn with_stationary(channel: KrausChannel, gamma: StationaryState, rho_i: DensityMatrix) -> Result<Self> {
        let tol = Tolerances::DEFAULT;
        let deviation = channel.apply(gamma.gamma())?.max_abs_diff(gamma.gamma());
        if deviation > tol.stationarity {
            return Err(Error::NotStationary { deviation });
        }
        Self::build(channel, gamma, rho_i, tol)
    }

    fn build(channel: KrausChannel, gamma: StationaryState, rho_i: DensityMatrix, tol: Tolerances) -> Result<Self> {
        if rho_i.dim() != channel.dim() {
            return Err(Error::DimensionMismatch {
                op: "process context",
                left: channel.dim(),
                right: rho_i.dim(),
            });
        }
        gamma.require_full_rank()?;
        let rho_f = DensityMatrix::with_tolerances(channel.apply(rho_i.matrix())?, &tol)?;
        for state in [&rho_i, &rho_f] {
            let min = state.min_eigenvalue();
            if min <= tol.positive_definite {
                return Err(Error::RankDeficientState { min_eigenvalue: min });
            }
        }
        Ok(Self {
            channel,
            gamma,
            rho_i,
            rho_f,
            tol,
        })
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn gamma(&self) -> &StationaryState {
        &self.gamma
    }

    pub fn rho_i(&self) -> &DensityMatrix {
        &self.rho_i
    }

    pub fn rho_f(&self) -> &DensityMatrix {
        &self.rho_f
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn dim(&self) -> usize {
        self.channel.dim()
    }

    /// True if any of `ρ^I`, `ρ^F`, `γ` has a degenerate spectrum, in which case the atoms depend
    /// on the eigenbasis gauge.
    pub fn degenerate(&self) -> bool {
        self.rho_i.spectral().degenerate || self.rho_f.spectral().degenerate || self.gamma.spectral().degenerate
    }

    /// The reverse member `𝒩̃^θ` of this context's channel.
    pub fn reverse_channel(&self, theta: f64) -> Result<KrausChannel> {
        rotated_reverse_with(&self.channel, &self.gamma, theta, &self.tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TransitionIndex {
    pub mu: usize,
    pub nu: usize,
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
}

impl TransitionIndex {
    pub fn new(mu: usize, nu: usize, i: usize, j: usize, k: usize, l: usize) -> Self {
        Self { mu, nu, i, j, k, l }
    }

    /// Every tuple for dimension `d`, in lexicographic order.
    pub fn all(d: usize) -> impl Iterator<Item = TransitionIndex> {
        (0..d.pow(6)).map(move |mut code| {
            let mut digits = [0usize; 6];
            for slot in digits.iter_mut().rev() {
                *slot = code % d;
                code /= d;
            }
            let [mu, nu, i, j, k, l] = digits;
            TransitionIndex { mu, nu, i, j, k, l }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRecord {
    pub index: TransitionIndex,
    pub amplitude: C64,
    pub omega: C64,
    /// `p^I_μ T` for forward records, `p^F_ν T̃` for reverse ones.
    pub weight: C64,
}

/// `ω = ln(p^I_μ √(r_k r_l) / (p^F_ν √(r_i r_j))) + i ln(√(r_j r_l) / √(r_i r_k))`
pub fn entropy_production(index: TransitionIndex, ctx: &ProcessContext) -> Result<C64> {
    let p_i = ctx.rho_i.eigenvalues();
    let p_f = ctx.rho_f.eigenvalues();
    let r = ctx.gamma.populations();
    let floor = ctx.tol.positive_definite;
    for &value in [p_i[index.mu], p_f[index.nu]].iter() {
        if value <= floor {
            return Err(Error::RankDeficientState { min_eigenvalue: value });
        }
    }
    for &value in [r[index.i], r[index.j], r[index.k], r[index.l]].iter() {
        if value <= floor {
            return Err(Error::NonFullRankStationary { min_eigenvalue: value });
        }
    }
    let ln = |x: f64| x.ln();
    let re = ln(p_i[index.mu]) - ln(p_f[index.nu])
        + 0.5 * (ln(r[index.k]) + ln(r[index.l]) - ln(r[index.i]) - ln(r[index.j]));
    let im = 0.5 * (ln(r[index.j]) + ln(r[index.l]) - ln(r[index.i]) - ln(r[index.k]));
    Ok(C64::new(re, im))
}

/// `Tr[A B]` without forming the product.
fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let d = a.dim();
    let mut acc = ZERO;
    for x in 0..d {
        for y in 0..d {
            acc += a[(x, y)] * b[(y, x)];
        }
    }
    acc
}

/// `Π_a Φ Π_b` for all `(a, b)`, row-major in `(a, b)`.
fn dressed(phi: &ComplexMatrix, pis: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(pis.len() * pis.len());
    for pa in pis {
        for pb in pis {
            out.push(&(pa * phi) * pb);
        }
    }
    out
}

/// All forward records, lexicographic in `(μ, ν, i, j, k, l)`.
pub fn transition_amplitudes(ctx: &ProcessContext) -> Result<Vec<TransitionRecord>> {
    let d = ctx.dim();
    let pis = ctx.gamma.projectors();
    let p_i = ctx.rho_i.eigenvalues();
    let inputs: Vec<Vec<ComplexMatrix>> = ctx
        .rho_i
        .projectors()
        .iter()
        .map(|phi| {
            dressed(phi, pis)
                .iter()
                .map(|x| ctx.channel.apply(x))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let outputs: Vec<Vec<ComplexMatrix>> = ctx.rho_f.projectors().iter().map(|phi| dressed(phi, pis)).collect();

    TransitionIndex::all(d)
        .map(|index| {
            let amplitude = trace_product(
                &inputs[index.mu][index.i * d + index.j],
                &outputs[index.nu][index.k * d + index.l],
            );
            let omega = entropy_production(index, ctx)?;
            Ok(TransitionRecord {
                index,
                amplitude,
                omega,
                weight: amplitude * p_i[index.mu],
            })
        })
        .collect()
}

/// Reverse records under `𝒩̃^θ` with input `ρ^F`.
///
/// Records keep the forward tuple as index. The amplitude is
/// `T̃ = Tr[𝒩̃^θ(Π_k Φ^F_ν Π_l) Π_i Φ^I_μ Π_j]`, the weight `p^F_ν T̃`, and the record sits at
/// `−ω*`, the entropy production of the reversed transition.
pub fn reverse_transition_amplitudes(ctx: &ProcessContext, theta: f64) -> Result<Vec<TransitionRecord>> {
    let d = ctx.dim();
    let reverse = ctx.reverse_channel(theta)?;
    let pis = ctx.gamma.projectors();
    let p_f = ctx.rho_f.eigenvalues();
    let inputs: Vec<Vec<ComplexMatrix>> = ctx
        .rho_f
        .projectors()
        .iter()
        .map(|phi| {
            dressed(phi, pis)
                .iter()
                .map(|x| reverse.apply(x))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let outputs: Vec<Vec<ComplexMatrix>> = ctx.rho_i.projectors().iter().map(|phi| dressed(phi, pis)).collect();

    TransitionIndex::all(d)
        .map(|index| {
            let amplitude = trace_product(
                &inputs[index.nu][index.k * d + index.l],
                &outputs[index.mu][index.i * d + index.j],
            );
            let omega = -entropy_production(index, ctx)?.conj();
            Ok(TransitionRecord {
                index,
                amplitude,
                omega,
                weight: amplitude * p_f[index.nu],
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse {
        theta: f64,
    },
    /// Real marginal of another distribution.
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub omega: C64,
    pub q: C64,
    pub negligible: bool,
}

/// Export row `{omega_re, omega_im, q_re, q_im}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomRecord {
    pub omega_re: f64,
    pub omega_im: f64,
    pub q_re: f64,
    pub q_im: f64,
}

fn max_norm(a: C64, b: C64) -> f64 {
    (a.re - b.re).abs().max((a.im - b.im).abs())
}

fn omega_order(a: C64, b: C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// A finite complex quasi-probability distribution over complex entropy production.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiProbDistribution {
    atoms: Vec<Atom>,
    direction: Direction,
    cluster_tol: f64,
}

impl QuasiProbDistribution {
    /// Greedy clustering: each point joins the first existing atom within `tol.cluster` in
    /// max-norm, otherwise opens a new one at its own `ω`. Atoms are then sorted by `(ω_R, ω_I)`.
    pub fn from_weighted(points: impl IntoIterator<Item = (C64, C64)>, direction: Direction, tol: &Tolerances) -> Self {
        let mut atoms: Vec<Atom> = Vec::new();
        for (omega, q) in points {
            match atoms.iter_mut().find(|a| max_norm(a.omega, omega) <= tol.cluster) {
                Some(atom) => atom.q += q,
                None => atoms.push(Atom {
                    omega,
                    q,
                    negligible: false,
                }),
            }
        }
        for atom in &mut atoms {
            atom.negligible = atom.q.norm() < tol.negligible;
        }
        atoms.sort_by(|a, b| omega_order(a.omega, b.omega));
        Self {
            atoms,
            direction,
            cluster_tol: tol.cluster,
        }
    }

    pub fn from_records(records: &[TransitionRecord], direction: Direction, tol: &Tolerances) -> Self {
        Self::from_weighted(records.iter().map(|r| (r.omega, r.weight)), direction, tol)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Atoms with `|q|` above the negligible threshold.
    pub fn support(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(|a| !a.negligible)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total(&self) -> C64 {
        self.atoms.iter().map(|a| a.q).sum()
    }

    pub fn atom_at(&self, omega: C64) -> Option<&Atom> {
        self.atoms.iter().find(|a| max_norm(a.omega, omega) <= self.cluster_tol)
    }

    /// `q` at `ω`, zero if there is no atom there.
    pub fn q_at(&self, omega: C64) -> C64 {
        self.atom_at(omega).map_or(ZERO, |a| a.q)
    }

    /// Largest `|q_self − q_other|` over the union of both atom sets.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let one_way = |a: &Self, b: &Self| {
            a.atoms
                .iter()
                .map(|atom| (atom.q - b.q_at(atom.omega)).norm())
                .fold(0.0, f64::max)
        };
        one_way(self, other).max(one_way(other, self))
    }

    /// `Σ |q_self(ω) − q_ref(ω)|` over the atoms of `reference` with non-negligible weight.
    pub fn total_deviation(&self, reference: &Self) -> f64 {
        reference
            .support()
            .map(|atom| (self.q_at(atom.omega) - atom.q).norm())
            .sum()
    }

    /// `Σ |q_self(ω) − q_ref(ω)|` over the union of both atom sets, zero-weight atoms included.
    pub fn total_deviation_all(&self, reference: &Self) -> f64 {
        let mut sum: f64 = reference
            .atoms
            .iter()
            .map(|atom| (self.q_at(atom.omega) - atom.q).norm())
            .sum();
        for atom in &self.atoms {
            if reference.atom_at(atom.omega).is_none() {
                sum += atom.q.norm();
            }
        }
        sum
    }

    pub fn max_abs_imag_omega(&self) -> f64 {
        self.atoms.iter().map(|a| a.omega.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_imag_q(&self) -> f64 {
        self.atoms.iter().map(|a| a.q.im.abs()).fold(0.0, f64::max)
    }

    pub fn records(&self) -> Vec<AtomRecord> {
        self.atoms
            .iter()
            .map(|a| AtomRecord {
                omega_re: a.omega.re,
                omega_im: a.omega.im,
                q_re: a.q.re,
                q_im: a.q.im,
            })
            .collect()
    }
}

/// Forward distribution `P_→(ω)`.
pub fn forward_distribution(ctx: &ProcessContext) -> Result<QuasiProbDistribution> {
    let records = transition_amplitudes(ctx)?;
    Ok(QuasiProbDistribution::from_records(
        &records,
        Direction::Forward,
        &ctx.tol,
    ))
}

/// Reverse distribution `P_←^θ(ω)` under `𝒩̃^θ`.
pub fn reverse_distribution(ctx: &ProcessContext, theta: f64) -> Result<QuasiProbDistribution> {
    let records = reverse_transition_amplitudes(ctx, theta)?;
    Ok(QuasiProbDistribution::from_records(
        &records,
        Direction::Reverse { theta },
        &ctx.tol,
    ))
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Least-squares slope of `y` against `x`; `None` when `x` has no spread.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx < 1e-24 {
        return None;
    }
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrooksPair {
    pub omega_re: f64,
    pub omega_im: f64,
    pub q_forward_re: f64,
    pub q_forward_im: f64,
    pub q_reverse_re: f64,
    pub q_reverse_im: f64,
    /// `ln|ratio| − ω_R`
    pub log_residual: f64,
    /// `arg(ratio) + 2θω_I`, wrapped
    pub phase_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrooksReport {
    pub theta: f64,
    pub pairs: Vec<CrooksPair>,
    pub max_log_residual: f64,
    pub max_phase_residual: f64,
    /// Slope of `ln|ratio|` against `ω_R`.
    pub magnitude_slope: Option<f64>,
    /// Slope of `arg(ratio)` against `ω_I`.
    pub phase_slope: Option<f64>,
    /// Reverse atoms with non-negligible weight that no forward atom maps onto.
    pub unmatched_reverse: Vec<(f64, f64)>,
}

impl CrooksReport {
    pub fn max_residual(&self) -> f64 {
        self.max_log_residual.max(self.max_phase_residual)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() < tol && self.unmatched_reverse.is_empty()
    }
}

/// Pairs each forward atom at `ω` with the reverse atom at `−ω*` and checks
/// `P_→(ω) / P_←^θ(−ω*) = e^{ω_R − 2iθω_I}`.
pub fn crooks_check(fwd: &QuasiProbDistribution, rev: &QuasiProbDistribution, theta: f64) -> Result<CrooksReport> {
    let tol = fwd.cluster_tol;
    let mut pairs = Vec::new();
    for atom in fwd.support() {
        let target = -atom.omega.conj();
        let partner = rev.atom_at(target).ok_or(Error::UnmatchedAtom {
            omega_re: atom.omega.re,
            omega_im: atom.omega.im,
        })?;
        let ratio = atom.q / partner.q;
        pairs.push(CrooksPair {
            omega_re: atom.omega.re,
            omega_im: atom.omega.im,
            q_forward_re: atom.q.re,
            q_forward_im: atom.q.im,
            q_reverse_re: partner.q.re,
            q_reverse_im: partner.q.im,
            log_residual: ratio.norm().ln() - atom.omega.re,
            phase_residual: wrap_phase(ratio.arg() + 2.0 * theta * atom.omega.im),
        });
    }
    let unmatched_reverse = rev
        .support()
        .filter(|r| fwd.support().all(|f| max_norm(-f.omega.conj(), r.omega) > tol))
        .map(|r| (r.omega.re, r.omega.im))
        .collect();

    let fold_max = |f: fn(&CrooksPair) -> f64| pairs.iter().map(|p| f(p).abs()).fold(0.0, f64::max);
    let max_log_residual = fold_max(|p| {
        if p.log_residual.is_nan() {
            f64::INFINITY
        } else {
            p.log_residual
        }
    });
    let max_phase_residual = fold_max(|p| {
        if p.phase_residual.is_nan() {
            f64::INFINITY
        } else {
            p.phase_residual
        }
    });
    let magnitude: Vec<(f64, f64)> = pairs
        .iter()
        .map(|p| (p.omega_re, p.log_residual + p.omega_re))
        .collect();
    let phase: Vec<(f64, f64)> = pairs
        .iter()
        .map(|p| {
            let ratio = C64::new(p.q_forward_re, p.q_forward_im) / C64::new(p.q_reverse_re, p.q_reverse_im);
            (p.omega_im, ratio.arg())
        })
        .collect();
    Ok(CrooksReport {
        theta,
        magnitude_slope: ols_slope(&magnitude),
        phase_slope: ols_slope(&phase),
        max_log_residual,
        max_phase_residual,
        pairs,
        unmatched_reverse,
    })
}

/// `Σ q e^{−ω_R + 2iθω_I}`
pub fn integral_ft(fwd: &QuasiProbDistribution, theta: f64) -> C64 {
    fwd.atoms
        .iter()
        .map(|a| a.q * C64::new(-a.omega.re, 2.0 * theta * a.omega.im).exp())
        .sum()
}

/// `ω̄ = Σ q ω`
pub fn average_entropy_production(fwd: &QuasiProbDistribution) -> C64 {
    fwd.atoms.iter().map(|a| a.q * a.omega).sum()
}

/// `−Tr[ρ ln ρ]` in nats, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// `Tr[ρ(ln ρ − ln γ)]` in nats.
pub fn relative_entropy(rho: &DensityMatrix, gamma: &DensityMatrix) -> Result<f64> {
    if !gamma.is_full_rank(Tolerances::DEFAULT.positive_definite) {
        return Err(Error::NonFullRankStationary {
            min_eigenvalue: gamma.min_eigenvalue(),
        });
    }
    let ln_gamma = log_hermitian(gamma.matrix())?;
    let cross = trace_product(rho.matrix(), &ln_gamma).re;
    Ok(-von_neumann_entropy(rho) - cross)
}

/// `P̄(ω_R) = Σ_{ω_I} P(ω_R + iω_I)`; the summed weights must be real.
pub fn marginalize_real(dist: &QuasiProbDistribution) -> Result<QuasiProbDistribution> {
    let tol = Tolerances {
        cluster: dist.cluster_tol,
        ..Tolerances::DEFAULT
    };
    let merged = QuasiProbDistribution::from_weighted(
        dist.atoms.iter().map(|a| (C64::new(a.omega.re, 0.0), a.q)),
        Direction::Marginal,
        &tol,
    );
    let mut atoms = merged.atoms;
    for atom in &mut atoms {
        if atom.q.im.abs() > tol.marginal_imag {
            return Err(Error::NonRealMarginal {
                omega_re: atom.omega.re,
                imag: atom.q.im,
            });
        }
        atom.q = C64::new(atom.q.re, 0.0);
    }
    Ok(QuasiProbDistribution {
        atoms,
        direction: Direction::Marginal,
        cluster_tol: dist.cluster_tol,
    })
}

/// Max residuals of `Σ_{ijkl} T = Tr[𝒩(Φ^I_μ)Φ^F_ν]` and `Σ_{μνjl} T = Tr[𝒩(Π_i)Π_k]`.
pub fn marginal_identity_residuals(ctx: &ProcessContext, records: &[TransitionRecord]) -> Result<(f64, f64)> {
    let d = ctx.dim();
    let mut by_states = vec![ZERO; d * d];
    let mut by_levels = vec![ZERO; d * d];
    for r in records {
        by_states[r.index.mu * d + r.index.nu] += r.amplitude;
        by_levels[r.index.i * d + r.index.k] += r.amplitude;
    }
    let mut states_residual: f64 = 0.0;
    for (mu, phi_i) in ctx.rho_i.projectors().iter().enumerate() {
        let image = ctx.channel.apply(phi_i)?;
        for (nu, phi_f) in ctx.rho_f.projectors().iter().enumerate() {
            let direct = trace_product(&image, phi_f);
            states_residual = states_residual.max((by_states[mu * d + nu] - direct).norm());
        }
    }
    let pis = ctx.gamma.projectors();
    let mut levels_residual: f64 = 0.0;
    for (i, pi) in pis.iter().enumerate() {
        let image = ctx.channel.apply(pi)?;
        for (k, pk) in pis.iter().enumerate() {
            let direct = trace_product(&image, pk);
            levels_residual = levels_residual.max((by_levels[i * d + k] - direct).norm());
        }
    }
    Ok((states_residual, levels_residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{build_covariant, KrausChannel};
    use crate::presets;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ELL: f64 = 0.264735401;

    fn inc() -> ProcessContext {
        presets::incovariant_context().unwrap()
    }

    fn cov() -> ProcessContext {
        presets::covariant_context().unwrap()
    }

    fn random_context(d: usize, rng: &mut ChaCha8Rng) -> ProcessContext {
        loop {
            let ch = random::channel(d, 1 + d, rng);
            let rho = random::density_matrix(d, rng);
            if let Ok(ctx) = ProcessContext::new(ch, rho) {
                return ctx;
            }
        }
    }

    #[test]
    fn final_state_matches_oracle() {
        let expected = ComplexMatrix::from_vec(
            2,
            vec![
                C64::new(0.50399488, 0.0),
                C64::new(0.0, 0.23540914978834174),
                C64::new(0.0, -0.23540914978834174),
                C64::new(0.49600512, 0.0),
            ],
        )
        .unwrap();
        assert!(inc().rho_f().matrix().approx_eq(&expected, 1e-12));
        assert!((cov().rho_f().matrix()[(0, 1)] - C64::new(0.0, 0.07440890269315899)).norm() < 1e-12);
    }

    #[test]
    fn identity_channel_matches_indices_only() {
        let rho = DensityMatrix::new(ComplexMatrix::diag(&[0.8, 0.2])).unwrap();
        let gamma = StationaryState::from_density(DensityMatrix::new(ComplexMatrix::diag(&[0.6, 0.4])).unwrap());
        let ctx = ProcessContext::with_stationary(KrausChannel::identity(2), gamma, rho).unwrap();
        for r in transition_amplitudes(&ctx).unwrap() {
            let matched = r.index.mu == r.index.nu && r.index.i == r.index.k && r.index.j == r.index.l;
            if !matched {
                assert!(r.amplitude.norm() < 1e-15, "{:?}", r.index);
            }
        }
        let dist = forward_distribution(&ctx).unwrap();
        let support: Vec<_> = dist.support().collect();
        assert_eq!(support.len(), 1);
        assert!(support[0].omega.norm() < 1e-15);
        assert!((support[0].q - 1.0).norm() < 1e-15);
        let rev = reverse_distribution(&ctx, 0.0).unwrap();
        assert_eq!(rev.support().count(), 1);
    }

    #[test]
    fn trivial_entropy_production_vanishes() {
        let ctx = inc();
        let w = entropy_production(TransitionIndex::new(0, 0, 1, 1, 1, 1), &ctx).unwrap();
        let p_i = ctx.rho_i().eigenvalues()[0];
        let p_f = ctx.rho_f().eigenvalues()[0];
        assert!((w - C64::new((p_i / p_f).ln(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn coherence_transfer_carries_imaginary_part() {
        let ctx = inc();
        // |0⟩⟨1| → |1⟩⟨0| and its conjugate
        let a = entropy_production(TransitionIndex::new(0, 0, 0, 1, 0, 1), &ctx).unwrap();
        let b = entropy_production(TransitionIndex::new(0, 0, 1, 0, 1, 0), &ctx).unwrap();
        assert!((a.im + ELL).abs() < 5e-5);
        assert!((b.im - ELL).abs() < 5e-5);
        let records = transition_amplitudes(&ctx).unwrap();
        let weight: f64 = records
            .iter()
            .filter(|r| (r.index.i, r.index.j, r.index.k, r.index.l) == (0, 1, 0, 1))
            .map(|r| r.weight.norm())
            .sum();
        assert!(weight > 1e-3);
    }

    /// Entropy production written out directly from the eigen-decompositions.
    #[test]
    fn entropy_production_matches_scalar_formula() {
        let ctx = inc();
        let p_i: [f64; 2] = [0.8, 0.2];
        let r: [f64; 2] = [0.5658, 0.4342];
        let mut f = ctx.rho_f().eigenvalues().to_vec();
        f.sort_by(|a, b| b.total_cmp(a));
        for index in TransitionIndex::all(2) {
            let w = entropy_production(index, &ctx).unwrap();
            let re = (p_i[index.mu] * (r[index.k] * r[index.l]).sqrt()
                / (f[index.nu] * (r[index.i] * r[index.j]).sqrt()))
            .ln();
            let im = ((r[index.j] * r[index.l]).sqrt() / (r[index.i] * r[index.k]).sqrt()).ln();
            assert!((w - C64::new(re, im)).norm() < 1e-8, "{index:?}");
        }
    }

    fn frozen_incovariant() -> Vec<(f64, f64, f64)> {
        vec![
            (-1.566891133, 0.0, 2.284408670423566e-02),
            (-1.302155732, -ELL, -1.341475581308395e-02),
            (-1.302155732, 0.0, 1.56641809218202e-2),
            (-1.302155732, ELL, -1.341475581308395e-02),
            (-1.037420330, 0.0, 1.026513977978157e-02),
            (-0.544474598, 0.0, 2.363268129576437e-02),
            (-0.279739197, -ELL, 1.341475581308395e-02),
            (-0.279739197, 0.0, 1.176713070781799e-01),
            (-0.279739197, ELL, 1.341475581308395e-02),
            (-0.180596772, 0.0, 3.045878227231419e-02),
            (-0.015003796, 0.0, 9.922604220218428e-03),
            (0.084138629, -ELL, 5.365902325233581e-02),
            (0.084138629, 0.0, 4.525406418784813e-01),
            (0.084138629, ELL, 5.365902325233581e-02),
            (0.348874031, 0.0, 1.231816773573789e-01),
            (0.841819763, 0.0, 3.15102417276858e-2),
            (1.106555164, -ELL, -5.365902325233581e-02),
            (1.106555164, 0.0, 4.323740612151888e-02),
            (1.106555164, ELL, -5.365902325233581e-02),
            (1.371290566, 0.0, 1.190712506426212e-01),
        ]
    }

    #[test]
    fn incovariant_distribution_matches_oracle() {
        let dist = forward_distribution(&inc()).unwrap();
        assert!((dist.total() - 1.0).norm() < 1e-9);
        let support: Vec<_> = dist.support().filter(|a| a.q.norm() > 1e-9).collect();
        let frozen = frozen_incovariant();
        assert_eq!(support.len(), frozen.len());
        for (atom, &(re, im, q)) in support.iter().zip(&frozen) {
            assert!((atom.omega.re - re).abs() < 1e-6, "{atom:?}");
            assert!((atom.omega.im - im).abs() < 1e-6, "{atom:?}");
            assert!((atom.q - q).norm() < 1e-8, "{atom:?}");
        }
        assert!(dist.atoms().iter().any(|a| a.q.re < -1e-3));
    }

    #[test]
    fn covariant_distribution_is_real() {
        let dist = forward_distribution(&cov()).unwrap();
        assert!((dist.total() - 1.0).norm() < 1e-9);
        for atom in dist.support() {
            assert!(atom.omega.im.abs() < 1e-10);
            assert!(atom.q.im.abs() < 1e-12);
        }
        let biggest = dist.support().map(|a| a.q.re).fold(0.0, f64::max);
        assert!((biggest - 3.41068618618519e-1).abs() < 1e-8);
    }

    #[test]
    fn average_entropy_production_matches_relative_entropies() {
        for (ctx, expected) in [(inc(), 0.118135059837068), (cov(), 0.222365886919837)] {
            let avg = average_entropy_production(&forward_distribution(&ctx).unwrap());
            assert!((avg.re - expected).abs() < 1e-9);
            assert!(avg.im.abs() < 1e-10);
            let gamma = ctx.gamma().state();
            let drop = relative_entropy(ctx.rho_i(), gamma).unwrap() - relative_entropy(ctx.rho_f(), gamma).unwrap();
            assert!((avg.re - drop).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_input_produces_nothing() {
        let ch = build_covariant(0.2864, 0.1316).unwrap();
        let gamma = DensityMatrix::new(ComplexMatrix::diag(&[0.5658, 0.4342])).unwrap();
        let ctx = ProcessContext::new(ch, gamma).unwrap();
        let avg = average_entropy_production(&forward_distribution(&ctx).unwrap());
        assert!(avg.norm() < 1e-12);
    }

    #[test]
    fn entropies() {
        let gamma = DensityMatrix::new(ComplexMatrix::diag(&[0.5658, 0.4342])).unwrap();
        assert!(relative_entropy(&gamma, &gamma).unwrap().abs() < 1e-15);
        let half = DensityMatrix::maximally_mixed(2);
        assert!((von_neumann_entropy(&half) - 2f64.ln()).abs() < 1e-15);
        let rho = DensityMatrix::new(ComplexMatrix::diag(&[0.8, 0.2])).unwrap();
        let scalar = 0.8 * (0.8f64 / 0.5658).ln() + 0.2 * (0.2f64 / 0.4342).ln();
        assert!((relative_entropy(&rho, &gamma).unwrap() - scalar).abs() < 1e-14);
        let pure = DensityMatrix::new(ComplexMatrix::diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(
            relative_entropy(&gamma, &pure),
            Err(Error::NonFullRankStationary { .. })
        ));
    }

    #[test]
    fn rank_deficient_input_is_rejected() {
        let pure = DensityMatrix::new(ComplexMatrix::diag(&[1.0, 0.0])).unwrap();
        let ch = KrausChannel::identity(2);
        let gamma = StationaryState::from_density(DensityMatrix::maximally_mixed(2));
        assert!(matches!(
            ProcessContext::with_stationary(ch, gamma, pure),
            Err(Error::RankDeficientState { .. })
        ));
    }

    #[test]
    fn crooks_holds_for_both_channels() {
        for ctx in [inc(), cov()] {
            let fwd = forward_distribution(&ctx).unwrap();
            for theta in [0.0, -PI / 8.0, -PI / 4.0, 0.37, 2.1] {
                let rev = reverse_distribution(&ctx, theta).unwrap();
                assert!((rev.total() - 1.0).norm() < 1e-9);
                let report = crooks_check(&fwd, &rev, theta).unwrap();
                assert!(report.passes(1e-9), "θ={theta} {}", report.max_residual());
                assert!((report.magnitude_slope.unwrap() - 1.0).abs() < 1e-9);
            }
        }
        let ctx = inc();
        let fwd = forward_distribution(&ctx).unwrap();
        let rev = reverse_distribution(&ctx, -PI / 8.0).unwrap();
        let report = crooks_check(&fwd, &rev, -PI / 8.0).unwrap();
        assert!((report.phase_slope.unwrap() - PI / 4.0).abs() < 1e-9);
    }

    #[test]
    fn plain_negation_breaks_crooks_away_from_zero() {
        let ctx = inc();
        let fwd = forward_distribution(&ctx).unwrap();
        let theta = -PI / 4.0;
        let records: Vec<_> = reverse_transition_amplitudes(&ctx, theta)
            .unwrap()
            .into_iter()
            .map(|r| (r.omega.conj(), r.weight))
            .collect();
        let flipped = QuasiProbDistribution::from_weighted(records, Direction::Reverse { theta }, &Tolerances::DEFAULT);
        let report = crooks_check(&fwd, &flipped, theta);
        assert!(report.map_or(true, |r| !r.passes(1e-6)));
    }

    #[test]
    fn integral_ft_over_grid() {
        for ctx in [inc(), cov()] {
            let fwd = forward_distribution(&ctx).unwrap();
            for n in 0..101 {
                let theta = -PI + 2.0 * PI * n as f64 / 100.0;
                assert!((integral_ft(&fwd, theta) - 1.0).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn real_marginals() {
        for ctx in [inc(), cov()] {
            let fwd = marginalize_real(&forward_distribution(&ctx).unwrap()).unwrap();
            let rev = marginalize_real(&reverse_distribution(&ctx, 0.0).unwrap()).unwrap();
            let report = crooks_check(&fwd, &rev, 0.0).unwrap();
            assert!(report.passes(1e-9), "{}", report.max_residual());
        }
        let marginal = marginalize_real(&forward_distribution(&inc()).unwrap()).unwrap();
        assert!(marginal.atoms().iter().any(|a| a.q.re < -1e-3));

        let full = forward_distribution(&cov()).unwrap();
        let marginal = marginalize_real(&full).unwrap();
        for atom in full.support() {
            assert!((marginal.q_at(atom.omega) - atom.q).norm() < 1e-12);
        }
        assert!(marginalize_real(&marginal).unwrap().max_abs_diff(&marginal) < 1e-15);
    }

    #[test]
    fn non_real_marginal_is_rejected() {
        let dist = QuasiProbDistribution::from_weighted(
            vec![
                (C64::new(0.1, 0.2), C64::new(0.5, 0.1)),
                (C64::new(0.1, -0.2), C64::new(0.5, 0.1)),
            ],
            Direction::Forward,
            &Tolerances::DEFAULT,
        );
        assert!(matches!(marginalize_real(&dist), Err(Error::NonRealMarginal { .. })));
    }

    #[test]
    fn clustering_merges_within_tolerance() {
        let dist = QuasiProbDistribution::from_weighted(
            vec![
                (C64::new(0.5, 0.0), C64::new(0.25, 0.0)),
                (C64::new(-0.5, 0.0), C64::new(0.5, 0.0)),
                (C64::new(0.5 + 5e-10, 0.0), C64::new(0.25, 0.0)),
            ],
            Direction::Forward,
            &Tolerances::DEFAULT,
        );
        assert_eq!(dist.len(), 2);
        assert_eq!(dist.atoms()[0].omega.re, -0.5);
        assert!((dist.atoms()[1].q - 0.5).norm() < 1e-15);
    }

    #[test]
    fn wrap_phase_range() {
        assert!((wrap_phase(PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!(wrap_phase(0.0).abs() < 1e-15);
    }

    #[test]
    fn classical_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..10 {
            let ch = random::classical_channel(3, &mut rng);
            let rho = DensityMatrix::new(ComplexMatrix::diag(&[0.5, 0.3, 0.2])).unwrap();
            let ctx = ProcessContext::new(ch, rho).unwrap();
            let fwd = forward_distribution(&ctx).unwrap();
            for atom in fwd.atoms() {
                assert!(atom.q.im.abs() < 1e-12);
                assert!(atom.q.re > -1e-12);
            }
            let rev = reverse_distribution(&ctx, 0.0).unwrap();
            assert!(crooks_check(&fwd, &rev, 0.0).unwrap().passes(1e-9));
        }
    }

    #[test]
    fn random_contexts_obey_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in [2, 3] {
            for _ in 0..5 {
                let ctx = random_context(d, &mut rng);
                let records = transition_amplitudes(&ctx).unwrap();
                let (a, b) = marginal_identity_residuals(&ctx, &records).unwrap();
                assert!(a < 1e-10 && b < 1e-10);
                let fwd = QuasiProbDistribution::from_records(&records, Direction::Forward, ctx.tolerances());
                assert!((fwd.total() - 1.0).norm() < 1e-9);
                let avg = average_entropy_production(&fwd);
                assert!(avg.re >= -1e-10 && avg.im.abs() < 1e-10);
                for theta in [0.0, 0.37] {
                    let rev = reverse_distribution(&ctx, theta).unwrap();
                    let report = crooks_check(&fwd, &rev, theta).unwrap();
                    assert!(report.passes(1e-8), "{}", report.max_residual());
                    assert!((integral_ft(&fwd, theta) - 1.0).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn covariant_channels_have_real_atoms() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..5 {
            let ch = random::covariant_qubit_channel(&mut rng);
            let rho = random::density_matrix(2, &mut rng);
            let ctx = ProcessContext::new(ch, rho).unwrap();
            let fwd = forward_distribution(&ctx).unwrap();
            for atom in fwd.support() {
                assert!(atom.omega.im.abs() < 1e-10 && atom.q.im.abs() < 1e-12, "{atom:?}");
            }
        }
    }
}
