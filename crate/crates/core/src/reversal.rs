//! Petz time reversal and its rotated family `𝒩̃^θ`.

use crate::channels::{basis_transition_amplitudes, superoperator_distance, KrausChannel, StationaryState};
use crate::error::{Error, Result};
use crate::matcore::{power_of_spectral, ComplexMatrix, C64};
use crate::tolerance::Tolerances;

/// `U_γ(θ) = γ^{-iθ}`
pub fn gamma_rotation(gamma: &StationaryState, theta: f64) -> Result<ComplexMatrix> {
    gamma.require_full_rank()?;
    power_of_spectral(gamma.spectral(), C64::new(0.0, -theta))
}

fn require_stationary(ch: &KrausChannel, gamma: &StationaryState, tol: &Tolerances) -> Result<()> {
    gamma.require_full_rank()?;
    let deviation = ch.apply(gamma.gamma())?.max_abs_diff(gamma.gamma());
    if deviation > tol.stationarity {
        return Err(Error::NotStationary { deviation });
    }
    Ok(())
}

/// Kraus operators `γ^{1/2} K† γ^{-1/2}`, positionally matched with the forward set.
pub fn petz_reverse(ch: &KrausChannel, gamma: &StationaryState) -> Result<KrausChannel> {
    rotated_reverse(ch, gamma, 0.0)
}

/// Kraus operators `γ^{1/2+iθ} K† γ^{-1/2-iθ}`.
pub fn rotated_reverse(ch: &KrausChannel, gamma: &StationaryState, theta: f64) -> Result<KrausChannel> {
    rotated_reverse_with(ch, gamma, theta, &Tolerances::DEFAULT)
}

pub fn rotated_reverse_with(
    ch: &KrausChannel,
    gamma: &StationaryState,
    theta: f64,
    tol: &Tolerances,
) -> Result<KrausChannel> {
    require_stationary(ch, gamma, tol)?;
    let left = power_of_spectral(gamma.spectral(), C64::new(0.5, theta))?;
    let right = power_of_spectral(gamma.spectral(), C64::new(-0.5, -theta))?;
    let kraus = ch.kraus().iter().map(|k| &(&left * &k.adjoint()) * &right).collect();
    let reverse = KrausChannel::new(format!("reverse[θ={theta}] of {}", ch.label()), kraus)?;
    let deviation = reverse.apply(gamma.gamma())?.max_abs_diff(gamma.gamma());
    if deviation > tol.fixed_point {
        return Err(Error::NotStationary { deviation });
    }
    Ok(reverse)
}

/// The same member built as `U_γ(θ)† 𝒩̃(U_γ(θ) · U_γ(θ)†) U_γ(θ)`.
pub fn sandwich_reverse(ch: &KrausChannel, gamma: &StationaryState, theta: f64) -> Result<KrausChannel> {
    let petz = petz_reverse(ch, gamma)?;
    let u = gamma_rotation(gamma, theta)?;
    Ok(petz.conjugated(&u.adjoint()))
}

/// The θ-indexed family of reverse channels of one forward process.
#[derive(Debug, Clone)]
pub struct ReversalFamily {
    forward: KrausChannel,
    gamma: StationaryState,
}

impl ReversalFamily {
    pub fn new(forward: KrausChannel, gamma: StationaryState) -> Result<Self> {
        require_stationary(&forward, &gamma, &Tolerances::DEFAULT)?;
        Ok(Self { forward, gamma })
    }

    pub fn forward(&self) -> &KrausChannel {
        &self.forward
    }

    pub fn gamma(&self) -> &StationaryState {
        &self.gamma
    }

    pub fn member(&self, theta: f64) -> Result<KrausChannel> {
        rotated_reverse(&self.forward, &self.gamma, theta)
    }

    /// Superoperator distance between `𝒩̃^θ` and the forward channel.
    pub fn distance_to_forward(&self, theta: f64) -> Result<f64> {
        Ok(superoperator_distance(&self.member(theta)?, &self.forward))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeReversalReport {
    pub symmetric: bool,
    /// Max |√(r_i r_j) T_{ij→kl} − √(r_k r_l) T_{lk→ji}|.
    pub amplitude_deviation: f64,
    /// Superoperator distance between the Petz reverse and the channel.
    pub superoperator_deviation: f64,
}

pub fn check_time_reversal_symmetry(ch: &KrausChannel, gamma: &StationaryState) -> Result<TimeReversalReport> {
    gamma.require_full_rank()?;
    let tol = Tolerances::DEFAULT;
    let d = ch.dim();
    let r = gamma.populations();
    let amps = basis_transition_amplitudes(ch, gamma)?;
    let at = |i: usize, j: usize, k: usize, l: usize| amps[((i * d + j) * d + k) * d + l].1;

    let mut amplitude_deviation: f64 = 0.0;
    for &((i, j, k, l), t) in &amps {
        let lhs = t * (r[i] * r[j]).sqrt();
        let rhs = at(l, k, j, i) * (r[k] * r[l]).sqrt();
        amplitude_deviation = amplitude_deviation.max((lhs - rhs).norm());
    }
    let superoperator_deviation = superoperator_distance(&petz_reverse(ch, gamma)?, ch);
    Ok(TimeReversalReport {
        symmetric: amplitude_deviation <= tol.channel_equality,
        amplitude_deviation,
        superoperator_deviation,
    })
}
