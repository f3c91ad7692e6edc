//! Numerical thresholds used across the crate.
//!
//! Every comparison against a fixed threshold reads from [`Tolerances`]; functions that take no
//! explicit record use [`Tolerances::DEFAULT`].

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Per-entry absolute tolerance for matrix equality.
    pub entry: f64,
    /// Maximum |A - A†| entry accepted as Hermitian.
    pub hermiticity: f64,
    /// Eigenvalue gaps below this flag a degenerate spectrum.
    pub degeneracy_gap: f64,
    /// Eigenvalues at or below this count as zero for powers and logarithms.
    pub positive_definite: f64,
    /// Max deviation of Σ K†K from the identity.
    pub completeness: f64,
    /// Distance of a superoperator eigenvalue from 1 to count as a fixed point.
    pub fixed_point: f64,
    /// Max entry deviation of N(γ) from γ.
    pub stationarity: f64,
    /// Most negative eigenvalue tolerated in a computed stationary state.
    pub stationary_negativity: f64,
    /// Trace deviation accepted for density matrices.
    pub state_trace: f64,
    /// Most negative eigenvalue tolerated in a density matrix.
    pub state_negativity: f64,
    /// Transition amplitudes below this magnitude are treated as forbidden.
    pub amplitude: f64,
    /// Log-ratio mismatch that makes an allowed transition break covariance.
    pub log_gap: f64,
    /// Max superoperator entry difference for two channels to be equal.
    pub channel_equality: f64,
    /// Max-norm distance at which two entropy-production values share an atom.
    pub cluster: f64,
    /// Atoms with |q| below this are negligible.
    pub negligible: f64,
    /// Imaginary mass tolerated in a real marginal.
    pub marginal_imag: f64,
    /// Max deviation of Σ M†M from the identity for measurement sets.
    pub measurement_completeness: f64,
    /// Mass leakage tolerated in exact TPM reconstruction.
    pub leakage: f64,
    /// Negative exact probabilities above -clamp are clamped to zero before sampling.
    pub probability_clamp: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        entry: 1e-10,
        hermiticity: 1e-9,
        degeneracy_gap: 1e-8,
        positive_definite: 1e-12,
        completeness: 1e-9,
        fixed_point: 1e-9,
        stationarity: 1e-8,
        stationary_negativity: 1e-8,
        state_trace: 1e-9,
        state_negativity: 1e-10,
        amplitude: 1e-10,
        log_gap: 1e-9,
        channel_equality: 1e-9,
        cluster: 1e-9,
        negligible: 1e-12,
        marginal_imag: 1e-9,
        measurement_completeness: 1e-10,
        leakage: 1e-8,
        probability_clamp: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
