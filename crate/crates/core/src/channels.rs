//! Kraus-represented CPTP channels, their stationary states and covariance classification.

use std::fmt;

use crate::error::{Error, Result};
use crate::matcore::{general_eigenvalues, hermitian_eig, null_vector, ComplexMatrix, SpectralDecomposition, C64, ONE};
use crate::state::DensityMatrix;
use crate::tolerance::Tolerances;

/// A channel `ρ ↦ Σ K ρ K†` with `Σ K†K = 1`.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
    label: String,
}

impl KrausChannel {
    pub fn new(label: impl Into<String>, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyChannel)?;
        let dim = first.dim();
        if let Some(bad) = kraus.iter().find(|k| k.dim() != dim) {
            return Err(Error::DimensionMismatch {
                op: "kraus",
                left: dim,
                right: bad.dim(),
            });
        }
        let channel = Self {
            dim,
            kraus,
            label: label.into(),
        };
        let deviation = channel.completeness_deviation();
        if deviation > Tolerances::DEFAULT.completeness {
            return Err(Error::IncompleteKraus { deviation });
        }
        Ok(channel)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            kraus: vec![ComplexMatrix::identity(dim)],
            label: "identity".into(),
        }
    }

    pub fn unitary(label: impl Into<String>, u: ComplexMatrix) -> Result<Self> {
        Self::new(label, vec![u])
    }

    /// Classical stochastic map in the computational basis: `|i⟩ → |k⟩` with probability
    /// `transition[k][i]`, destroying all coherences.
    pub fn classical(label: impl Into<String>, transition: &[Vec<f64>]) -> Result<Self> {
        let dim = transition.len();
        let mut kraus = Vec::new();
        for (k, row) in transition.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    op: "classical",
                    left: dim,
                    right: row.len(),
                });
            }
            for (i, &prob) in row.iter().enumerate() {
                if prob < 0.0 {
                    return Err(Error::ParameterOutOfRange {
                        name: "transition",
                        value: prob,
                    });
                }
                if prob > 0.0 {
                    kraus.push(ComplexMatrix::unit(dim, k, i).scale(C64::new(prob.sqrt(), 0.0)));
                }
            }
        }
        Self::new(label, kraus)
    }

    /// Convex combination `Σ w 𝒩_w`.
    pub fn mixture(label: impl Into<String>, parts: &[(f64, &KrausChannel)]) -> Result<Self> {
        let mut kraus = Vec::new();
        for &(weight, channel) in parts {
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::ParameterOutOfRange {
                    name: "weight",
                    value: weight,
                });
            }
            if weight == 0.0 {
                continue;
            }
            let factor = C64::new(weight.sqrt(), 0.0);
            kraus.extend(channel.kraus.iter().map(|k| k.scale(factor)));
        }
        Self::new(label, kraus)
    }

    /// `after ∘ self`
    pub fn then(&self, after: &KrausChannel) -> Result<Self> {
        if self.dim != after.dim {
            return Err(Error::DimensionMismatch {
                op: "then",
                left: self.dim,
                right: after.dim,
            });
        }
        let kraus = after
            .kraus
            .iter()
            .flat_map(|b| self.kraus.iter().map(move |a| b * a))
            .collect();
        Self::new(format!("{} then {}", self.label, after.label), kraus)
    }

    /// Kraus set `{U K U†}`, i.e. the channel `ρ ↦ U 𝒩(U† ρ U) U†`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Self {
        let u_dag = u.adjoint();
        Self {
            dim: self.dim,
            kraus: self.kraus.iter().map(|k| &(u * k) * &u_dag).collect(),
            label: format!("{} (conjugated)", self.label),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Max entry deviation of `Σ K†K` from the identity.
    pub fn completeness_deviation(&self) -> f64 {
        let sum = self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim), |acc, k| &acc + &(&k.adjoint() * k));
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim))
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                op: "apply",
                left: self.dim,
                right: rho.dim(),
            });
        }
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim), |acc, k| &acc + &k.sandwich(rho)))
    }

    /// `Σ K ⊗ conj(K)`, acting on row-major vectorized operators (see
    /// [`ComplexMatrix::vectorize`]).
    pub fn superoperator(&self) -> ComplexMatrix {
        self.kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim * self.dim), |acc, k| {
                &acc + &k.kron(&k.conj())
            })
    }
}

impl fmt::Display for KrausChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (d = {}, {} Kraus operators)",
            self.label,
            self.dim,
            self.kraus.len()
        )
    }
}

/// Max-abs entry difference between the two superoperators.
pub fn superoperator_distance(a: &KrausChannel, b: &KrausChannel) -> f64 {
    a.superoperator().max_abs_diff(&b.superoperator())
}

/// Channel equality up to Kraus-representation freedom.
pub fn channels_equal(a: &KrausChannel, b: &KrausChannel) -> bool {
    superoperator_distance(a, b) <= Tolerances::DEFAULT.channel_equality
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ParameterOutOfRange { name, value });
    }
    Ok(())
}

/// The incovariant qubit channel `p ρ + (1-p)[(1-s) ℛ(ρ) + s 𝒟(ρ)]`.
///
/// ℛ mixes the ±π/2 rotations about the y axis and 𝒟 resets to |0⟩. Matrices are written in the
/// (|0⟩, |1⟩) order, so the damping pair is `|0⟩⟨1|` and `|0⟩⟨0|`.
pub fn build_incovariant(p: f64, s: f64) -> Result<KrausChannel> {
    check_unit_interval("p", p)?;
    check_unit_interval("s", s)?;
    let rot = (1.0 - p).sqrt() * (1.0 - s).sqrt() / 2.0;
    let damp = (1.0 - p).sqrt() * s.sqrt();
    let kraus = vec![
        ComplexMatrix::identity(2).scale(C64::new(p.sqrt(), 0.0)),
        ComplexMatrix::from_real(2, &[rot, rot, -rot, rot])?,
        ComplexMatrix::from_real(2, &[rot, -rot, rot, rot])?,
        ComplexMatrix::from_real(2, &[0.0, damp, 0.0, 0.0])?,
        ComplexMatrix::from_real(2, &[damp, 0.0, 0.0, 0.0])?,
    ];
    KrausChannel::new(format!("incovariant(p={p}, s={s})"), kraus)
}

/// The covariant qubit channel `p ρ + (1-p) γ` with `γ = diag((1+s)/2, (1-s)/2)`.
pub fn build_covariant(p: f64, s: f64) -> Result<KrausChannel> {
    check_unit_interval("p", p)?;
    check_unit_interval("s", s)?;
    let low = ((1.0 - p) * (1.0 - s) / 2.0).sqrt();
    let high = ((1.0 - p) * (1.0 + s) / 2.0).sqrt();
    let kraus = vec![
        ComplexMatrix::identity(2).scale(C64::new(p.sqrt(), 0.0)),
        ComplexMatrix::from_real(2, &[0.0, 0.0, 0.0, low])?,
        ComplexMatrix::from_real(2, &[0.0, high, 0.0, 0.0])?,
        ComplexMatrix::from_real(2, &[0.0, 0.0, low, 0.0])?,
        ComplexMatrix::from_real(2, &[high, 0.0, 0.0, 0.0])?,
    ];
    KrausChannel::new(format!("covariant(p={p}, s={s})"), kraus)
}

/// Fixed point `γ = Σ r_i Π_i` of a channel.
#[derive(Debug, Clone)]
pub struct StationaryState {
    state: DensityMatrix,
    full_rank: bool,
}

impl StationaryState {
    /// Wraps a given density matrix without checking it against any channel.
    pub fn from_density(state: DensityMatrix) -> Self {
        let full_rank = state.is_full_rank(Tolerances::DEFAULT.positive_definite);
        Self { state, full_rank }
    }

    pub fn gamma(&self) -> &ComplexMatrix {
        self.state.matrix()
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        self.state.spectral()
    }

    /// `r_i`, descending.
    pub fn populations(&self) -> &[f64] {
        self.state.eigenvalues()
    }

    /// `Π_i`
    pub fn projectors(&self) -> &[ComplexMatrix] {
        self.state.projectors()
    }

    /// Eigenbasis kets `|i⟩`.
    pub fn basis(&self) -> &[Vec<C64>] {
        &self.state.spectral().eigenvectors
    }

    pub fn is_full_rank(&self) -> bool {
        self.full_rank
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub fn require_full_rank(&self) -> Result<()> {
        if !self.full_rank {
            return Err(Error::NonFullRankStationary {
                min_eigenvalue: self.state.min_eigenvalue(),
            });
        }
        Ok(())
    }
}

pub fn stationary_state(ch: &KrausChannel) -> Result<StationaryState> {
    stationary_state_with(ch, &Tolerances::DEFAULT)
}

/// Fixed point from the superoperator eigenvector at eigenvalue 1.
pub fn stationary_state_with(ch: &KrausChannel, tol: &Tolerances) -> Result<StationaryState> {
    let sup = ch.superoperator();
    let eigenvalues = general_eigenvalues(&sup)?;
    let distances: Vec<f64> = eigenvalues.iter().map(|l| (l - ONE).norm()).collect();
    let closest = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let multiplicity = distances.iter().filter(|&&d| d < tol.fixed_point).count();
    match multiplicity {
        0 => return Err(Error::NoFixedPoint { distance: closest }),
        1 => {}
        _ => return Err(Error::NonUniqueFixedPoint { multiplicity }),
    }

    let shifted = &sup - &ComplexMatrix::identity(sup.dim());
    let (vector, _) = null_vector(&shifted)?;
    let raw = ComplexMatrix::from_vectorized(ch.dim(), &vector)?;
    let trace = raw.trace();
    if trace.norm() < 1e-12 {
        return Err(Error::Numerical("fixed point has vanishing trace".into()));
    }
    // Divide by the trace first so the arbitrary global phase of the eigenvector is removed
    // before symmetrizing.
    let gamma = raw.scale(trace.inv()).hermitian_part();
    let gamma = gamma.scale(C64::new(1.0 / gamma.trace().re, 0.0));

    let spectral = hermitian_eig(&gamma, tol.hermiticity)?;
    let min = spectral.min_eigenvalue();
    if min < -tol.stationary_negativity {
        return Err(Error::NotPositive { min_eigenvalue: min });
    }
    let full_rank = min > tol.positive_definite;
    Ok(StationaryState {
        state: DensityMatrix::from_parts(gamma, spectral),
        full_rank,
    })
}

/// Covariance class of a channel with respect to the group generated by `ln γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelClass {
    /// No coherence is created, consumed or transferred in the γ eigenbasis.
    Classical,
    Covariant,
    /// `witness` is the first `(i, j, k, l)` with a nonzero `⟨k|𝒩(|i⟩⟨j|)|l⟩` that breaks
    /// `ln r_i - ln r_j = ln r_k - ln r_l`.
    Incovariant {
        witness: (usize, usize, usize, usize),
    },
}

impl ChannelClass {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelClass::Classical => "classical",
            ChannelClass::Covariant => "covariant",
            ChannelClass::Incovariant { .. } => "incovariant",
        }
    }
}

/// Index tuple `(i, j, k, l)`.
pub type Quad = (usize, usize, usize, usize);

/// `T_{ij→kl} = ⟨k|𝒩(|i⟩⟨j|)|l⟩` in the eigenbasis of γ, in lexicographic `(i, j, k, l)` order.
pub fn basis_transition_amplitudes(ch: &KrausChannel, gamma: &StationaryState) -> Result<Vec<(Quad, C64)>> {
    let d = ch.dim();
    if gamma.dim() != d {
        return Err(Error::DimensionMismatch {
            op: "basis_transition_amplitudes",
            left: d,
            right: gamma.dim(),
        });
    }
    let basis = gamma.basis();
    let mut out = Vec::with_capacity(d.pow(4));
    for i in 0..d {
        for j in 0..d {
            let image = ch.apply(&ComplexMatrix::outer(&basis[i], &basis[j]))?;
            for k in 0..d {
                for l in 0..d {
                    let column = image.mul_vec(&basis[l]);
                    let amp = basis[k].iter().zip(&column).map(|(bk, c)| bk.conj() * c).sum();
                    out.push(((i, j, k, l), amp));
                }
            }
        }
    }
    Ok(out)
}

pub fn check_covariance(ch: &KrausChannel, gamma: &StationaryState) -> Result<ChannelClass> {
    check_covariance_with(ch, gamma, &Tolerances::DEFAULT)
}

pub fn check_covariance_with(ch: &KrausChannel, gamma: &StationaryState, tol: &Tolerances) -> Result<ChannelClass> {
    gamma.require_full_rank()?;
    let ln_r: Vec<f64> = gamma.populations().iter().map(|r| r.ln()).collect();
    let amplitudes = basis_transition_amplitudes(ch, gamma)?;

    let mut classical = true;
    for &((i, j, k, l), amp) in &amplitudes {
        if amp.norm() <= tol.amplitude {
            continue;
        }
        if (ln_r[i] - ln_r[j] - ln_r[k] + ln_r[l]).abs() > tol.log_gap {
            return Ok(ChannelClass::Incovariant { witness: (i, j, k, l) });
        }
        if i != j || k != l {
            classical = false;
        }
    }
    Ok(if classical {
        ChannelClass::Classical
    } else {
        ChannelClass::Covariant
    })
}
