use thiserror::Error;

/// Errors raised by the numerical pipeline.
///
/// Each variant carries the offending measurement so callers can report how far a
/// precondition was missed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    DimensionMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace is {trace:.12}, expected 1")]
    NotNormalized { trace: f64 },

    #[error("channel has no Kraus operators")]
    EmptyChannel,

    #[error("Kraus operators are not complete (max deviation from identity {deviation:.3e})")]
    IncompleteKraus { deviation: f64 },

    #[error("parameter `{name}` = {value} is outside [0, 1]")]
    ParameterOutOfRange { name: &'static str, value: f64 },

    #[error("no superoperator eigenvalue within tolerance of 1 (closest at distance {distance:.3e})")]
    NoFixedPoint { distance: f64 },

    #[error("fixed point is not unique ({multiplicity} eigenvalues at 1)")]
    NonUniqueFixedPoint { multiplicity: usize },

    #[error("stationary state is not full rank (min eigenvalue {min_eigenvalue:.3e})")]
    NonFullRankStationary { min_eigenvalue: f64 },

    #[error("supplied state is not stationary under the channel (deviation {deviation:.3e})")]
    NotStationary { deviation: f64 },

    #[error("state is rank deficient (min eigenvalue {min_eigenvalue:.3e}); entropy production needs ln p")]
    RankDeficientState { min_eigenvalue: f64 },

    #[error("no reverse atom at -conj(omega) for forward atom at {omega_re} + {omega_im}i")]
    UnmatchedAtom { omega_re: f64, omega_im: f64 },

    #[error("real marginal at omega_R = {omega_re} has imaginary mass {imag:.3e}")]
    NonRealMarginal { omega_re: f64, imag: f64 },

    #[error("measurement operators are not complete (deviation {deviation:.3e})")]
    CompletenessViolation { deviation: f64 },

    #[error("joint distribution is inconsistent with the context (mass leakage {leakage:.3e})")]
    InconsistentContext { leakage: f64 },

    #[error("two-point measurement protocol is defined for qubits only, got dimension {dim}")]
    UnsupportedDimension { dim: usize },

    #[error("shot count must be at least 1")]
    InvalidShots,

    #[error("numerical routine failed: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
