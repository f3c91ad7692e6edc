//! Validated density matrices.

use crate::error::{Error, Result};
use crate::matcore::{hermitian_eig, ComplexMatrix, SpectralDecomposition, C64};
use crate::tolerance::Tolerances;

/// A validated density matrix together with its spectral decomposition.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    spectral: SpectralDecomposition,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let trace = matrix.trace();
        if (trace - C64::new(1.0, 0.0)).norm() > tol.state_trace {
            return Err(Error::NotNormalized { trace: trace.re });
        }
        let spectral = hermitian_eig(&matrix, tol.hermiticity)?;
        let min = spectral.min_eigenvalue();
        if min < -tol.state_negativity {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
            spectral,
        })
    }

    /// `Σ w |ψ⟩⟨ψ|`; kets are normalized, weights must already sum to one.
    pub fn from_ensemble(weights: &[f64], kets: &[Vec<C64>]) -> Result<Self> {
        if weights.len() != kets.len() || kets.is_empty() {
            return Err(Error::DimensionMismatch {
                op: "from_ensemble",
                left: weights.len(),
                right: kets.len(),
            });
        }
        let dim = kets[0].len();
        let mut rho = ComplexMatrix::zeros(dim);
        for (&w, ket) in weights.iter().zip(kets) {
            if ket.len() != dim {
                return Err(Error::DimensionMismatch {
                    op: "from_ensemble",
                    left: dim,
                    right: ket.len(),
                });
            }
            let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let unit: Vec<C64> = ket.iter().map(|z| z / norm).collect();
            rho = &rho + &ComplexMatrix::projector(&unit).scale(C64::new(w, 0.0));
        }
        Self::new(rho)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new(ComplexMatrix::diag(&vec![1.0 / dim as f64; dim])).expect("maximally mixed state")
    }

    pub(crate) fn from_parts(matrix: ComplexMatrix, spectral: SpectralDecomposition) -> Self {
        Self { matrix, spectral }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectral.eigenvalues
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.spectral.eigenprojectors
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectral.min_eigenvalue()
    }

    pub fn is_full_rank(&self, tol: f64) -> bool {
        self.min_eigenvalue() > tol
    }
}
