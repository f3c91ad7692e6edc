//! Dense complex matrices and Hermitian spectral routines for small dimensions.
//!
//! Everything here is sized for d ≤ 8 operators and d² ≤ 64 superoperators, so the routines are
//! plain O(d³) loops over a row-major buffer. Hermitian eigenproblems are solved in closed form
//! for d = 2 and by cyclic Jacobi rotations otherwise; only the general (non-Hermitian)
//! eigenvalue problem needed for superoperator fixed points goes through `nalgebra`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                op: "from_vec",
                left: dim * dim,
                right: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    /// Builds a matrix from rows; all rows must have the same length as the number of rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    op: "from_rows",
                    left: dim,
                    right: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::from_vec(dim, entries)
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::from_vec(dim, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    pub fn diag_complex(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// `|ket⟩⟨bra|`
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        assert_eq!(ket.len(), bra.len(), "outer product of mismatched vectors");
        let dim = ket.len();
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = ket[r] * bra[c].conj();
            }
        }
        m
    }

    /// `|v⟩⟨v|`
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    /// Matrix unit `|i⟩⟨j|`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(i, j)] = ONE;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                m[(c, r)] = self[(r, c)];
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        self.check_dim("mul", rhs)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.entries[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.entries[r * n + c] += a * rhs.entries[k * n + c];
                }
            }
        }
        Ok(out)
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self> {
        self.check_dim("add", rhs)?;
        Ok(self.zip_with(rhs, |a, b| a + b))
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self> {
        self.check_dim("sub", rhs)?;
        Ok(self.zip_with(rhs, |a, b| a - b))
    }

    /// Kronecker product `self ⊗ rhs`; dimensions need not agree.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        let mut out = Self::zeros(n * m);
        for r1 in 0..n {
            for c1 in 0..n {
                let a = self[(r1, c1)];
                if a == ZERO {
                    continue;
                }
                for r2 in 0..m {
                    for c2 in 0..m {
                        out[(r1 * m + r2, c1 * m + c2)] = a * rhs[(r2, c2)];
                    }
                }
            }
        }
        out
    }

    /// `A B A†`
    pub fn sandwich(&self, inner: &Self) -> Self {
        &(self * inner) * &self.adjoint()
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "matrix-vector dimension mismatch");
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    /// Largest absolute entry difference; infinite when the dimensions differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max entry of |A - A†|.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `(A + A†) / 2`
    pub fn hermitian_part(&self) -> Self {
        let mut m = self.zip_with(&self.adjoint(), |a, b| (a + b) * 0.5);
        for i in 0..self.dim {
            m[(i, i)].im = 0.0;
        }
        m
    }

    /// Row-major flattening; the superoperator convention in `channels` is built around it.
    pub fn vectorize(&self) -> Vec<C64> {
        self.entries.clone()
    }

    pub fn from_vectorized(dim: usize, v: &[C64]) -> Result<Self> {
        Self::from_vec(dim, v.to_vec())
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn check_dim(&self, op: &'static str, rhs: &Self) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                op,
                left: self.dim,
                right: rhs.dim,
            });
        }
        Ok(())
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.entries[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.entries[r * self.dim + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_mul(rhs).expect("matrix product")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_add(rhs).expect("matrix sum")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_sub(rhs).expect("matrix difference")
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale(-ONE)
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: C64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for r in 0..self.dim {
            write!(f, "  ")?;
            for c in 0..self.dim {
                let z = self[(r, c)];
                write!(f, "{:>+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Eigen-decomposition of a Hermitian matrix with rank-1 projectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors, gauge-fixed so the largest-magnitude component is real and non-negative.
    pub eigenvectors: Vec<Vec<C64>>,
    pub eigenprojectors: Vec<ComplexMatrix>,
    /// Some adjacent eigenvalue gap is below the degeneracy threshold.
    pub degenerate: bool,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    /// `Σ f(λ) P`
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim());
        for (&lambda, p) in self.eigenvalues.iter().zip(&self.eigenprojectors) {
            out = &out + &p.scale(f(lambda));
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_fn(|l| C64::new(l, 0.0))
    }
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// The input is symmetrized before solving, so entries may carry Hermiticity noise up to
/// `hermiticity_tol`.
pub fn hermitian_eig(a: &ComplexMatrix, hermiticity_tol: f64) -> Result<SpectralDecomposition> {
    let deviation = a.hermiticity_deviation();
    if deviation > hermiticity_tol {
        return Err(Error::NotHermitian { deviation });
    }
    let h = a.hermitian_part();
    let (values, vectors) = match h.dim() {
        1 => (vec![h[(0, 0)].re], vec![vec![ONE]]),
        2 => eig_2x2(&h),
        _ => eig_jacobi(&h),
    };

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| values[y].total_cmp(&values[x]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let eigenvectors: Vec<Vec<C64>> = order.iter().map(|&k| fix_gauge(vectors[k].clone())).collect();
    let eigenprojectors = eigenvectors.iter().map(|v| ComplexMatrix::projector(v)).collect();
    let degenerate = eigenvalues
        .windows(2)
        .any(|w| (w[0] - w[1]).abs() < Tolerances::DEFAULT.degeneracy_gap);

    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        eigenprojectors,
        degenerate,
    })
}

/// Closed-form solution for a 2×2 Hermitian matrix `[[a, b], [b*, d]]`.
fn eig_2x2(h: &ComplexMatrix) -> (Vec<f64>, Vec<Vec<C64>>) {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let radius = half.hypot(b.norm());
    if radius == 0.0 {
        return (vec![a, d], vec![vec![ONE, ZERO], vec![ZERO, ONE]]);
    }
    // Pick the candidate that avoids cancellation in λ₊ - a or λ₊ - d.
    let upper = if half >= 0.0 {
        vec![C64::new(half + radius, 0.0), b.conj()]
    } else {
        vec![b, C64::new(radius - half, 0.0)]
    };
    let norm = (upper[0].norm_sqr() + upper[1].norm_sqr()).sqrt();
    let upper: Vec<C64> = upper.into_iter().map(|z| z / norm).collect();
    let lower = vec![-upper[1].conj(), upper[0].conj()];
    (vec![mean + radius, mean - radius], vec![upper, lower])
}

/// Cyclic Jacobi sweeps. Each rotation first removes the phase of the pivot, then applies the
/// real symmetric Jacobi rotation.
fn eig_jacobi(h: &ComplexMatrix) -> (Vec<f64>, Vec<Vec<C64>>) {
    let n = h.dim();
    let mut m = h.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let g = apq.norm();
                if g <= 1e-300 {
                    continue;
                }
                let phase = apq / g;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J acts on the (p, q) plane: [[c, s], [-s e^{-iφ}, c e^{-iφ}]].
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;

                for r in 0..n {
                    let mp = m[(r, p)];
                    let mq = m[(r, q)];
                    m[(r, p)] = mp * jpp + mq * jqp;
                    m[(r, q)] = mp * jpq + mq * jqq;
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = vp * jpp + vq * jqp;
                    v[(r, q)] = vp * jpq + vq * jqq;
                }
                for col in 0..n {
                    let mp = m[(p, col)];
                    let mq = m[(q, col)];
                    m[(p, col)] = jpp.conj() * mp + jqp.conj() * mq;
                    m[(q, col)] = jpq.conj() * mp + jqq.conj() * mq;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)].im = 0.0;
                m[(q, q)].im = 0.0;
            }
        }
    }

    let values = (0..n).map(|k| m[(k, k)].re).collect();
    let vectors = (0..n).map(|k| (0..n).map(|r| v[(r, k)]).collect()).collect();
    (values, vectors)
}

/// Rotates the phase so the largest-magnitude component (lowest index on ties) is real and
/// non-negative.
fn fix_gauge(mut v: Vec<C64>) -> Vec<C64> {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return v;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .expect("non-empty vector");
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in &mut v {
        *z *= phase;
    }
    v[pivot] = C64::new(v[pivot].re, 0.0);
    v
}

/// `A^z = Σ λ^z P` on the principal branch; `A` must be Hermitian positive definite.
pub fn matrix_power_hermitian(a: &ComplexMatrix, exponent: C64) -> Result<ComplexMatrix> {
    let spectral = hermitian_eig(a, Tolerances::DEFAULT.hermiticity)?;
    power_of_spectral(&spectral, exponent)
}

pub(crate) fn power_of_spectral(spectral: &SpectralDecomposition, exponent: C64) -> Result<ComplexMatrix> {
    let min = spectral.min_eigenvalue();
    if min <= Tolerances::DEFAULT.positive_definite {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok(spectral.apply_fn(|lambda| (exponent * lambda.ln()).exp()))
}

/// Natural logarithm of a Hermitian positive definite matrix.
pub fn log_hermitian(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let spectral = hermitian_eig(a, Tolerances::DEFAULT.hermiticity)?;
    let min = spectral.min_eigenvalue();
    if min <= Tolerances::DEFAULT.positive_definite {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok(spectral.apply_fn(|lambda| C64::new(lambda.ln(), 0.0)))
}

/// Eigenvalues of a general square matrix from its complex Schur form.
pub fn general_eigenvalues(a: &ComplexMatrix) -> Result<Vec<C64>> {
    let schur = nalgebra::Schur::try_new(a.to_nalgebra(), 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    for r in 1..a.dim() {
        if t[(r, r - 1)].norm() > 1e-12 * a.frobenius_norm().max(1.0) {
            return Err(Error::Numerical("Schur form is not triangular".into()));
        }
    }
    Ok((0..a.dim()).map(|k| t[(k, k)]).collect())
}

/// Unit vector `x` minimizing `|A x|`, with the corresponding smallest singular value.
pub fn null_vector(a: &ComplexMatrix) -> Result<(Vec<C64>, f64)> {
    let svd = nalgebra::SVD::try_new(a.to_nalgebra(), false, true, 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD returned no right singular vectors".into()))?;
    let (k, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .ok_or_else(|| Error::Numerical("empty matrix".into()))?;
    let v = (0..a.dim()).map(|c| v_t[(k, c)].conj()).collect();
    Ok((v, sigma))
}
