//! Random unitaries, states and channels for property tests and examples.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::KrausChannel;
use crate::matcore::{ComplexMatrix, C64, ZERO};
use crate::state::DensityMatrix;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Orthonormal columns from Gram-Schmidt on `cols` Gaussian vectors of length `rows`.
fn isometry_columns<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v: Vec<C64> = (0..rows).map(|_| gaussian(rng)).collect();
        for b in &basis {
            let overlap: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= overlap * bi;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    basis
}

/// Haar-distributed unitary.
pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let cols = isometry_columns(dim, dim, rng);
    let mut u = ComplexMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            u[(i, j)] = z;
        }
    }
    u
}

/// Ginibre state mixed with 5% of the maximally mixed state, so it is always full rank.
pub fn density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = ComplexMatrix::from_vec(dim, (0..dim * dim).map(|_| gaussian(rng)).collect()).expect("square");
    let w = &g * &g.adjoint();
    let w = w.scale(C64::new(0.95 / w.trace().re, 0.0));
    let rho = &w + &ComplexMatrix::identity(dim).scale(C64::new(0.05 / dim as f64, 0.0));
    DensityMatrix::new(rho).expect("random state is valid")
}

/// Channel from a random isometry `C^d → C^{n d}`, cut into `n` Kraus blocks.
pub fn channel<R: Rng + ?Sized>(dim: usize, n_kraus: usize, rng: &mut R) -> KrausChannel {
    let cols = isometry_columns(dim * n_kraus, dim, rng);
    let kraus = (0..n_kraus)
        .map(|a| {
            let mut k = ComplexMatrix::zeros(dim);
            for (j, col) in cols.iter().enumerate() {
                for i in 0..dim {
                    k[(i, j)] = col[a * dim + i];
                }
            }
            k
        })
        .collect();
    KrausChannel::new("random", kraus).expect("isometry gives a complete Kraus set")
}

/// Generalized amplitude damping followed by dephasing, in a random basis.
///
/// Covariant with respect to its own (rotated) stationary state.
pub fn covariant_qubit_channel<R: Rng + ?Sized>(rng: &mut R) -> KrausChannel {
    let g: f64 = rng.random_range(0.1..0.9);
    let q: f64 = rng.random_range(0.1..0.9);
    let z: f64 = rng.random_range(0.0..0.5);
    let r = |x: f64| C64::new(x.sqrt(), 0.0);
    let m = |a: C64, b: C64, c: C64, d: C64| ComplexMatrix::from_vec(2, vec![a, b, c, d]).unwrap();
    let gad = KrausChannel::new(
        "gad",
        vec![
            m(r(q), ZERO, ZERO, r(q * (1.0 - g))),
            m(ZERO, r(q * g), ZERO, ZERO),
            m(r((1.0 - q) * (1.0 - g)), ZERO, ZERO, r(1.0 - q)),
            m(ZERO, ZERO, r((1.0 - q) * g), ZERO),
        ],
    )
    .expect("complete");
    let dephase = KrausChannel::new(
        "dephase",
        vec![
            ComplexMatrix::identity(2).scale(r(1.0 - z)),
            ComplexMatrix::diag(&[1.0, -1.0]).scale(r(z)),
        ],
    )
    .expect("complete");
    let u = unitary(2, rng);
    gad.then(&dephase)
        .expect("same dimension")
        .conjugated(&u)
        .with_label("random covariant")
}

/// Classical stochastic map with strictly positive transition probabilities.
pub fn classical_channel<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> KrausChannel {
    let columns: Vec<Vec<f64>> = (0..dim)
        .map(|_| {
            let column: Vec<f64> = (0..dim).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = column.iter().sum();
            column.into_iter().map(|x| x / total).collect()
        })
        .collect();
    let transition: Vec<Vec<f64>> = (0..dim).map(|k| columns.iter().map(|c| c[k]).collect()).collect();
    KrausChannel::classical("random classical", &transition).expect("stochastic")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for d in 1..6 {
            let u = unitary(d, &mut rng);
            assert!((&u.adjoint() * &u).approx_eq(&ComplexMatrix::identity(d), 1e-12));
        }
    }

    #[test]
    fn states_are_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 2..5 {
            let rho = density_matrix(d, &mut rng);
            assert!(rho.min_eigenvalue() >= 0.05 / d as f64 - 1e-12);
        }
    }
}
