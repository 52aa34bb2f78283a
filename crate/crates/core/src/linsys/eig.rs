use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::poly::C64;

const MAX_SCHUR_ITERS: usize = 10_000;

/// Eigenvalues of a real square matrix.
///
/// The unshifted-deflation Schur iteration can stall on highly structured
/// matrices (nilpotent blocks, Hamiltonians of integrator chains). When it
/// does, the matrix is conjugated by a seeded random orthogonal matrix, which
/// leaves the spectrum unchanged but breaks the structure, and Schur is retried.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<C64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    if let Some(s) = m.clone().try_schur(f64::EPSILON, MAX_SCHUR_ITERS) {
        return s.complex_eigenvalues().iter().copied().collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..16 {
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = g.qr().q();
        let conj = q.transpose() * m * &q;
        if let Some(s) = conj.try_schur(f64::EPSILON, MAX_SCHUR_ITERS) {
            return s.complex_eigenvalues().iter().copied().collect();
        }
    }
    panic!("eigenvalue iteration failed to converge on a {n}x{n} matrix");
}
