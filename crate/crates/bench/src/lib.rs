//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ukb_core::corner::HereditaryContext;
use ukb_core::{catalog, linalg, ComplexMatrix, FdCStarAlgebra, ToleranceConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `M_2 ⊕ M_3 ⊕ (M_2 ⊗ I_2)` conjugated by a random unitary of `C^10`.
pub fn mixed_algebra() -> Arc<FdCStarAlgebra> {
    catalog::random_algebra(&mut rng(1), &[(2, 1), (3, 1), (2, 2)], 1, &ToleranceConfig::default())
        .expect("fixed block shape is valid")
}

/// Rank-deficient `n x n` matrix of rank `n / 2`.
pub fn half_rank(n: usize) -> ComplexMatrix {
    let mut r = rng(n as u64);
    let k = (n / 2).max(1);
    linalg::random_matrix(&mut r, n, k) * linalg::random_matrix(&mut r, k, n)
}

/// A random corner of [`mixed_algebra`].
pub fn mixed_context() -> HereditaryContext {
    let a = mixed_algebra();
    let p = catalog::random_projection(&mut rng(2), &a);
    HereditaryContext::new(&a, &p).expect("random projections give nonzero corners")
}
