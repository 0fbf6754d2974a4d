//! Built-in test algebras.

use std::sync::Arc;

use rand::Rng;

use crate::algebra::{generate_algebra, FdCStarAlgebra};
use crate::error::Result;
use crate::linalg::{self, ComplexMatrix, ToleranceConfig, ONE};

pub fn full_matrix(n: usize, tol: &ToleranceConfig) -> Result<Arc<FdCStarAlgebra>> {
    let gens: Vec<_> = (0..n)
        .flat_map(|r| (0..n).map(move |s| linalg::matrix_unit(n, r, s)))
        .collect();
    generate_algebra(n, &gens, tol)
}

/// `⊕_i (M_{n_i} ⊗ I_{m_i})` placed block-diagonally in coordinate order.
pub fn block_sum(blocks: &[(usize, usize)], tol: &ToleranceConfig) -> Result<Arc<FdCStarAlgebra>> {
    let ambient: usize = blocks.iter().map(|(n, m)| n * m).sum();
    let gens = block_generators(blocks, ambient, 0);
    generate_algebra(ambient, &gens, tol)
}

fn block_generators(blocks: &[(usize, usize)], ambient: usize, mut off: usize) -> Vec<ComplexMatrix> {
    let mut gens = Vec::new();
    for &(n, m) in blocks {
        for r in 0..n {
            for s in 0..n {
                let mut g = ComplexMatrix::zeros(ambient, ambient);
                for k in 0..m {
                    g[(off + k * n + r, off + k * n + s)] = ONE;
                }
                gens.push(g);
            }
        }
        off += n * m;
    }
    gens
}

pub fn m2_plus_m3(tol: &ToleranceConfig) -> Result<Arc<FdCStarAlgebra>> {
    block_sum(&[(2, 1), (3, 1)], tol)
}

/// `C · I_2 ⊂ M_2`.
pub fn scalars_in_m2(tol: &ToleranceConfig) -> Result<Arc<FdCStarAlgebra>> {
    generate_algebra(2, &[ComplexMatrix::identity(2, 2)], tol)
}

/// `{a ⊕ a : a ∈ M_2} ⊂ M_4`.
pub fn doubled_m2(tol: &ToleranceConfig) -> Result<Arc<FdCStarAlgebra>> {
    block_sum(&[(2, 2)], tol)
}

pub fn diagonal(n: usize, tol: &ToleranceConfig) -> Result<Arc<FdCStarAlgebra>> {
    block_sum(&vec![(1, 1); n], tol)
}

/// The six catalog instances: `M_2`, `M_3`, `M_2 ⊕ M_3`, `C·I_2`, `{a⊕a}`, `D_3`.
pub fn catalog(tol: &ToleranceConfig) -> Result<Vec<(&'static str, Arc<FdCStarAlgebra>)>> {
    Ok(vec![
        ("M2", full_matrix(2, tol)?),
        ("M3", full_matrix(3, tol)?),
        ("M2+M3", m2_plus_m3(tol)?),
        ("C.I2", scalars_in_m2(tol)?),
        ("a+a in M4", doubled_m2(tol)?),
        ("D3", diagonal(3, tol)?),
    ])
}

/// Block algebra with the given `(n, m)` structure conjugated by a random
/// unitary and padded with `extra` dimensions outside its support.
pub fn random_algebra<R: Rng + ?Sized>(
    rng: &mut R,
    blocks: &[(usize, usize)],
    extra: usize,
    tol: &ToleranceConfig,
) -> Result<Arc<FdCStarAlgebra>> {
    let support: usize = blocks.iter().map(|(n, m)| n * m).sum();
    let ambient = support + extra;
    let u = linalg::random_unitary(rng, ambient);
    let gens: Vec<_> = block_generators(blocks, ambient, 0)
        .iter()
        .map(|g| &u * g * u.adjoint())
        .collect();
    generate_algebra(ambient, &gens, tol)
}

/// A random projection `p ∈ A`: on each block a random range of random rank
/// (at least one block nonzero), conjugated by a random unitary.
pub fn random_projection<R: Rng + ?Sized>(rng: &mut R, a: &FdCStarAlgebra) -> ComplexMatrix {
    let blocks = a.blocks();
    let mut ranks: Vec<usize> = blocks.iter().map(|b| rng.random_range(0..=b.n)).collect();
    if !blocks.is_empty() && ranks.iter().all(|&r| r == 0) {
        let k = rng.random_range(0..blocks.len());
        ranks[k] = rng.random_range(1..=blocks[k].n);
    }
    let mut p = ComplexMatrix::zeros(a.ambient_dim(), a.ambient_dim());
    for (b, &r) in blocks.iter().zip(&ranks) {
        let u = linalg::random_unitary(rng, b.n);
        let v = u.columns(0, r);
        p += b.embed(&(v * v.adjoint()));
    }
    p
}
