//! Closed two-sided ideals, quotients and hulls.
//!
//! Every ideal of `⊕_i M_{n_i}` is the sum of the summands over a subset of
//! the spectrum, so ideals are addressed by their block sets.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::FdCStarAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{self, kernel_of_linear_map, vectorize, ComplexMatrix, ComplexVector, C64};

#[derive(Debug, Clone)]
pub struct Ideal {
    pub parent: Arc<FdCStarAlgebra>,
    /// Spectrum labels of the parent where the ideal does not vanish, sorted.
    pub block_set: Vec<usize>,
    /// The ideal as an algebra in its own right; its block `j` is the
    /// parent's block `block_set[j]` with the same irreducible picture.
    pub as_algebra: Arc<FdCStarAlgebra>,
}

impl Ideal {
    pub fn is_zero(&self) -> bool {
        self.block_set.is_empty()
    }

    pub fn is_whole(&self) -> bool {
        self.block_set.len() == self.parent.blocks().len()
    }

    /// Parent blocks outside the ideal.
    pub fn complement_blocks(&self) -> Vec<usize> {
        let inside: BTreeSet<_> = self.block_set.iter().copied().collect();
        self.parent
            .spectrum()
            .into_iter()
            .filter(|i| !inside.contains(i))
            .collect()
    }

    /// Worst membership residual of `a·x` and `x·a` over basis pairs.
    pub fn absorption_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in self.parent.basis() {
            for x in self.as_algebra.basis() {
                worst = worst.max(self.as_algebra.membership_residual(&(a * x)));
                worst = worst.max(self.as_algebra.membership_residual(&(x * a)));
            }
        }
        worst
    }

    /// Checks `I = ker ⊕_{j ∉ S} π_j`: the ideal's basis is annihilated by the
    /// outside irreps and the kernel, computed independently, has the same span.
    pub fn kernel_residual(&self) -> Result<f64> {
        let outside = self.complement_blocks();
        let parent = &self.parent;
        let mut worst: f64 = 0.0;
        for x in self.as_algebra.basis() {
            for &j in &outside {
                worst = worst.max(parent.irrep(j, x)?.norm());
            }
        }
        let kernel = irrep_kernel(parent, &outside);
        if kernel.len() != self.as_algebra.dim() {
            return Err(Error::Inconsistency(format!(
                "kernel has dimension {} but the ideal has dimension {}",
                kernel.len(),
                self.as_algebra.dim()
            )));
        }
        for y in &kernel {
            worst = worst.max(self.as_algebra.membership_residual(y) * y.norm());
        }
        Ok(worst)
    }
}

/// Elements of `a` annihilated by `π_j` for every listed `j`.
pub(crate) fn irrep_kernel(a: &FdCStarAlgebra, blocks: &[usize]) -> Vec<ComplexMatrix> {
    let tol = a.tolerances();
    let ker = kernel_of_linear_map(a.dim(), tol, |c| {
        let x = a.element(c);
        let parts: Vec<C64> = blocks
            .iter()
            .flat_map(|&j| a.blocks()[j].irrep(&x).as_slice().to_vec())
            .collect();
        ComplexVector::from_vec(parts)
    });
    ker.basis
        .column_iter()
        .map(|c| a.element(&c.into_owned()))
        .collect()
}

/// The ideal `⊕_{i ∈ set} block_i`.
pub fn ideal_from_blocks(a: &Arc<FdCStarAlgebra>, set: &[usize]) -> Result<Ideal> {
    let mut set: Vec<usize> = set.to_vec();
    set.sort_unstable();
    set.dedup();
    for &i in &set {
        a.block(i)?;
    }
    let sub = sub_algebra_on_blocks(a, &set)?;
    Ok(Ideal {
        parent: Arc::clone(a),
        block_set: set,
        as_algebra: Arc::new(sub),
    })
}

/// `q_S · A` realized as an algebra with the parent's block data.
fn sub_algebra_on_blocks(a: &FdCStarAlgebra, set: &[usize]) -> Result<FdCStarAlgebra> {
    let tol = a.tolerances();
    let q = a.central_projection(set)?;
    let n = a.ambient_dim();
    let vecs: Vec<ComplexVector> = a.basis().iter().map(|b| vectorize(&(&q * b))).collect();
    let span = linalg::orthonormalize(n * n, &vecs, tol)?;
    let basis: Vec<ComplexMatrix> = span
        .basis
        .column_iter()
        .map(|c| linalg::unvectorize(&c.into_owned(), n, n))
        .collect();
    let blocks = set.iter().map(|&i| a.blocks()[i].clone()).collect();
    FdCStarAlgebra::from_parts(n, basis, q, blocks, *tol)
}

/// All `2^k` ideals, indexed by the bitmask of their block set.
pub fn enumerate_ideals(a: &Arc<FdCStarAlgebra>) -> Result<Vec<Ideal>> {
    let k = a.blocks().len();
    if k >= usize::BITS as usize {
        return Err(Error::InvalidArgument(format!("{k} blocks is too many to enumerate")));
    }
    (0..(1usize << k))
        .map(|mask| {
            let set: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            ideal_from_blocks(a, &set)
        })
        .collect()
}

/// `A / I`, realized as the complementary summand with the block-deletion map.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub parent: Arc<FdCStarAlgebra>,
    pub algebra: Arc<FdCStarAlgebra>,
    /// Quotient block `j` is parent block `block_map[j]`.
    pub block_map: Vec<usize>,
    complement_projection: ComplexMatrix,
}

impl Quotient {
    /// The quotient homomorphism `h(x) = q_{S^c} x`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.parent.ensure_contains(x)?;
        Ok(&self.complement_projection * x)
    }

    /// Worst violation of multiplicativity and *-preservation over basis pairs.
    pub fn homomorphism_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for a in self.parent.basis() {
            let ha = self.apply(a)?;
            worst = worst.max((self.apply(&a.adjoint())? - ha.adjoint()).norm());
            for b in self.parent.basis() {
                let lhs = self.apply(&(a * b))?;
                worst = worst.max((lhs - &ha * self.apply(b)?).norm());
            }
        }
        Ok(worst)
    }
}

pub fn quotient(a: &Arc<FdCStarAlgebra>, ideal: &Ideal) -> Result<Quotient> {
    if !Arc::ptr_eq(a, &ideal.parent) && a.basis() != ideal.parent.basis() {
        return Err(Error::InvalidArgument("ideal belongs to a different algebra".into()));
    }
    let keep = ideal.complement_blocks();
    let sub = sub_algebra_on_blocks(a, &keep)?;
    Ok(Quotient {
        parent: Arc::clone(a),
        complement_projection: a.central_projection(&keep)?,
        algebra: Arc::new(sub),
        block_map: keep,
    })
}

/// Spectrum labels `i` with `π_i(x) = 0` for every `x` in `s`.
pub fn hull(a: &FdCStarAlgebra, s: &[ComplexMatrix]) -> Result<Vec<usize>> {
    let tol = a.tolerances().tol_eq;
    for x in s {
        a.ensure_contains(x)?;
    }
    let mut out = Vec::new();
    for b in a.blocks() {
        if s.iter().all(|x| b.irrep(x).norm() <= tol * x.norm()) {
            out.push(b.index);
        }
    }
    Ok(out)
}

/// The closed ideal generated by `elements`, computed as `span(A S A)` and
/// matched against the block ideal it must coincide with.
pub fn generated_ideal(a: &Arc<FdCStarAlgebra>, elements: &[ComplexMatrix]) -> Result<Ideal> {
    let tol = a.tolerances();
    let n = a.ambient_dim();
    for x in elements {
        a.ensure_contains(x)?;
    }
    let mut vecs = Vec::new();
    for x in elements {
        let nx = x.norm();
        if nx == 0.0 {
            continue;
        }
        let x = x / C64::from(nx);
        for l in a.basis() {
            let lx = l * &x;
            for r in a.basis() {
                vecs.push(vectorize(&(&lx * r)));
            }
        }
    }
    let span = linalg::orthonormalize(n * n, &vecs, tol)?;
    let members: Vec<ComplexMatrix> = span
        .basis
        .column_iter()
        .map(|c| linalg::unvectorize(&c.into_owned(), n, n))
        .collect();
    let set: Vec<usize> = a
        .blocks()
        .iter()
        .filter(|b| members.iter().any(|y| b.irrep(y).norm() > tol.tol_eq))
        .map(|b| b.index)
        .collect();
    let ideal = ideal_from_blocks(a, &set)?;
    if ideal.as_algebra.dim() != members.len()
        || members.iter().any(|y| !ideal.as_algebra.contains(y))
    {
        return Err(Error::Inconsistency(
            "span(A S A) is not a sum of blocks".into(),
        ));
    }
    Ok(ideal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::linalg::ToleranceConfig;

    #[test]
    fn ideal_lattice_of_two_blocks() {
        let tol = ToleranceConfig::default();
        let a = catalog::m2_plus_m3(&tol).unwrap();
        let ideals = enumerate_ideals(&a).unwrap();
        let dims: Vec<_> = ideals.iter().map(|i| i.as_algebra.dim()).collect();
        assert_eq!(dims, vec![0, 4, 9, 13]);
        for i in &ideals {
            assert!(i.absorption_residual() < 1e-10);
            assert!(i.kernel_residual().unwrap() < 1e-10);
        }
    }

    #[test]
    fn simple_algebra_has_trivial_ideals() {
        let tol = ToleranceConfig::default();
        let a = catalog::full_matrix(3, &tol).unwrap();
        let ideals = enumerate_ideals(&a).unwrap();
        assert_eq!(ideals.len(), 2);
        assert!(ideals[0].is_zero() && ideals[1].is_whole());
    }

    #[test]
    fn three_blocks_give_eight_two_sided_ideals() {
        let tol = ToleranceConfig::default();
        let a = catalog::diagonal(3, &tol).unwrap();
        let ideals = enumerate_ideals(&a).unwrap();
        assert_eq!(ideals.len(), 8);
        for i in &ideals {
            // absorption by direct multiplication
            for x in a.basis() {
                for y in i.as_algebra.basis() {
                    assert!(i.as_algebra.contains(&(x * y)));
                    assert!(i.as_algebra.contains(&(y * x)));
                }
            }
        }
    }

    #[test]
    fn quotients() {
        let tol = ToleranceConfig::default();
        let a = catalog::m2_plus_m3(&tol).unwrap();
        let ideals = enumerate_ideals(&a).unwrap();

        let by_zero = quotient(&a, &ideals[0]).unwrap();
        assert_eq!(by_zero.algebra.dim(), 13);
        for x in a.basis() {
            assert!((by_zero.apply(x).unwrap() - x).norm() < 1e-12);
        }

        let by_all = quotient(&a, &ideals[3]).unwrap();
        assert_eq!(by_all.algebra.dim(), 0);

        let q = quotient(&a, &ideals[1]).unwrap();
        assert_eq!(q.algebra.dim(), 9);
        assert_eq!(q.block_map, vec![1]);
        assert!(q.homomorphism_residual().unwrap() < 1e-12);
        for x in ideals[1].as_algebra.basis() {
            assert!(q.apply(x).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn hull_examples() {
        let tol = ToleranceConfig::default();
        let a = catalog::m2_plus_m3(&tol).unwrap();
        assert_eq!(hull(&a, &[ComplexMatrix::zeros(5, 5)]).unwrap(), vec![0, 1]);
        assert!(hull(&a, &[a.unit().clone()]).unwrap().is_empty());
        let x = a.matrix_unit(0, 0, 1).unwrap();
        assert_eq!(hull(&a, &[x]).unwrap(), vec![1]);
        let outside = linalg::matrix_unit(5, 0, 4);
        assert!(matches!(hull(&a, &[outside]), Err(Error::ElementNotInAlgebra { .. })));
    }

    #[test]
    fn generated_ideal_of_a_corner() {
        let tol = ToleranceConfig::default();
        let a = catalog::m2_plus_m3(&tol).unwrap();
        let g = generated_ideal(&a, &[a.matrix_unit(1, 2, 2).unwrap()]).unwrap();
        assert_eq!(g.block_set, vec![1]);
        assert_eq!(g.as_algebra.dim(), 9);
    }
}
