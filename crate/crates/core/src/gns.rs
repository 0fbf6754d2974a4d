//! The GNS construction for states on a finite-dimensional algebra.
//!
//! With `G = [ω(b_j* b_k)] = U Λ U*` the GNS space is the range of `G`,
//! identified with `C^r` through `Λ(a) = Λ_r^{1/2} U_r* c(a)` where `c(a)` are
//! the basis coordinates of `a`. Then `⟨Λ(a), Λ(b)⟩ = ω(a* b)`.

use std::sync::Arc;

use crate::algebra::FdCStarAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, kernel_of_linear_map, vectorize, ComplexMatrix, ComplexVector, C64};
use crate::states::{gram_matrix, State};

#[derive(Debug, Clone)]
pub struct GnsTriple {
    pub algebra: Arc<FdCStarAlgebra>,
    pub hilbert_dim: usize,
    /// `rep[k]` is the operator of the basis element `b_k`.
    pub rep: Vec<ComplexMatrix>,
    pub cyclic_vector: ComplexVector,
    /// `r x dim` matrix of the quotient map in basis coordinates.
    quotient: ComplexMatrix,
}

impl GnsTriple {
    /// `Λ(a)`.
    pub fn quotient_map(&self, a: &ComplexMatrix) -> ComplexVector {
        &self.quotient * self.algebra.coords(a)
    }

    /// The representation of an arbitrary algebra element.
    pub fn represent(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let c = self.algebra.coords(a);
        let r = self.hilbert_dim;
        let mut out = ComplexMatrix::zeros(r, r);
        for (ck, op) in c.iter().zip(&self.rep) {
            out += op * *ck;
        }
        out
    }

    /// Worst of `|ω(b) − ⟨x|rep(b) x⟩|` over the basis.
    pub fn reconstruction_residual(&self, state: &State) -> f64 {
        let x = &self.cyclic_vector;
        self.algebra
            .basis()
            .iter()
            .zip(&self.rep)
            .map(|(b, op)| (state.eval(b) - x.dotc(&(op * x))).norm())
            .fold(0.0, f64::max)
    }

    /// Worst violation of `rep(b*) = rep(b)*` and `rep(b_j b_k) = rep(b_j) rep(b_k)`.
    pub fn homomorphism_residual(&self) -> f64 {
        let basis = self.algebra.basis();
        let mut worst: f64 = 0.0;
        for (j, bj) in basis.iter().enumerate() {
            worst = worst.max((self.represent(&bj.adjoint()) - self.rep[j].adjoint()).norm());
            for (k, bk) in basis.iter().enumerate() {
                let lhs = self.represent(&(bj * bk));
                worst = worst.max((lhs - &self.rep[j] * &self.rep[k]).norm());
            }
        }
        worst
    }

    /// Rank of `Λ(A)`; equals `hilbert_dim` for a cyclic construction.
    pub fn cyclic_rank(&self) -> usize {
        linalg::rank(&self.quotient, self.algebra.tolerances())
    }

    /// Dimension of the commutant of `rep(A)`.
    pub fn commutant_dim(&self) -> usize {
        let r = self.hilbert_dim;
        let ker = kernel_of_linear_map(r * r, self.algebra.tolerances(), |v| {
            let x = linalg::unvectorize(v, r, r);
            let parts: Vec<C64> = self
                .rep
                .iter()
                .flat_map(|op| vectorize(&(op * &x - &x * op)).as_slice().to_vec())
                .collect();
            ComplexVector::from_vec(parts)
        });
        ker.dim()
    }
}

pub fn gns(state: &State) -> Result<GnsTriple> {
    let algebra = Arc::clone(state.algebra());
    let a = algebra.as_ref();
    let tol = a.tolerances();
    let gram = gram_matrix(a, state.values());
    let eig = hermitian_eig(&((&gram + gram.adjoint()) * C64::from(0.5)), tol)?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    let r = eig.values.iter().take_while(|&&l| top > 0.0 && l > tol.tol_rank * top).count();
    if r == 0 {
        return Err(Error::Inconsistency("state has a zero Gram matrix".into()));
    }
    let dim = a.dim();
    let mut quotient = ComplexMatrix::zeros(r, dim);
    // φ_m = Σ_k U_km / √λ_m b_k satisfies Λ(φ_m) = e_m
    let mut phi = Vec::with_capacity(r);
    for m in 0..r {
        let lam = eig.values[m];
        let u = eig.vectors.column(m);
        quotient.row_mut(m).copy_from(&(u.adjoint() * C64::from(lam.sqrt())));
        phi.push(a.element(&(u.into_owned() / C64::from(lam.sqrt()))));
    }
    let rep = a
        .basis()
        .iter()
        .map(|b| {
            let mut op = ComplexMatrix::zeros(r, r);
            for (m, f) in phi.iter().enumerate() {
                op.set_column(m, &(&quotient * a.coords(&(b * f))));
            }
            op
        })
        .collect();
    let cyclic_vector = &quotient * a.coords(a.unit());
    Ok(GnsTriple { algebra, hilbert_dim: r, rep, cyclic_vector, quotient })
}

/// Irreducibility of the GNS representation: commutant of dimension one.
pub fn is_pure_via_gns(state: &State) -> Result<bool> {
    Ok(gns(state)?.commutant_dim() == 1)
}

/// Cross-checks the density criterion against GNS irreducibility and
/// reports disagreement as an internal inconsistency.
pub fn certified_purity(state: &State) -> Result<bool> {
    let via_gns = is_pure_via_gns(state)?;
    if via_gns != state.is_pure() {
        return Err(Error::Inconsistency(format!(
            "density criterion says pure={} but the GNS commutant says pure={via_gns}",
            state.is_pure()
        )));
    }
    Ok(via_gns)
}

/// For a pure state on block `i` with ray `x`, the unitary `V` with
/// `V Λ(a) = π_i(a) x`; then `V rep(a) V* = π_i(a)`.
pub fn intertwiner_to_irrep(state: &State, triple: &GnsTriple) -> Result<ComplexMatrix> {
    let pt = state.ray()?;
    let a = triple.algebra.as_ref();
    let block = a.block(pt.fiber)?;
    if triple.hilbert_dim != block.n {
        return Err(Error::Inconsistency(format!(
            "GNS space has dimension {} but the irreducible representation has dimension {}",
            triple.hilbert_dim, block.n
        )));
    }
    // columns: V e_m = π_i(φ_m) x, with φ_m recovered from Λ(φ_m) = e_m
    let pinv = triple
        .quotient
        .clone()
        .pseudo_inverse(f64::EPSILON)
        .map_err(|e| Error::Inconsistency(e.to_string()))?;
    let mut v = ComplexMatrix::zeros(block.n, block.n);
    for m in 0..block.n {
        let phi = a.element(&pinv.column(m).into_owned());
        v.set_column(m, &(block.irrep(&phi) * &pt.ray));
    }
    Ok(v)
}

/// Worst of `‖V rep(b) V* − π_i(b)‖` over the basis, plus the unitarity residual of `V`.
pub fn intertwiner_residual(state: &State, triple: &GnsTriple) -> Result<f64> {
    let v = intertwiner_to_irrep(state, triple)?;
    let block = triple.algebra.block(state.fiber()?)?;
    let mut worst = linalg::unitarity_residual(&v);
    for (b, op) in triple.algebra.basis().iter().zip(&triple.rep) {
        worst = worst.max((&v * op * v.adjoint() - block.irrep(b)).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::linalg::{standard_basis_vector, ToleranceConfig};
    use crate::states::{make_state, mixture, random_faithful_state, random_pure_state, vector_state};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn vector_state_on_m2() {
        let a = catalog::full_matrix(2, &tol()).unwrap();
        let s = vector_state(&a, 0, &standard_basis_vector(2, 0)).unwrap();
        let g = gns(&s).unwrap();
        assert_eq!(g.hilbert_dim, 2);
        assert!(g.reconstruction_residual(&s) < 1e-12);
        assert!(g.homomorphism_residual() < 1e-12);
        assert_eq!(g.cyclic_rank(), 2);
        assert!((g.cyclic_vector.norm() - 1.0).abs() < 1e-12);
        assert!(intertwiner_residual(&s, &g).unwrap() < 1e-10);
        assert!(certified_purity(&s).unwrap());
    }

    #[test]
    fn diagonal_states() {
        let a = catalog::diagonal(2, &tol()).unwrap();
        let e = |k| ComplexVector::from_iterator(2, a.basis().iter().map(move |b: &ComplexMatrix| b[(k, k)]));
        let pure = make_state(&a, &e(0)).unwrap();
        assert_eq!(gns(&pure).unwrap().hilbert_dim, 1);
        let mixed = make_state(&a, &((e(0) + e(1)) * C64::from(0.5))).unwrap();
        let g = gns(&mixed).unwrap();
        assert_eq!(g.hilbert_dim, 2);
        assert_eq!(g.commutant_dim(), 2);
        assert!(!certified_purity(&mixed).unwrap());
    }

    #[test]
    fn two_block_mixture_has_abelian_commutant() {
        let t = tol();
        let mut rng = t.rng();
        let a = catalog::m2_plus_m3(&t).unwrap();
        let s1 = random_pure_state(&mut rng, &a, 0).unwrap();
        let s2 = random_pure_state(&mut rng, &a, 1).unwrap();
        let m = mixture(&[(1.0 / 3.0, &s1), (2.0 / 3.0, &s2)]).unwrap();
        let g = gns(&m).unwrap();
        assert_eq!(g.hilbert_dim, 5);
        assert_eq!(g.commutant_dim(), 2);
        assert!(g.reconstruction_residual(&m) < 1e-10);
    }

    #[test]
    fn pure_states_give_irreducible_representations() {
        let t = tol();
        let mut rng = t.rng();
        for (_, a) in catalog::catalog(&t).unwrap() {
            for b in a.blocks() {
                let s = random_pure_state(&mut rng, &a, b.index).unwrap();
                let g = gns(&s).unwrap();
                assert_eq!(g.hilbert_dim, b.n);
                assert!(certified_purity(&s).unwrap());
                assert!(intertwiner_residual(&s, &g).unwrap() < 1e-9);
                assert!(g.reconstruction_residual(&s) < 1e-10);
            }
            let f = random_faithful_state(&mut rng, &a).unwrap();
            let g = gns(&f).unwrap();
            assert_eq!(g.hilbert_dim, a.dim());
            assert!(g.homomorphism_residual() < 1e-9);
            assert_eq!(certified_purity(&f).unwrap(), a.dim() == 1);
        }
    }
}
