//! Finite-dimensional C*-algebras realized as *-subalgebras of `M_N`.
//!
//! An [`FdCStarAlgebra`] stores a Hilbert–Schmidt orthonormal basis together
//! with its decomposition `A ≅ ⊕_i M_{n_i}` (each summand appearing with
//! multiplicity `m_i` inside `C^N`). The block index set is the spectrum.

mod decompose;
mod hereditary;
mod ideal;

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    self, pivoted_column_basis, vectorize, ComplexMatrix, ComplexVector, ToleranceConfig, C64,
};

pub use decompose::block_decompose;
pub use hereditary::{hereditary_from_projection, is_hereditary, HereditarySubalgebra, HereditaryVerdict};
pub use ideal::{enumerate_ideals, generated_ideal, hull, ideal_from_blocks, quotient, Ideal, Quotient};

/// Largest ambient dimension accepted by [`generate_algebra`].
pub const DEFAULT_MAX_AMBIENT: usize = 64;

/// One summand `M_n ⊗ I_m` of the block decomposition, i.e. one point of the spectrum.
#[derive(Debug, Clone)]
pub struct BlockDescriptor {
    pub index: usize,
    /// Dimension of the irreducible representation.
    pub n: usize,
    pub multiplicity: usize,
    /// Minimal central projection `q_i`.
    pub central_projection: ComplexMatrix,
    /// `N x n` isometry onto one copy of the irreducible subspace; `π_i(x) = W* x W`.
    pub irrep_isometry: ComplexMatrix,
    /// All `m` copies as intertwining isometries, the first equal to `irrep_isometry`.
    pub intertwiners: Vec<ComplexMatrix>,
}

impl BlockDescriptor {
    /// The irreducible representation `π_i(x) = W* x W`.
    pub fn irrep(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.irrep_isometry.adjoint() * x * &self.irrep_isometry
    }

    /// Inverse of `π_i` on the block: `y ↦ Σ_k T_k y T_k*`.
    pub fn embed(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let n_amb = self.irrep_isometry.nrows();
        let mut out = ComplexMatrix::zeros(n_amb, n_amb);
        for t in &self.intertwiners {
            out += t * y * t.adjoint();
        }
        out
    }
}

/// Hilbert–Schmidt norm below which an element is treated as zero.
pub const MEMBERSHIP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct FdCStarAlgebra {
    ambient_dim: usize,
    basis: Vec<ComplexMatrix>,
    /// `N² x dim`, column `k` is `vec(basis[k])`.
    stacked: ComplexMatrix,
    unit: ComplexMatrix,
    blocks: Vec<BlockDescriptor>,
    block_unitary: ComplexMatrix,
    tol: ToleranceConfig,
}

impl FdCStarAlgebra {
    /// Assembles an algebra from an orthonormal basis and an already computed
    /// block structure, checking the decomposition against the basis.
    pub(crate) fn from_parts(
        ambient_dim: usize,
        basis: Vec<ComplexMatrix>,
        unit: ComplexMatrix,
        mut blocks: Vec<BlockDescriptor>,
        tol: ToleranceConfig,
    ) -> Result<Self> {
        for (k, b) in blocks.iter_mut().enumerate() {
            b.index = k;
        }
        let stacked = stack(ambient_dim, &basis);
        let block_unitary = assemble_block_unitary(ambient_dim, &unit, &blocks, &tol);
        let alg = Self {
            ambient_dim,
            basis,
            stacked,
            unit,
            blocks,
            block_unitary,
            tol,
        };
        alg.check_structure()?;
        Ok(alg)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn unit(&self) -> &ComplexMatrix {
        &self.unit
    }

    pub fn blocks(&self) -> &[BlockDescriptor] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> Result<&BlockDescriptor> {
        self.blocks.get(i).ok_or(Error::UnknownBaseIndex(i))
    }

    pub fn block_unitary(&self) -> &ComplexMatrix {
        &self.block_unitary
    }

    pub fn tolerances(&self) -> &ToleranceConfig {
        &self.tol
    }

    /// Spectrum labels `0..k`.
    pub fn spectrum(&self) -> Vec<usize> {
        (0..self.blocks.len()).collect()
    }

    pub fn fiber_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.n).collect()
    }

    /// Basis coefficients `c_k = Tr(b_k* x)`.
    pub fn coords(&self, x: &ComplexMatrix) -> ComplexVector {
        self.stacked.adjoint() * vectorize(x)
    }

    pub fn element(&self, coords: &ComplexVector) -> ComplexMatrix {
        let v = &self.stacked * coords;
        linalg::unvectorize(&v, self.ambient_dim, self.ambient_dim)
    }

    /// Hilbert–Schmidt orthogonal projection onto the algebra.
    pub fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.element(&self.coords(x))
    }

    /// `‖x − P_A x‖ / ‖x‖`. Matrices with norm at most [`MEMBERSHIP_FLOOR`]
    /// are rounding noise of unit-scale products and count as zero.
    pub fn membership_residual(&self, x: &ComplexMatrix) -> f64 {
        let nx = x.norm();
        if nx <= MEMBERSHIP_FLOOR {
            return 0.0;
        }
        (x - self.project(x)).norm() / nx
    }

    pub fn contains(&self, x: &ComplexMatrix) -> bool {
        x.shape() == (self.ambient_dim, self.ambient_dim)
            && self.membership_residual(x) <= self.tol.tol_eq
    }

    pub fn ensure_contains(&self, x: &ComplexMatrix) -> Result<()> {
        if x.shape() != (self.ambient_dim, self.ambient_dim) {
            return Err(Error::shape(
                format!("{0}x{0}", self.ambient_dim),
                format!("{}x{}", x.nrows(), x.ncols()),
            ));
        }
        linalg::ensure_finite(x)?;
        let residual = self.membership_residual(x);
        if residual > self.tol.tol_eq {
            return Err(Error::ElementNotInAlgebra { residual });
        }
        Ok(())
    }

    /// `π_i(x)`.
    pub fn irrep(&self, i: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(self.block(i)?.irrep(x))
    }

    /// Embedded matrix unit `π_i^{-1}(E_rs)`.
    pub fn matrix_unit(&self, i: usize, r: usize, s: usize) -> Result<ComplexMatrix> {
        let b = self.block(i)?;
        Ok(b.embed(&linalg::matrix_unit(b.n, r, s)))
    }

    /// `⊕_i π_i(x)` as a block-diagonal matrix of size `Σ n_i`.
    pub fn direct_sum_irreps(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let total: usize = self.blocks.iter().map(|b| b.n).sum();
        let mut out = ComplexMatrix::zeros(total, total);
        let mut off = 0;
        for b in &self.blocks {
            out.view_mut((off, off), (b.n, b.n)).copy_from(&b.irrep(x));
            off += b.n;
        }
        out
    }

    /// Sum of the central projections of the listed blocks.
    pub fn central_projection(&self, set: &[usize]) -> Result<ComplexMatrix> {
        let mut q = ComplexMatrix::zeros(self.ambient_dim, self.ambient_dim);
        for &i in set {
            q += &self.block(i)?.central_projection;
        }
        Ok(q)
    }

    /// Largest relative violation of closure under adjoint and products over basis pairs.
    pub fn closure_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            worst = worst.max(self.membership_residual(&a.adjoint()));
            for b in &self.basis[..=i] {
                worst = worst.max(self.membership_residual(&(a * b)));
                worst = worst.max(self.membership_residual(&(b * a)));
            }
        }
        worst
    }

    /// Checks the block decomposition against the basis: unit, dimension
    /// count, orthogonality of central projections and the reconstruction
    /// `U* x U = ⊕ π_i(x) ⊗ I_{m_i}`.
    pub(crate) fn check_structure(&self) -> Result<()> {
        let tol = self.tol.tol_eq;
        let n = self.ambient_dim;
        let sum_sq: usize = self.blocks.iter().map(|b| b.n * b.n).sum();
        if sum_sq != self.dim() {
            return Err(Error::Inconsistency(format!(
                "sum of n_i^2 = {sum_sq} but algebra dimension is {}",
                self.dim()
            )));
        }
        let mut qsum = ComplexMatrix::zeros(n, n);
        for b in &self.blocks {
            qsum += &b.central_projection;
        }
        if (&qsum - &self.unit).norm() > tol * (1.0 + self.unit.norm()) {
            return Err(Error::Inconsistency(
                "central projections do not sum to the unit".into(),
            ));
        }
        if linalg::unitarity_residual(&self.block_unitary) > self.tol.tol_ortho.max(1e-9) {
            return Err(Error::Inconsistency("block unitary is not unitary".into()));
        }
        for x in &self.basis {
            if (&self.unit * x - x).norm() > tol || (x * &self.unit - x).norm() > tol {
                return Err(Error::Inconsistency("unit does not act as identity".into()));
            }
            let expected = self.block_form(x);
            let actual = self.block_unitary.adjoint() * x * &self.block_unitary;
            let err = (actual - expected).norm();
            if err > tol {
                return Err(Error::Inconsistency(format!(
                    "block reconstruction residual {err:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// `(⊕_i π_i(x) ⊗ I_{m_i}) ⊕ 0` in the coordinates of `block_unitary`.
    pub fn block_form(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let n = self.ambient_dim;
        let mut out = ComplexMatrix::zeros(n, n);
        let mut off = 0;
        for b in &self.blocks {
            let px = b.irrep(x);
            let m = b.multiplicity;
            for r in 0..b.n {
                for s in 0..b.n {
                    for k in 0..m {
                        out[(off + r * m + k, off + s * m + k)] = px[(r, s)];
                    }
                }
            }
            off += b.n * m;
        }
        out
    }
}

fn stack(ambient_dim: usize, basis: &[ComplexMatrix]) -> ComplexMatrix {
    let rows = ambient_dim * ambient_dim;
    if basis.is_empty() {
        return ComplexMatrix::zeros(rows, 0);
    }
    let cols: Vec<ComplexVector> = basis.iter().map(vectorize).collect();
    ComplexMatrix::from_columns(&cols)
}

/// Columns ordered block by block as `T_k e_r` with `r` outer and `k` inner
/// (the Kronecker order of `M_n ⊗ I_m`), followed by a basis of `ker e`.
fn assemble_block_unitary(
    ambient_dim: usize,
    unit: &ComplexMatrix,
    blocks: &[BlockDescriptor],
    tol: &ToleranceConfig,
) -> ComplexMatrix {
    let mut cols: Vec<ComplexVector> = Vec::with_capacity(ambient_dim);
    for b in blocks {
        for r in 0..b.n {
            for t in &b.intertwiners {
                cols.push(t.column(r).into_owned());
            }
        }
    }
    let rest = ambient_dim.saturating_sub(cols.len());
    if rest > 0 {
        let comp = ComplexMatrix::identity(ambient_dim, ambient_dim) - unit;
        let basis = pivoted_column_basis(&comp, rest, tol);
        cols.extend(basis.column_iter().map(|c| c.into_owned()));
    }
    if cols.is_empty() {
        return ComplexMatrix::zeros(ambient_dim, ambient_dim);
    }
    ComplexMatrix::from_columns(&cols)
}

/// Incrementally grown Hilbert–Schmidt orthonormal basis.
struct SpanBuilder {
    ambient_dim: usize,
    basis: Vec<ComplexMatrix>,
    threshold: f64,
}

impl SpanBuilder {
    fn new(ambient_dim: usize, threshold: f64) -> Self {
        Self {
            ambient_dim,
            basis: Vec::new(),
            threshold,
        }
    }

    /// Adds the part of `x` orthogonal to the current span when it exceeds
    /// the threshold. Inputs are expected at unit scale.
    fn push(&mut self, x: &ComplexMatrix) -> bool {
        if self.basis.len() == self.ambient_dim * self.ambient_dim {
            return false;
        }
        let mut r = x.clone();
        for _ in 0..2 {
            for b in &self.basis {
                let c: C64 = b.iter().zip(r.iter()).map(|(p, q)| p.conj() * q).sum();
                r -= b * c;
            }
        }
        let nr = r.norm();
        if nr > self.threshold {
            self.basis.push(r / C64::from(nr));
            true
        } else {
            false
        }
    }

    fn len(&self) -> usize {
        self.basis.len()
    }
}

/// Smallest *-subalgebra of `M_N` containing `generators`.
pub fn generate_algebra(
    ambient_dim: usize,
    generators: &[ComplexMatrix],
    tol: &ToleranceConfig,
) -> Result<Arc<FdCStarAlgebra>> {
    generate_algebra_with_limit(ambient_dim, generators, tol, DEFAULT_MAX_AMBIENT)
}

pub fn generate_algebra_with_limit(
    ambient_dim: usize,
    generators: &[ComplexMatrix],
    tol: &ToleranceConfig,
    max_ambient: usize,
) -> Result<Arc<FdCStarAlgebra>> {
    tol.validate()?;
    if ambient_dim > max_ambient {
        return Err(Error::AmbientTooLarge {
            requested: ambient_dim,
            limit: max_ambient,
        });
    }
    for g in generators {
        if g.shape() != (ambient_dim, ambient_dim) {
            return Err(Error::shape(
                format!("{ambient_dim}x{ambient_dim}"),
                format!("{}x{}", g.nrows(), g.ncols()),
            ));
        }
        linalg::ensure_finite(g)?;
    }

    let mut span = SpanBuilder::new(ambient_dim, tol.tol_rank);
    for g in generators {
        let ng = g.norm();
        if ng > 0.0 {
            let g = g / C64::from(ng);
            span.push(&g);
            span.push(&g.adjoint());
        }
    }
    let mut done = 0;
    while done < span.len() {
        let x = span.basis[done].clone();
        span.push(&x.adjoint());
        let mut j = 0;
        while j <= done {
            let y = span.basis[j].clone();
            span.push(&(&x * &y));
            span.push(&(&y * &x));
            j += 1;
        }
        done += 1;
    }
    let basis = span.basis;
    let unit = support_projection(ambient_dim, &basis, tol);
    let mut rng = tol.rng_stream(0x0A16_EB7A);
    let blocks = decompose::decompose_blocks(ambient_dim, &basis, &unit, tol, &mut rng)?;
    let alg = FdCStarAlgebra::from_parts(ambient_dim, basis, unit, blocks, *tol)?;
    if !alg.basis.is_empty() && alg.membership_residual(&alg.unit) > tol.tol_eq {
        return Err(Error::Inconsistency("support projection is not in the algebra".into()));
    }
    Ok(Arc::new(alg))
}

/// Projection onto the joint range of the basis, which is the unit of the algebra.
fn support_projection(
    ambient_dim: usize,
    basis: &[ComplexMatrix],
    tol: &ToleranceConfig,
) -> ComplexMatrix {
    if basis.is_empty() {
        return ComplexMatrix::zeros(ambient_dim, ambient_dim);
    }
    let mut wide = ComplexMatrix::zeros(ambient_dim, ambient_dim * basis.len());
    for (k, b) in basis.iter().enumerate() {
        wide.view_mut((0, k * ambient_dim), (ambient_dim, ambient_dim))
            .copy_from(b);
    }
    linalg::orthonormalize_columns(&wide, tol).projector()
}

pub(crate) type Rng = ChaCha8Rng;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matrix_unit, ONE};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn full_matrix_algebra() {
        let gens: Vec<_> = (0..2)
            .flat_map(|r| (0..2).map(move |s| matrix_unit(2, r, s)))
            .collect();
        let a = generate_algebra(2, &gens, &tol()).unwrap();
        assert_eq!(a.dim(), 4);
        assert_eq!(a.blocks().len(), 1);
        assert_eq!((a.blocks()[0].n, a.blocks()[0].multiplicity), (2, 1));
        assert!((a.unit() - ComplexMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_algebra_has_two_blocks() {
        let a = generate_algebra(2, &[matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)], &tol()).unwrap();
        assert_eq!(a.dim(), 2);
        let dims: Vec<_> = a.blocks().iter().map(|b| (b.n, b.multiplicity)).collect();
        assert_eq!(dims, vec![(1, 1), (1, 1)]);
    }

    #[test]
    fn scalars_have_multiplicity_two() {
        let a = generate_algebra(2, &[ComplexMatrix::identity(2, 2)], &tol()).unwrap();
        assert_eq!(a.dim(), 1);
        let b = &a.blocks()[0];
        assert_eq!((b.n, b.multiplicity), (1, 2));
    }

    #[test]
    fn closure_is_a_fixed_point() {
        let a = generate_algebra(3, &[matrix_unit(3, 0, 1), matrix_unit(3, 2, 2)], &tol()).unwrap();
        // E01 generates M_2 on the first two coordinates; E22 adds a C summand
        assert_eq!(a.dim(), 5);
        assert!(a.closure_residual() < 1e-12);
        let again = generate_algebra(3, a.basis(), &tol()).unwrap();
        assert_eq!(again.dim(), a.dim());
    }

    #[test]
    fn rejects_oversized_and_malformed_input() {
        let big = ComplexMatrix::identity(65, 65);
        assert!(matches!(
            generate_algebra(65, &[big], &tol()),
            Err(Error::AmbientTooLarge { requested: 65, limit: 64 })
        ));
        assert!(matches!(
            generate_algebra(2, &[ComplexMatrix::identity(3, 3)], &tol()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_algebra() {
        let a = generate_algebra(2, &[ComplexMatrix::zeros(2, 2)], &tol()).unwrap();
        assert_eq!(a.dim(), 0);
        assert!(a.blocks().is_empty());
        assert!(a.contains(&ComplexMatrix::zeros(2, 2)));
        assert!(!a.contains(&matrix_unit(2, 0, 0)));
    }

    #[test]
    fn membership_is_relative() {
        let a = generate_algebra(2, &[matrix_unit(2, 0, 0)], &tol()).unwrap();
        assert!(a.contains(&(matrix_unit(2, 0, 0) * C64::new(1e6, 0.0))));
        let mut off = matrix_unit(2, 0, 0);
        off[(0, 1)] = ONE;
        assert!(matches!(a.ensure_contains(&off), Err(Error::ElementNotInAlgebra { .. })));
    }
}
