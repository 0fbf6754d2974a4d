//! Hereditary subalgebras. At finite dimension these are exactly the corners
//! `pAp` for projections `p ∈ A`.

use std::sync::Arc;

use super::ideal::{generated_ideal, hull, ideal_from_blocks, irrep_kernel, Ideal};
use super::{BlockDescriptor, FdCStarAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eig, pivoted_column_basis, vectorize, ComplexMatrix, ComplexVector, C64, I,
};

#[derive(Debug, Clone)]
pub struct HereditarySubalgebra {
    pub parent: Arc<FdCStarAlgebra>,
    /// The unit `p` of the corner.
    pub unit_p: ComplexMatrix,
    /// `p_i = π_i(p)` for every parent block (possibly zero).
    pub block_projections: Vec<ComplexMatrix>,
    /// Orthonormal basis `V_i` (`n_i x rank p_i`) of `range(p_i)`.
    pub corner_bases: Vec<ComplexMatrix>,
    pub as_algebra: Arc<FdCStarAlgebra>,
    /// Block `j` of the corner sits over parent block `block_map[j]`.
    pub block_map: Vec<usize>,
}

impl HereditarySubalgebra {
    pub fn corner_rank(&self, parent_block: usize) -> usize {
        self.corner_bases.get(parent_block).map_or(0, |v| v.ncols())
    }

    /// Parent spectrum points where the corner does not vanish.
    pub fn spectrum_in_parent(&self) -> &[usize] {
        &self.block_map
    }

    /// Corner block over a parent block, if any.
    pub fn corner_block_of(&self, parent_block: usize) -> Option<usize> {
        self.block_map.iter().position(|&i| i == parent_block)
    }

    /// `true` iff `p` is central, i.e. the corner is a two-sided ideal.
    pub fn is_ideal(&self) -> bool {
        self.block_map
            .iter()
            .all(|&i| self.corner_rank(i) == self.parent.blocks()[i].n)
    }

    /// Ideal generated by the corner, read off from the block projections.
    pub fn generated_ideal(&self) -> Result<Ideal> {
        ideal_from_blocks(&self.parent, &self.block_map)
    }

    /// Compares three routes to the ideal generated by the corner:
    /// `span(A B A)`, the block sum over `{i : p_i ≠ 0}`, and the
    /// intersection of the primitive ideals in `hull(B)`. Returns the
    /// worst membership residual.
    pub fn hull_intersection_residual(&self) -> Result<f64> {
        let a = &self.parent;
        let spanned = generated_ideal(a, self.as_algebra.basis())?;
        let blocks = self.generated_ideal()?;
        if spanned.block_set != blocks.block_set {
            return Err(Error::Inconsistency(format!(
                "generated ideal blocks {:?} differ from corner support {:?}",
                spanned.block_set, blocks.block_set
            )));
        }
        let hull_b = hull(a, self.as_algebra.basis())?;
        let intersection = irrep_kernel(a, &hull_b);
        if intersection.len() != blocks.as_algebra.dim() {
            return Err(Error::Inconsistency(format!(
                "intersection over hull has dimension {} but the generated ideal has {}",
                intersection.len(),
                blocks.as_algebra.dim()
            )));
        }
        let mut worst: f64 = 0.0;
        for y in &intersection {
            worst = worst.max(blocks.as_algebra.membership_residual(y));
        }
        for y in spanned.as_algebra.basis() {
            let ny = y.norm();
            let coords = ComplexVector::from_iterator(
                intersection.len(),
                intersection
                    .iter()
                    .map(|z| z.iter().zip(y.iter()).map(|(p, q)| p.conj() * q).sum::<C64>()),
            );
            // intersection basis is orthonormal (kernel of a linear map on orthonormal coordinates)
            let mut proj = ComplexMatrix::zeros(y.nrows(), y.ncols());
            for (c, z) in coords.iter().zip(&intersection) {
                proj += z * *c;
            }
            worst = worst.max((y - proj).norm() / ny.max(f64::MIN_POSITIVE));
        }
        Ok(worst)
    }

    /// Left ideal `L = A p`.
    pub fn left_ideal(&self) -> Result<Vec<ComplexMatrix>> {
        let a = &self.parent;
        let n = a.ambient_dim();
        let vecs: Vec<ComplexVector> = a
            .basis()
            .iter()
            .map(|b| vectorize(&(b * &self.unit_p)))
            .collect();
        let span = linalg::orthonormalize(n * n, &vecs, a.tolerances())?;
        Ok(span
            .basis
            .column_iter()
            .map(|c| linalg::unvectorize(&c.into_owned(), n, n))
            .collect())
    }
}

/// The corner `pAp` with its block structure inherited from the parent.
pub fn hereditary_from_projection(
    a: &Arc<FdCStarAlgebra>,
    p: &ComplexMatrix,
) -> Result<HereditarySubalgebra> {
    let tol = a.tolerances();
    a.ensure_contains(p)?;
    let scale = 1.0 + p.norm();
    let residual = (p - p.adjoint()).norm().max((p * p - p).norm());
    if residual > tol.tol_eq * scale {
        return Err(Error::NotProjection { residual });
    }
    let p = (p + p.adjoint()) * C64::new(0.5, 0.0);

    let mut block_projections = Vec::new();
    let mut corner_bases = Vec::new();
    let mut sub_blocks = Vec::new();
    let mut block_map = Vec::new();
    for b in a.blocks() {
        let pi = b.irrep(&p);
        let pi = (&pi + pi.adjoint()) * C64::new(0.5, 0.0);
        let r = pi.trace().re.round() as usize;
        let v = pivoted_column_basis(&pi, r, tol);
        if r > 0 {
            sub_blocks.push(BlockDescriptor {
                index: 0,
                n: r,
                multiplicity: b.multiplicity,
                central_projection: b.embed(&pi),
                irrep_isometry: &b.irrep_isometry * &v,
                intertwiners: b.intertwiners.iter().map(|t| t * &v).collect(),
            });
            block_map.push(b.index);
        }
        block_projections.push(pi);
        corner_bases.push(v);
    }

    let n = a.ambient_dim();
    let vecs: Vec<ComplexVector> = a.basis().iter().map(|b| vectorize(&(&p * b * &p))).collect();
    let span = linalg::orthonormalize(n * n, &vecs, tol)?;
    let basis: Vec<ComplexMatrix> = span
        .basis
        .column_iter()
        .map(|c| linalg::unvectorize(&c.into_owned(), n, n))
        .collect();
    let as_algebra = FdCStarAlgebra::from_parts(n, basis, p.clone(), sub_blocks, *tol)?;
    Ok(HereditarySubalgebra {
        parent: Arc::clone(a),
        unit_p: p,
        block_projections,
        corner_bases,
        as_algebra: Arc::new(as_algebra),
        block_map,
    })
}

#[derive(Debug, Clone)]
pub struct HereditaryVerdict {
    pub hereditary: bool,
    /// On failure, `(x, y)` with `0 ≤ x ≤ y`, `y ∈ b` and `x ∉ b`.
    pub witness: Option<(ComplexMatrix, ComplexMatrix)>,
}

/// Decides whether the subalgebra `b ⊆ a` is hereditary by comparing it with
/// `pAp` for `p` the unit of `b`.
pub fn is_hereditary(a: &FdCStarAlgebra, b: &FdCStarAlgebra) -> Result<HereditaryVerdict> {
    let tol = a.tolerances();
    if b.ambient_dim() != a.ambient_dim() {
        return Err(Error::NotSubalgebra("different ambient dimension".into()));
    }
    for (k, x) in b.basis().iter().enumerate() {
        if !a.contains(x) {
            return Err(Error::NotSubalgebra(format!(
                "basis element {k} is not in the parent (residual {:.3e})",
                a.membership_residual(x)
            )));
        }
    }
    let p = b.unit();
    let corner_missing = a
        .basis()
        .iter()
        .map(|x| p * x * p)
        .any(|y| !b.contains(&y));
    if !corner_missing {
        return Ok(HereditaryVerdict {
            hereditary: true,
            witness: None,
        });
    }

    // pAp is spanned by embedded rank-one projections onto polarization
    // vectors of range(p_i), so one of them must fall outside b.
    for blk in a.blocks() {
        let pi = blk.irrep(p);
        let pi = (&pi + pi.adjoint()) * C64::new(0.5, 0.0);
        let r = pi.trace().re.round() as usize;
        let v = pivoted_column_basis(&pi, r, tol);
        for u in polarization_vectors(&v) {
            let x = blk.embed(&(&u * u.adjoint()));
            if !b.contains(&x) && is_between(&x, p, tol)? {
                return Ok(HereditaryVerdict {
                    hereditary: false,
                    witness: Some((x, p.clone())),
                });
            }
        }
    }
    Err(Error::Inconsistency(
        "corner differs from subalgebra but no witness was found".into(),
    ))
}

/// `V e_r`, `V (e_r + e_s)/√2`, `V (e_r + i e_s)/√2` for `r < s`.
pub(crate) fn polarization_vectors(v: &ComplexMatrix) -> Vec<ComplexVector> {
    let r = v.ncols();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(r * r);
    for a in 0..r {
        out.push(v.column(a).into_owned());
    }
    for a in 0..r {
        for b in (a + 1)..r {
            out.push((v.column(a) + v.column(b)) * C64::from(h));
            out.push((v.column(a) + v.column(b) * I) * C64::from(h));
        }
    }
    out
}

/// `0 ≤ x ≤ y` up to `tol_eq`.
fn is_between(x: &ComplexMatrix, y: &ComplexMatrix, tol: &linalg::ToleranceConfig) -> Result<bool> {
    let lo = hermitian_eig(x, tol)?.values.last().copied().unwrap_or(0.0);
    let gap = hermitian_eig(&(y - x), tol)?.values.last().copied().unwrap_or(0.0);
    Ok(lo >= -tol.tol_eq && gap >= -tol.tol_eq)
}
