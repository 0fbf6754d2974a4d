//! Wedderburn decomposition of a matrix *-algebra.
//!
//! Minimal central projections come from the spectral projections of a
//! generic self-adjoint element of the center. Inside each central summand a
//! minimal projection of the commutant (found the same way) picks out one
//! copy of the irreducible representation, and the intertwiner space yields
//! the remaining copies.

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{BlockDescriptor, FdCStarAlgebra, Rng};
use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eig, kernel_of_linear_map, pivoted_column_basis, unvectorize, vectorize,
    ComplexMatrix, ComplexVector, ToleranceConfig, C64,
};

const MAX_ATTEMPTS: usize = 8;
const CLUSTER_GAP: f64 = 1e-6;

/// Recomputes the blocks and the aligning unitary of an existing algebra.
pub fn block_decompose(
    a: &FdCStarAlgebra,
    tol: &ToleranceConfig,
) -> Result<(Vec<BlockDescriptor>, ComplexMatrix)> {
    let mut rng = tol.rng_stream(0xB10C);
    let blocks = decompose_blocks(a.ambient_dim(), a.basis(), a.unit(), tol, &mut rng)?;
    let rebuilt = FdCStarAlgebra::from_parts(
        a.ambient_dim(),
        a.basis().to_vec(),
        a.unit().clone(),
        blocks,
        *tol,
    )?;
    Ok((rebuilt.blocks().to_vec(), rebuilt.block_unitary().clone()))
}

pub(crate) fn decompose_blocks(
    ambient_dim: usize,
    basis: &[ComplexMatrix],
    unit: &ComplexMatrix,
    tol: &ToleranceConfig,
    rng: &mut Rng,
) -> Result<Vec<BlockDescriptor>> {
    if basis.is_empty() {
        return Ok(vec![]);
    }
    let center = commuting_elements(ambient_dim, basis, basis, tol);
    let k = center.len();
    let mut projections = if k <= 1 {
        vec![unit.clone()]
    } else {
        central_projections(&center, unit, k, tol, rng)?
    };
    projections.sort_by(|p, q| block_order_key(p).total_cmp(&block_order_key(q)));

    projections
        .into_iter()
        .enumerate()
        .map(|(index, q)| build_block(index, &q, basis, tol, rng))
        .collect()
}

/// Elements of `span(candidates)` commuting with every element of `against`.
fn commuting_elements(
    ambient_dim: usize,
    candidates: &[ComplexMatrix],
    against: &[ComplexMatrix],
    tol: &ToleranceConfig,
) -> Vec<ComplexMatrix> {
    let combine = |c: &ComplexVector| {
        let mut x = ComplexMatrix::zeros(ambient_dim, ambient_dim);
        for (ck, b) in c.iter().zip(candidates) {
            if *ck != C64::new(0.0, 0.0) {
                x += b * *ck;
            }
        }
        x
    };
    let ker = kernel_of_linear_map(candidates.len(), tol, |c| {
        let x = combine(c);
        let parts: Vec<C64> = against
            .iter()
            .flat_map(|b| {
                let comm = &x * b - b * &x;
                comm.as_slice().to_vec()
            })
            .collect();
        ComplexVector::from_vec(parts)
    });
    ker.basis.column_iter().map(|c| combine(&c.into_owned())).collect()
}

/// Self-adjoint spanning set (over the reals) for a *-closed family.
fn hermitian_parts(elems: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let half = C64::new(0.5, 0.0);
    let half_i = C64::new(0.0, -0.5);
    elems
        .iter()
        .flat_map(|z| {
            let zs = z.adjoint();
            [(z + &zs) * half, (z - &zs) * half_i]
        })
        .collect()
}

fn generic_combination(parts: &[ComplexMatrix], rng: &mut Rng) -> ComplexMatrix {
    let (r, c) = parts[0].shape();
    let mut z = ComplexMatrix::zeros(r, c);
    for h in parts {
        let g: f64 = rng.sample(StandardNormal);
        z += h * C64::new(g, 0.0);
    }
    // symmetrize away rounding
    (&z + z.adjoint()) * C64::new(0.5, 0.0)
}

/// Groups of eigenvector indices whose eigenvalues lie within
/// `CLUSTER_GAP * spread` of their neighbour.
fn cluster(values: &[f64]) -> Vec<Vec<usize>> {
    if values.is_empty() {
        return vec![];
    }
    let spread = values[0] - values[values.len() - 1];
    let gap = CLUSTER_GAP * spread;
    let mut groups = vec![vec![0]];
    for k in 1..values.len() {
        if values[k - 1] - values[k] > gap {
            groups.push(vec![k]);
        } else {
            groups.last_mut().expect("non-empty").push(k);
        }
    }
    groups
}

fn spectral_projection(vectors: &ComplexMatrix, group: &[usize]) -> ComplexMatrix {
    let n = vectors.nrows();
    let mut p = ComplexMatrix::zeros(n, n);
    for &k in group {
        let v = vectors.column(k);
        p += v * v.adjoint();
    }
    p
}

fn central_projections(
    center: &[ComplexMatrix],
    unit: &ComplexMatrix,
    k: usize,
    tol: &ToleranceConfig,
    rng: &mut Rng,
) -> Result<Vec<ComplexMatrix>> {
    let parts = hermitian_parts(center);
    for _ in 0..MAX_ATTEMPTS {
        let z = generic_combination(&parts, rng);
        let eig = hermitian_eig(&z, tol)?;
        let mut found = Vec::new();
        for group in cluster(&eig.values) {
            let p = spectral_projection(&eig.vectors, &group);
            let q = unit * p;
            let q = (&q + q.adjoint()) * C64::new(0.5, 0.0);
            // clusters living entirely on the complement of the support
            if q.trace().re > 0.5 {
                found.push(q);
            }
        }
        let idempotent = found
            .iter()
            .all(|q| (q * q - q).norm() <= tol.tol_eq * (1.0 + q.norm()));
        if found.len() == k && idempotent {
            return Ok(found);
        }
    }
    Err(Error::DegenerateSample {
        attempts: MAX_ATTEMPTS,
    })
}

/// Orders blocks by the first ambient coordinate they touch.
fn block_order_key(q: &ComplexMatrix) -> f64 {
    let n = q.nrows();
    (0..n)
        .find(|&j| q[(j, j)].re > 1e-6)
        .map(|j| j as f64 - q[(j, j)].re * 1e-3)
        .unwrap_or(n as f64)
}

fn build_block(
    index: usize,
    q: &ComplexMatrix,
    basis: &[ComplexMatrix],
    tol: &ToleranceConfig,
    rng: &mut Rng,
) -> Result<BlockDescriptor> {
    let r = q.trace().re.round() as usize;
    let qb = pivoted_column_basis(q, r, tol);
    let compressed: Vec<ComplexMatrix> = basis.iter().map(|b| qb.adjoint() * b * &qb).collect();
    let stacked = ComplexMatrix::from_columns(&compressed.iter().map(vectorize).collect::<Vec<_>>());
    let d = linalg::rank(&stacked, tol);
    let n = (d as f64).sqrt().round() as usize;
    if n == 0 || n * n != d || !r.is_multiple_of(n) {
        return Err(Error::Inconsistency(format!(
            "central summand of rank {r} has compressed dimension {d}"
        )));
    }
    let m = r / n;

    let irrep_isometry = if m == 1 {
        qb.clone()
    } else {
        minimal_commutant_isometry(&qb, &compressed, n, m, tol, rng)?
    };
    let intertwiners = intertwiners(&qb, &compressed, &irrep_isometry, basis, n, m, tol)?;
    Ok(BlockDescriptor {
        index,
        n,
        multiplicity: m,
        central_projection: q.clone(),
        irrep_isometry,
        intertwiners,
    })
}

/// Isometry onto the range of a minimal projection of `A' ∩ q M_N q`.
fn minimal_commutant_isometry(
    qb: &ComplexMatrix,
    compressed: &[ComplexMatrix],
    n: usize,
    m: usize,
    tol: &ToleranceConfig,
    rng: &mut Rng,
) -> Result<ComplexMatrix> {
    let r = qb.ncols();
    let comm = kernel_of_linear_map(r * r, tol, |y| {
        let ym = unvectorize(y, r, r);
        let parts: Vec<C64> = compressed
            .iter()
            .flat_map(|b| (&ym * b - b * &ym).as_slice().to_vec())
            .collect();
        ComplexVector::from_vec(parts)
    });
    if comm.dim() != m * m {
        return Err(Error::Inconsistency(format!(
            "commutant of a summand with multiplicity {m} has dimension {}",
            comm.dim()
        )));
    }
    let elems: Vec<ComplexMatrix> = comm
        .basis
        .column_iter()
        .map(|c| unvectorize(&c.into_owned(), r, r))
        .collect();
    let parts = hermitian_parts(&elems);
    for _ in 0..MAX_ATTEMPTS {
        let z = generic_combination(&parts, rng);
        let eig = hermitian_eig(&z, tol)?;
        let groups = cluster(&eig.values);
        if groups.len() == m && groups.iter().all(|g| g.len() == n) {
            let p_top = spectral_projection(&eig.vectors, &groups[0]);
            let f = qb * p_top * qb.adjoint();
            return Ok(pivoted_column_basis(&f, n, tol));
        }
    }
    Err(Error::DegenerateSample {
        attempts: MAX_ATTEMPTS,
    })
}

/// Orthonormal basis `T_1 = W, T_2, …, T_m` of `{T : x T = T π(x)}`, with
/// `T_j* T_k = δ_jk I`.
fn intertwiners(
    qb: &ComplexMatrix,
    compressed: &[ComplexMatrix],
    w: &ComplexMatrix,
    basis: &[ComplexMatrix],
    n: usize,
    m: usize,
    tol: &ToleranceConfig,
) -> Result<Vec<ComplexMatrix>> {
    let r = qb.ncols();
    let w_local = qb.adjoint() * w;
    if m == 1 {
        return Ok(vec![w.clone()]);
    }
    let irreps: Vec<ComplexMatrix> = basis.iter().map(|b| w.adjoint() * b * w).collect();
    let ker = kernel_of_linear_map(r * n, tol, |y| {
        let ym = unvectorize(y, r, n);
        let parts: Vec<C64> = compressed
            .iter()
            .zip(&irreps)
            .flat_map(|(b, p)| (b * &ym - &ym * p).as_slice().to_vec())
            .collect();
        ComplexVector::from_vec(parts)
    });
    if ker.dim() != m {
        return Err(Error::Inconsistency(format!(
            "intertwiner space has dimension {} instead of {m}",
            ker.dim()
        )));
    }
    let inner = |s: &ComplexMatrix, t: &ComplexMatrix| -> C64 {
        s.iter().zip(t.iter()).map(|(a, b)| a.conj() * b).sum::<C64>() / C64::from(n as f64)
    };
    let mut locals = vec![w_local];
    for col in ker.basis.column_iter() {
        if locals.len() == m {
            break;
        }
        let mut y = unvectorize(&col.into_owned(), r, n);
        for _ in 0..2 {
            for t in &locals {
                let c = inner(t, &y);
                y -= t * c;
            }
        }
        let nrm = inner(&y, &y).re.sqrt();
        if nrm > 1e-6 {
            locals.push(y / C64::from(nrm));
        }
    }
    if locals.len() != m {
        return Err(Error::Inconsistency("could not complete intertwiner basis".into()));
    }
    let out: Vec<ComplexMatrix> = locals.iter().map(|y| qb * y).collect();
    for t in &out {
        let err = (t.adjoint() * t - ComplexMatrix::identity(n, n)).norm();
        if err > tol.tol_eq {
            return Err(Error::Inconsistency(format!(
                "intertwiner is not an isometry (residual {err:.3e})"
            )));
        }
    }
    Ok(out)
}
