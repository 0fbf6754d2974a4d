//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are plain `nalgebra` dense matrices over `Complex64`. Rank
//! decisions are always relative to the largest singular value so that every
//! routine is invariant under rescaling its input.

use nalgebra as na;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use num_complex::Complex64 as C64;

pub type ComplexMatrix = na::DMatrix<C64>;
pub type ComplexVector = na::DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Numerical thresholds and the seed for every randomized procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative singular-value cutoff for rank decisions.
    pub tol_rank: f64,
    /// Absolute tolerance for equality comparisons.
    pub tol_eq: f64,
    /// Tolerance for orthonormality and unitarity.
    pub tol_ortho: f64,
    pub rng_seed: u64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            tol_rank: 1e-9,
            tol_eq: 1e-8,
            tol_ortho: 1e-10,
            rng_seed: 42,
        }
    }
}

impl ToleranceConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            rng_seed: seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol_rank", self.tol_rank),
            ("tol_eq", self.tol_eq),
            ("tol_ortho", self.tol_ortho),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Generator for the main stream.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed)
    }

    /// Independent deterministic stream, one per task label.
    pub fn rng_stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(stream);
        rng
    }
}

/// Builds a matrix from row-major nested rows, rejecting ragged or non-finite input.
pub fn matrix_from_rows(rows: &[Vec<C64>]) -> Result<ComplexMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::shape(
                format!("{ncols} columns"),
                format!("{} columns in row {i}", row.len()),
            ));
        }
    }
    let m = ComplexMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
    ensure_finite(&m)?;
    Ok(m)
}

pub fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn adjoint(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

pub fn multiply(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.ncols() != b.nrows() {
        return Err(Error::shape(
            format!("{} rows on the right factor", a.ncols()),
            b.nrows(),
        ));
    }
    Ok(a * b)
}

/// Hilbert–Schmidt inner product `Tr(a* b)`.
pub fn trace_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!("{:?}", a.shape()), format!("{:?}", b.shape())));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

pub fn is_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::shape("square matrix", format!("{}x{}", m.nrows(), m.ncols())));
    }
    Ok(m.nrows())
}

/// Relative Frobenius size of the skew-Hermitian part.
pub fn hermitian_residual(m: &ComplexMatrix) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / scale
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Unitary; column `k` belongs to `values[k]`.
    pub vectors: ComplexMatrix,
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in descending
/// order and each eigenvector's first non-negligible component real positive.
pub fn hermitian_eig(m: &ComplexMatrix, tol: &ToleranceConfig) -> Result<HermitianEigen> {
    let n = is_square(m)?;
    ensure_finite(m)?;
    let residual = hermitian_residual(m);
    if residual > tol.tol_eq {
        return Err(Error::NotHermitian { residual });
    }
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = na::SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps the solver's order on exact ties
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v: ComplexVector = eig.eigenvectors.column(src).into_owned();
        gauge_fix(&mut v, tol.tol_eq);
        vectors.set_column(dst, &v);
    }
    Ok(HermitianEigen { values, vectors })
}

/// Rotates `v` so its first component with modulus above `threshold` is real positive.
pub fn gauge_fix(v: &mut ComplexVector, threshold: f64) {
    if let Some(z) = v.iter().find(|z| z.norm() > threshold).copied() {
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

/// Singular value decomposition `m = U diag(s) V*` with `s` descending.
///
/// `U` is `rows x cols`; its columns are orthonormal for nonzero singular
/// values and zero otherwise. Singular values at rounding level `ε‖m‖_F` are
/// reported as zero. `V` is a full `cols x cols` unitary. Computed by one-sided Jacobi rotations, which stay accurate on
/// rank-deficient input.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 80;

pub fn svd(m: &ComplexMatrix) -> Svd {
    svd_impl(m, true)
}

/// As [`svd`], but for wide input `V` has only `rows` columns, spanning the
/// row space. Enough for ranks, column spans and least squares.
pub fn svd_thin(m: &ComplexMatrix) -> Svd {
    svd_impl(m, false)
}

fn svd_impl(m: &ComplexMatrix, full_v: bool) -> Svd {
    let (rows, cols) = m.shape();
    if rows >= cols {
        return jacobi_svd(m);
    }
    // wide: factor the adjoint, then complete V by the orthogonal complement
    // of the row space
    let t = jacobi_svd(&m.adjoint());
    if !full_v {
        return Svd { u: t.v, singular_values: t.singular_values, v: t.u };
    }
    let mut u = ComplexMatrix::zeros(rows, cols);
    u.columns_mut(0, rows).copy_from(&t.v);
    let r = t.singular_values.iter().filter(|&&s| s > 0.0).count();
    let mut v = ComplexMatrix::zeros(cols, cols);
    v.columns_mut(0, r).copy_from(&t.u.columns(0, r));
    if r < cols {
        let row_space = t.u.columns(0, r);
        let q = ComplexMatrix::identity(cols, cols) - row_space * row_space.adjoint();
        let rest = pivoted_column_basis(&q, cols - r, &ToleranceConfig::default());
        v.columns_mut(r, cols - r).copy_from(&rest);
    }
    let mut singular_values = t.singular_values;
    singular_values.resize(cols, 0.0);
    Svd { u, singular_values, v }
}

/// One-sided Jacobi on a matrix with `rows >= cols`. Singular values at
/// rounding level of the whole matrix are reported as exactly zero.
fn jacobi_svd(m: &ComplexMatrix) -> Svd {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(cols, cols);
    // columns at rounding level are left alone: their overlaps never shrink
    // below the relative threshold
    let negligible = (f64::EPSILON * m.norm()).powi(2);
    let rotate = |mat: &mut ComplexMatrix, p: usize, q: usize, phase: C64, c: f64, s: f64| {
        for k in 0..mat.nrows() {
            let xp = mat[(k, p)];
            let xq = mat[(k, q)] * phase;
            mat[(k, p)] = xp * c - xq * s;
            mat[(k, q)] = xp * s + xq * c;
        }
    };
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                // after the phase `γ̄/|γ|` on column q the pair has a real
                // positive overlap and a real rotation finishes the job
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, phase, c, s);
                rotate(&mut v, p, q, phase, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols)
        .map(|k| {
            let n = a.column(k).norm();
            if n * n <= negligible {
                0.0
            } else {
                n
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = ComplexMatrix::zeros(rows, cols);
    let mut vs = ComplexMatrix::zeros(cols, cols);
    for (dst, &src) in order.iter().enumerate() {
        if norms[src] > 0.0 {
            u.set_column(dst, &(a.column(src) / C64::from(norms[src])));
        }
        vs.set_column(dst, &v.column(src));
    }
    Svd { u, singular_values: order.iter().map(|&k| norms[k]).collect(), v: vs }
}

impl Svd {
    /// Minimum-norm least-squares solution, treating `s_k <= cutoff` as zero.
    pub fn solve(&self, rhs: &ComplexVector, cutoff: f64) -> ComplexVector {
        let mut x = ComplexVector::zeros(self.v.nrows());
        for (k, &s) in self.singular_values.iter().enumerate() {
            if s > cutoff {
                let coeff = self.u.column(k).dotc(rhs) / C64::from(s);
                x += self.v.column(k) * coeff;
            }
        }
        x
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.is_empty() {
        return vec![];
    }
    svd_thin(m).singular_values
}

pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// A linear subspace held as an orthonormal column basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub ambient_dim: usize,
    /// `ambient_dim x dim`, orthonormal columns.
    pub basis: ComplexMatrix,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: ComplexMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: ComplexMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Wraps columns that are already orthonormal, checking the Gram matrix.
    pub fn from_orthonormal(basis: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let k = basis.ncols();
        let gram = basis.adjoint() * &basis;
        let err = (gram - ComplexMatrix::identity(k, k)).norm();
        if err > tol.tol_ortho.max(1e3 * f64::EPSILON * k as f64) {
            return Err(Error::InvalidArgument(format!(
                "basis is not orthonormal (Gram residual {err:.3e})"
            )));
        }
        Ok(Self {
            ambient_dim: basis.nrows(),
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn vectors(&self) -> Vec<ComplexVector> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// Norm of the component of `v` outside the subspace.
    pub fn residual(&self, v: &ComplexVector) -> f64 {
        let coeffs = self.basis.adjoint() * v;
        (v - &self.basis * coeffs).norm()
    }

    pub fn contains(&self, v: &ComplexVector, tol: f64) -> bool {
        self.residual(v) <= tol * v.norm().max(f64::MIN_POSITIVE)
    }

    /// Orthogonal complement inside the ambient space.
    pub fn complement(&self, tol: &ToleranceConfig) -> Subspace {
        let p = ComplexMatrix::identity(self.ambient_dim, self.ambient_dim) - self.projector();
        let rank = self.ambient_dim - self.dim();
        Subspace {
            ambient_dim: self.ambient_dim,
            basis: pivoted_column_basis(&p, rank, tol),
        }
    }

    /// `true` when both subspaces have the same span.
    pub fn same_span(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient_dim == other.ambient_dim
            && self.dim() == other.dim()
            && (self.projector() - other.projector()).norm() <= tol
    }
}

/// Orthonormal basis for the span of `vectors`; rank is decided by
/// `sigma_i / sigma_max > tol_rank`.
pub fn orthonormalize(
    ambient_dim: usize,
    vectors: &[ComplexVector],
    tol: &ToleranceConfig,
) -> Result<Subspace> {
    if let Some(v) = vectors.iter().find(|v| v.len() != ambient_dim) {
        return Err(Error::shape(ambient_dim, v.len()));
    }
    if vectors.is_empty() {
        return Ok(Subspace::zero(ambient_dim));
    }
    let m = ComplexMatrix::from_columns(vectors);
    Ok(orthonormalize_columns(&m, tol))
}

/// Orthonormal basis for the column span of `m`.
pub fn orthonormalize_columns(m: &ComplexMatrix, tol: &ToleranceConfig) -> Subspace {
    orthonormalize_columns_with_floor(m, tol, 0.0)
}

/// As [`orthonormalize_columns`], but singular values at or below `floor`
/// are dropped as well, so a span of pure rounding noise is empty.
pub fn orthonormalize_columns_with_floor(m: &ComplexMatrix, tol: &ToleranceConfig, floor: f64) -> Subspace {
    let ambient_dim = m.nrows();
    if m.ncols() == 0 || ambient_dim == 0 {
        return Subspace::zero(ambient_dim);
    }
    let svd = svd_thin(m);
    let u = svd.u;
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax <= floor {
        return Subspace::zero(ambient_dim);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > floor && svd.singular_values[k] / smax > tol.tol_rank)
        .collect();
    let cols: Vec<ComplexVector> = keep.iter().map(|&k| u.column(k).into_owned()).collect();
    Subspace {
        ambient_dim,
        basis: if cols.is_empty() {
            ComplexMatrix::zeros(ambient_dim, 0)
        } else {
            ComplexMatrix::from_columns(&cols)
        },
    }
}

/// Numerical rank relative to the largest singular value.
pub fn rank(m: &ComplexMatrix, tol: &ToleranceConfig) -> usize {
    rank_with_floor(m, tol, 0.0)
}

/// As [`rank`], ignoring singular values at or below `floor`.
pub fn rank_with_floor(m: &ComplexMatrix, tol: &ToleranceConfig, floor: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&smax) if smax > floor => s.iter().filter(|&&x| x > floor && x / smax > tol.tol_rank).count(),
        _ => 0,
    }
}

/// Right null space `{x : m x = 0}` with the relative rank cutoff.
pub fn null_space(m: &ComplexMatrix, tol: &ToleranceConfig) -> Subspace {
    null_space_with_floor(m, tol, 0.0)
}

/// As [`null_space`], but singular values at or below `floor` also count as
/// zero, so that a map which vanishes up to rounding has a full kernel.
pub fn null_space_with_floor(m: &ComplexMatrix, tol: &ToleranceConfig, floor: f64) -> Subspace {
    let n = m.ncols();
    if n == 0 {
        return Subspace::zero(0);
    }
    let svd = svd(m);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cols: Vec<ComplexVector> = (0..n)
        .filter(|&k| {
            let s = svd.singular_values[k];
            smax <= floor || s <= floor || s / smax <= tol.tol_rank
        })
        .map(|k| svd.v.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        Subspace::zero(n)
    } else {
        Subspace {
            ambient_dim: n,
            basis: ComplexMatrix::from_columns(&cols),
        }
    }
}

pub fn projector(s: &Subspace) -> ComplexMatrix {
    s.projector()
}

/// Canonical orthonormal basis for the range of a projector of known rank.
///
/// Greedy modified Gram–Schmidt over the projector's columns, always taking
/// the column with the largest remaining norm (lowest index on ties) and
/// rotating its pivot entry to the positive real axis. For a coordinate
/// projector this returns the selected standard basis vectors in order.
pub fn pivoted_column_basis(p: &ComplexMatrix, rank: usize, tol: &ToleranceConfig) -> ComplexMatrix {
    let n = p.nrows();
    let mut residual = p.clone();
    let mut basis: Vec<ComplexVector> = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut best = 0;
        let mut best_norm = -1.0;
        for j in 0..residual.ncols() {
            let nrm = residual.column(j).norm();
            if nrm > best_norm * (1.0 + 1e-12) {
                best = j;
                best_norm = nrm;
            }
        }
        if best_norm <= 0.0 {
            break;
        }
        let mut v: ComplexVector = residual.column(best).into_owned();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let nv = v.norm();
        if nv == 0.0 {
            break;
        }
        v /= C64::from(nv);
        let pivot = v[best];
        if pivot.norm() > tol.tol_eq {
            v *= pivot.conj() / pivot.norm();
        } else {
            gauge_fix(&mut v, tol.tol_eq);
        }
        for mut col in residual.column_iter_mut() {
            let c = v.dotc(&col.clone_owned());
            col -= &v * c;
        }
        basis.push(v);
    }
    if basis.is_empty() {
        ComplexMatrix::zeros(n, 0)
    } else {
        ComplexMatrix::from_columns(&basis)
    }
}

/// Intersection of two subspaces of the same ambient space.
pub fn intersect(a: &Subspace, b: &Subspace, tol: &ToleranceConfig) -> Result<Subspace> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::shape(a.ambient_dim, b.ambient_dim));
    }
    if a.dim() == 0 || b.dim() == 0 {
        return Ok(Subspace::zero(a.ambient_dim));
    }
    // a x = b y  <=>  [a, -b] (x; y) = 0
    let mut stacked = ComplexMatrix::zeros(a.ambient_dim, a.dim() + b.dim());
    stacked.view_mut((0, 0), (a.ambient_dim, a.dim())).copy_from(&a.basis);
    stacked
        .view_mut((0, a.dim()), (a.ambient_dim, b.dim()))
        .copy_from(&(-&b.basis));
    let ns = null_space(&stacked, tol);
    let vecs: Vec<ComplexVector> = ns
        .basis
        .column_iter()
        .map(|c| &a.basis * c.rows(0, a.dim()))
        .collect();
    orthonormalize(a.ambient_dim, &vecs, tol)
}

/// Column-major flattening of a matrix into `C^(rows*cols)`.
pub fn vectorize(m: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &ComplexVector, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Absolute cutoff for [`kernel_of_linear_map`]; the maps it is used with
/// take unit vectors to unit-scale outputs.
pub const KERNEL_NOISE_FLOOR: f64 = 1e-12;

/// Orthonormal basis for the solutions `x` of the homogeneous linear system
/// `f(x) = 0`, where `f` is given as a function on coordinate vectors.
pub fn kernel_of_linear_map<F>(input_dim: usize, tol: &ToleranceConfig, f: F) -> Subspace
where
    F: Fn(&ComplexVector) -> ComplexVector,
{
    if input_dim == 0 {
        return Subspace::zero(0);
    }
    let cols: Vec<ComplexVector> = (0..input_dim)
        .map(|j| {
            let mut e = ComplexVector::zeros(input_dim);
            e[j] = ONE;
            f(&e)
        })
        .collect();
    let m = ComplexMatrix::from_columns(&cols);
    null_space_with_floor(&m, tol, KERNEL_NOISE_FLOOR)
}

/// Uniformly distributed unit vector in `C^n` (normalized complex Gaussian).
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    loop {
        let v = ComplexVector::from_fn(n, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let nrm = v.norm();
        if nrm > 1e-300 {
            return v / C64::from(nrm);
        }
    }
}

/// Complex Gaussian matrix.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n, n);
    (&g + g.adjoint()).scale(0.5)
}

/// Haar-ish unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n, n);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // fix column phases so the distribution does not depend on the QR convention
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let col = u.column(j) * (d / d.norm());
            u.set_column(j, &col);
        }
    }
    u
}

pub fn standard_basis_vector(n: usize, k: usize) -> ComplexVector {
    let mut e = ComplexVector::zeros(n);
    e[k] = ONE;
    e
}

/// Matrix unit `E_{rs}` in `M_n`.
pub fn matrix_unit(n: usize, r: usize, s: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    m[(r, s)] = ONE;
    m
}

pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - ComplexMatrix::identity(n, n)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn svd_reconstructs_rank_deficient_matrices() {
        let mut rng = ToleranceConfig::default().rng();
        for (rows, cols, r) in [(16, 4, 1), (16, 4, 4), (3, 7, 2), (5, 5, 0), (6, 6, 3)] {
            let m = random_matrix(&mut rng, rows, r) * random_matrix(&mut rng, r, cols);
            let d = svd(&m);
            let s = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(cols, d.singular_values.iter().map(|&x| c(x))));
            let err = (&d.u * s * d.v.adjoint() - &m).norm();
            assert!(err <= 1e-13 * (1.0 + m.norm()), "{rows}x{cols} rank {r}: {err:e}");
            assert!(unitarity_residual(&d.v) < 1e-13);
            assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
            assert_eq!(d.singular_values.iter().filter(|&&x| x > 1e-10 * d.singular_values[0].max(1.0)).count(), r);
            let kept = d.u.columns(0, r);
            assert!((kept.adjoint() * kept - ComplexMatrix::identity(r, r)).norm() < 1e-13);
        }
    }

    #[test]
    fn diagonal_eig_is_a_permutation() {
        let tol = ToleranceConfig::default();
        let m = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(1.0), c(2.0)]));
        let eig = hermitian_eig(&m, &tol).unwrap();
        assert_eq!(eig.values, vec![2.0, 1.0]);
        let expected = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        assert!((eig.vectors - expected).norm() < 1e-14);
    }

    #[test]
    fn zero_matrix_eig() {
        let tol = ToleranceConfig::default();
        let eig = hermitian_eig(&ComplexMatrix::zeros(3, 3), &tol).unwrap();
        assert_eq!(eig.values, vec![0.0; 3]);
        assert!((eig.vectors - ComplexMatrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let tol = ToleranceConfig::default();
        let m = matrix_unit(2, 0, 1);
        assert!(matches!(hermitian_eig(&m, &tol), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let tol = ToleranceConfig::default();
        let mut rng = tol.rng();
        for n in 1..9 {
            let h = random_hermitian(&mut rng, n);
            let eig = hermitian_eig(&h, &tol).unwrap();
            let d = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
                n,
                eig.values.iter().map(|&x| c(x)),
            ));
            let rebuilt = &eig.vectors * d * eig.vectors.adjoint();
            assert!((rebuilt - &h).norm() <= 1e-10 * h.norm());
            assert!(unitarity_residual(&eig.vectors) <= tol.tol_ortho);
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
            // largest |eigenvalue| is the operator norm
            let top = eig.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
            assert_relative_eq!(top, operator_norm(&h), max_relative = 1e-9);
        }
    }

    #[test]
    fn orthonormalize_examples() {
        let tol = ToleranceConfig::default();
        let v = |a: f64, b: f64| ComplexVector::from_vec(vec![c(a), c(b)]);
        let s = orthonormalize(2, &[v(1.0, 0.0), v(2.0, 0.0)], &tol).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.contains(&v(1.0, 0.0), 1e-12));

        let s = orthonormalize(2, &[v(1.0, 0.0), v(0.0, 1.0)], &tol).unwrap();
        assert_eq!(s.dim(), 2);

        assert_eq!(orthonormalize(3, &[], &tol).unwrap().dim(), 0);
    }

    #[test]
    fn near_parallel_pair_is_rank_one() {
        // singular values of [v, v + 1e-15 w] are ~sqrt(2) and ~7e-16, far below the cutoff
        let tol = ToleranceConfig::default();
        let v = ComplexVector::from_vec(vec![c(0.6), c(0.8), ZERO]);
        let w = ComplexVector::from_vec(vec![ZERO, ZERO, ONE]);
        let m = ComplexMatrix::from_columns(&[v.clone(), &v + &w * c(1e-15)]);
        let s = singular_values(&m);
        assert!(s[1] / s[0] < 1e-14);
        assert_eq!(orthonormalize(3, &[v.clone(), v + w * c(1e-15)], &tol).unwrap().dim(), 1);
    }

    #[test]
    fn projector_and_null_space_examples() {
        let tol = ToleranceConfig::default();
        let s = Subspace {
            ambient_dim: 2,
            basis: ComplexMatrix::from_column_slice(2, 1, &[ONE, ZERO]),
        };
        assert_eq!(projector(&s), matrix_unit(2, 0, 0));
        assert_eq!(null_space(&ComplexMatrix::identity(3, 3), &tol).dim(), 0);
        assert_eq!(null_space(&ComplexMatrix::zeros(2, 3), &tol).dim(), 3);
        let wide = ComplexMatrix::from_row_slice(1, 3, &[ONE, ONE, ZERO]);
        let ns = null_space(&wide, &tol);
        assert_eq!(ns.dim(), 2);
        assert!((wide * &ns.basis).norm() < 1e-14);
    }

    #[test]
    fn random_projectors_are_idempotent() {
        let tol = ToleranceConfig::default();
        let mut rng = tol.rng();
        for k in 1..5 {
            let vs: Vec<_> = (0..k).map(|_| random_unit_vector(&mut rng, 6)).collect();
            let s = orthonormalize(6, &vs, &tol).unwrap();
            let p = projector(&s);
            assert!((&p * &p - &p).norm() < 1e-10);
            assert!(hermitian_residual(&p) < 1e-12);
            assert!((p.trace().re - k as f64).abs() < tol.tol_eq);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(multiply(&a, &a), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            trace_inner(&a, &ComplexMatrix::zeros(3, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            matrix_from_rows(&[vec![ONE, ONE], vec![ONE]]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            matrix_from_rows(&[vec![C64::new(f64::NAN, 0.0)]]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn pivoted_basis_of_coordinate_projector() {
        let tol = ToleranceConfig::default();
        let mut p = ComplexMatrix::zeros(5, 5);
        for k in 2..5 {
            p[(k, k)] = ONE;
        }
        let b = pivoted_column_basis(&p, 3, &tol);
        for (j, k) in (2..5).enumerate() {
            assert_eq!(b.column(j).into_owned(), standard_basis_vector(5, k));
        }
    }

    #[test]
    fn intersection_of_planes() {
        let tol = ToleranceConfig::default();
        let e = |k| standard_basis_vector(3, k);
        let a = orthonormalize(3, &[e(0), e(1)], &tol).unwrap();
        let b = orthonormalize(3, &[e(1), e(2)], &tol).unwrap();
        let i = intersect(&a, &b, &tol).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.contains(&e(1), 1e-12));
    }

    #[test]
    fn gauge_fix_rotates_first_component() {
        let mut v = ComplexVector::from_vec(vec![C64::new(0.0, 1e-12), I, ONE]);
        gauge_fix(&mut v, 1e-8);
        assert!((v[1] - ONE).norm() < 1e-15);
    }
}
