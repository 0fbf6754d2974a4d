//! States as functionals on an algebra basis, purity, and canonical rays.
//!
//! A state is stored by its values `ω(b_k)` on the Hilbert–Schmidt orthonormal
//! basis, so `ω(x) = Σ_k Tr(b_k* x)·ω(b_k)`. The per-block densities satisfy
//! `ω(x) = Σ_i Tr(D_i π_i(x))`, with `D_i[s][r] = ω(E^{(i)}_{rs})`.

use std::sync::Arc;

use rand::Rng;

use crate::algebra::FdCStarAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, ComplexMatrix, ComplexVector, C64};

/// A ray in the fiber `CP^{n-1}` over a spectrum point, phase-gauged so its
/// first component of modulus above `tol_eq` is real positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint {
    pub fiber: usize,
    pub ray: ComplexVector,
}

impl ProjectivePoint {
    /// Normalizes and gauge-fixes `v`.
    pub fn new(fiber: usize, v: &ComplexVector, gauge_threshold: f64) -> Result<Self> {
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let nrm = v.norm();
        if nrm <= f64::MIN_POSITIVE.sqrt() {
            return Err(Error::InvalidArgument("zero vector does not define a ray".into()));
        }
        let mut ray = v / C64::from(nrm);
        linalg::gauge_fix(&mut ray, gauge_threshold);
        Ok(Self { fiber, ray })
    }

    pub fn dim(&self) -> usize {
        self.ray.len()
    }

    /// `|⟨x|y⟩|`, or `None` across fibers.
    pub fn overlap(&self, other: &ProjectivePoint) -> Option<f64> {
        (self.fiber == other.fiber && self.dim() == other.dim())
            .then(|| self.ray.dotc(&other.ray).norm())
    }

    /// Largest entrywise difference of the gauged rays (same fiber only).
    pub fn gauge_distance(&self, other: &ProjectivePoint) -> f64 {
        if self.fiber != other.fiber || self.dim() != other.dim() {
            return f64::INFINITY;
        }
        (&self.ray - &other.ray).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct State {
    algebra: Arc<FdCStarAlgebra>,
    values: ComplexVector,
    densities: Vec<ComplexMatrix>,
    pure: bool,
}

impl State {
    pub fn algebra(&self) -> &Arc<FdCStarAlgebra> {
        &self.algebra
    }

    /// `ω(b_k)` for the algebra basis.
    pub fn values(&self) -> &ComplexVector {
        &self.values
    }

    pub fn densities(&self) -> &[ComplexMatrix] {
        &self.densities
    }

    pub fn is_pure(&self) -> bool {
        self.pure
    }

    /// `ω(x)` for `x` in the algebra; the component of `x` outside the
    /// algebra is ignored.
    pub fn eval(&self, x: &ComplexMatrix) -> C64 {
        self.algebra.coords(x).dot(&self.values)
    }

    /// Block weights `ω(q_i) = Tr D_i`.
    pub fn block_weights(&self) -> Vec<f64> {
        self.densities.iter().map(|d| d.trace().re).collect()
    }

    /// Spectrum point carrying a pure state.
    pub fn fiber(&self) -> Result<usize> {
        fiber_of(self)
    }

    pub fn ray(&self) -> Result<ProjectivePoint> {
        canonical_ray(self)
    }

    /// Values of `ω` on the basis of an algebra contained in this one.
    /// The result is a positive functional, not normalized in general.
    pub fn restricted_values(&self, sub: &FdCStarAlgebra) -> Result<ComplexVector> {
        if sub.ambient_dim() != self.algebra.ambient_dim() {
            return Err(Error::shape(
                format!("ambient dimension {}", self.algebra.ambient_dim()),
                format!("ambient dimension {}", sub.ambient_dim()),
            ));
        }
        let vals: Vec<C64> = sub
            .basis()
            .iter()
            .map(|b| {
                self.algebra.ensure_contains(b)?;
                Ok(self.eval(b))
            })
            .collect::<Result<_>>()?;
        Ok(ComplexVector::from_vec(vals))
    }

    /// `true` iff both states live on the same algebra instance or on
    /// algebras with identical bases.
    pub fn same_algebra(&self, other: &State) -> bool {
        self.same_algebra_as(&other.algebra)
    }

    pub fn same_algebra_as(&self, a: &Arc<FdCStarAlgebra>) -> bool {
        Arc::ptr_eq(&self.algebra, a) || self.algebra.basis() == a.basis()
    }
}

/// Certifies positivity (Gram matrix `[ω(b_j* b_k)]` PSD) and normalization,
/// then computes densities and purity.
pub fn make_state(algebra: &Arc<FdCStarAlgebra>, values: &ComplexVector) -> Result<State> {
    let a = algebra.as_ref();
    let tol = a.tolerances();
    if values.len() != a.dim() {
        return Err(Error::shape(format!("{} values", a.dim()), format!("{} values", values.len())));
    }
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let eval = |x: &ComplexMatrix| a.coords(x).dot(values);

    let unit_value = eval(a.unit());
    if (unit_value - C64::from(1.0)).norm() > tol.tol_eq {
        return Err(Error::NotNormalized { value: unit_value.re });
    }

    let gram = gram_matrix(a, values);
    let herm = linalg::hermitian_residual(&gram);
    let scale = gram.norm().max(1.0);
    if herm > tol.tol_eq * scale {
        return Err(Error::NotHermitian { residual: herm });
    }
    let eig = hermitian_eig(&((&gram + gram.adjoint()) * C64::from(0.5)), tol)?;
    if let Some(&lowest) = eig.values.last() {
        if lowest < -tol.tol_eq * scale {
            return Err(Error::NotPositive { eigenvalue: lowest });
        }
    }

    let densities = a
        .blocks()
        .iter()
        .map(|b| {
            let mut d = ComplexMatrix::zeros(b.n, b.n);
            for r in 0..b.n {
                for s in 0..b.n {
                    d[(s, r)] = eval(&b.embed(&linalg::matrix_unit(b.n, r, s)));
                }
            }
            (&d + d.adjoint()) * C64::from(0.5)
        })
        .collect::<Vec<_>>();
    from_parts(algebra, values.clone(), densities)
}

/// `G_jk = ω(b_j* b_k)`.
pub fn gram_matrix(a: &FdCStarAlgebra, values: &ComplexVector) -> ComplexMatrix {
    let basis = a.basis();
    let d = basis.len();
    let mut g = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        let bj = basis[j].adjoint();
        for k in 0..d {
            g[(j, k)] = a.coords(&(&bj * &basis[k])).dot(values);
        }
    }
    g
}

fn from_parts(
    algebra: &Arc<FdCStarAlgebra>,
    values: ComplexVector,
    densities: Vec<ComplexMatrix>,
) -> Result<State> {
    let pure = density_purity(&densities, algebra.tolerances())?;
    Ok(State { algebra: Arc::clone(algebra), values, densities, pure })
}

/// Exactly one nonzero density, of numerical rank one.
fn density_purity(densities: &[ComplexMatrix], tol: &linalg::ToleranceConfig) -> Result<bool> {
    let nonzero: Vec<&ComplexMatrix> =
        densities.iter().filter(|d| d.trace().re > tol.tol_eq).collect();
    if nonzero.len() != 1 {
        return Ok(false);
    }
    let eig = hermitian_eig(nonzero[0], tol)?;
    let top = eig.values[0];
    Ok(eig.values.iter().skip(1).all(|&l| l.abs() <= tol.tol_rank * top))
}

/// The state `ω(x) = Σ_i Tr(D_i π_i(x))` for positive densities of total trace 1.
pub fn state_from_densities(
    algebra: &Arc<FdCStarAlgebra>,
    densities: &[ComplexMatrix],
) -> Result<State> {
    let a = algebra.as_ref();
    let tol = a.tolerances();
    if densities.len() != a.blocks().len() {
        return Err(Error::shape(
            format!("{} densities", a.blocks().len()),
            format!("{}", densities.len()),
        ));
    }
    let mut total = 0.0;
    for (d, b) in densities.iter().zip(a.blocks()) {
        if d.shape() != (b.n, b.n) {
            return Err(Error::shape(format!("{0}x{0}", b.n), format!("{}x{}", d.nrows(), d.ncols())));
        }
        linalg::ensure_finite(d)?;
        let eig = hermitian_eig(d, tol)?;
        if let Some(&lowest) = eig.values.last() {
            if lowest < -tol.tol_eq {
                return Err(Error::NotPositive { eigenvalue: lowest });
            }
        }
        total += d.trace().re;
    }
    if (total - 1.0).abs() > tol.tol_eq {
        return Err(Error::NotNormalized { value: total });
    }
    let values = ComplexVector::from_iterator(
        a.dim(),
        a.basis().iter().map(|x| {
            densities
                .iter()
                .zip(a.blocks())
                .map(|(d, b)| (d * b.irrep(x)).trace())
                .sum::<C64>()
        }),
    );
    let densities = densities.iter().map(|d| (d + d.adjoint()) * C64::from(0.5)).collect();
    from_parts(algebra, values, densities)
}

/// Convex combination of states on one algebra.
pub fn mixture(states: &[(f64, &State)]) -> Result<State> {
    let first = states.first().ok_or(Error::EmptyCandidate)?.1;
    let algebra = first.algebra();
    let mut densities: Vec<ComplexMatrix> =
        algebra.blocks().iter().map(|b| ComplexMatrix::zeros(b.n, b.n)).collect();
    for (w, s) in states {
        if !s.same_algebra(first) {
            return Err(Error::InvalidArgument("mixture of states on different algebras".into()));
        }
        if *w < 0.0 {
            return Err(Error::InvalidArgument(format!("negative weight {w}")));
        }
        for (acc, d) in densities.iter_mut().zip(s.densities()) {
            *acc += d * C64::from(*w);
        }
    }
    state_from_densities(algebra, &densities)
}

/// The unique block where a pure state lives.
pub fn fiber_of(state: &State) -> Result<usize> {
    if !state.pure {
        return Err(Error::NotPure);
    }
    let tol = state.algebra.tolerances().tol_eq;
    state
        .densities
        .iter()
        .position(|d| d.trace().re > tol)
        .map(|i| state.algebra.blocks()[i].index)
        .ok_or(Error::NotPure)
}

/// Gauge-fixed top eigenvector of the single nonzero density.
pub fn canonical_ray(state: &State) -> Result<ProjectivePoint> {
    let i = fiber_of(state)?;
    let tol = state.algebra.tolerances();
    let eig = hermitian_eig(&state.densities[i], tol)?;
    if eig.values.len() > 1 && eig.values[0] - eig.values[1] <= tol.tol_eq {
        return Err(Error::NotPure);
    }
    ProjectivePoint::new(i, &eig.vectors.column(0).into_owned(), tol.tol_eq)
}

/// The vector state `ω(x) = ⟨ray|π_i(x) ray⟩`.
pub fn state_from_ray(algebra: &Arc<FdCStarAlgebra>, point: &ProjectivePoint) -> Result<State> {
    let a = algebra.as_ref();
    let block = a.block(point.fiber)?;
    if point.dim() != block.n {
        return Err(Error::shape(format!("ray in C^{}", block.n), format!("C^{}", point.dim())));
    }
    let nrm = point.ray.norm();
    if (nrm - 1.0).abs() > a.tolerances().tol_ortho.max(1e3 * f64::EPSILON) {
        return Err(Error::NotNormalized { value: nrm });
    }
    let x = &point.ray;
    let values = ComplexVector::from_iterator(
        a.dim(),
        a.basis().iter().map(|b| x.dotc(&(block.irrep(b) * x))),
    );
    let densities = a
        .blocks()
        .iter()
        .map(|b| {
            if b.index == point.fiber {
                x * x.adjoint()
            } else {
                ComplexMatrix::zeros(b.n, b.n)
            }
        })
        .collect();
    Ok(State { algebra: Arc::clone(algebra), values, densities, pure: true })
}

/// Vector state at an arbitrary nonzero vector of a fiber.
pub fn vector_state(algebra: &Arc<FdCStarAlgebra>, fiber: usize, v: &ComplexVector) -> Result<State> {
    let point = ProjectivePoint::new(fiber, v, algebra.tolerances().tol_eq)?;
    state_from_ray(algebra, &point)
}

/// Haar-random pure state on the given fiber.
pub fn random_pure_state<R: Rng + ?Sized>(
    rng: &mut R,
    algebra: &Arc<FdCStarAlgebra>,
    fiber: usize,
) -> Result<State> {
    let n = algebra.block(fiber)?.n;
    vector_state(algebra, fiber, &linalg::random_unit_vector(rng, n))
}

/// Random state with full-rank densities on every block.
pub fn random_faithful_state<R: Rng + ?Sized>(rng: &mut R, algebra: &Arc<FdCStarAlgebra>) -> Result<State> {
    let mut densities: Vec<ComplexMatrix> = algebra
        .blocks()
        .iter()
        .map(|b| {
            let g = linalg::random_matrix(rng, b.n, b.n);
            &g * g.adjoint() + ComplexMatrix::identity(b.n, b.n) * C64::from(0.1)
        })
        .collect();
    let total: f64 = densities.iter().map(|d| d.trace().re).sum();
    densities.iter_mut().for_each(|d| *d /= C64::from(total));
    state_from_densities(algebra, &densities)
}
