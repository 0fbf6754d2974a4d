//! Gelfand transforms `f_a(ω) = ω(a)` on pure states, their inversion from
//! sampled values, the induced star product, and norm recovery.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rand::Rng;

use crate::algebra::FdCStarAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, ComplexMatrix, ComplexVector, C64, I};
use crate::states::{random_pure_state, vector_state, State};

pub type Evaluator = Arc<dyn Fn(&State) -> Result<C64> + Send + Sync>;

/// A function on the pure states of an algebra, optionally known to be the
/// transform of an element.
#[derive(Clone)]
pub struct TransformFunction {
    pub algebra: Arc<FdCStarAlgebra>,
    pub element: Option<ComplexMatrix>,
    evaluator: Evaluator,
}

impl std::fmt::Debug for TransformFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransformFunction")
            .field("dim", &self.algebra.dim())
            .field("element", &self.element)
            .finish_non_exhaustive()
    }
}

impl TransformFunction {
    /// An arbitrary function of pure states with no known preimage.
    pub fn from_fn(algebra: &Arc<FdCStarAlgebra>, f: impl Fn(&State) -> Result<C64> + Send + Sync + 'static) -> Self {
        Self { algebra: Arc::clone(algebra), element: None, evaluator: Arc::new(f) }
    }

    pub fn eval(&self, state: &State) -> Result<C64> {
        if !state.same_algebra_as(&self.algebra) {
            return Err(Error::InvalidArgument("state belongs to a different algebra".into()));
        }
        if !state.is_pure() {
            return Err(Error::NotPure);
        }
        (self.evaluator)(state)
    }

    /// `f̄(ω) = conj f(ω)`, the transform of `a*`.
    pub fn conjugate(&self) -> Self {
        let inner = Arc::clone(&self.evaluator);
        Self {
            algebra: Arc::clone(&self.algebra),
            element: self.element.as_ref().map(|a| a.adjoint()),
            evaluator: Arc::new(move |s| Ok(inner(s)?.conj())),
        }
    }
}

/// `f_a(ω) = ω(a)`.
pub fn gelfand(algebra: &Arc<FdCStarAlgebra>, a: &ComplexMatrix) -> Result<TransformFunction> {
    algebra.ensure_contains(a)?;
    let x = a.clone();
    Ok(TransformFunction {
        algebra: Arc::clone(algebra),
        element: Some(a.clone()),
        evaluator: Arc::new(move |s: &State| Ok(s.eval(&x))),
    })
}

/// Pure states whose functionals span the dual of the algebra.
#[derive(Debug, Clone)]
pub struct TomographyFrame {
    pub algebra: Arc<FdCStarAlgebra>,
    pub states: Vec<State>,
    /// `design[(k, j)] = ω_k(b_j)`.
    pub design: ComplexMatrix,
    pub condition: f64,
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Largest accepted condition number of a frame's design matrix.
pub const MAX_FRAME_CONDITION: f64 = 100.0;

/// Rays `e_r`, then `(e_r + e_s)/√2` and `(e_r + i e_s)/√2` for `r < s`.
pub fn polarization_rays(n: usize) -> Vec<ComplexVector> {
    let e = |k| linalg::standard_basis_vector(n, k);
    let mut rays: Vec<ComplexVector> = (0..n).map(e).collect();
    for r in 0..n {
        for s in r + 1..n {
            rays.push((e(r) + e(s)) / C64::from(SQRT_2));
            rays.push((e(r) + e(s) * I) / C64::from(SQRT_2));
        }
    }
    rays
}

pub fn build_frame(algebra: &Arc<FdCStarAlgebra>) -> Result<TomographyFrame> {
    let mut states = Vec::new();
    for b in algebra.blocks() {
        for ray in polarization_rays(b.n) {
            states.push(vector_state(algebra, b.index, &ray)?);
        }
    }
    let dim = algebra.dim();
    if states.len() != dim {
        return Err(Error::Inconsistency(format!(
            "frame has {} states for an algebra of dimension {dim}",
            states.len()
        )));
    }
    let mut design = ComplexMatrix::zeros(dim, dim);
    for (k, s) in states.iter().enumerate() {
        design.row_mut(k).copy_from(&s.values().transpose());
    }
    let sv = linalg::singular_values(&design);
    let condition = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    };
    if condition > MAX_FRAME_CONDITION {
        return Err(Error::IllConditionedFrame { condition });
    }
    let lu = design.clone().lu();
    Ok(TomographyFrame { algebra: Arc::clone(algebra), states, design, condition, lu })
}

#[derive(Debug, Clone)]
pub struct Inversion {
    pub element: ComplexMatrix,
    /// `max_k |ω_k(a) − f(ω_k)|` over the frame, plus validation states if any.
    pub residual: f64,
}

impl TomographyFrame {
    /// The unique `a` with `ω_k(a) = values[k]` on the frame states.
    pub fn solve(&self, values: &ComplexVector) -> Result<Inversion> {
        if values.len() != self.states.len() {
            return Err(Error::shape(format!("{} values", self.states.len()), format!("{}", values.len())));
        }
        let coords = self
            .lu
            .solve(values)
            .ok_or_else(|| Error::Inconsistency("frame design matrix is singular".into()))?;
        let residual = (&self.design * &coords - values).iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok(Inversion { element: self.algebra.element(&coords), residual })
    }
}

/// Recovers the element whose transform is `f` from its values on the frame.
/// With `validation > 0`, `f` is also compared with `ω(a)` on that many random
/// pure states and `InconsistentSamples` is raised when they disagree.
pub fn invert<R: Rng + ?Sized>(
    frame: &TomographyFrame,
    f: &TransformFunction,
    validation: usize,
    rng: &mut R,
) -> Result<Inversion> {
    let vals = frame.states.iter().map(|s| f.eval(s)).collect::<Result<Vec<_>>>()?;
    let mut inv = frame.solve(&ComplexVector::from_vec(vals))?;
    let tol = frame.algebra.tolerances().tol_eq;
    let blocks = frame.algebra.blocks();
    for k in 0..validation {
        if blocks.is_empty() {
            break;
        }
        let s = random_pure_state(rng, &frame.algebra, blocks[k % blocks.len()].index)?;
        let miss = (s.eval(&inv.element) - f.eval(&s)?).norm();
        inv.residual = inv.residual.max(miss);
    }
    let scale = 1.0 + inv.element.norm();
    if inv.residual > tol * scale {
        return Err(Error::InconsistentSamples { residual: inv.residual });
    }
    Ok(inv)
}

/// Least-squares inversion from values at arbitrary pure states. The states
/// must determine the algebra; leftover residual above `tol_eq` means the
/// samples are not the transform of any element.
pub fn invert_samples(algebra: &Arc<FdCStarAlgebra>, samples: &[(State, C64)]) -> Result<Inversion> {
    let dim = algebra.dim();
    let tol = algebra.tolerances();
    if samples.iter().any(|(s, _)| !s.same_algebra_as(algebra)) {
        return Err(Error::InvalidArgument("sample state belongs to a different algebra".into()));
    }
    if samples.iter().any(|(s, _)| !s.is_pure()) {
        return Err(Error::NotPure);
    }
    let mut design = ComplexMatrix::zeros(samples.len(), dim);
    for (k, (s, _)) in samples.iter().enumerate() {
        design.row_mut(k).copy_from(&s.values().transpose());
    }
    if linalg::rank(&design, tol) < dim {
        return Err(Error::InvalidArgument(format!(
            "{} sample states do not determine an algebra of dimension {dim}",
            samples.len()
        )));
    }
    let rhs = ComplexVector::from_iterator(samples.len(), samples.iter().map(|(_, v)| *v));
    let coords = linalg::svd_thin(&design).solve(&rhs, 0.0);
    let residual = (&design * &coords - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let element = algebra.element(&coords);
    if residual > tol.tol_eq * (1.0 + element.norm()) {
        return Err(Error::InconsistentSamples { residual });
    }
    Ok(Inversion { element, residual })
}

/// `f ⋆ g = f_{ab}` where `f = f_a` and `g = f_b` are recovered by inversion.
pub fn star(frame: &TomographyFrame, f: &TransformFunction, g: &TransformFunction) -> Result<TransformFunction> {
    let mut rng = frame.algebra.tolerances().rng_stream(0x57A2);
    let a = element_of(frame, f, &mut rng)?;
    let b = element_of(frame, g, &mut rng)?;
    gelfand(&frame.algebra, &(a * b))
}

fn element_of<R: Rng + ?Sized>(frame: &TomographyFrame, f: &TransformFunction, rng: &mut R) -> Result<ComplexMatrix> {
    match &f.element {
        Some(a) => Ok(a.clone()),
        None => Ok(invert(frame, f, frame.states.len(), rng)?.element),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate {
    /// `√(max_i λ_max(π_i(a*a)))`.
    pub exact: f64,
    /// `√(max ω(a*a))` over the evaluated pure states; never above `exact`
    /// beyond rounding.
    pub sampled: f64,
    pub evaluations: usize,
}

/// Sup of `(f̄ ⋆ f)(ω)` over pure states, exactly from the blocks and by
/// sampling: a random phase followed by stochastic local refinement of the
/// best ray per block. Every evaluation is a genuine state value.
pub fn cstar_norm<R: Rng + ?Sized>(
    frame: &TomographyFrame,
    f: &TransformFunction,
    evaluations: usize,
    rng: &mut R,
) -> Result<NormEstimate> {
    let a = frame.algebra.as_ref();
    let tol = a.tolerances();
    let fbar_f = star(frame, &f.conjugate(), f)?;
    let mut exact_sq: f64 = 0.0;
    for b in a.blocks() {
        let pa = b.irrep(fbar_f.element.as_ref().expect("star returns a transform with its element"));
        let eig = hermitian_eig(&((&pa + pa.adjoint()) * C64::from(0.5)), tol)?;
        exact_sq = exact_sq.max(eig.values.first().copied().unwrap_or(0.0));
    }

    let blocks = a.blocks();
    let mut best_sq: f64 = 0.0;
    let mut used = 0;
    if !blocks.is_empty() && evaluations > 0 {
        let per_block = (evaluations / blocks.len()).max(1);
        for b in blocks {
            let random_phase = (per_block / 2).max(1);
            let mut best: Option<(ComplexVector, f64)> = None;
            let eval_ray = |x: &ComplexVector| -> Result<f64> {
                Ok(fbar_f.eval(&vector_state(&frame.algebra, b.index, x)?)?.re)
            };
            for _ in 0..random_phase {
                let x = linalg::random_unit_vector(rng, b.n);
                let v = eval_ray(&x)?;
                used += 1;
                if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                    best = Some((x, v));
                }
            }
            let (mut x, mut v) = best.expect("at least one sample per block");
            let mut step = 0.5;
            for _ in random_phase..per_block {
                let trial = &x + linalg::random_unit_vector(rng, b.n) * C64::from(step);
                let trial = &trial / C64::from(trial.norm());
                let tv = eval_ray(&trial)?;
                used += 1;
                if tv > v {
                    x = trial;
                    v = tv;
                    step = (step * 1.5).min(0.5);
                } else {
                    step = (step * 0.9).max(1e-9);
                }
            }
            best_sq = best_sq.max(v);
        }
    }
    Ok(NormEstimate { exact: exact_sq.max(0.0).sqrt(), sampled: best_sq.max(0.0).sqrt(), evaluations: used })
}

/// The transform of the unit, constant 1 on pure states.
pub fn unit_transform(algebra: &Arc<FdCStarAlgebra>) -> Result<TransformFunction> {
    gelfand(algebra, algebra.unit())
}

/// `α f + β g` pointwise, keeping the element when both are known.
pub fn linear_combination(alpha: C64, f: &TransformFunction, beta: C64, g: &TransformFunction) -> TransformFunction {
    let (fe, ge) = (Arc::clone(&f.evaluator), Arc::clone(&g.evaluator));
    TransformFunction {
        algebra: Arc::clone(&f.algebra),
        element: match (&f.element, &g.element) {
            (Some(a), Some(b)) => Some(a * alpha + b * beta),
            _ => None,
        },
        evaluator: Arc::new(move |s| Ok(fe(s)? * alpha + ge(s)? * beta)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::linalg::{ToleranceConfig, ONE};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn random_element<R: Rng + ?Sized>(rng: &mut R, a: &FdCStarAlgebra) -> ComplexMatrix {
        let c = ComplexVector::from_fn(a.dim(), |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        a.element(&c)
    }

    #[test]
    fn frame_sizes() {
        let t = tol();
        for (name, a) in catalog::catalog(&t).unwrap() {
            let f = build_frame(&a).unwrap();
            assert_eq!(f.states.len(), a.dim(), "{name}");
            assert_eq!(linalg::rank(&f.design, &t), a.dim(), "{name}");
            assert!(f.condition <= MAX_FRAME_CONDITION);
        }
    }

    #[test]
    fn transform_examples() {
        let t = tol();
        let mut rng = t.rng();
        let a = catalog::full_matrix(2, &t).unwrap();
        let s = random_pure_state(&mut rng, &a, 0).unwrap();
        let one = unit_transform(&a).unwrap();
        assert!((one.eval(&s).unwrap() - ONE).norm() < 1e-12);
        let zero = gelfand(&a, &ComplexMatrix::zeros(2, 2)).unwrap();
        assert_eq!(zero.eval(&s).unwrap().norm(), 0.0);
        let plus = vector_state(&a, 0, &ComplexVector::from_vec(vec![ONE, ONE])).unwrap();
        let e12 = gelfand(&a, &linalg::matrix_unit(2, 0, 1)).unwrap();
        assert!((e12.eval(&plus).unwrap() - C64::from(0.5)).norm() < 1e-12);
        assert!(matches!(
            gelfand(&catalog::diagonal(2, &t).unwrap(), &linalg::matrix_unit(2, 0, 1)),
            Err(Error::ElementNotInAlgebra { .. })
        ));
    }

    #[test]
    fn inversion_round_trip() {
        let t = tol();
        let mut rng = t.rng();
        for (_, a) in catalog::catalog(&t).unwrap() {
            let frame = build_frame(&a).unwrap();
            for _ in 0..20 {
                let x = random_element(&mut rng, &a);
                let inv = invert(&frame, &gelfand(&a, &x).unwrap(), 0, &mut rng).unwrap();
                assert!((inv.element - &x).norm() < 1e-10);
            }
            let inv = invert(&frame, &unit_transform(&a).unwrap(), 0, &mut rng).unwrap();
            assert!((inv.element - a.unit()).norm() < 1e-10);
        }
    }

    #[test]
    fn nonlinear_functions_are_rejected() {
        let t = tol();
        let mut rng = t.rng();
        let a = catalog::full_matrix(2, &t).unwrap();
        let frame = build_frame(&a).unwrap();
        let h = linalg::random_hermitian(&mut rng, 2);
        let hh = h.clone();
        let sq = TransformFunction::from_fn(&a, move |s| Ok(s.eval(&hh).powi(2)));
        assert!(matches!(invert(&frame, &sq, 20, &mut rng), Err(Error::InconsistentSamples { .. })));
        // without validation the frame alone cannot tell
        assert!(invert(&frame, &sq, 0, &mut rng).is_ok());
    }

    #[test]
    fn sampled_inversion() {
        let t = tol();
        let mut rng = t.rng();
        let a = catalog::m2_plus_m3(&t).unwrap();
        let x = random_element(&mut rng, &a);
        let samples: Vec<(State, C64)> = (0..40)
            .map(|k| {
                let s = random_pure_state(&mut rng, &a, k % 2).unwrap();
                let v = s.eval(&x);
                (s, v)
            })
            .collect();
        let inv = invert_samples(&a, &samples).unwrap();
        assert!((inv.element - &x).norm() < 1e-9);
        let mut bad = samples.clone();
        bad[0].1 += C64::from(0.1);
        assert!(matches!(invert_samples(&a, &bad), Err(Error::InconsistentSamples { .. })));
        assert!(invert_samples(&a, &samples[..3]).is_err());
    }

    #[test]
    fn star_product() {
        let t = tol();
        let mut rng = t.rng();
        let a = catalog::full_matrix(2, &t).unwrap();
        let frame = build_frame(&a).unwrap();
        let e12 = gelfand(&a, &linalg::matrix_unit(2, 0, 1)).unwrap();
        let e21 = gelfand(&a, &linalg::matrix_unit(2, 1, 0)).unwrap();
        let ab = star(&frame, &e12, &e21).unwrap();
        let ba = star(&frame, &e21, &e12).unwrap();
        let comm = linear_combination(ONE, &ab, -ONE, &ba);
        let mut d = ComplexMatrix::identity(2, 2);
        d[(1, 1)] = -ONE;
        assert!((comm.element.clone().unwrap() - d).norm() < 1e-12);

        let x = random_element(&mut rng, &a);
        let fx = gelfand(&a, &x).unwrap();
        let ex = star(&frame, &unit_transform(&a).unwrap(), &fx).unwrap();
        // a function with no stored element goes through inversion
        let xx = x.clone();
        let opaque = TransformFunction::from_fn(&a, move |s| Ok(s.eval(&xx)));
        let via = star(&frame, &opaque, &fx).unwrap();
        for _ in 0..20 {
            let s = random_pure_state(&mut rng, &a, 0).unwrap();
            assert!((ex.eval(&s).unwrap() - fx.eval(&s).unwrap()).norm() < 1e-10);
            assert!((via.eval(&s).unwrap() - s.eval(&(&x * &x))).norm() < 1e-9);
        }
    }

    #[test]
    fn norm_examples() {
        let t = tol();
        let mut rng = t.rng();
        let a = catalog::full_matrix(2, &t).unwrap();
        let frame = build_frame(&a).unwrap();
        let n = cstar_norm(&frame, &unit_transform(&a).unwrap(), 100, &mut rng).unwrap();
        assert!((n.exact - 1.0).abs() < 1e-12);
        let mut d = ComplexMatrix::identity(2, 2);
        d[(1, 1)] = C64::from(2.0);
        let n = cstar_norm(&frame, &gelfand(&a, &d).unwrap(), 1000, &mut rng).unwrap();
        assert!((n.exact - 2.0).abs() < 1e-12);
        assert!(n.sampled <= n.exact + 1e-12 && n.exact - n.sampled < 1e-3);
        let n = cstar_norm(&frame, &gelfand(&a, &linalg::matrix_unit(2, 0, 1)).unwrap(), 100, &mut rng).unwrap();
        assert!((n.exact - 1.0).abs() < 1e-12);
    }
}
