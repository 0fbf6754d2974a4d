//! The pure state space as a bundle of projective spaces over the spectrum,
//! its Kähler distance, restrictions, and isomorphism checking.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::sync::Arc;

use rand::Rng;
use serde_json::json;

use crate::algebra::{quotient, FdCStarAlgebra, Ideal};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector, C64};
use crate::report::VerificationReport;
use crate::states::{make_state, vector_state, State};

/// Fiber diameter `√2·π/2`.
pub const KAPPA: f64 = SQRT_2 * FRAC_PI_2;

/// Distance between pure states over different spectrum points.
pub const CROSS_FIBER_DISTANCE: f64 = 3.0;

/// `√2·arccos|⟨x|y⟩|` for nonzero vectors, evaluated as
/// `√2·atan2(‖y − ⟨x,y⟩x‖, |⟨x,y⟩|)` on the normalized vectors, which stays
/// accurate near 0 where `arccos` loses half the digits.
pub fn ray_distance(x: &ComplexVector, y: &ComplexVector) -> f64 {
    let x = x / C64::from(x.norm());
    let y = y / C64::from(y.norm());
    let c = x.dotc(&y);
    let perp = (&y - &x * c).norm();
    SQRT_2 * perp.atan2(c.norm())
}

/// Kähler distance between pure states of one algebra.
pub fn kahler_distance(a: &State, b: &State) -> Result<f64> {
    if !a.same_algebra(b) {
        return Err(Error::InvalidArgument("states belong to different algebras".into()));
    }
    let (x, y) = (a.ray()?, b.ray()?);
    if x.fiber != y.fiber {
        return Ok(CROSS_FIBER_DISTANCE);
    }
    Ok(ray_distance(&x.ray, &y.ray))
}

/// A bundle of projective spaces over a subset of an algebra's spectrum. Each
/// fiber is `P(F_i C^{d_i})` for an isometry `F_i: C^{d_i} → C^{n_i}`.
pub trait KahlerBundle {
    fn algebra(&self) -> &Arc<FdCStarAlgebra>;

    fn base(&self) -> Vec<usize>;

    /// The isometry `F_i` describing the fiber over `i`.
    fn fiber_frame(&self, i: usize) -> Result<ComplexMatrix>;

    fn fiber_dim(&self, i: usize) -> Result<usize> {
        Ok(self.fiber_frame(i)?.ncols())
    }

    /// The pure state at fiber coordinates `z`.
    fn point(&self, i: usize, z: &ComplexVector) -> Result<State> {
        let f = self.fiber_frame(i)?;
        if z.len() != f.ncols() {
            return Err(Error::shape(format!("C^{}", f.ncols()), format!("C^{}", z.len())));
        }
        vector_state(self.algebra(), i, &(f * z))
    }

    /// Base point and fiber coordinates of a pure state in the total space.
    fn coords(&self, state: &State) -> Result<(usize, ComplexVector)> {
        let pt = state.ray()?;
        let f = self.fiber_frame(pt.fiber)?;
        let z = f.adjoint() * &pt.ray;
        let residual = (&f * &z - &pt.ray).norm();
        if residual > self.algebra().tolerances().tol_eq {
            return Err(Error::PointNotOnSubmanifold { residual });
        }
        Ok((pt.fiber, z))
    }

    fn contains(&self, state: &State) -> bool {
        state.same_algebra_as(self.algebra()) && self.coords(state).is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct UniformKahlerBundle {
    pub algebra: Arc<FdCStarAlgebra>,
}

impl UniformKahlerBundle {
    pub fn new(algebra: &Arc<FdCStarAlgebra>) -> Self {
        Self { algebra: Arc::clone(algebra) }
    }

    pub fn fiber_dims(&self) -> Vec<usize> {
        self.algebra.fiber_dims()
    }

    /// Projection of the total space onto the base.
    pub fn project(&self, state: &State) -> Result<usize> {
        state.fiber()
    }
}

impl KahlerBundle for UniformKahlerBundle {
    fn algebra(&self) -> &Arc<FdCStarAlgebra> {
        &self.algebra
    }

    fn base(&self) -> Vec<usize> {
        self.algebra.spectrum()
    }

    fn fiber_frame(&self, i: usize) -> Result<ComplexMatrix> {
        let n = self.algebra.block(i)?.n;
        Ok(ComplexMatrix::identity(n, n))
    }
}

/// Restrictions to open subsets (used for ideals) and to closed subsets
/// (used for quotients). The spectrum is discrete, so both always exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RestrictionKind {
    Open,
    Closed,
}

#[derive(Debug, Clone)]
pub struct RestrictedBundle {
    pub parent: UniformKahlerBundle,
    pub base_subset: Vec<usize>,
    pub kind: RestrictionKind,
}

pub fn restrict(bundle: &UniformKahlerBundle, subset: &[usize], kind: RestrictionKind) -> Result<RestrictedBundle> {
    let set: BTreeSet<usize> = subset.iter().copied().collect();
    for &i in &set {
        bundle.algebra.block(i)?;
    }
    Ok(RestrictedBundle { parent: bundle.clone(), base_subset: set.into_iter().collect(), kind })
}

impl KahlerBundle for RestrictedBundle {
    fn algebra(&self) -> &Arc<FdCStarAlgebra> {
        &self.parent.algebra
    }

    fn base(&self) -> Vec<usize> {
        self.base_subset.clone()
    }

    fn fiber_frame(&self, i: usize) -> Result<ComplexMatrix> {
        if !self.base_subset.contains(&i) {
            return Err(Error::UnknownBaseIndex(i));
        }
        self.parent.fiber_frame(i)
    }
}

pub type StateMap = Arc<dyn Fn(&State) -> Result<State> + Send + Sync>;

/// The fiberwise part `ψ` of a candidate isomorphism.
#[derive(Clone)]
pub enum FiberMap {
    /// `U_i` acting on fiber coordinates over each base point of the source.
    Unitaries(BTreeMap<usize, ComplexMatrix>),
    /// An arbitrary map of pure states.
    States(StateMap),
}

impl std::fmt::Debug for FiberMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FiberMap::Unitaries(u) => f.debug_tuple("Unitaries").field(u).finish(),
            FiberMap::States(_) => f.write_str("States(..)"),
        }
    }
}

struct IsoCandidate<'a> {
    source: &'a dyn KahlerBundle,
    target: &'a dyn KahlerBundle,
    phi: &'a BTreeMap<usize, usize>,
    psi: &'a FiberMap,
}

impl IsoCandidate<'_> {
    /// Image of fiber coordinates `z` over `i` as (base point, coordinates).
    fn apply(&self, i: usize, z: &ComplexVector) -> Result<(usize, ComplexVector)> {
        match self.psi {
            FiberMap::Unitaries(us) => {
                let u = us.get(&i).ok_or(Error::UnknownBaseIndex(i))?;
                let j = *self.phi.get(&i).ok_or(Error::UnknownBaseIndex(i))?;
                if u.ncols() != z.len() {
                    return Err(Error::shape(format!("{} columns", z.len()), format!("{}", u.ncols())));
                }
                Ok((j, u * z))
            }
            FiberMap::States(f) => {
                let image = f(&self.source.point(i, z)?)?;
                if !image.same_algebra_as(self.target.algebra()) {
                    return Err(Error::InvalidArgument("image state lives on the wrong algebra".into()));
                }
                self.target.coords(&image)
            }
        }
    }

    fn target_point(&self, j: usize, z: &ComplexVector) -> Result<State> {
        self.target.point(j, z)
    }
}

/// Checks that `(φ, ψ)` is a uniform Kähler isomorphism from `source` to
/// `target`: fiber dimensions match under a bijection `φ`, each fiber map is
/// implemented by a unitary, `p′∘ψ = φ∘p`, and distances are preserved.
pub fn check_uniform_kahler_iso<R: Rng + ?Sized>(
    source: &dyn KahlerBundle,
    target: &dyn KahlerBundle,
    phi: &BTreeMap<usize, usize>,
    psi: &FiberMap,
    samples: usize,
    rng: &mut R,
) -> VerificationReport {
    let tol = *source.algebra().tolerances();
    let cand = IsoCandidate { source, target, phi, psi };
    let base = source.base();
    let mut report = VerificationReport::new("uniform-kahler-iso");

    // (i) φ is a bijection of bases preserving fiber dimensions
    let mut dims = VerificationReport::new("fiber-dims");
    let target_base: BTreeSet<usize> = target.base().into_iter().collect();
    let images: BTreeSet<usize> = base.iter().filter_map(|i| phi.get(i).copied()).collect();
    dims.require(images == target_base && images.len() == base.len(), || {
        json!({ "source_base": base, "target_base": target_base, "phi": phi })
    });
    for &i in &base {
        let Some(&j) = phi.get(&i) else { continue };
        let (d1, d2) = (source.fiber_dim(i), target.fiber_dim(j));
        dims.require(matches!((&d1, &d2), (Ok(a), Ok(b)) if a == b), || {
            json!({ "base": i, "image": j, "source_dim": d1.ok(), "target_dim": d2.ok() })
        });
    }
    let dims_ok = dims.pass;
    report.push_clause(dims);
    if !dims_ok {
        return report;
    }

    // (ii) unitary implementability, reconstructed from basis and superposition rays
    let mut unitary = VerificationReport::new("unitary");
    let mut reconstructed = BTreeMap::new();
    for &i in &base {
        if let FiberMap::Unitaries(us) = psi {
            if let Some(u) = us.get(&i) {
                unitary.residual(linalg::unitarity_residual(u), tol.tol_ortho, || {
                    json!({ "base": i, "reason": "candidate is not unitary" })
                });
            }
        }
        match reconstruct_unitary(&cand, i) {
            Ok(u) => {
                unitary.residual(linalg::unitarity_residual(&u), tol.tol_eq, || {
                    json!({ "base": i, "reason": "reconstructed map is not unitary" })
                });
                reconstructed.insert(i, u);
            }
            Err(e) => unitary.fail(json!({ "base": i, "error": e.to_string() })),
        }
    }

    // (iii) commutation with the projections and (iv) distance preservation
    let mut projection = VerificationReport::new("projection");
    let mut distance = VerificationReport::new("distance");
    for k in 0..samples {
        if base.is_empty() {
            break;
        }
        let i = base[k % base.len()];
        let d = match source.fiber_dim(i) {
            Ok(d) => d,
            Err(e) => {
                projection.fail(json!({ "base": i, "error": e.to_string() }));
                continue;
            }
        };
        let z1 = linalg::random_unit_vector(rng, d);
        let z2 = linalg::random_unit_vector(rng, d);
        let (img1, img2) = match (cand.apply(i, &z1), cand.apply(i, &z2)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                projection.fail(json!({ "base": i, "error": e.to_string() }));
                continue;
            }
        };
        for (j, _) in [&img1, &img2] {
            projection.require(Some(j) == phi.get(&i), || json!({ "base": i, "image_base": j }));
        }
        if let Some(u) = reconstructed.get(&i) {
            let miss = 1.0 - (u * &z1).dotc(&img1.1).norm() / img1.1.norm();
            unitary.residual(miss.abs(), tol.tol_eq, || {
                json!({ "base": i, "reason": "ray map is not induced by the reconstructed unitary" })
            });
        }
        let before = ray_distance(&z1, &z2);
        let after = match (cand.target_point(img1.0, &img1.1), cand.target_point(img2.0, &img2.1)) {
            (Ok(a), Ok(b)) => kahler_distance(&a, &b),
            (Err(e), _) | (_, Err(e)) => Err(e),
        };
        match after {
            Ok(after) => {
                distance.residual((after - before).abs(), tol.tol_eq, || {
                    json!({ "base": i, "before": before, "after": after })
                });
            }
            Err(e) => distance.fail(json!({ "base": i, "error": e.to_string() })),
        }
    }
    // points over distinct base points must stay exactly 3 apart
    if base.len() >= 2 {
        for w in base.windows(2) {
            let (i1, i2) = (w[0], w[1]);
            let r = (|| -> Result<f64> {
                let d1 = source.fiber_dim(i1)?;
                let d2 = source.fiber_dim(i2)?;
                let a = cand.apply(i1, &linalg::random_unit_vector(rng, d1))?;
                let b = cand.apply(i2, &linalg::random_unit_vector(rng, d2))?;
                kahler_distance(&cand.target_point(a.0, &a.1)?, &cand.target_point(b.0, &b.1)?)
            })();
            distance.require(matches!(r, Ok(d) if d == CROSS_FIBER_DISTANCE), || {
                json!({ "bases": [i1, i2], "image_distance": r.as_ref().ok() })
            });
        }
    }
    report.push_clause(unitary);
    report.push_clause(projection);
    report.push_clause(distance);
    report
}

/// Candidate unitary from the images `y_r` of basis rays and `z_r` of
/// `(e_0 + e_r)/√2`: column `r` is `y_r·⟨y_r|z_r⟩/⟨y_0|z_r⟩`, fixing the
/// relative phases against `y_0`.
fn reconstruct_unitary(cand: &IsoCandidate<'_>, i: usize) -> Result<ComplexMatrix> {
    let d = cand.source.fiber_dim(i)?;
    let image = |z: &ComplexVector| -> Result<ComplexVector> {
        let (_, w) = cand.apply(i, z)?;
        Ok(&w / C64::from(w.norm()))
    };
    let ys: Vec<ComplexVector> = (0..d)
        .map(|r| image(&linalg::standard_basis_vector(d, r)))
        .collect::<Result<_>>()?;
    let mut cols = vec![ys[0].clone()];
    for r in 1..d {
        let sup = (linalg::standard_basis_vector(d, 0) + linalg::standard_basis_vector(d, r))
            / C64::from(SQRT_2);
        let zr = image(&sup)?;
        let anchor = ys[0].dotc(&zr);
        if anchor.norm() < 1e-3 {
            return Err(Error::Inconsistency(format!(
                "superposition ray {r} lost its overlap with the first basis ray"
            )));
        }
        cols.push(&ys[r] * (ys[r].dotc(&zr) / anchor));
    }
    Ok(ComplexMatrix::from_columns(&cols))
}

/// `P(I) ≅ P(A)|_{Â^I}` through `ρ ↦ ρ|_I` with `φ` relabeling blocks.
pub fn restriction_iso_ideal<R: Rng + ?Sized>(
    a: &Arc<FdCStarAlgebra>,
    ideal: &Ideal,
    samples: usize,
    rng: &mut R,
) -> Result<VerificationReport> {
    let whole = UniformKahlerBundle::new(a);
    let source = restrict(&whole, &ideal.block_set, RestrictionKind::Open)?;
    let target = UniformKahlerBundle::new(&ideal.as_algebra);
    let phi: BTreeMap<usize, usize> = ideal.block_set.iter().enumerate().map(|(j, &i)| (i, j)).collect();
    let sub = Arc::clone(&ideal.as_algebra);
    let psi = FiberMap::States(Arc::new(move |rho: &State| make_state(&sub, &rho.restricted_values(&sub)?)));
    let mut r = check_uniform_kahler_iso(&source, &target, &phi, &psi, samples, rng);
    r.check = format!("restriction-iso-ideal{:?}", ideal.block_set);
    Ok(r)
}

/// `P(A/I) ≅ P(A)|_{Â∖Â^I}` through `ρ ↦ ρ∘h`.
pub fn restriction_iso_quotient<R: Rng + ?Sized>(
    a: &Arc<FdCStarAlgebra>,
    ideal: &Ideal,
    samples: usize,
    rng: &mut R,
) -> Result<VerificationReport> {
    let q = quotient(a, ideal)?;
    let source = UniformKahlerBundle::new(&q.algebra);
    let target = restrict(&UniformKahlerBundle::new(a), &q.block_map, RestrictionKind::Closed)?;
    let phi: BTreeMap<usize, usize> = q.block_map.iter().copied().enumerate().collect();
    let parent = Arc::clone(a);
    let hom = q.clone();
    let psi = FiberMap::States(Arc::new(move |rho: &State| {
        let vals = parent
            .basis()
            .iter()
            .map(|b| Ok(rho.eval(&hom.apply(b)?)))
            .collect::<Result<Vec<C64>>>()?;
        make_state(&parent, &ComplexVector::from_vec(vals))
    }));
    let mut r = check_uniform_kahler_iso(&source, &target, &phi, &psi, samples, rng);
    r.check = format!("restriction-iso-quotient{:?}", ideal.block_set);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{enumerate_ideals, ideal_from_blocks};
    use crate::catalog;
    use crate::linalg::{standard_basis_vector, ToleranceConfig, ONE};
    use crate::states::random_pure_state;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn identity_iso(b: &UniformKahlerBundle) -> (BTreeMap<usize, usize>, FiberMap) {
        let phi = b.base().into_iter().map(|i| (i, i)).collect();
        let us = b
            .base()
            .into_iter()
            .map(|i| (i, b.fiber_frame(i).unwrap()))
            .collect();
        (phi, FiberMap::Unitaries(us))
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn kappa_value() {
        assert!((KAPPA - 2.221_441_469_079_183_1).abs() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let t = tol();
        let a = catalog::m2_plus_m3(&t).unwrap();
        let mut rng = t.rng();
        let s = random_pure_state(&mut rng, &a, 0).unwrap();
        assert_eq!(kahler_distance(&s, &s).unwrap(), 0.0);
        let e1 = vector_state(&a, 0, &standard_basis_vector(2, 0)).unwrap();
        let e2 = vector_state(&a, 0, &standard_basis_vector(2, 1)).unwrap();
        assert!((kahler_distance(&e1, &e2).unwrap() - KAPPA).abs() < 1e-12);
        let other = random_pure_state(&mut rng, &a, 1).unwrap();
        assert_eq!(kahler_distance(&s, &other).unwrap(), 3.0);
        let f = ComplexVector::from_vec(vec![ONE, ONE]);
        let plus = vector_state(&a, 0, &f).unwrap();
        let expect = SQRT_2 * (0.5f64.sqrt()).acos();
        assert!((kahler_distance(&e1, &plus).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn restrictions() {
        let t = tol();
        let a = catalog::m2_plus_m3(&t).unwrap();
        let b = UniformKahlerBundle::new(&a);
        let r = restrict(&b, &[0], RestrictionKind::Open).unwrap();
        assert_eq!(r.base(), vec![0]);
        assert_eq!(r.fiber_dim(0).unwrap(), 2);
        assert!(matches!(r.fiber_dim(1), Err(Error::UnknownBaseIndex(1))));
        let empty = restrict(&b, &[], RestrictionKind::Closed).unwrap();
        assert!(empty.base().is_empty());
        assert!(matches!(restrict(&b, &[7], RestrictionKind::Open), Err(Error::UnknownBaseIndex(7))));
        let mut rng = t.rng();
        let s = random_pure_state(&mut rng, &a, 1).unwrap();
        assert!(!r.contains(&s));
        assert!(b.contains(&s));
    }

    #[test]
    fn identity_and_unitary_isos_pass() {
        let t = tol();
        let mut rng = t.rng();
        let a = catalog::m2_plus_m3(&t).unwrap();
        let b = UniformKahlerBundle::new(&a);
        let (phi, psi) = identity_iso(&b);
        let r = check_uniform_kahler_iso(&b, &b, &phi, &psi, 50, &mut rng);
        assert!(r.pass, "{r:?}");

        let m2 = catalog::full_matrix(2, &t).unwrap();
        let b2 = UniformKahlerBundle::new(&m2);
        let u = linalg::random_unitary(&mut rng, 2);
        let phi = BTreeMap::from([(0, 0)]);
        let psi = FiberMap::Unitaries(BTreeMap::from([(0, u)]));
        let r = check_uniform_kahler_iso(&b2, &b2, &phi, &psi, 50, &mut rng);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn complex_conjugation_is_not_holomorphic() {
        let t = tol();
        let mut rng = t.rng();
        let m2 = catalog::full_matrix(2, &t).unwrap();
        let b = UniformKahlerBundle::new(&m2);
        let target = Arc::clone(&m2);
        let psi = FiberMap::States(Arc::new(move |s: &State| {
            let pt = s.ray()?;
            vector_state(&target, pt.fiber, &pt.ray.map(|z| z.conj()))
        }));
        let r = check_uniform_kahler_iso(&b, &b, &BTreeMap::from([(0, 0)]), &psi, 50, &mut rng);
        assert!(!r.pass);
        assert_eq!(r.failed_clauses(), vec!["unitary"]);
    }

    #[test]
    fn non_unitary_candidate_fails() {
        let t = tol();
        let mut rng = t.rng();
        let m2 = catalog::full_matrix(2, &t).unwrap();
        let b = UniformKahlerBundle::new(&m2);
        let mut g = ComplexMatrix::identity(2, 2);
        g[(0, 1)] = ONE;
        let psi = FiberMap::Unitaries(BTreeMap::from([(0, g)]));
        let r = check_uniform_kahler_iso(&b, &b, &BTreeMap::from([(0, 0)]), &psi, 20, &mut rng);
        assert!(r.failed_clauses().contains(&"unitary"));
        assert!(r.failed_clauses().contains(&"distance"));
    }

    #[test]
    fn mismatched_bases_fail_the_dimension_clause() {
        let t = tol();
        let mut rng = t.rng();
        let a = catalog::m2_plus_m3(&t).unwrap();
        let b = UniformKahlerBundle::new(&a);
        let phi = BTreeMap::from([(0, 1), (1, 0)]);
        let psi = FiberMap::Unitaries(BTreeMap::new());
        let r = check_uniform_kahler_iso(&b, &b, &phi, &psi, 5, &mut rng);
        assert_eq!(r.failed_clauses(), vec!["fiber-dims"]);
    }

    #[test]
    fn ideal_and_quotient_restrictions() {
        let t = tol();
        let mut rng = t.rng();
        for (name, a) in catalog::catalog(&t).unwrap() {
            for ideal in enumerate_ideals(&a).unwrap() {
                let r = restriction_iso_ideal(&a, &ideal, 20, &mut rng).unwrap();
                assert!(r.pass, "{name}: {r:?}");
                let r = restriction_iso_quotient(&a, &ideal, 20, &mut rng).unwrap();
                assert!(r.pass, "{name}: {r:?}");
            }
        }
        let a = catalog::m2_plus_m3(&t).unwrap();
        let first = ideal_from_blocks(&a, &[0]).unwrap();
        let r = restriction_iso_ideal(&a, &first, 10, &mut rng).unwrap();
        assert_eq!(r.clauses.len(), 4);
    }
}
