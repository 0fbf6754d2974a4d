//! Projective submanifolds `P_M ⊂ CP^{n-1}`, their tangent spaces, the
//! tangent-span criterion for finite unions, and sampled chart checks.

use std::f64::consts::SQRT_2;

use rand::RngCore;
use serde_json::json;

use crate::bundle::{ray_distance, KAPPA};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexVector, Subspace, ToleranceConfig, C64};
use crate::report::VerificationReport;
use crate::states::ProjectivePoint;

/// `P_M` inside the fiber over `fiber`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveSubmanifold {
    pub fiber: usize,
    pub subspace: Subspace,
}

impl ProjectiveSubmanifold {
    pub fn new(fiber: usize, subspace: Subspace) -> Result<Self> {
        if subspace.dim() == 0 {
            return Err(Error::InvalidArgument("P_M needs a nonzero subspace M".into()));
        }
        Ok(Self { fiber, subspace })
    }
}

/// `M ∩ {ξ}⊥`, the tangent model of `P_M` at `[ξ]`.
pub fn tangent_space(pt: &ProjectivePoint, sub: &ProjectiveSubmanifold, tol: &ToleranceConfig) -> Result<Subspace> {
    let m = &sub.subspace;
    if pt.fiber != sub.fiber || pt.dim() != m.ambient_dim {
        return Err(Error::PointNotOnSubmanifold { residual: f64::INFINITY });
    }
    let xi = &pt.ray / C64::from(pt.ray.norm());
    let residual = m.residual(&xi);
    if residual > tol.tol_eq {
        return Err(Error::PointNotOnSubmanifold { residual });
    }
    // coordinates of ξ in M; the tangent space is M times their complement
    let c = m.basis.adjoint() * &xi;
    let c = &c / C64::from(c.norm());
    let line = Subspace { ambient_dim: m.dim(), basis: linalg::ComplexMatrix::from_columns(&[c]) };
    let t = Subspace { ambient_dim: m.ambient_dim, basis: &m.basis * line.complement(tol).basis };
    Ok(t)
}

#[derive(Debug, Clone)]
pub struct TangentSpanVerdict {
    pub holds: bool,
    /// Closed span of the base points and their tangent spaces.
    pub span: Subspace,
    /// `M` with `P′ = P_M`, when the condition holds.
    pub recovered: Option<Subspace>,
    /// A unit vector of the span whose ray lies outside every `P_{M_j}`.
    pub witness: Option<ComplexVector>,
}

/// Minimal distance from a witness ray to each candidate subspace.
const WITNESS_MARGIN: f64 = 1e-3;

/// For `P′ = ⋃_j P_{M_j}`: the span `M` of the base points and tangent
/// spaces of `P′` projects into `P′` iff the union is a single `P_M`.
pub fn tangent_span_condition(
    n: usize,
    candidates: &[Subspace],
    tol: &ToleranceConfig,
    rng: &mut dyn RngCore,
) -> Result<TangentSpanVerdict> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidate);
    }
    let mut gens = Vec::new();
    for (j, m) in candidates.iter().enumerate() {
        if m.ambient_dim != n {
            return Err(Error::shape(format!("subspace of C^{n}"), format!("C^{}", m.ambient_dim)));
        }
        if m.dim() == 0 {
            return Err(Error::InvalidArgument(format!("candidate {j} is the zero subspace")));
        }
        let sub = ProjectiveSubmanifold::new(0, m.clone())?;
        let pt = ProjectivePoint::new(0, &m.basis.column(0).into_owned(), tol.tol_eq)?;
        let t = tangent_space(&pt, &sub, tol)?;
        gens.push(pt.ray.clone());
        gens.extend(t.vectors());
    }
    let span = linalg::orthonormalize(n, &gens, tol)?;
    let recovered = candidates.iter().find(|m| m.same_span(&span, tol.tol_eq.sqrt())).cloned();
    let holds = recovered.is_some();
    let witness = if holds {
        None
    } else {
        Some(outside_witness(&span, candidates, rng).ok_or_else(|| {
            Error::Inconsistency("no point of the span outside the candidate union was found".into())
        })?)
    };
    Ok(TangentSpanVerdict { holds, span, recovered, witness })
}

fn outside_witness(span: &Subspace, candidates: &[Subspace], rng: &mut dyn RngCore) -> Option<ComplexVector> {
    let outside = |v: &ComplexVector| candidates.iter().all(|m| m.residual(v) > WITNESS_MARGIN);
    let mut first = ComplexVector::zeros(span.ambient_dim);
    for m in candidates {
        first += m.basis.column(0);
    }
    if first.norm() > WITNESS_MARGIN {
        let v = &first / C64::from(first.norm());
        if outside(&v) {
            return Some(v);
        }
    }
    (0..64).find_map(|_| {
        let c = linalg::random_unit_vector(rng, span.dim());
        let v = &span.basis * c;
        outside(&v).then_some(v)
    })
}

/// A set of rays in `CP^{n-1}` that can be sampled and tested for membership.
pub trait PointSet {
    fn ambient_dim(&self) -> usize;

    /// Zero exactly on the set, positive off it (scale-free, for unit vectors).
    fn membership_residual(&self, v: &ComplexVector) -> f64;

    /// A unit vector representing a random point of the set.
    fn sample(&self, rng: &mut dyn RngCore) -> ComplexVector;
}

impl PointSet for ProjectiveSubmanifold {
    fn ambient_dim(&self) -> usize {
        self.subspace.ambient_dim
    }

    fn membership_residual(&self, v: &ComplexVector) -> f64 {
        self.subspace.residual(v) / v.norm()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> ComplexVector {
        &self.subspace.basis * linalg::random_unit_vector(rng, self.subspace.dim())
    }
}

/// Rays with a real representative, `{[ξ] : ξ ∈ R^n}`. Not of the form `P_M`.
#[derive(Debug, Clone, Copy)]
pub struct RealProjectiveSlice {
    pub n: usize,
}

impl PointSet for RealProjectiveSlice {
    fn ambient_dim(&self) -> usize {
        self.n
    }

    /// `1 − |ξᵀξ|/‖ξ‖²`, which vanishes iff some phase makes `ξ` real.
    fn membership_residual(&self, v: &ComplexVector) -> f64 {
        let s: C64 = v.iter().map(|z| z * z).sum();
        1.0 - s.norm() / v.norm_squared()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> ComplexVector {
        let v = linalg::random_unit_vector(rng, self.n).map(|z| C64::from(z.re));
        let nrm = v.norm();
        v / C64::from(nrm)
    }
}

/// Affine chart at `ξ`: `b_ξ([x]) = x/⟨ξ,x⟩ − ξ ∈ {ξ}⊥`.
pub fn chart(xi: &ComplexVector, x: &ComplexVector) -> Option<ComplexVector> {
    let c = xi.dotc(x);
    if c.norm() <= f64::EPSILON * x.norm() {
        return None;
    }
    Some(x / c - xi)
}

pub fn chart_inverse(xi: &ComplexVector, w: &ComplexVector) -> ComplexVector {
    let v = xi + w;
    let nrm = v.norm();
    v / C64::from(nrm)
}

/// Radius of the chart domain around its center, short of the cut locus.
pub const CHART_RADIUS: f64 = KAPPA - 1e-6;

/// Samples the chart condition and metric closedness of a point set:
/// chart round trips, complex linearity of chart images (combinations of
/// chart vectors pull back into the set), and limits of sequences built
/// inside the set staying in the set.
pub fn submanifold_closedness_check(
    set: &dyn PointSet,
    samples: usize,
    tol: &ToleranceConfig,
    rng: &mut dyn RngCore,
) -> VerificationReport {
    let mut report = VerificationReport::new("submanifold-closedness");
    let mut charts = VerificationReport::new("chart");
    let mut closed = VerificationReport::new("closed");
    let member_tol = tol.tol_eq;
    for k in 0..samples {
        let xi = set.sample(rng);
        let x1 = set.sample(rng);
        let x2 = set.sample(rng);
        let in_domain = |x: &ComplexVector| ray_distance(&xi, x) < CHART_RADIUS;
        if let (true, true, Some(w1), Some(w2)) = (in_domain(&x1), in_domain(&x2), chart(&xi, &x1), chart(&xi, &x2)) {
            let back = chart_inverse(&xi, &w1);
            charts.residual(ray_distance(&back, &x1), 1e-9, || json!({ "sample": k, "reason": "round trip" }));
            charts.residual(xi.dotc(&w1).norm() / (1.0 + w1.norm()), 1e-12, || {
                json!({ "sample": k, "reason": "chart vector not orthogonal to the center" })
            });
            // a complex-linear image is closed under complex combinations
            let alpha = linalg::random_unit_vector(rng, 2) * C64::from(0.5);
            let w = &w1 * alpha[0] + &w2 * alpha[1];
            let y = chart_inverse(&xi, &w);
            let res = set.membership_residual(&y);
            charts.residual(res, member_tol, || {
                json!({ "sample": k, "reason": "chart image is not a complex subspace", "residual": res })
            });
        }
        // x_j = [x1 + x2/j] lies in the set and converges to [x1]
        let mut last = f64::INFINITY;
        for j in [1.0, 1e2, 1e4, 1e6, 1e8] {
            let xj = &x1 + &x2 * C64::from(1.0 / j);
            if xj.norm() <= f64::EPSILON {
                continue;
            }
            let on = set.membership_residual(&xj);
            if on > member_tol {
                // the sequence left the set: nothing to test for this pair
                break;
            }
            let d = ray_distance(&xj, &x1);
            closed.require(d <= last + 1e-12, || json!({ "sample": k, "reason": "sequence does not converge" }));
            last = d;
        }
        let lim = set.membership_residual(&x1);
        closed.residual(lim, member_tol, || json!({ "sample": k, "reason": "limit left the set" }));
    }
    report.push_clause(charts);
    report.push_clause(closed);
    report
}

/// Nearest point of `P_M` to `[x]` and its distance `√2·arccos(‖P_M x‖/‖x‖)`.
pub fn nearest_point(sub: &ProjectiveSubmanifold, x: &ComplexVector) -> Option<(ComplexVector, f64)> {
    let p = sub.subspace.projector() * x;
    let pn = p.norm();
    if pn <= f64::EPSILON * x.norm() {
        return None;
    }
    let perp = (x - &p).norm();
    Some((&p / C64::from(pn), SQRT_2 * perp.atan2(pn)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{standard_basis_vector, ONE};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn span(vs: &[ComplexVector]) -> Subspace {
        linalg::orthonormalize(vs[0].len(), vs, &tol()).unwrap()
    }

    #[test]
    fn tangent_examples() {
        let t = tol();
        let mut rng = t.rng();
        let full = ProjectiveSubmanifold::new(0, Subspace::full(2)).unwrap();
        let pt = ProjectivePoint::new(0, &linalg::random_unit_vector(&mut rng, 2), t.tol_eq).unwrap();
        let ts = tangent_space(&pt, &full, &t).unwrap();
        assert_eq!(ts.dim(), 1);
        assert!(ts.basis.column(0).dotc(&pt.ray).norm() < 1e-12);

        let line = ProjectiveSubmanifold::new(0, span(std::slice::from_ref(&pt.ray))).unwrap();
        assert_eq!(tangent_space(&pt, &line, &t).unwrap().dim(), 0);

        let m = span(&[linalg::random_unit_vector(&mut rng, 4), linalg::random_unit_vector(&mut rng, 4)]);
        let sub = ProjectiveSubmanifold::new(0, m.clone()).unwrap();
        let xi = &m.basis * linalg::random_unit_vector(&mut rng, 2);
        let pt = ProjectivePoint::new(0, &xi, t.tol_eq).unwrap();
        let ts = tangent_space(&pt, &sub, &t).unwrap();
        assert_eq!(ts.dim(), 1);
        let v = ts.basis.column(0).into_owned();
        assert!(v.dotc(&pt.ray).norm() < 1e-12);
        assert!(m.residual(&v) < 1e-12);

        let off = ProjectivePoint::new(0, &linalg::random_unit_vector(&mut rng, 4), t.tol_eq).unwrap();
        assert!(matches!(tangent_space(&off, &sub, &t), Err(Error::PointNotOnSubmanifold { .. })));
    }

    #[test]
    fn tangent_span_examples() {
        let t = tol();
        let mut rng = t.rng();
        let e = |k| standard_basis_vector(2, k);
        let single = tangent_span_condition(2, &[span(&[e(0)])], &t, &mut rng).unwrap();
        assert!(single.holds);

        let two = tangent_span_condition(2, &[span(&[e(0)]), span(&[e(1)])], &t, &mut rng).unwrap();
        assert!(!two.holds);
        assert_eq!(two.span.dim(), 2);
        let w = two.witness.unwrap();
        let expect = (e(0) + e(1)) / C64::from(SQRT_2);
        assert!((w - expect).norm() < 1e-12);

        let e4 = |k| standard_basis_vector(4, k);
        let small = span(&[e4(0)]);
        let big = span(&[e4(0), e4(1) + e4(2)]);
        let nested = tangent_span_condition(4, &[small, big.clone()], &t, &mut rng).unwrap();
        assert!(nested.holds);
        assert!(nested.recovered.unwrap().same_span(&big, 1e-10));

        assert!(matches!(tangent_span_condition(2, &[], &t, &mut rng), Err(Error::EmptyCandidate)));
    }

    #[test]
    fn witness_falls_back_to_random_vectors() {
        let t = tol();
        let mut rng = t.rng();
        let e = |k| standard_basis_vector(2, k);
        // first basis vectors cancel
        let a = span(&[e(0)]);
        let b = Subspace { ambient_dim: 2, basis: linalg::ComplexMatrix::from_columns(&[-e(0)]) };
        let c = span(&[e(1)]);
        let v = tangent_span_condition(2, &[a, b, c], &t, &mut rng).unwrap();
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert!(w[0].norm() > 1e-3 && w[1].norm() > 1e-3);
    }

    #[test]
    fn closedness_of_projective_subspaces() {
        let t = tol();
        let mut rng = t.rng();
        let full = ProjectiveSubmanifold::new(0, Subspace::full(3)).unwrap();
        assert!(submanifold_closedness_check(&full, 50, &t, &mut rng).pass);
        let m = span(&[linalg::random_unit_vector(&mut rng, 4), linalg::random_unit_vector(&mut rng, 4)]);
        let sub = ProjectiveSubmanifold::new(0, m).unwrap();
        let r = submanifold_closedness_check(&sub, 200, &t, &mut rng);
        assert!(r.pass, "{r:?}");
        assert!(r.max_residual < 1e-9);
    }

    #[test]
    fn real_slice_fails_the_chart_condition() {
        let t = tol();
        let mut rng = t.rng();
        let r = submanifold_closedness_check(&RealProjectiveSlice { n: 2 }, 50, &t, &mut rng);
        assert!(!r.pass);
        assert_eq!(r.failed_clauses(), vec!["chart"]);
    }

    #[test]
    fn nearest_point_distance() {
        let sub = ProjectiveSubmanifold::new(0, span(&[standard_basis_vector(2, 0)])).unwrap();
        let x = ComplexVector::from_vec(vec![ONE, ONE]);
        let (p, d) = nearest_point(&sub, &x).unwrap();
        assert!((p - standard_basis_vector(2, 0)).norm() < 1e-15);
        assert!((d - SQRT_2 * std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }
}
