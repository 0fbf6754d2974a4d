//! Pure-state geometry of a hereditary corner `B = pAp`: the extension map
//! `Ξ`, the decomposition `Θ(ρ) = (t_B(ρ), ρ′)`, distances to `Ξ(P(B))`,
//! region classification, sphere coordinates, and the left-ideal fibers.
//!
//! Over a parent block `i` with `π_i(p)` of rank `r_i`, the corner's irreducible
//! space is `H_B,i = range π_i(p) = V_i C^{r_i}` and `Ξ` sends the ray `[y]` of a
//! pure state of `B` to the ray `[V_i y]`.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::{hereditary_from_projection, FdCStarAlgebra, HereditarySubalgebra};
use crate::bundle::{
    check_uniform_kahler_iso, kahler_distance, FiberMap, KahlerBundle, UniformKahlerBundle, CROSS_FIBER_DISTANCE,
    KAPPA,
};
use crate::error::{Error, Result};
use crate::gns::{gns, GnsTriple};
use crate::linalg::{self, vectorize, ComplexMatrix, ComplexVector, Subspace, C64};
use crate::report::VerificationReport;
use crate::states::{make_state, state_from_ray, vector_state, ProjectivePoint, State};
use crate::submanifold::{submanifold_closedness_check, ProjectiveSubmanifold};

#[derive(Debug, Clone)]
pub struct HereditaryContext {
    pub parent: Arc<FdCStarAlgebra>,
    pub b: HereditarySubalgebra,
    /// Parent spectrum points where `p` does not vanish.
    pub spectrum_b: Vec<usize>,
    /// `H_B,i ⊆ C^{n_i}` for `i` in `spectrum_b`.
    pub fiber_subspaces: BTreeMap<usize, Subspace>,
    pub kappa: f64,
}

impl HereditaryContext {
    pub fn new(parent: &Arc<FdCStarAlgebra>, p: &ComplexMatrix) -> Result<Self> {
        Self::from_hereditary(hereditary_from_projection(parent, p)?)
    }

    pub fn from_hereditary(b: HereditarySubalgebra) -> Result<Self> {
        if b.block_map.is_empty() {
            return Err(Error::InvalidArgument("the zero corner has no pure states".into()));
        }
        let fiber_subspaces = b
            .block_map
            .iter()
            .map(|&i| {
                let v = &b.corner_bases[i];
                (i, Subspace { ambient_dim: v.nrows(), basis: v.clone() })
            })
            .collect();
        Ok(Self {
            parent: Arc::clone(&b.parent),
            spectrum_b: b.block_map.clone(),
            fiber_subspaces,
            kappa: KAPPA,
            b,
        })
    }

    pub fn b_algebra(&self) -> &Arc<FdCStarAlgebra> {
        &self.b.as_algebra
    }

    pub fn unit_p(&self) -> &ComplexMatrix {
        &self.b.unit_p
    }

    /// `V_i`, an orthonormal basis of `H_B,i` (empty outside `spectrum_b`).
    pub fn corner_basis(&self, i: usize) -> &ComplexMatrix {
        &self.b.corner_bases[i]
    }

    /// Canonical orthonormal basis of `C^{n_i} ⊖ H_B,i`.
    pub fn complement_basis(&self, i: usize) -> Result<ComplexMatrix> {
        let n = self.parent.block(i)?.n;
        let v = self.corner_basis(i);
        let q = ComplexMatrix::identity(n, n) - v * v.adjoint();
        Ok(linalg::pivoted_column_basis(&q, n - v.ncols(), self.parent.tolerances()))
    }

    /// `true` iff `π_i(B)` is all of `M_{n_i}` on every fiber it meets.
    pub fn is_full_on(&self, i: usize) -> bool {
        self.parent.blocks().get(i).is_some_and(|b| self.b.corner_rank(i) == b.n)
    }

    /// Parent block carrying the corner block `j`.
    pub fn parent_fiber(&self, corner_block: usize) -> Result<usize> {
        self.b.block_map.get(corner_block).copied().ok_or(Error::UnknownBaseIndex(corner_block))
    }

    /// `t_B(ρ) = ρ(p)`.
    pub fn weight(&self, rho: &State) -> Result<f64> {
        self.ensure_parent_state(rho)?;
        Ok(rho.eval(&self.b.unit_p).re)
    }

    fn ensure_parent_state(&self, rho: &State) -> Result<()> {
        if rho.same_algebra_as(&self.parent) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("state does not belong to the parent algebra".into()))
        }
    }

    fn ensure_corner_state(&self, tau: &State) -> Result<()> {
        if tau.same_algebra_as(self.b_algebra()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("state does not belong to the hereditary subalgebra".into()))
        }
    }

    /// `V_i y` for the canonical ray `y` of a pure state of `B`, with `i` its parent fiber.
    pub fn embedded_ray(&self, tau: &State) -> Result<(usize, ComplexVector)> {
        self.ensure_corner_state(tau)?;
        let pt = tau.ray()?;
        let i = self.parent_fiber(pt.fiber)?;
        Ok((i, self.corner_basis(i) * &pt.ray))
    }
}

/// `Ξ(τ)(a) = τ(pap)`, certified pure on the parent.
pub fn xi_extend(ctx: &HereditaryContext, tau: &State) -> Result<State> {
    ctx.ensure_corner_state(tau)?;
    if !tau.is_pure() {
        return Err(Error::NotPure);
    }
    let p = ctx.unit_p();
    let values = ComplexVector::from_iterator(
        ctx.parent.dim(),
        ctx.parent.basis().iter().map(|b| tau.eval(&(p * b * p))),
    );
    let rho = make_state(&ctx.parent, &values)?;
    if !rho.is_pure() {
        return Err(Error::Inconsistency("extension of a pure state is not pure".into()));
    }
    Ok(rho)
}

#[derive(Debug, Clone)]
pub struct ThetaResult {
    pub t: f64,
    pub rho_prime: State,
}

/// `Θ(ρ) = (ρ(p), ρ|_B / ρ(p))`.
pub fn theta(ctx: &HereditaryContext, rho: &State) -> Result<ThetaResult> {
    if !rho.is_pure() {
        return Err(Error::NotPure);
    }
    let t = ctx.weight(rho)?;
    if t <= ctx.parent.tolerances().tol_eq {
        return Err(Error::VanishesOnB { weight: t });
    }
    let values = rho.restricted_values(ctx.b_algebra())? / C64::from(t);
    let rho_prime = make_state(ctx.b_algebra(), &values)?;
    if !rho_prime.is_pure() {
        return Err(Error::Inconsistency("normalized restriction of a pure state is not pure".into()));
    }
    Ok(ThetaResult { t, rho_prime })
}

/// The vector state at `√t·x_{ρ′} + √(1−t)·w` with `w ⊥ H_B,i` a unit vector
/// (default: first canonical basis vector of the complement). `t = 1` returns `Ξ(ρ′)`.
pub fn theta_preimage(
    ctx: &HereditaryContext,
    t: f64,
    rho_prime: &State,
    w: Option<&ComplexVector>,
) -> Result<State> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidArgument(format!("weight {t} is outside (0, 1]")));
    }
    if t == 1.0 {
        return xi_extend(ctx, rho_prime);
    }
    let (i, x) = ctx.embedded_ray(rho_prime)?;
    if ctx.is_full_on(i) {
        return Err(Error::FullCorner { fiber: i });
    }
    let w = match w {
        Some(w) => {
            check_direction(ctx, i, w)?;
            w.clone()
        }
        None => ctx.complement_basis(i)?.column(0).into_owned(),
    };
    let h = x * C64::from(t.sqrt()) + w * C64::from((1.0 - t).sqrt());
    vector_state(&ctx.parent, i, &h)
}

fn check_direction(ctx: &HereditaryContext, i: usize, w: &ComplexVector) -> Result<()> {
    let tol = ctx.parent.tolerances().tol_eq;
    let n = ctx.parent.block(i)?.n;
    if w.len() != n {
        return Err(Error::BadDirection(format!("expected a vector in C^{n}, found C^{}", w.len())));
    }
    if (w.norm() - 1.0).abs() > tol {
        return Err(Error::BadDirection(format!("norm {} is not 1", w.norm())));
    }
    let overlap = (ctx.corner_basis(i).adjoint() * w).norm();
    if overlap > tol {
        return Err(Error::BadDirection(format!("overlap {overlap:.3e} with the corner")));
    }
    Ok(())
}

/// `d(ρ, Ξ(P(B)))`: 3 off `spectrum_b`, else `√2·arccos√t_B(ρ)` evaluated as
/// `√2·atan2(‖(1−p_i)x‖, ‖p_i x‖)` on the canonical ray `x`.
pub fn distance_to_xi_image(ctx: &HereditaryContext, rho: &State) -> Result<f64> {
    ctx.ensure_parent_state(rho)?;
    let pt = rho.ray()?;
    if !ctx.spectrum_b.contains(&pt.fiber) {
        return Ok(CROSS_FIBER_DISTANCE);
    }
    let v = ctx.corner_basis(pt.fiber);
    let inside = v.adjoint() * &pt.ray;
    let outside = (&pt.ray - v * &inside).norm();
    Ok(SQRT_2 * outside.atan2(inside.norm()))
}

/// Minimum of `d(ρ, Ξ(τ))` over sampled pure states `τ` of `B`: random rays,
/// then stochastic local refinement of the best one on each corner block.
pub fn distance_by_search<R: Rng + ?Sized>(
    ctx: &HereditaryContext,
    rho: &State,
    evaluations: usize,
    rng: &mut R,
) -> Result<f64> {
    let b = ctx.b_algebra();
    let mut best = f64::INFINITY;
    let blocks = b.blocks();
    let per_block = (evaluations / blocks.len()).max(2);
    for blk in blocks {
        let dist = |y: &ComplexVector| -> Result<f64> {
            let pt = ProjectivePoint::new(blk.index, y, b.tolerances().tol_eq)?;
            kahler_distance(rho, &xi_extend(ctx, &state_from_ray(b, &pt)?)?)
        };
        let random_phase = per_block / 2;
        let mut y = linalg::random_unit_vector(rng, blk.n);
        let mut d = dist(&y)?;
        for _ in 1..random_phase {
            let cand = linalg::random_unit_vector(rng, blk.n);
            let dc = dist(&cand)?;
            if dc < d {
                y = cand;
                d = dc;
            }
        }
        let mut step = 0.3;
        for _ in random_phase..per_block {
            let trial = &y + linalg::random_unit_vector(rng, blk.n) * C64::from(step);
            let dt = dist(&trial)?;
            if dt < d {
                y = &trial / C64::from(trial.norm());
                d = dt;
                step = (step * 1.5).min(0.5);
            } else {
                step = (step * 0.85).max(1e-12);
            }
        }
        best = best.min(d);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Region {
    OutsideSpectrum,
    OnImage,
    InsideDisk,
    BoundarySphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    /// Region read off from `t_B(ρ) = ρ(p)`.
    pub by_weight: Region,
    /// Region read off from `d(ρ, Ξ(P(B)))`.
    pub by_distance: Region,
    pub weight: f64,
    pub distance: f64,
}

impl Classification {
    pub fn region(&self) -> Region {
        self.by_weight
    }

    pub fn consistent(&self) -> bool {
        self.by_weight == self.by_distance
    }
}

/// Distance bands matching the weight bands `t ≥ 1 − tol` and `t ≤ tol`.
pub fn distance_bands(tol_eq: f64) -> (f64, f64) {
    (SQRT_2 * tol_eq.sqrt().asin(), SQRT_2 * tol_eq.sqrt().acos())
}

pub fn classify_state(ctx: &HereditaryContext, rho: &State) -> Result<Classification> {
    let tol = ctx.parent.tolerances().tol_eq;
    let distance = distance_to_xi_image(ctx, rho)?;
    let weight = ctx.weight(rho)?;
    let fiber = rho.fiber()?;
    let by_weight = if !ctx.spectrum_b.contains(&fiber) {
        Region::OutsideSpectrum
    } else if weight >= 1.0 - tol {
        Region::OnImage
    } else if weight <= tol {
        Region::BoundarySphere
    } else {
        Region::InsideDisk
    };
    let (d_on, d_bdry) = distance_bands(tol);
    let by_distance = if distance == CROSS_FIBER_DISTANCE {
        Region::OutsideSpectrum
    } else if distance <= d_on {
        Region::OnImage
    } else if distance >= d_bdry {
        Region::BoundarySphere
    } else {
        Region::InsideDisk
    };
    Ok(Classification { by_weight, by_distance, weight, distance })
}

/// Coordinates of a point on the sphere `S(Ξ(μ); t)` inside the fiber:
/// `x_ρ = e^{iα}(cos(t/√2)·x_μ + sin(t/√2)·λ·w)` with `w` gauge-fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereParam {
    pub phase: C64,
    pub orthogonal_point: ProjectivePoint,
}

fn sphere_setup(ctx: &HereditaryContext, mu: &State, t: f64) -> Result<(usize, ComplexVector)> {
    if !(t > 0.0 && t < KAPPA) {
        return Err(Error::InvalidArgument(format!("radius {t} is outside (0, κ)")));
    }
    let (i, x_mu) = ctx.embedded_ray(mu)?;
    if ctx.is_full_on(i) {
        return Err(Error::FullCorner { fiber: i });
    }
    Ok((i, x_mu))
}

/// Decomposes `ρ` on `S(Ξ(μ); t)` as `(λ, [w])` with `w ⊥ H_B,i`.
pub fn upsilon(ctx: &HereditaryContext, mu: &State, t: f64, rho: &State) -> Result<SphereParam> {
    let tol = ctx.parent.tolerances().tol_eq;
    let (i, x_mu) = sphere_setup(ctx, mu, t)?;
    ctx.ensure_parent_state(rho)?;
    let pt = rho.ray()?;
    if pt.fiber != i {
        return Err(Error::NotOnSphere(format!("state lies over {} instead of {i}", pt.fiber)));
    }
    let x = &pt.ray;
    let c = x_mu.dotc(x);
    let d = SQRT_2 * (x - &x_mu * c).norm().atan2(c.norm());
    if (d - t).abs() > tol {
        return Err(Error::NotOnSphere(format!("distance {d} differs from radius {t}")));
    }
    let v_basis = ctx.corner_basis(i);
    let in_corner = v_basis * (v_basis.adjoint() * x) - &x_mu * c;
    if in_corner.norm() > tol {
        return Err(Error::NotOnSphere(format!(
            "component {:.3e} inside the corner orthogonal to μ",
            in_corner.norm()
        )));
    }
    let x = x * (c.conj() / c.norm());
    let v = &x - &x_mu * C64::from(c.norm());
    let s = v.norm();
    let w = ProjectivePoint::new(i, &v, tol)?;
    let phase = w.ray.dotc(&(&v / C64::from(s)));
    Ok(SphereParam { phase: phase / phase.norm(), orthogonal_point: w })
}

pub fn upsilon_inverse(ctx: &HereditaryContext, mu: &State, t: f64, param: &SphereParam) -> Result<State> {
    let (i, x_mu) = sphere_setup(ctx, mu, t)?;
    if param.orthogonal_point.fiber != i {
        return Err(Error::BadDirection(format!("direction lies over {} instead of {i}", param.orthogonal_point.fiber)));
    }
    check_direction(ctx, i, &param.orthogonal_point.ray)?;
    if (param.phase.norm() - 1.0).abs() > ctx.parent.tolerances().tol_eq {
        return Err(Error::InvalidArgument(format!("phase {} is not of modulus 1", param.phase)));
    }
    let a = t / SQRT_2;
    let h = x_mu * C64::from(a.cos()) + &param.orthogonal_point.ray * (param.phase * a.sin());
    vector_state(&ctx.parent, i, &h)
}

/// The state at `cos(t/√2)·x_μ + sin(t/√2)·u` for a unit `u ⊥ x_μ` anywhere
/// in the fiber; every point of `S(Ξ(μ); t)` has this form.
pub fn sphere_point(ctx: &HereditaryContext, mu: &State, t: f64, u: &ComplexVector) -> Result<State> {
    let (i, x_mu) = ctx.embedded_ray(mu)?;
    let tol = ctx.parent.tolerances().tol_eq;
    if u.len() != x_mu.len() || (u.norm() - 1.0).abs() > tol || x_mu.dotc(u).norm() > tol {
        return Err(Error::BadDirection("expected a unit vector orthogonal to x_μ".into()));
    }
    let a = t / SQRT_2;
    vector_state(&ctx.parent, i, &(x_mu * C64::from(a.cos()) + u * C64::from(a.sin())))
}

/// The left ideal `L = A p`, its certification, and the fiber `Λ_ρ(L*)` in
/// the GNS space of `ρ`.
#[derive(Debug, Clone)]
pub struct HilbertFiber {
    pub left_ideal: Vec<ComplexMatrix>,
    /// Worst membership residual of `a·x` in `L` for basis elements.
    pub left_ideal_residual: f64,
    /// Distance between the projectors onto `L ∩ L*` and onto `B`.
    pub intersection_residual: f64,
    pub gns: GnsTriple,
    pub fiber: Subspace,
}

pub fn left_ideal_and_hilbert_fiber(ctx: &HereditaryContext, rho: &State) -> Result<HilbertFiber> {
    ctx.ensure_parent_state(rho)?;
    let a = ctx.parent.as_ref();
    let tol = a.tolerances();
    let n = a.ambient_dim();
    let left = ctx.b.left_ideal()?;
    let l_span = span_of(n, &left, tol)?;
    let mut left_ideal_residual: f64 = 0.0;
    for x in a.basis() {
        for y in &left {
            let v = vectorize(&(x * y));
            let nv = v.norm();
            if nv > crate::algebra::MEMBERSHIP_FLOOR {
                left_ideal_residual = left_ideal_residual.max(l_span.residual(&v) / nv);
            }
        }
    }
    let adjoints: Vec<ComplexMatrix> = left.iter().map(|x| x.adjoint()).collect();
    let l_star = span_of(n, &adjoints, tol)?;
    let meet = linalg::intersect(&l_span, &l_star, tol)?;
    let b_span = span_of(n, ctx.b_algebra().basis(), tol)?;
    let intersection_residual = if meet.dim() == b_span.dim() {
        (meet.projector() - b_span.projector()).norm()
    } else {
        f64::INFINITY
    };
    let triple = gns(rho)?;
    // images have norm at most ‖x‖ = 1, so an absolute floor separates noise
    let images: Vec<ComplexVector> = adjoints.iter().map(|x| triple.quotient_map(x)).collect();
    let fiber = if images.is_empty() {
        Subspace::zero(triple.hilbert_dim)
    } else {
        let m = ComplexMatrix::from_columns(&images);
        linalg::orthonormalize_columns_with_floor(&m, tol, linalg::KERNEL_NOISE_FLOOR)
    };
    Ok(HilbertFiber { left_ideal: left, left_ideal_residual, intersection_residual, gns: triple, fiber })
}

fn span_of(n: usize, mats: &[ComplexMatrix], tol: &linalg::ToleranceConfig) -> Result<Subspace> {
    let vecs: Vec<ComplexVector> = mats.iter().map(vectorize).collect();
    linalg::orthonormalize(n * n, &vecs, tol)
}

/// `Ξ(P(B))` as a bundle over `spectrum_b` with fibers `P(H_B,i)`.
#[derive(Debug, Clone)]
pub struct XiSubbundle<'a> {
    pub ctx: &'a HereditaryContext,
}

impl KahlerBundle for XiSubbundle<'_> {
    fn algebra(&self) -> &Arc<FdCStarAlgebra> {
        &self.ctx.parent
    }

    fn base(&self) -> Vec<usize> {
        self.ctx.spectrum_b.clone()
    }

    fn fiber_frame(&self, i: usize) -> Result<ComplexMatrix> {
        if !self.ctx.spectrum_b.contains(&i) {
            return Err(Error::UnknownBaseIndex(i));
        }
        Ok(self.ctx.corner_basis(i).clone())
    }
}

/// `true` iff `A·B ⊆ B` and `B·A ⊆ B` on bases.
pub fn absorbs(ctx: &HereditaryContext) -> bool {
    let b = ctx.b_algebra();
    ctx.parent
        .basis()
        .iter()
        .all(|x| b.basis().iter().all(|y| b.contains(&(x * y)) && b.contains(&(y * x))))
}

/// Checks that `Ξ(P(B))` is a Kähler subbundle over `spectrum_b` with fibers
/// `P(H_B,i)`, isomorphic to `P(B)`, and equal to the full restriction
/// exactly when `B` is an ideal.
pub fn subbundle_check(ctx: &HereditaryContext, samples: usize, rng: &mut dyn RngCore) -> VerificationReport {
    let tol = *ctx.parent.tolerances();
    let b = ctx.b_algebra();
    let sub = XiSubbundle { ctx };
    let mut report = VerificationReport::new("subbundle");

    let mut over = VerificationReport::new("fibers-over-spectrum");
    let mut images = VerificationReport::new("fiber-images");
    for k in 0..samples {
        let j = k % b.blocks().len();
        let i = ctx.b.block_map[j];
        let r = (|| -> Result<()> {
            let tau = crate::states::random_pure_state(rng, b, j)?;
            let rho = xi_extend(ctx, &tau)?;
            over.require(rho.fiber()? == i, || json!({ "sample": k, "corner_block": j, "parent_block": i }));
            let res = ctx.fiber_subspaces[&i].residual(&rho.ray()?.ray);
            images.residual(res, tol.tol_eq, || json!({ "sample": k, "reason": "image ray leaves H_B" }));
            // converse: every ray of H_B is an image
            let z = linalg::random_unit_vector(rng, ctx.corner_basis(i).ncols());
            let rho = sub.point(i, &z)?;
            let th = theta(ctx, &rho)?;
            images.residual((th.t - 1.0).abs(), tol.tol_eq, || json!({ "sample": k, "weight": th.t }));
            let back = xi_extend(ctx, &th.rho_prime)?;
            let gap = back.ray()?.gauge_distance(&rho.ray()?);
            images.residual(gap, tol.tol_eq, || json!({ "sample": k, "reason": "ray of H_B is not an image" }));
            Ok(())
        })();
        if let Err(e) = r {
            images.fail(json!({ "sample": k, "error": e.to_string() }));
        }
    }
    for (&i, m) in &ctx.fiber_subspaces {
        match ProjectiveSubmanifold::new(i, m.clone()) {
            Ok(pm) => {
                let mut c = submanifold_closedness_check(&pm, samples.clamp(1, 50), &tol, rng);
                c.check = format!("submanifold-closedness[{i}]");
                images.push_clause(c);
            }
            Err(e) => images.fail(json!({ "fiber": i, "error": e.to_string() })),
        }
    }
    report.push_clause(over);
    report.push_clause(images);

    let source = UniformKahlerBundle::new(b);
    let phi: BTreeMap<usize, usize> = ctx.b.block_map.iter().copied().enumerate().collect();
    let context = ctx.clone();
    let psi = FiberMap::States(Arc::new(move |tau: &State| xi_extend(&context, tau)));
    let mut iso = check_uniform_kahler_iso(&source, &sub, &phi, &psi, samples, rng);
    iso.check = "xi-isomorphism".into();
    report.push_clause(iso);

    let mut ideal = VerificationReport::new("ideal-iff-full-restriction");
    let full = ctx.spectrum_b.iter().all(|&i| ctx.is_full_on(i));
    let is_ideal = absorbs(ctx);
    ideal.require(full == is_ideal, || json!({ "full_restriction": full, "ideal": is_ideal }));
    ideal.note(json!({ "full_restriction": full, "ideal": is_ideal }));
    report.push_clause(ideal);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::linalg::{standard_basis_vector, ToleranceConfig, ONE};
    use crate::states::random_pure_state;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn corner(n: usize, ranks: &[usize]) -> HereditaryContext {
        let a = catalog::full_matrix(n, &tol()).unwrap();
        let mut p = ComplexMatrix::zeros(n, n);
        for &r in ranks {
            p[(r, r)] = ONE;
        }
        HereditaryContext::new(&a, &p).unwrap()
    }

    #[test]
    fn kappa_is_stored() {
        let ctx = corner(2, &[0]);
        assert_eq!(ctx.kappa, KAPPA);
    }

    #[test]
    fn xi_on_a_rank_one_corner() {
        let t = tol();
        let mut rng = t.rng();
        let ctx = corner(2, &[0]);
        let tau = random_pure_state(&mut rng, ctx.b_algebra(), 0).unwrap();
        let rho = xi_extend(&ctx, &tau).unwrap();
        let pt = rho.ray().unwrap();
        assert!((pt.ray.clone() - standard_basis_vector(2, 0)).norm() < 1e-12);
    }

    #[test]
    fn xi_on_a_rank_two_corner() {
        let ctx = corner(3, &[0, 1]);
        let y = ComplexVector::from_vec(vec![ONE, ONE]);
        let tau = vector_state(ctx.b_algebra(), 0, &y).unwrap();
        let rho = xi_extend(&ctx, &tau).unwrap();
        assert!(rho.is_pure());
        let expect = ComplexVector::from_vec(vec![ONE, ONE, C64::from(0.0)]) / C64::from(SQRT_2);
        assert!((rho.ray().unwrap().ray - expect).norm() < 1e-12);
        let back = theta(&ctx, &rho).unwrap();
        assert!((back.t - 1.0).abs() < 1e-12);
        assert!((back.rho_prime.values() - tau.values()).norm() < 1e-12);
    }

    #[test]
    fn xi_is_identity_for_the_whole_algebra() {
        let t = tol();
        let mut rng = t.rng();
        let a = catalog::m2_plus_m3(&t).unwrap();
        let ctx = HereditaryContext::new(&a, a.unit()).unwrap();
        for j in 0..2 {
            let tau = random_pure_state(&mut rng, ctx.b_algebra(), j).unwrap();
            let rho = xi_extend(&ctx, &tau).unwrap();
            let (i, x) = ctx.embedded_ray(&tau).unwrap();
            assert_eq!(rho.fiber().unwrap(), i);
            assert!(rho.ray().unwrap().gauge_distance(&ProjectivePoint::new(i, &x, t.tol_eq).unwrap()) < 1e-10);
            let th = theta(&ctx, &rho).unwrap();
            let again = xi_extend(&ctx, &th.rho_prime).unwrap();
            assert!((again.values() - rho.values()).norm() < 1e-10);
        }
    }

    #[test]
    fn theta_examples() {
        let ctx = corner(2, &[0]);
        let x = ComplexVector::from_vec(vec![C64::from(0.5), C64::from(0.75f64.sqrt())]);
        let rho = vector_state(&ctx.parent, 0, &x).unwrap();
        let th = theta(&ctx, &rho).unwrap();
        assert!((th.t - 0.25).abs() < 1e-12);
        assert!(th.rho_prime.is_pure());
        let d = distance_to_xi_image(&ctx, &rho).unwrap();
        assert!((d - SQRT_2 * std::f64::consts::FRAC_PI_3).abs() < 1e-12);

        let pre = theta_preimage(&ctx, 0.25, &th.rho_prime, None).unwrap();
        assert!((pre.ray().unwrap().ray - x).norm() < 1e-12);

        let t = tol();
        let a = catalog::m2_plus_m3(&t).unwrap();
        let ctx2 = HereditaryContext::new(&a, &a.central_projection(&[0]).unwrap()).unwrap();
        let mut rng = t.rng();
        let off = random_pure_state(&mut rng, &a, 1).unwrap();
        assert!(matches!(theta(&ctx2, &off), Err(Error::VanishesOnB { .. })));
        assert_eq!(distance_to_xi_image(&ctx2, &off).unwrap(), 3.0);
        assert_eq!(classify_state(&ctx2, &off).unwrap().region(), Region::OutsideSpectrum);
    }

    #[test]
    fn preimage_errors() {
        let t = tol();
        let mut rng = t.rng();
        let full = corner(2, &[0, 1]);
        let tau = random_pure_state(&mut rng, full.b_algebra(), 0).unwrap();
        assert!(matches!(theta_preimage(&full, 0.5, &tau, None), Err(Error::FullCorner { fiber: 0 })));
        let ctx = corner(3, &[0]);
        let tau = random_pure_state(&mut rng, ctx.b_algebra(), 0).unwrap();
        let bad = standard_basis_vector(3, 0);
        assert!(matches!(theta_preimage(&ctx, 0.5, &tau, Some(&bad)), Err(Error::BadDirection(_))));
        let short = standard_basis_vector(3, 1) * C64::from(0.5);
        assert!(matches!(theta_preimage(&ctx, 0.5, &tau, Some(&short)), Err(Error::BadDirection(_))));
        assert!(theta_preimage(&ctx, 1.5, &tau, None).is_err());
    }

    #[test]
    fn preimage_round_trip_and_limit() {
        let t = tol();
        let mut rng = t.rng();
        let ctx = corner(4, &[0, 2]);
        for _ in 0..50 {
            let tau = random_pure_state(&mut rng, ctx.b_algebra(), 0).unwrap();
            let weight: f64 = rng.random_range(0.01..0.99);
            let comp = ctx.complement_basis(0).unwrap();
            let w = &comp * linalg::random_unit_vector(&mut rng, comp.ncols());
            let rho = theta_preimage(&ctx, weight, &tau, Some(&w)).unwrap();
            let th = theta(&ctx, &rho).unwrap();
            assert!((th.t - weight).abs() < 1e-10);
            assert!((th.rho_prime.values() - tau.values()).norm() < 1e-10);
        }
        let tau = random_pure_state(&mut rng, ctx.b_algebra(), 0).unwrap();
        let near = theta_preimage(&ctx, 1.0 - 1e-12, &tau, None).unwrap();
        let d = kahler_distance(&near, &xi_extend(&ctx, &tau).unwrap()).unwrap();
        assert!(d < 1e-5);
    }

    #[test]
    fn distance_formula_matches_search() {
        let t = tol();
        let mut rng = t.rng();
        let ctx = corner(3, &[0, 1]);
        for _ in 0..5 {
            let rho = random_pure_state(&mut rng, &ctx.parent, 0).unwrap();
            let d = distance_to_xi_image(&ctx, &rho).unwrap();
            let weight = ctx.weight(&rho).unwrap();
            assert!((d - SQRT_2 * weight.sqrt().acos()).abs() < 1e-9);
            let searched = distance_by_search(&ctx, &rho, 1000, &mut rng).unwrap();
            assert!(searched >= d - 1e-12);
            assert!(searched - d < 1e-6, "{searched} vs {d}");
        }
    }

    #[test]
    fn classification() {
        let t = tol();
        let mut rng = t.rng();
        let ctx = corner(3, &[0]);
        let tau = random_pure_state(&mut rng, ctx.b_algebra(), 0).unwrap();
        let on = classify_state(&ctx, &xi_extend(&ctx, &tau).unwrap()).unwrap();
        assert_eq!(on.region(), Region::OnImage);
        assert!(on.consistent());
        let ortho = vector_state(&ctx.parent, 0, &standard_basis_vector(3, 2)).unwrap();
        let c = classify_state(&ctx, &ortho).unwrap();
        assert_eq!(c.region(), Region::BoundarySphere);
        assert_eq!(c.distance, KAPPA);
        let inside = random_pure_state(&mut rng, &ctx.parent, 0).unwrap();
        let c = classify_state(&ctx, &inside).unwrap();
        assert_eq!(c.region(), Region::InsideDisk);
        assert!(c.consistent());
        assert_eq!(serde_json::to_string(&c.by_weight).unwrap(), "\"INSIDE_DISK\"");
    }

    #[test]
    fn sphere_coordinates() {
        let t = tol();
        let mut rng = t.rng();
        // rank-one corner of M_2: the sphere is one circle over the single point [e_2]
        let ctx = corner(2, &[0]);
        let mu = random_pure_state(&mut rng, ctx.b_algebra(), 0).unwrap();
        let e2 = ProjectivePoint::new(0, &standard_basis_vector(2, 1), t.tol_eq).unwrap();
        for _ in 0..20 {
            let r: f64 = rng.random_range(0.1..2.0);
            let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            let param = SphereParam { phase, orthogonal_point: e2.clone() };
            let rho = upsilon_inverse(&ctx, &mu, r, &param).unwrap();
            let back = upsilon(&ctx, &mu, r, &rho).unwrap();
            assert!(back.orthogonal_point.gauge_distance(&e2) < 1e-10);
            assert!((back.phase - phase).norm() < 1e-10);
        }
        // rank-one corner of M_3: two independent coordinates
        let ctx = corner(3, &[0]);
        let mu = random_pure_state(&mut rng, ctx.b_algebra(), 0).unwrap();
        let comp = ctx.complement_basis(0).unwrap();
        let w = ProjectivePoint::new(0, &(&comp * linalg::random_unit_vector(&mut rng, 2)), t.tol_eq).unwrap();
        let param = SphereParam { phase: C64::from_polar(1.0, 0.7), orthogonal_point: w };
        let rho = upsilon_inverse(&ctx, &mu, 1.0, &param).unwrap();
        assert!((distance_to_xi_image(&ctx, &rho).unwrap() - 1.0).abs() < 1e-12);
        let back = upsilon(&ctx, &mu, 1.0, &rho).unwrap();
        assert!(back.orthogonal_point.gauge_distance(&param.orthogonal_point) < 1e-10);
        assert!((back.phase - param.phase).norm() < 1e-10);
        assert!(matches!(upsilon(&ctx, &mu, 1.2, &rho), Err(Error::NotOnSphere(_))));
    }

    #[test]
    fn rank_two_sphere_contains_points_outside_the_preimage() {
        let ctx = corner(3, &[0, 1]);
        let mu = vector_state(ctx.b_algebra(), 0, &standard_basis_vector(2, 0)).unwrap();
        let radius = 1.0;
        // rotating toward e_2 stays inside H_B but moves away from Ξ(μ)
        let rho = sphere_point(&ctx, &mu, radius, &standard_basis_vector(3, 1)).unwrap();
        let xi_mu = xi_extend(&ctx, &mu).unwrap();
        assert!((kahler_distance(&rho, &xi_mu).unwrap() - radius).abs() < 1e-12);
        let th = theta(&ctx, &rho).unwrap();
        assert!((th.t - 1.0).abs() < 1e-12);
        assert!(matches!(upsilon(&ctx, &mu, radius, &rho), Err(Error::NotOnSphere(_))));
        // the corrected statement: the preimage is the sphere intersected with
        // the states at distance t from the whole image
        let w = ctx.complement_basis(0).unwrap().column(0).into_owned();
        let pre = theta_preimage(&ctx, (radius / SQRT_2).cos().powi(2), &mu, Some(&w)).unwrap();
        assert!((kahler_distance(&pre, &xi_mu).unwrap() - radius).abs() < 1e-9);
        assert!((distance_to_xi_image(&ctx, &pre).unwrap() - radius).abs() < 1e-9);
    }

    #[test]
    fn hilbert_fibers() {
        let t = tol();
        let mut rng = t.rng();
        let ctx = corner(2, &[0]);
        let rho = vector_state(&ctx.parent, 0, &standard_basis_vector(2, 0)).unwrap();
        let hf = left_ideal_and_hilbert_fiber(&ctx, &rho).unwrap();
        assert_eq!(hf.fiber.dim(), 1);
        assert!(hf.left_ideal_residual < 1e-10);
        assert!(hf.intersection_residual < 1e-10);

        let a = catalog::full_matrix(3, &t).unwrap();
        let whole = HereditaryContext::new(&a, a.unit()).unwrap();
        let rho = random_pure_state(&mut rng, &a, 0).unwrap();
        let hf = left_ideal_and_hilbert_fiber(&whole, &rho).unwrap();
        assert_eq!(hf.fiber.dim(), hf.gns.hilbert_dim);

        let a = catalog::m2_plus_m3(&t).unwrap();
        let ctx = HereditaryContext::new(&a, &a.matrix_unit(0, 0, 0).unwrap()).unwrap();
        let off = random_pure_state(&mut rng, &a, 1).unwrap();
        assert_eq!(left_ideal_and_hilbert_fiber(&ctx, &off).unwrap().fiber.dim(), 0);
    }

    #[test]
    fn subbundles() {
        let t = tol();
        let mut rng = t.rng();
        let a = catalog::m2_plus_m3(&t).unwrap();
        let ideal = HereditaryContext::new(&a, &a.central_projection(&[1]).unwrap()).unwrap();
        let r = subbundle_check(&ideal, 20, &mut rng);
        assert!(r.pass, "{r:?}");
        assert!(absorbs(&ideal));

        let proper = corner(3, &[0, 1]);
        let r = subbundle_check(&proper, 20, &mut rng);
        assert!(r.pass, "{r:?}");
        assert!(!absorbs(&proper));

        let whole = HereditaryContext::new(&a, a.unit()).unwrap();
        assert!(subbundle_check(&whole, 10, &mut rng).pass);
    }
}
