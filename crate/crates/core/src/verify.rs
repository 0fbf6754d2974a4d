//! The acceptance suite: eight property checks over the built-in catalog,
//! randomized instances, and any user-supplied algebras. Every check compares
//! the library against an oracle computed here by a different route.
//!
//! Each criterion draws from its own random stream, so results do not depend
//! on which other criteria ran.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::{enumerate_ideals, FdCStarAlgebra};
use crate::bundle::{kahler_distance, restriction_iso_ideal, restriction_iso_quotient, CROSS_FIBER_DISTANCE, KAPPA};
use crate::catalog;
use crate::corner::{
    classify_state, left_ideal_and_hilbert_fiber, sphere_point, subbundle_check, theta, theta_preimage, upsilon,
    upsilon_inverse, xi_extend, HereditaryContext, Region, SphereParam,
};
use crate::error::Result;
use crate::gelfand::{build_frame, cstar_norm, gelfand, invert, star, TransformFunction};
use crate::linalg::{self, ComplexMatrix, ComplexVector, Subspace, ToleranceConfig, C64};
use crate::report::VerificationReport;
use crate::states::{random_faithful_state, random_pure_state, vector_state, ProjectivePoint, State};
use crate::submanifold::tangent_span_condition;

/// The diameter constant as a decimal literal, independent of `KAPPA`.
#[allow(clippy::excessive_precision)]
pub const KAPPA_LITERAL: f64 = 2.2214414690791831;
pub const KAPPA_TOL: f64 = 1e-12;
pub const METRIC_TOL: f64 = 1e-9;
pub const INVERSION_TOL: f64 = 1e-10;
pub const STAR_TOL: f64 = 1e-9;
pub const NORM_REL_TOL: f64 = 1e-9;
/// Relative gap allowed between the sampled and exact norms.
pub const NORM_SAMPLING_GAP: f64 = 1e-3;
/// The sampling gap is only enforced on blocks up to this size.
pub const NORM_SAMPLING_MAX_BLOCK: usize = 4;
/// ... and only once at least this many evaluations were spent.
pub const NORM_SAMPLING_MIN_EVALUATIONS: usize = 10_000;
pub const KERNEL_TOL: f64 = 1e-10;
pub const ROUND_TRIP_TOL: f64 = 1e-9;
pub const SPHERE_PARAM_TOL: f64 = 1e-10;
pub const SPHERE_SET_TOL: f64 = 1e-9;
pub const HULL_TOL: f64 = 1e-10;
pub const TANGENT_MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub distance_pairs: usize,
    pub inversion_elements: usize,
    pub star_states: usize,
    pub norm_elements: usize,
    pub norm_evaluations: usize,
    pub iso_samples: usize,
    pub round_trips: usize,
    pub classification_states: usize,
    pub sphere_radii: usize,
    pub sphere_directions: usize,
    pub random_subalgebras: usize,
    pub tangent_candidates: usize,
    pub fiber_states: usize,
    /// Random projections added per algebra on top of the fixed corners.
    pub random_contexts: usize,
}

impl SuiteConfig {
    /// Sample counts of the acceptance criteria.
    pub fn full() -> Self {
        Self {
            distance_pairs: 1000,
            inversion_elements: 100,
            star_states: 50,
            norm_elements: 3,
            norm_evaluations: 10_000,
            iso_samples: 30,
            round_trips: 100,
            classification_states: 1000,
            sphere_radii: 20,
            sphere_directions: 5,
            random_subalgebras: 20,
            tangent_candidates: 50,
            fiber_states: 4,
            random_contexts: 2,
        }
    }

    /// Small counts for smoke runs and the determinism rerun.
    pub fn quick() -> Self {
        Self {
            distance_pairs: 20,
            inversion_elements: 5,
            star_states: 5,
            norm_elements: 1,
            norm_evaluations: 200,
            iso_samples: 5,
            round_trips: 5,
            classification_states: 30,
            sphere_radii: 3,
            sphere_directions: 2,
            random_subalgebras: 4,
            tangent_candidates: 8,
            fiber_states: 1,
            random_contexts: 1,
        }
    }
}

pub type Instances = Vec<(String, Arc<FdCStarAlgebra>)>;

/// The six catalog algebras followed by `extra`.
pub fn instances(extra: &[(String, Arc<FdCStarAlgebra>)], tol: &ToleranceConfig) -> Result<Instances> {
    let mut out: Instances = catalog::catalog(tol)?.into_iter().map(|(n, a)| (n.to_string(), a)).collect();
    out.extend(extra.iter().cloned());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub pass: bool,
    pub seed: u64,
    pub config: SuiteConfig,
    pub criteria: Vec<VerificationReport>,
}

fn stream(tol: &ToleranceConfig, criterion: u64) -> ChaCha8Rng {
    tol.rng_stream(0xC0DE_0000 + criterion)
}

/// Runs `body`, turning an error into a failed witness.
fn guarded(report: &mut VerificationReport, label: impl Fn() -> serde_json::Value, body: impl FnOnce(&mut VerificationReport) -> Result<()>) {
    if let Err(e) = body(report) {
        let mut w = label();
        if let Some(obj) = w.as_object_mut() {
            obj.insert("error".into(), json!(e.to_string()));
        }
        report.fail(w);
    }
}

fn random_element<R: Rng + ?Sized>(rng: &mut R, a: &FdCStarAlgebra) -> ComplexMatrix {
    a.element(&linalg::random_matrix(rng, a.dim(), 1).column(0).into_owned())
}

fn random_fiber<R: Rng + ?Sized>(rng: &mut R, a: &FdCStarAlgebra) -> usize {
    rng.random_range(0..a.blocks().len())
}

/// Fubini–Study distance from the chordal gap: with `λ` aligning the phases,
/// `‖x − λy‖ = 2 sin(θ/2)` where `cos θ = |⟨x|y⟩|`.
pub fn chordal_distance(x: &ComplexVector, y: &ComplexVector) -> f64 {
    let ip = y.dotc(x);
    let lambda = if ip.norm() > 0.0 { ip / ip.norm() } else { C64::from(1.0) };
    let gap = (x - y * lambda).norm();
    2.0 * SQRT_2 * (gap / 2.0).min(1.0).asin()
}

/// Criterion 1: the fiber metric, the cross-fiber constant, and the diameter.
pub fn distance_formula(algebras: &Instances, cfg: &SuiteConfig, tol: &ToleranceConfig) -> VerificationReport {
    let mut rng = stream(tol, 1);
    let mut report = VerificationReport::new("1-distance-formula");
    let mut formula = VerificationReport::new("formula");
    let mut axioms = VerificationReport::new("metric-axioms");
    let mut cross = VerificationReport::new("cross-fiber");
    let mut diameter = VerificationReport::new("diameter");
    diameter.residual((KAPPA - KAPPA_LITERAL).abs(), KAPPA_TOL, || json!({ "kappa": KAPPA }));
    for (name, a) in algebras {
        for b in a.blocks() {
            let i = b.index;
            for k in 0..cfg.distance_pairs {
                guarded(&mut formula, || json!({ "algebra": name, "fiber": i, "pair": k }), |formula| {
                    let (x, y, z) = (
                        linalg::random_unit_vector(&mut rng, b.n),
                        linalg::random_unit_vector(&mut rng, b.n),
                        linalg::random_unit_vector(&mut rng, b.n),
                    );
                    let (sx, sy, sz) = (vector_state(a, i, &x)?, vector_state(a, i, &y)?, vector_state(a, i, &z)?);
                    let dxy = kahler_distance(&sx, &sy)?;
                    let dyx = kahler_distance(&sy, &sx)?;
                    let dyz = kahler_distance(&sy, &sz)?;
                    let dxz = kahler_distance(&sx, &sz)?;
                    let oracle = chordal_distance(&x, &y);
                    formula.residual((dxy - oracle).abs(), METRIC_TOL, || {
                        json!({ "algebra": name, "fiber": i, "pair": k, "distance": dxy, "oracle": oracle })
                    });
                    let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
                    let same = kahler_distance(&sx, &vector_state(a, i, &(&x * phase))?)?;
                    axioms.residual(same, METRIC_TOL, || json!({ "axiom": "identity", "algebra": name, "d": same }));
                    axioms.residual((dxy - dyx).abs(), METRIC_TOL, || json!({ "axiom": "symmetry", "algebra": name }));
                    axioms.residual(dxz - dxy - dyz, METRIC_TOL, || {
                        json!({ "axiom": "triangle", "algebra": name, "dxz": dxz, "dxy": dxy, "dyz": dyz })
                    });
                    if oracle > 1e-6 {
                        axioms.require(dxy > 0.0, || json!({ "axiom": "positivity", "algebra": name }));
                    }
                    diameter.residual(dxy - KAPPA, KAPPA_TOL, || json!({ "algebra": name, "distance": dxy }));
                    Ok(())
                });
            }
            if b.n >= 2 {
                guarded(&mut diameter, || json!({ "algebra": name, "fiber": i }), |diameter| {
                    let x = linalg::random_unit_vector(&mut rng, b.n);
                    let mut y = linalg::random_unit_vector(&mut rng, b.n);
                    y -= &x * x.dotc(&y);
                    let d = kahler_distance(&vector_state(a, i, &x)?, &vector_state(a, i, &y)?)?;
                    diameter.residual((d - KAPPA).abs(), KAPPA_TOL, || json!({ "algebra": name, "orthogonal": d }));
                    Ok(())
                });
            }
        }
        let blocks = a.blocks();
        if blocks.len() >= 2 {
            for k in 0..cfg.distance_pairs {
                guarded(&mut cross, || json!({ "algebra": name, "pair": k }), |cross| {
                    let i = random_fiber(&mut rng, a);
                    let j = (i + rng.random_range(1..blocks.len())) % blocks.len();
                    let l = random_fiber(&mut rng, a);
                    let (si, sj, sl) = (
                        random_pure_state(&mut rng, a, i)?,
                        random_pure_state(&mut rng, a, j)?,
                        random_pure_state(&mut rng, a, l)?,
                    );
                    let d = kahler_distance(&si, &sj)?;
                    cross.require(d == CROSS_FIBER_DISTANCE, || json!({ "algebra": name, "fibers": [i, j], "d": d }));
                    let slack = kahler_distance(&si, &sl)? + kahler_distance(&sl, &sj)? - d;
                    axioms.residual(-slack, METRIC_TOL, || json!({ "axiom": "triangle", "algebra": name, "fibers": [i, l, j] }));
                    Ok(())
                });
            }
        }
    }
    report.push_clause(formula);
    report.push_clause(axioms);
    report.push_clause(cross);
    report.push_clause(diameter);
    report
}

/// Criterion 2: inversion, the star product, and the C*-norm.
pub fn gelfand_calculus(algebras: &Instances, cfg: &SuiteConfig, tol: &ToleranceConfig) -> VerificationReport {
    let mut rng = stream(tol, 2);
    let mut report = VerificationReport::new("2-gelfand-star-norm");
    let mut inversion = VerificationReport::new("inversion");
    let mut products = VerificationReport::new("star-product");
    let mut norms = VerificationReport::new("cstar-norm");
    for (name, a) in algebras {
        let frame = match build_frame(a) {
            Ok(f) => f,
            Err(e) => {
                report.fail(json!({ "algebra": name, "error": e.to_string() }));
                continue;
            }
        };
        for k in 0..cfg.inversion_elements {
            guarded(&mut inversion, || json!({ "algebra": name, "element": k }), |inversion| {
                let x = random_element(&mut rng, a);
                let back = invert(&frame, &gelfand(a, &x)?, 0, &mut rng)?.element;
                let err = (&back - &x).norm() / x.norm().max(1.0);
                inversion.residual(err, INVERSION_TOL, || json!({ "algebra": name, "element": k, "error": err }));
                Ok(())
            });
        }
        for k in 0..cfg.star_states {
            guarded(&mut products, || json!({ "algebra": name, "state": k }), |products| {
                let (x, y) = (random_element(&mut rng, a), random_element(&mut rng, a));
                // odd samples hide the elements so the product goes through inversion
                let (f, g) = if k % 2 == 0 {
                    (gelfand(a, &x)?, gelfand(a, &y)?)
                } else {
                    let (x2, y2) = (x.clone(), y.clone());
                    (
                        TransformFunction::from_fn(a, move |s: &State| Ok(s.eval(&x2))),
                        TransformFunction::from_fn(a, move |s: &State| Ok(s.eval(&y2))),
                    )
                };
                let fg = star(&frame, &f, &g)?;
                let blk = &a.blocks()[k % a.blocks().len()];
                let v = linalg::random_unit_vector(&mut rng, blk.n);
                let got = fg.eval(&vector_state(a, blk.index, &v)?)?;
                let oracle = v.dotc(&(blk.irrep(&(&x * &y)) * &v));
                let err = (got - oracle).norm();
                products.residual(err, STAR_TOL, || json!({ "algebra": name, "state": k, "error": err }));
                Ok(())
            });
        }
        let gap_applies = cfg.norm_evaluations >= NORM_SAMPLING_MIN_EVALUATIONS
            && a.blocks().iter().all(|b| b.n <= NORM_SAMPLING_MAX_BLOCK);
        for k in 0..cfg.norm_elements {
            guarded(&mut norms, || json!({ "algebra": name, "element": k }), |norms| {
                let x = random_element(&mut rng, a);
                let est = cstar_norm(&frame, &gelfand(a, &x)?, cfg.norm_evaluations, &mut rng)?;
                let oracle = linalg::operator_norm(&x);
                let rel = (est.exact - oracle).abs() / oracle;
                norms.residual(rel, NORM_REL_TOL, || json!({ "algebra": name, "exact": est.exact, "oracle": oracle }));
                norms.require(est.sampled <= est.exact * (1.0 + 1e-12), || {
                    json!({ "algebra": name, "sampled": est.sampled, "exact": est.exact, "reason": "sampled sup above exact" })
                });
                if gap_applies {
                    let gap = (est.exact - est.sampled) / est.exact;
                    norms.residual(gap, NORM_SAMPLING_GAP, || {
                        json!({ "algebra": name, "sampled": est.sampled, "exact": est.exact, "evaluations": est.evaluations })
                    });
                }
                Ok(())
            });
        }
    }
    report.push_clause(inversion);
    report.push_clause(products);
    report.push_clause(norms);
    report
}

/// Criterion 3: every ideal's restriction and quotient isomorphisms and the
/// kernel description `I = ker ⊕_{j ∉ S} π_j`.
pub fn ideal_bijections(algebras: &Instances, cfg: &SuiteConfig, tol: &ToleranceConfig) -> VerificationReport {
    let mut rng = stream(tol, 3);
    let mut report = VerificationReport::new("3-ideal-quotient-bijections");
    let mut ideal_iso = VerificationReport::new("ideal-restriction-iso");
    let mut quotient_iso = VerificationReport::new("quotient-restriction-iso");
    let mut kernel = VerificationReport::new("kernel-description");
    for (name, a) in algebras {
        let ideals = match enumerate_ideals(a) {
            Ok(v) => v,
            Err(e) => {
                report.fail(json!({ "algebra": name, "error": e.to_string() }));
                continue;
            }
        };
        kernel.require(ideals.len() == 1 << a.blocks().len(), || json!({ "algebra": name, "ideal_count": ideals.len() }));
        for ideal in &ideals {
            let label = || json!({ "algebra": name, "blocks": ideal.block_set });
            guarded(&mut ideal_iso, label, |r| {
                let sub = restriction_iso_ideal(a, ideal, cfg.iso_samples, &mut rng)?;
                r.require(sub.pass, || json!({ "algebra": name, "blocks": ideal.block_set, "failed": sub.failed_clauses() }));
                Ok(())
            });
            guarded(&mut quotient_iso, label, |r| {
                let sub = restriction_iso_quotient(a, ideal, cfg.iso_samples, &mut rng)?;
                r.require(sub.pass, || json!({ "algebra": name, "blocks": ideal.block_set, "failed": sub.failed_clauses() }));
                Ok(())
            });
            guarded(&mut kernel, label, |kernel| {
                let res = ideal.kernel_residual()?;
                kernel.residual(res, KERNEL_TOL, || json!({ "algebra": name, "blocks": ideal.block_set, "residual": res }));
                // element-wise: the central cut of a random element lies in I
                // and is killed by every irrep outside the ideal
                for _ in 0..4 {
                    let x = random_element(&mut rng, a);
                    let q = a.central_projection(&ideal.block_set)?;
                    let cut = &q * &x;
                    let mut worst = ideal.as_algebra.membership_residual(&cut) * cut.norm();
                    for b in a.blocks().iter().filter(|b| !ideal.block_set.contains(&b.index)) {
                        worst = worst.max(b.irrep(&cut).norm());
                    }
                    let rest = &x - &cut;
                    for &j in &ideal.block_set {
                        worst = worst.max(a.irrep(j, &rest)?.norm());
                    }
                    kernel.residual(worst, KERNEL_TOL, || json!({ "algebra": name, "blocks": ideal.block_set, "elementwise": worst }));
                }
                Ok(())
            });
        }
    }
    report.push_clause(ideal_iso);
    report.push_clause(quotient_iso);
    report.push_clause(kernel);
    report
}

/// Fixed corners of every algebra (rank one per block, rank two where the
/// block allows, the unit) plus random projections.
pub fn contexts<R: Rng + ?Sized>(
    algebras: &Instances,
    random_per_algebra: usize,
    rng: &mut R,
) -> Result<Vec<(String, HereditaryContext)>> {
    let mut out = Vec::new();
    for (name, a) in algebras {
        for b in a.blocks() {
            let e00 = a.matrix_unit(b.index, 0, 0)?;
            out.push((format!("{name}: rank 1 in block {}", b.index), HereditaryContext::new(a, &e00)?));
            if b.n >= 3 {
                let p = e00 + a.matrix_unit(b.index, 1, 1)?;
                out.push((format!("{name}: rank 2 in block {}", b.index), HereditaryContext::new(a, &p)?));
            }
        }
        out.push((format!("{name}: unit"), HereditaryContext::new(a, a.unit())?));
        for k in 0..random_per_algebra {
            let p = catalog::random_projection(rng, a);
            out.push((format!("{name}: random {k}"), HereditaryContext::new(a, &p)?));
        }
    }
    Ok(out)
}

fn random_corner_state<R: Rng + ?Sized>(rng: &mut R, ctx: &HereditaryContext) -> Result<State> {
    let b = ctx.b_algebra();
    let j = random_fiber(rng, b);
    random_pure_state(rng, b, j)
}

/// A unit vector orthogonal to `H_B,i`, or `None` on a full fiber.
fn random_complement_direction<R: Rng + ?Sized>(rng: &mut R, ctx: &HereditaryContext, i: usize) -> Result<Option<ComplexVector>> {
    if ctx.is_full_on(i) {
        return Ok(None);
    }
    let comp = ctx.complement_basis(i)?;
    Ok(Some(&comp * linalg::random_unit_vector(rng, comp.ncols())))
}

/// Criterion 4: `θ∘Ξ = (1, id)`, `θ∘θ⁻¹ = id`, and `Ξ∘Θ = id` on full corners.
pub fn hereditary_round_trips(algebras: &Instances, cfg: &SuiteConfig, tol: &ToleranceConfig) -> VerificationReport {
    let mut rng = stream(tol, 4);
    let mut report = VerificationReport::new("4-hereditary-round-trips");
    let ctxs = match contexts(algebras, cfg.random_contexts, &mut rng) {
        Ok(c) => c,
        Err(e) => return VerificationReport::from_error(report.check, &e),
    };
    let mut xi_theta = VerificationReport::new("theta-after-xi");
    let mut preimage = VerificationReport::new("theta-after-preimage");
    let mut full = VerificationReport::new("xi-after-theta-on-full-corners");
    for (name, ctx) in &ctxs {
        let all_full = ctx.spectrum_b.iter().all(|&i| ctx.is_full_on(i));
        for k in 0..cfg.round_trips {
            let label = || json!({ "context": name, "sample": k });
            guarded(&mut xi_theta, label, |r| {
                let tau = random_corner_state(&mut rng, ctx)?;
                let th = theta(ctx, &xi_extend(ctx, &tau)?)?;
                let err = (th.t - 1.0).abs().max((th.rho_prime.values() - tau.values()).norm());
                r.residual(err, ROUND_TRIP_TOL, || json!({ "context": name, "sample": k, "error": err }));
                Ok(())
            });
            guarded(&mut preimage, label, |r| {
                let tau = random_corner_state(&mut rng, ctx)?;
                let (i, _) = ctx.embedded_ray(&tau)?;
                if let Some(w) = random_complement_direction(&mut rng, ctx, i)? {
                    let t: f64 = rng.random_range(1e-3..1.0);
                    let th = theta(ctx, &theta_preimage(ctx, t, &tau, Some(&w))?)?;
                    let err = (th.t - t).abs().max((th.rho_prime.values() - tau.values()).norm());
                    r.residual(err, ROUND_TRIP_TOL, || json!({ "context": name, "sample": k, "t": t, "error": err }));
                }
                Ok(())
            });
            if all_full {
                guarded(&mut full, label, |r| {
                    let i = ctx.spectrum_b[rng.random_range(0..ctx.spectrum_b.len())];
                    let rho = random_pure_state(&mut rng, &ctx.parent, i)?;
                    let back = xi_extend(ctx, &theta(ctx, &rho)?.rho_prime)?;
                    let err = (back.values() - rho.values()).norm();
                    r.residual(err, ROUND_TRIP_TOL, || json!({ "context": name, "sample": k, "error": err }));
                    Ok(())
                });
            }
        }
    }
    report.push_clause(xi_theta);
    report.push_clause(preimage);
    report.push_clause(full);
    report
}

/// Region read off from the ray alone: `‖V_i* x‖²` against the bands.
fn oracle_region(ctx: &HereditaryContext, rho: &State, tol_eq: f64) -> Result<Region> {
    let pt = rho.ray()?;
    if !ctx.spectrum_b.contains(&pt.fiber) {
        return Ok(Region::OutsideSpectrum);
    }
    let t = (ctx.corner_basis(pt.fiber).adjoint() * &pt.ray).norm_squared();
    Ok(if t >= 1.0 - tol_eq {
        Region::OnImage
    } else if t <= tol_eq {
        Region::BoundarySphere
    } else {
        Region::InsideDisk
    })
}

/// Criterion 5: region classification, sphere coordinates, and the sphere
/// description of the fibers of `Θ`.
pub fn classification(algebras: &Instances, cfg: &SuiteConfig, tol: &ToleranceConfig) -> VerificationReport {
    let mut rng = stream(tol, 5);
    let mut report = VerificationReport::new("5-region-classification");
    let ctxs = match contexts(algebras, cfg.random_contexts, &mut rng) {
        Ok(c) => c,
        Err(e) => return VerificationReport::from_error(report.check, &e),
    };
    let mut regions = VerificationReport::new("regions-agree");
    let mut coords = VerificationReport::new("sphere-coordinates");
    let mut pre_in_sphere = VerificationReport::new("preimage-in-sphere");
    let mut sphere_in_pre = VerificationReport::new("sphere-in-preimage");
    for (name, ctx) in &ctxs {
        let mut seen = [false; 4];
        for k in 0..cfg.classification_states {
            guarded(&mut regions, || json!({ "context": name, "sample": k }), |regions| {
                let rho = match k % 4 {
                    // image points, and rays orthogonal to the corner where they exist
                    1 => xi_extend(ctx, &random_corner_state(&mut rng, ctx)?)?,
                    2 => {
                        let i = ctx.spectrum_b[rng.random_range(0..ctx.spectrum_b.len())];
                        match random_complement_direction(&mut rng, ctx, i)? {
                            Some(w) => vector_state(&ctx.parent, i, &w)?,
                            None => random_pure_state(&mut rng, &ctx.parent, i)?,
                        }
                    }
                    _ => {
                        let i = random_fiber(&mut rng, &ctx.parent);
                        random_pure_state(&mut rng, &ctx.parent, i)?
                    }
                };
                let c = classify_state(ctx, &rho)?;
                let oracle = oracle_region(ctx, &rho, tol.tol_eq)?;
                seen[c.by_weight as usize] = true;
                regions.require(c.consistent() && c.by_weight == oracle, || {
                    json!({ "context": name, "sample": k, "classification": c, "oracle": oracle })
                });
                Ok(())
            });
        }
        regions.note(json!({ "context": name, "regions_seen": seen }));

        let open: Vec<usize> = ctx.b.block_map.iter().copied().filter(|&i| !ctx.is_full_on(i)).collect();
        if open.is_empty() {
            continue;
        }
        for r in 0..cfg.sphere_radii {
            let label = || json!({ "context": name, "radius_index": r });
            let t: f64 = rng.random_range(0.05..KAPPA - 0.05);
            let setup = (|| -> Result<(State, usize, ComplexVector)> {
                let i = open[rng.random_range(0..open.len())];
                let j = ctx.b.corner_block_of(i).expect("open fibers lie over the corner");
                let mu = random_pure_state(&mut rng, ctx.b_algebra(), j)?;
                let (_, x_mu) = ctx.embedded_ray(&mu)?;
                Ok((mu, i, x_mu))
            })();
            let (mu, i, x_mu) = match setup {
                Ok(s) => s,
                Err(e) => {
                    coords.fail(json!({ "context": name, "radius_index": r, "error": e.to_string() }));
                    continue;
                }
            };
            let weight = (t / SQRT_2).cos().powi(2);
            let xi_mu = match xi_extend(ctx, &mu) {
                Ok(s) => s,
                Err(e) => {
                    coords.fail(json!({ "context": name, "radius_index": r, "error": e.to_string() }));
                    continue;
                }
            };
            for k in 0..cfg.sphere_directions {
                guarded(&mut coords, label, |coords| {
                    let w = random_complement_direction(&mut rng, ctx, i)?.expect("open fiber");
                    let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
                    let param = SphereParam { phase, orthogonal_point: ProjectivePoint::new(i, &w, tol.tol_eq)? };
                    let rho = upsilon_inverse(ctx, &mu, t, &param)?;
                    let back = upsilon(ctx, &mu, t, &rho)?;
                    let err = back
                        .orthogonal_point
                        .gauge_distance(&param.orthogonal_point)
                        .max((back.phase - param.phase).norm());
                    coords.residual(err, SPHERE_PARAM_TOL, || json!({ "context": name, "t": t, "direction": k, "error": err }));
                    let again = upsilon_inverse(ctx, &mu, t, &back)?;
                    let err = rho.ray()?.gauge_distance(&again.ray()?);
                    coords.residual(err, SPHERE_PARAM_TOL, || json!({ "context": name, "t": t, "direction": k, "inverse_error": err }));
                    Ok(())
                });
                guarded(&mut pre_in_sphere, label, |r| {
                    let w = random_complement_direction(&mut rng, ctx, i)?.expect("open fiber");
                    let rho = theta_preimage(ctx, weight, &mu, Some(&w))?;
                    let d = kahler_distance(&rho, &xi_mu)?;
                    r.residual((d - t).abs(), SPHERE_SET_TOL, || json!({ "context": name, "t": t, "distance": d }));
                    Ok(())
                });
                guarded(&mut sphere_in_pre, label, |r| {
                    // a uniformly random direction orthogonal to x_μ in the whole fiber
                    let mut u = linalg::random_unit_vector(&mut rng, x_mu.len());
                    u -= &x_mu * x_mu.dotc(&u);
                    let u = &u / C64::from(u.norm());
                    let rho = sphere_point(ctx, &mu, t, &u)?;
                    let d = kahler_distance(&rho, &xi_mu)?;
                    r.residual((d - t).abs(), SPHERE_SET_TOL, || json!({ "context": name, "t": t, "distance": d }));
                    let err = match theta(ctx, &rho) {
                        Ok(th) => (th.t - weight).abs().max((th.rho_prime.values() - mu.values()).norm()),
                        Err(_) => f64::INFINITY,
                    };
                    r.residual(err, SPHERE_SET_TOL, || {
                        json!({ "context": name, "t": t, "corner_rank": ctx.b.corner_rank(i), "theta_error": err })
                    });
                    Ok(())
                });
            }
        }
    }
    report.push_clause(regions);
    report.push_clause(coords);
    report.push_clause(pre_in_sphere);
    report.push_clause(sphere_in_pre);
    report
}

fn random_subspace<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize, tol: &ToleranceConfig) -> Result<Subspace> {
    let vecs: Vec<ComplexVector> = (0..d).map(|_| linalg::random_unit_vector(rng, n)).collect();
    linalg::orthonormalize(n, &vecs, tol)
}

/// `M ⊆ N` by residuals of an orthonormal basis.
fn included(m: &Subspace, n: &Subspace) -> bool {
    m.vectors().iter().all(|v| n.residual(v) <= 1e-8)
}

/// Criterion 6: subbundles of random corners, the ideal test, and the
/// tangent-span condition.
pub fn subbundles(algebras: &Instances, cfg: &SuiteConfig, tol: &ToleranceConfig) -> VerificationReport {
    let mut rng = stream(tol, 6);
    let mut report = VerificationReport::new("6-subbundles");
    let mut bundles = VerificationReport::new("subbundle-check");
    let mut separation = VerificationReport::new("ideal-separation");
    let mut branches = [false; 2];
    for k in 0..cfg.random_subalgebras {
        let (name, a) = &algebras[k % algebras.len()];
        guarded(&mut bundles, || json!({ "algebra": name, "sample": k }), |bundles| {
            let p = catalog::random_projection(&mut rng, a);
            let ctx = HereditaryContext::new(a, &p)?;
            let sub = subbundle_check(&ctx, cfg.iso_samples, &mut rng);
            bundles.require(sub.pass, || json!({ "algebra": name, "sample": k, "failed": sub.failed_clauses() }));
            // B = pAp is an ideal iff p is central
            let central = a.basis().iter().map(|x| (&p * x - x * &p).norm()).fold(0.0, f64::max) <= tol.tol_eq;
            let full = ctx.spectrum_b.iter().all(|&i| ctx.is_full_on(i));
            branches[usize::from(central)] = true;
            separation.require(full == central, || json!({ "algebra": name, "sample": k, "central": central, "full": full }));
            Ok(())
        });
    }
    separation.require(branches[0] && branches[1], || json!({ "reason": "only one branch exercised", "branches": branches }));
    report.push_clause(bundles);
    report.push_clause(separation);

    let mut tangent = VerificationReport::new("tangent-span");
    for k in 0..cfg.tangent_candidates {
        guarded(&mut tangent, || json!({ "candidate": k }), |tangent| {
            let n = rng.random_range(2..=TANGENT_MAX_DIM);
            let cands = match k % 4 {
                0 => {
                    let d = rng.random_range(1..=n);
                    vec![random_subspace(&mut rng, n, d, tol)?]
                }
                1 => {
                    // nested pair
                    let d = rng.random_range(1..=n);
                    let big = random_subspace(&mut rng, n, d, tol)?;
                    let d_small = rng.random_range(1..=d);
                    let c = linalg::random_matrix(&mut rng, d, d_small);
                    vec![linalg::orthonormalize_columns(&(&big.basis * c), tol), big]
                }
                _ => {
                    let d1 = rng.random_range(1..n);
                    let d2 = rng.random_range(1..=n - d1);
                    vec![random_subspace(&mut rng, n, d1, tol)?, random_subspace(&mut rng, n, d2, tol)?]
                }
            };
            let collapses = cands.iter().any(|m| cands.iter().all(|c| included(c, m)));
            let verdict = tangent_span_condition(n, &cands, tol, &mut rng)?;
            tangent.require(verdict.holds == collapses, || {
                json!({ "candidate": k, "n": n, "dims": cands.iter().map(Subspace::dim).collect::<Vec<_>>(), "holds": verdict.holds })
            });
            if !verdict.holds {
                let ok = verdict.witness.as_ref().is_some_and(|w| {
                    (w.norm() - 1.0).abs() <= tol.tol_eq
                        && verdict.span.residual(w) <= tol.tol_eq
                        && cands.iter().all(|m| m.residual(w) > 1e-3)
                });
                tangent.require(ok, || json!({ "candidate": k, "reason": "missing or invalid witness" }));
            }
            Ok(())
        });
    }
    report.push_clause(tangent);
    report
}

/// Criterion 7: hull intersection, `L ∩ L* = B`, and the Hilbert fibers
/// against the rank of `[ρ(b_j* p b_k)]`.
pub fn left_ideals(algebras: &Instances, cfg: &SuiteConfig, tol: &ToleranceConfig) -> VerificationReport {
    let mut rng = stream(tol, 7);
    let mut report = VerificationReport::new("7-hull-and-left-ideals");
    let ctxs = match contexts(algebras, cfg.random_contexts, &mut rng) {
        Ok(c) => c,
        Err(e) => return VerificationReport::from_error(report.check, &e),
    };
    let mut hull = VerificationReport::new("generated-ideal-equals-hull-intersection");
    let mut meet = VerificationReport::new("left-ideal-meets-adjoint-in-b");
    let mut fibers = VerificationReport::new("hilbert-fiber-rank");
    for (name, ctx) in &ctxs {
        guarded(&mut hull, || json!({ "context": name }), |hull| {
            let res = ctx.b.hull_intersection_residual()?;
            hull.residual(res, HULL_TOL, || json!({ "context": name, "residual": res }));
            Ok(())
        });
        for k in 0..=cfg.fiber_states {
            guarded(&mut fibers, || json!({ "context": name, "state": k }), |fibers| {
                let a = &ctx.parent;
                let rho = if k == cfg.fiber_states {
                    random_faithful_state(&mut rng, a)?
                } else {
                    let i = random_fiber(&mut rng, a);
                    random_pure_state(&mut rng, a, i)?
                };
                let hf = left_ideal_and_hilbert_fiber(ctx, &rho)?;
                meet.residual(hf.left_ideal_residual.max(hf.intersection_residual), HULL_TOL, || {
                    json!({ "context": name, "left": hf.left_ideal_residual, "meet": hf.intersection_residual })
                });
                let p = ctx.unit_p();
                let basis = a.basis();
                let gram = ComplexMatrix::from_fn(basis.len(), basis.len(), |j, l| {
                    rho.eval(&(basis[j].adjoint() * p * &basis[l]))
                });
                // Gram entries are squared norms, hence the squared noise floor
                let oracle = linalg::rank_with_floor(&gram, tol, linalg::KERNEL_NOISE_FLOOR.powi(2));
                fibers.require(hf.fiber.dim() == oracle, || {
                    json!({ "context": name, "state": k, "fiber_dim": hf.fiber.dim(), "oracle_rank": oracle })
                });
                Ok(())
            });
        }
    }
    report.push_clause(hull);
    report.push_clause(meet);
    report.push_clause(fibers);
    report
}

/// Criteria 1 to 7.
pub fn run_properties(algebras: &Instances, cfg: &SuiteConfig, tol: &ToleranceConfig) -> Vec<VerificationReport> {
    vec![
        distance_formula(algebras, cfg, tol),
        gelfand_calculus(algebras, cfg, tol),
        ideal_bijections(algebras, cfg, tol),
        hereditary_round_trips(algebras, cfg, tol),
        classification(algebras, cfg, tol),
        subbundles(algebras, cfg, tol),
        left_ideals(algebras, cfg, tol),
    ]
}

/// Criterion 8: two runs with the same seed serialize to identical bytes.
pub fn determinism(algebras: &Instances, cfg: &SuiteConfig, tol: &ToleranceConfig) -> VerificationReport {
    let mut report = VerificationReport::new("8-determinism");
    let render = || serde_json::to_string(&run_properties(algebras, cfg, tol)).map_err(|e| e.to_string());
    match (render(), render()) {
        (Ok(first), Ok(second)) => {
            report.require(first == second, || json!({ "bytes": [first.len(), second.len()] }));
        }
        (Err(e), _) | (_, Err(e)) => report.fail(json!({ "error": e })),
    }
    report
}

/// The full suite; determinism is checked by rerunning the properties under
/// `determinism_cfg`.
pub fn run_suite(
    algebras: &Instances,
    cfg: &SuiteConfig,
    determinism_cfg: &SuiteConfig,
    tol: &ToleranceConfig,
) -> SuiteReport {
    let mut criteria = run_properties(algebras, cfg, tol);
    criteria.push(determinism(algebras, determinism_cfg, tol));
    SuiteReport { pass: criteria.iter().all(|c| c.pass), seed: tol.rng_seed, config: *cfg, criteria }
}
