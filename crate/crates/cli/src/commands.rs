use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use ukb_core::algebra::{enumerate_ideals, FdCStarAlgebra};
use ukb_core::bundle::{kahler_distance, restriction_iso_ideal, restriction_iso_quotient, CROSS_FIBER_DISTANCE};
use ukb_core::corner::{
    classify_state, distance_to_xi_image, subbundle_check, theta, theta_preimage, upsilon, upsilon_inverse,
    xi_extend, HereditaryContext,
};
use ukb_core::gelfand::{build_frame, cstar_norm, gelfand, invert, invert_samples, star, TransformFunction};
use ukb_core::gns::{gns, intertwiner_residual, is_pure_via_gns};
use ukb_core::io::{matrix_from_json, matrix_to_json, samples_from_json, vector_to_json, BlockReport, StateSpec};
use ukb_core::report::VerificationReport;
use ukb_core::states::{random_pure_state, State};
use ukb_core::verify::{self, chordal_distance, instances, SuiteConfig};
use ukb_core::{linalg, ComplexMatrix, Error, ToleranceConfig, C64};

use crate::input::{self, AlgebraInput, DistanceInput, GelfandInput, GnsInput, HereditaryInput, NormInput, StarInput};
use crate::{Command, RunConfig, RunError};

type Outcome = Result<(Vec<VerificationReport>, Value), RunError>;

pub fn dispatch(cfg: &RunConfig, doc: Value) -> Outcome {
    let tol = &cfg.tolerances;
    // one stream per command so that adding a command never shifts another
    let mut rng = tol.rng_stream(0xC11_0000 + cfg.command as u64);
    match cfg.command {
        Command::Decompose => decompose(input::parse(doc)?, tol),
        Command::Ideals => ideals(input::parse(doc)?, cfg.samples, tol, &mut rng),
        Command::Gns => gns_command(input::parse(doc)?, tol),
        Command::Distance => distance(input::parse(doc)?, tol),
        Command::Gelfand => gelfand_command(input::parse(doc)?, cfg.samples, tol, &mut rng),
        Command::Star => star_command(input::parse(doc)?, cfg.samples, tol, &mut rng),
        Command::Norm => norm(input::parse(doc)?, cfg.samples, tol, &mut rng),
        Command::HereditaryClassify => classify(input::parse(doc)?, cfg.samples, tol, &mut rng),
        Command::Theta => theta_command(input::parse(doc)?, tol),
        Command::Xi => xi(input::parse(doc)?, tol),
        Command::Sphere => sphere(input::parse(doc)?, cfg.samples, tol, &mut rng),
        Command::SubbundleCheck => subbundle(input::parse(doc)?, cfg.samples, tol, &mut rng),
        Command::VerifyAll => verify_all(input::parse(doc)?, tol),
    }
}

fn missing(field: &str) -> RunError {
    Error::InvalidArgument(format!("input lacks the field `{field}`")).into()
}

fn values_json(s: &State) -> Value {
    json!(vector_to_json(s.values()))
}

fn state_gap(a: &State, b: &State) -> f64 {
    (a.values() - b.values()).norm()
}

fn random_pure<R: Rng>(rng: &mut R, a: &Arc<FdCStarAlgebra>) -> Result<State, Error> {
    let i = a.blocks()[rng.random_range(0..a.blocks().len())].index;
    random_pure_state(rng, a, i)
}

fn decompose(inp: AlgebraInput, tol: &ToleranceConfig) -> Outcome {
    let a = inp.spec().build(tol)?;
    let mut closure = VerificationReport::new("closure");
    let res = a.closure_residual();
    closure.residual(res, tol.tol_eq, || json!({ "residual": res }));
    let mut dims = VerificationReport::new("dimension-count");
    let sum_sq: usize = a.blocks().iter().map(|b| b.n * b.n).sum();
    dims.require(sum_sq == a.dim(), || json!({ "sum_n_squared": sum_sq, "dim": a.dim() }));
    let mut recon = VerificationReport::new("block-reconstruction");
    for (k, x) in a.basis().iter().enumerate() {
        let mut sum = ComplexMatrix::zeros(a.ambient_dim(), a.ambient_dim());
        for b in a.blocks() {
            sum += b.embed(&b.irrep(x));
        }
        let res = (sum - x).norm();
        recon.residual(res, tol.tol_eq, || json!({ "basis_element": k, "residual": res }));
    }
    let report = BlockReport::from_algebra(&a)?;
    let result = json!({
        "ambient_dim": a.ambient_dim(),
        "dim": report.dim,
        "blocks": report.blocks,
        "ideal_count": report.ideal_count,
    });
    Ok((vec![closure, dims, recon], result))
}

fn ideals(inp: AlgebraInput, samples: usize, tol: &ToleranceConfig, rng: &mut ChaCha8Rng) -> Outcome {
    let a = inp.spec().build(tol)?;
    let all = enumerate_ideals(&a)?;
    let mut count = VerificationReport::new("ideal-count");
    count.require(all.len() == 1 << a.blocks().len(), || json!({ "ideals": all.len(), "blocks": a.blocks().len() }));
    let mut absorption = VerificationReport::new("two-sided-absorption");
    let mut kernel = VerificationReport::new("kernel-description");
    let mut iso_ideal = VerificationReport::new("ideal-restriction-iso");
    let mut iso_quotient = VerificationReport::new("quotient-restriction-iso");
    let mut listing = Vec::new();
    for ideal in &all {
        let blocks = &ideal.block_set;
        let res = ideal.absorption_residual();
        absorption.residual(res, verify::KERNEL_TOL, || json!({ "blocks": blocks, "residual": res }));
        let res = ideal.kernel_residual()?;
        kernel.residual(res, verify::KERNEL_TOL, || json!({ "blocks": blocks, "residual": res }));
        let sub = restriction_iso_ideal(&a, ideal, samples, rng)?;
        iso_ideal.require(sub.pass, || json!({ "blocks": blocks, "failed": sub.failed_clauses() }));
        let sub = restriction_iso_quotient(&a, ideal, samples, rng)?;
        iso_quotient.require(sub.pass, || json!({ "blocks": blocks, "failed": sub.failed_clauses() }));
        listing.push(json!({ "blocks": blocks, "dim": ideal.as_algebra.dim() }));
    }
    Ok((vec![count, absorption, kernel, iso_ideal, iso_quotient], json!({ "ideals": listing })))
}

fn gns_command(inp: GnsInput, tol: &ToleranceConfig) -> Outcome {
    let a = inp.algebra.build(tol)?;
    let state = inp.state.build(&a)?;
    let triple = gns(&state)?;
    let mut recon = VerificationReport::new("state-reconstruction");
    let res = triple.reconstruction_residual(&state);
    recon.residual(res, verify::ROUND_TRIP_TOL, || json!({ "residual": res }));
    let mut hom = VerificationReport::new("representation");
    let res = triple.homomorphism_residual();
    hom.residual(res, verify::ROUND_TRIP_TOL, || json!({ "residual": res }));
    let mut cyclic = VerificationReport::new("cyclicity");
    cyclic.require(triple.cyclic_rank() == triple.hilbert_dim, || {
        json!({ "cyclic_rank": triple.cyclic_rank(), "hilbert_dim": triple.hilbert_dim })
    });
    let mut purity = VerificationReport::new("purity");
    let via_gns = is_pure_via_gns(&state)?;
    purity.require(via_gns == state.is_pure(), || json!({ "density_rank": state.is_pure(), "commutant": via_gns }));
    let mut checks = vec![recon, hom, cyclic, purity];
    if state.is_pure() {
        let mut irrep = VerificationReport::new("irreducible-intertwiner");
        let res = intertwiner_residual(&state, &triple)?;
        irrep.residual(res, verify::ROUND_TRIP_TOL, || json!({ "residual": res }));
        let n = a.block(state.fiber()?)?.n;
        irrep.require(triple.hilbert_dim == n, || json!({ "hilbert_dim": triple.hilbert_dim, "block_n": n }));
        checks.push(irrep);
    }
    let result = json!({
        "hilbert_dim": triple.hilbert_dim,
        "pure": state.is_pure(),
        "cyclic_vector": vector_to_json(&triple.cyclic_vector),
    });
    Ok((checks, result))
}

fn distance(inp: DistanceInput, tol: &ToleranceConfig) -> Outcome {
    let a = inp.algebra.build(tol)?;
    let (x, y) = (inp.a.build(&a)?, inp.b.build(&a)?);
    let d = kahler_distance(&x, &y)?;
    let mut symmetry = VerificationReport::new("symmetry");
    let back = kahler_distance(&y, &x)?;
    symmetry.residual((d - back).abs(), verify::METRIC_TOL, || json!({ "forward": d, "backward": back }));
    let (rx, ry) = (x.ray()?, y.ray()?);
    let same_fiber = rx.fiber == ry.fiber;
    let mut oracle = VerificationReport::new("distance-oracle");
    if same_fiber {
        let expected = chordal_distance(&rx.ray, &ry.ray);
        oracle.residual((d - expected).abs(), verify::METRIC_TOL, || json!({ "distance": d, "oracle": expected }));
        oracle.require((0.0..=verify::KAPPA_LITERAL + verify::METRIC_TOL).contains(&d), || json!({ "distance": d }));
    } else {
        oracle.require(d == CROSS_FIBER_DISTANCE, || json!({ "distance": d }));
    }
    Ok((vec![symmetry, oracle], json!({ "distance": d, "same_fiber": same_fiber })))
}

fn gelfand_command(inp: GelfandInput, samples: usize, tol: &ToleranceConfig, rng: &mut ChaCha8Rng) -> Outcome {
    let a = inp.algebra.build(tol)?;
    match (inp.element, inp.samples) {
        (Some(m), None) => {
            let x = matrix_from_json(&m)?;
            a.ensure_contains(&x)?;
            let frame = build_frame(&a)?;
            let f = gelfand(&a, &x)?;
            let inv = invert(&frame, &f, samples, rng)?;
            let mut round = VerificationReport::new("invert-after-transform");
            let res = (&inv.element - &x).norm() / (1.0 + x.norm());
            round.residual(res, verify::INVERSION_TOL, || json!({ "residual": res }));
            let result = json!({ "frame_size": frame.states.len(), "frame_condition": frame.condition });
            Ok((vec![round], result))
        }
        (None, Some(specs)) => {
            let data = samples_from_json(&a, &specs)?;
            let mut consistent = VerificationReport::new("samples-are-a-transform");
            let result = match invert_samples(&a, &data) {
                Ok(inv) => {
                    let scale = tol.tol_eq * (1.0 + inv.element.norm());
                    consistent.residual(inv.residual, scale, || json!({ "residual": inv.residual }));
                    json!({ "element": matrix_to_json(&inv.element), "residual": inv.residual })
                }
                Err(Error::InconsistentSamples { residual }) => {
                    consistent.residual(residual, 0.0, || json!({ "residual": residual }));
                    json!({ "element": null, "residual": residual })
                }
                Err(e) => return Err(e.into()),
            };
            Ok((vec![consistent], result))
        }
        _ => Err(Error::InvalidArgument("give exactly one of `element` and `samples`".into()).into()),
    }
}

fn star_command(inp: StarInput, samples: usize, tol: &ToleranceConfig, rng: &mut ChaCha8Rng) -> Outcome {
    let a = inp.algebra.build(tol)?;
    let (x, y) = (matrix_from_json(&inp.a)?, matrix_from_json(&inp.b)?);
    a.ensure_contains(&x)?;
    a.ensure_contains(&y)?;
    let frame = build_frame(&a)?;
    let fab = gelfand(&a, &(&x * &y))?;
    let known = star(&frame, &gelfand(&a, &x)?, &gelfand(&a, &y)?)?;
    // the same product from bare functions forces recovery by inversion
    let (x2, y2) = (x.clone(), y.clone());
    let opaque = star(
        &frame,
        &TransformFunction::from_fn(&a, move |s: &State| Ok(s.eval(&x2))),
        &TransformFunction::from_fn(&a, move |s: &State| Ok(s.eval(&y2))),
    )?;
    let mut known_check = VerificationReport::new("star-equals-product-transform");
    let mut opaque_check = VerificationReport::new("star-of-opaque-functions");
    let scale = 1.0 + x.norm() * y.norm();
    for k in 0..samples {
        let s = random_pure(rng, &a)?;
        let want = fab.eval(&s)?;
        let got = known.eval(&s)?;
        let res = (got - want).norm() / scale;
        known_check.residual(res, verify::STAR_TOL, || json!({ "sample": k, "residual": res }));
        let got = opaque.eval(&s)?;
        let res = (got - want).norm() / scale;
        opaque_check.residual(res, verify::STAR_TOL, || json!({ "sample": k, "residual": res }));
    }
    let product = known.element.as_ref().map(matrix_to_json);
    Ok((vec![known_check, opaque_check], json!({ "product": product })))
}

fn norm(inp: NormInput, samples: usize, tol: &ToleranceConfig, rng: &mut ChaCha8Rng) -> Outcome {
    let a = inp.algebra.build(tol)?;
    let x = matrix_from_json(&inp.element)?;
    a.ensure_contains(&x)?;
    let frame = build_frame(&a)?;
    let est = cstar_norm(&frame, &gelfand(&a, &x)?, samples, rng)?;
    let oracle = linalg::operator_norm(&x);
    let mut exact = VerificationReport::new("exact-equals-operator-norm");
    let res = (est.exact - oracle).abs() / oracle.max(1.0);
    exact.residual(res, verify::NORM_REL_TOL, || json!({ "exact": est.exact, "oracle": oracle }));
    let mut sampled = VerificationReport::new("sampled-below-exact");
    let excess = (est.sampled - est.exact).max(0.0) / est.exact.max(1.0);
    sampled.residual(excess, verify::NORM_REL_TOL, || json!({ "sampled": est.sampled, "exact": est.exact }));
    let result = json!({ "exact": est.exact, "sampled": est.sampled, "evaluations": est.evaluations });
    Ok((vec![exact, sampled], result))
}

fn context(inp: &HereditaryInput, tol: &ToleranceConfig) -> Result<HereditaryContext, RunError> {
    let a = inp.algebra.build(tol)?;
    Ok(HereditaryContext::new(&a, &matrix_from_json(&inp.projection)?)?)
}

fn context_summary(ctx: &HereditaryContext) -> Value {
    let ranks: Vec<usize> = (0..ctx.parent.blocks().len()).map(|i| ctx.b.corner_rank(i)).collect();
    json!({ "spectrum_b": ctx.spectrum_b, "corner_ranks": ranks, "is_ideal": ctx.b.is_ideal() })
}

fn classify(inp: HereditaryInput, samples: usize, tol: &ToleranceConfig, rng: &mut ChaCha8Rng) -> Outcome {
    let ctx = context(&inp, tol)?;
    let states = match &inp.states {
        Some(specs) => specs.iter().map(|s| s.build(&ctx.parent)).collect::<Result<Vec<_>, _>>()?,
        None => (0..samples).map(|_| random_pure(rng, &ctx.parent)).collect::<Result<Vec<_>, _>>()?,
    };
    let mut agree = VerificationReport::new("regions-agree");
    let mut formula = VerificationReport::new("distance-from-weight");
    let mut rows = Vec::new();
    for (k, s) in states.iter().enumerate() {
        let c = classify_state(&ctx, s)?;
        agree.require(c.consistent(), || json!({ "state": k, "classification": c }));
        if c.distance != CROSS_FIBER_DISTANCE {
            // arccos loses half the digits near t = 1, hence the square root
            let expected = SQRT_2 * c.weight.clamp(0.0, 1.0).sqrt().acos();
            let res = (c.distance - expected).abs();
            formula.residual(res, verify::METRIC_TOL.sqrt(), || json!({ "state": k, "distance": c.distance, "weight": c.weight }));
        }
        rows.push(json!({ "state": k, "classification": c }));
    }
    Ok((vec![agree, formula], json!({ "context": context_summary(&ctx), "states": rows })))
}

fn theta_command(inp: HereditaryInput, tol: &ToleranceConfig) -> Outcome {
    let ctx = context(&inp, tol)?;
    let rho = inp.state.as_ref().ok_or_else(|| missing("state"))?.build(&ctx.parent)?;
    let th = theta(&ctx, &rho)?;
    let mut round = VerificationReport::new("preimage-round-trip");
    let (i, x_prime) = ctx.embedded_ray(&th.rho_prime)?;
    let back = if th.t >= 1.0 - tol.tol_eq {
        xi_extend(&ctx, &th.rho_prime)?
    } else {
        // the direction that reproduces ρ: its component off the corner,
        // phase-aligned with x_{ρ′}
        let x = rho.ray()?.ray;
        let v = ctx.corner_basis(i);
        let inside = v * (v.adjoint() * &x);
        let lambda = x_prime.dotc(&inside);
        let w = (&x - &inside) * (lambda.conj() / lambda.norm());
        let w = &w / C64::from(w.norm());
        theta_preimage(&ctx, th.t, &th.rho_prime, Some(&w))?
    };
    let res = state_gap(&back, &rho);
    round.residual(res, verify::ROUND_TRIP_TOL, || json!({ "residual": res }));
    let result = json!({
        "t": th.t,
        "rho_prime": StateSpec::from_state(&th.rho_prime),
        "fiber": i,
    });
    Ok((vec![round], result))
}

fn xi(inp: HereditaryInput, tol: &ToleranceConfig) -> Outcome {
    let ctx = context(&inp, tol)?;
    let tau = inp.state.as_ref().ok_or_else(|| missing("state"))?.build(ctx.b_algebra())?;
    let rho = xi_extend(&ctx, &tau)?;
    let th = theta(&ctx, &rho)?;
    let mut round = VerificationReport::new("theta-after-xi");
    let res = (th.t - 1.0).abs().max(state_gap(&th.rho_prime, &tau));
    round.residual(res, verify::ROUND_TRIP_TOL, || json!({ "t": th.t, "residual": res }));
    let mut on_image = VerificationReport::new("distance-to-image-vanishes");
    let d = distance_to_xi_image(&ctx, &rho)?;
    on_image.residual(d, verify::ROUND_TRIP_TOL, || json!({ "distance": d }));
    Ok((vec![round, on_image], json!({ "extension": values_json(&rho), "fiber": rho.fiber()? })))
}

fn sphere(inp: HereditaryInput, samples: usize, tol: &ToleranceConfig, rng: &mut ChaCha8Rng) -> Outcome {
    let ctx = context(&inp, tol)?;
    let mu = inp.mu.as_ref().ok_or_else(|| missing("mu"))?.build(ctx.b_algebra())?;
    let t = inp.radius.ok_or_else(|| missing("radius"))?;
    let points = match &inp.state {
        Some(s) => vec![s.build(&ctx.parent)?],
        None => {
            let (i, _) = ctx.embedded_ray(&mu)?;
            let comp = ctx.complement_basis(i)?;
            if comp.ncols() == 0 {
                return Err(Error::FullCorner { fiber: i }.into());
            }
            let mut out = Vec::with_capacity(samples);
            for _ in 0..samples {
                let w = &comp * linalg::random_unit_vector(rng, comp.ncols());
                let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
                let param = ukb_core::corner::SphereParam {
                    phase,
                    orthogonal_point: ukb_core::states::ProjectivePoint::new(i, &w, tol.tol_eq)?,
                };
                out.push(upsilon_inverse(&ctx, &mu, t, &param)?);
            }
            out
        }
    };
    let mut radius = VerificationReport::new("on-sphere");
    let mut round = VerificationReport::new("upsilon-round-trip");
    let mut rows = Vec::new();
    let x_mu = xi_extend(&ctx, &mu)?;
    for (k, rho) in points.iter().enumerate() {
        let d = kahler_distance(rho, &x_mu)?;
        radius.residual((d - t).abs(), verify::SPHERE_SET_TOL, || json!({ "point": k, "distance": d }));
        let param = upsilon(&ctx, &mu, t, rho)?;
        let back = upsilon_inverse(&ctx, &mu, t, &param)?;
        let res = state_gap(&back, rho);
        round.residual(res, verify::SPHERE_PARAM_TOL, || json!({ "point": k, "residual": res }));
        rows.push(json!({
            "phase": [param.phase.re, param.phase.im],
            "direction": vector_to_json(&param.orthogonal_point.ray),
        }));
    }
    Ok((vec![radius, round], json!({ "radius": t, "points": rows })))
}

fn subbundle(inp: HereditaryInput, samples: usize, tol: &ToleranceConfig, rng: &mut ChaCha8Rng) -> Outcome {
    let ctx = context(&inp, tol)?;
    let report = subbundle_check(&ctx, samples, rng);
    Ok((vec![report], context_summary(&ctx)))
}

fn verify_all(inp: AlgebraInput, tol: &ToleranceConfig) -> Outcome {
    let a = inp.spec().build(tol)?;
    let algebras = instances(&[("input".to_string(), a)], tol)?;
    let suite = verify::run_suite(&algebras, &SuiteConfig::full(), &SuiteConfig::quick(), tol);
    let names: Vec<&str> = algebras.iter().map(|(n, _)| n.as_str()).collect();
    let result = json!({ "instances": names, "config": suite.config });
    Ok((suite.criteria, result))
}
