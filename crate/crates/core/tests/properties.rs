use std::f64::consts::SQRT_2;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ukb_core::bundle::{kahler_distance, ray_distance, CROSS_FIBER_DISTANCE};
use ukb_core::corner::{classify_state, distance_to_xi_image, theta, theta_preimage, HereditaryContext};
use ukb_core::gelfand::{build_frame, gelfand, invert};
use ukb_core::io::Cx;
use ukb_core::linalg::{self, hermitian_eig, svd};
use ukb_core::states::random_pure_state;
use ukb_core::verify::chordal_distance;
use ukb_core::{catalog, ComplexMatrix, FdCStarAlgebra, ToleranceConfig, C64};

fn block_shapes() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((1usize..=3, 1usize..=2), 1..=3)
}

fn conjugated_algebra(seed: u64, blocks: &[(usize, usize)]) -> (Arc<FdCStarAlgebra>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = catalog::random_algebra(&mut rng, blocks, 1, &ToleranceConfig::default()).expect("valid block shape");
    (a, rng)
}

/// Rank-`r` product of Gaussian factors, so rank deficiency is exact.
fn low_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, r: usize) -> ComplexMatrix {
    linalg::random_matrix(rng, rows, r) * linalg::random_matrix(rng, r, cols)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn svd_reconstructs_and_matches_gram_spectrum(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9, r in 0usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = low_rank(&mut rng, rows, cols, r.min(rows).min(cols));
        let f = svd(&m);
        let k = f.singular_values.len();
        let s = ComplexMatrix::from_fn(k, k, |i, j| if i == j { C64::from(f.singular_values[i]) } else { C64::from(0.0) });
        let recon = f.u.columns(0, k) * s * f.v.columns(0, k).adjoint();
        prop_assert!((recon - &m).norm() <= 1e-12 * (1.0 + m.norm()));
        prop_assert!(linalg::unitarity_residual(&f.v) < 1e-12);
        prop_assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));
        // squared singular values are the eigenvalues of m* m
        let eig = hermitian_eig(&(m.adjoint() * &m), &ToleranceConfig::default()).unwrap();
        for (sv, ev) in f.singular_values.iter().zip(&eig.values) {
            prop_assert!((sv * sv - ev.max(0.0)).abs() <= 1e-10 * (1.0 + m.norm_squared()));
        }
    }

    #[test]
    fn ray_distance_is_a_bounded_phase_invariant_metric(seed in any::<u64>(), n in 1usize..7, theta in 0.0..std::f64::consts::TAU) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y, z) = (
            linalg::random_unit_vector(&mut rng, n),
            linalg::random_unit_vector(&mut rng, n),
            linalg::random_unit_vector(&mut rng, n),
        );
        let d = ray_distance(&x, &y);
        prop_assert!((d - chordal_distance(&x, &y)).abs() < 1e-9);
        prop_assert!((d - ray_distance(&y, &x)).abs() < 1e-12);
        prop_assert!((0.0..=SQRT_2 * std::f64::consts::FRAC_PI_2 + 1e-12).contains(&d));
        prop_assert!(ray_distance(&x, &(&x * C64::from_polar(2.5, theta))) < 1e-7);
        prop_assert!(d <= ray_distance(&x, &z) + ray_distance(&z, &y) + 1e-9);
    }

    #[test]
    fn pure_states_over_distinct_blocks_are_three_apart(seed in any::<u64>(), blocks in block_shapes()) {
        let (a, mut rng) = conjugated_algebra(seed, &blocks);
        let k = a.blocks().len();
        let (i, j) = (rng.random_range(0..k), rng.random_range(0..k));
        let (s, t) = (random_pure_state(&mut rng, &a, i).unwrap(), random_pure_state(&mut rng, &a, j).unwrap());
        prop_assert!(s.is_pure() && t.is_pure());
        let d = kahler_distance(&s, &t).unwrap();
        if i == j {
            prop_assert!(d < 3.0 - 0.5);
        } else {
            prop_assert_eq!(d, CROSS_FIBER_DISTANCE);
        }
    }

    #[test]
    fn transform_inversion_recovers_elements(seed in any::<u64>(), blocks in block_shapes()) {
        let (a, mut rng) = conjugated_algebra(seed, &blocks);
        let coords = linalg::random_matrix(&mut rng, a.dim(), 1).column(0).into_owned();
        let x = a.element(&coords);
        let frame = build_frame(&a).unwrap();
        let inv = invert(&frame, &gelfand(&a, &x).unwrap(), 4, &mut rng).unwrap();
        prop_assert!((inv.element - &x).norm() <= 1e-10 * (1.0 + x.norm()));
    }

    #[test]
    fn weight_and_distance_determine_the_same_region(seed in any::<u64>(), blocks in block_shapes()) {
        let (a, mut rng) = conjugated_algebra(seed, &blocks);
        let p = catalog::random_projection(&mut rng, &a);
        let ctx = HereditaryContext::new(&a, &p).unwrap();
        let i = a.blocks()[rng.random_range(0..a.blocks().len())].index;
        let rho = random_pure_state(&mut rng, &a, i).unwrap();
        let c = classify_state(&ctx, &rho).unwrap();
        prop_assert!(c.consistent(), "{:?}", c);
        // oracle weight: <x|π_i(p)|x> on the canonical ray
        let x = rho.ray().unwrap().ray;
        let pi = a.irrep(i, &p).unwrap();
        let t = x.dotc(&(&pi * &x)).re;
        prop_assert!((c.weight - t).abs() < 1e-10);
        let d = distance_to_xi_image(&ctx, &rho).unwrap();
        if ctx.spectrum_b.contains(&i) {
            prop_assert!((d - SQRT_2 * t.clamp(0.0, 1.0).sqrt().acos()).abs() < 1e-6);
        } else {
            prop_assert_eq!(d, CROSS_FIBER_DISTANCE);
        }
    }

    #[test]
    fn theta_inverts_its_preimages(seed in any::<u64>(), blocks in block_shapes(), t in 0.01f64..0.99) {
        let (a, mut rng) = conjugated_algebra(seed, &blocks);
        let p = catalog::random_projection(&mut rng, &a);
        let ctx = HereditaryContext::new(&a, &p).unwrap();
        let b = ctx.b_algebra();
        let j = rng.random_range(0..b.blocks().len());
        let tau = random_pure_state(&mut rng, b, j).unwrap();
        let fiber = ctx.parent_fiber(j).unwrap();
        prop_assume!(!ctx.is_full_on(fiber));
        let rho = theta_preimage(&ctx, t, &tau, None).unwrap();
        let back = theta(&ctx, &rho).unwrap();
        prop_assert!((back.t - t).abs() < 1e-9);
        prop_assert!((back.rho_prime.values() - tau.values()).norm() < 1e-9);
    }

    #[test]
    fn complex_numbers_round_trip_through_json(re in any::<f64>(), im in any::<f64>()) {
        prop_assume!(re.is_finite() && im.is_finite());
        let text = serde_json::to_string(&Cx(C64::new(re, im))).unwrap();
        let back: Cx = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.0.re.to_bits(), re.to_bits());
        prop_assert_eq!(back.0.im.to_bits(), im.to_bits());
    }
}
