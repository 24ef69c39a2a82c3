//! Property tests for the structural identities of the system.

use proptest::prelude::*;

use ell_core::proportionality::{compute_k, eval_hk_big, eval_hk_small, eval_j};
use ell_core::system::{eval_f_at, eval_g_at, pow0, Coefficients, Exponents};

fn admissible_params() -> impl Strategy<Value = (Coefficients, Exponents)> {
    (
        0.2f64..4.0,
        0.2f64..4.0,
        0.0f64..2.0,
        0.0f64..2.0,
        0.0f64..2.0,
        0.05f64..2.0,
        0.0f64..2.0,
    )
        .prop_map(|(a, b, c, d, p, dq, r)| {
            let q = (p - r).abs() + dq;
            (Coefficients::new(a, b, c, d), Exponents::new(p, q, r))
        })
}

proptest! {
    // Exchanging the two components maps f to g with swapped coefficients,
    // exactly in floating point.
    #[test]
    fn swap_symmetry((coeffs, exps) in admissible_params(), u in 0.0f64..5.0, v in 0.0f64..5.0) {
        let f = eval_f_at(u, v, &coeffs, &exps);
        let g_swapped = eval_g_at(v, u, &coeffs.swapped(), &exps);
        prop_assert_eq!(f, g_swapped);
    }

    // H_K factors through h_K via X^m whenever m > 0.
    #[test]
    fn hk_small_form_consistency(
        (coeffs, exps) in admissible_params(),
        x in 1e-3f64..1e3,
        k in 0.1f64..10.0,
    ) {
        prop_assume!(exps.m() > 1e-6);
        let big = eval_hk_big(k, x, &coeffs, &exps);
        let small = eval_hk_small(k, x.powf(exps.m()), &coeffs, &exps).unwrap();
        let scale = big.abs().max(small.abs()).max(1.0);
        prop_assert!((big - small).abs() <= 1e-11 * scale);
    }

    // K orders against 1 exactly as a + d orders against b + c (for ab >= cd).
    #[test]
    fn k_ordering((coeffs, exps) in admissible_params()) {
        prop_assume!(coeffs.det() >= 0.0);
        prop_assume!((coeffs.a + coeffs.d - coeffs.b - coeffs.c).abs() > 1e-6);
        let cert = compute_k(&coeffs, &exps).unwrap();
        prop_assert_eq!(cert.k > 1.0, coeffs.a + coeffs.d > coeffs.b + coeffs.c);
        prop_assert!(cert.unique);
    }

    // The certified root keeps J below the scaled tolerance and the defect
    // product (Kg - f)(u - Kv) nonnegative at random states.
    #[test]
    fn defect_product_nonnegative(
        (coeffs, exps) in admissible_params(),
        u in 1e-3f64..10.0,
        v in 1e-3f64..10.0,
    ) {
        prop_assume!(coeffs.det() >= 0.0);
        let cert = compute_k(&coeffs, &exps).unwrap();
        let f = eval_f_at(u, v, &coeffs, &exps);
        let g = eval_g_at(u, v, &coeffs, &exps);
        let product = (cert.k * g - f) * (u - cert.k * v);
        let scale = (f.abs() + cert.k * g.abs()) * (u + cert.k * v) + 1.0;
        prop_assert!(product >= -1e-12 * scale,
            "product {} at K = {} (scale {})", product, cert.k, scale);
        prop_assert!(eval_j(cert.k, &coeffs, &exps).abs() <= 1e-10 * scale);
    }

    // Ratio factorization of the sum structure, valid for all exponents.
    #[test]
    fn ratio_factorization(
        (/*coeffs*/ _, exps) in admissible_params(),
        x in 1e-3f64..10.0,
    ) {
        let (p, q, r) = (exps.p, exps.q, exps.r);
        let lhs = x.powf(r) + x.powf(p + q + 1.0) - x.powf(q + r) - x.powf(p + 1.0);
        let rhs = x.powf(r) * (1.0 - x.powf(q)) * (1.0 - x.powf(p + 1.0 - r));
        let scale = x.powf(r).max(x.powf(p + q + 1.0)).max(x.powf(q + r)).max(x.powf(p + 1.0));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
    }

    // 0^0 = 1 convention keeps the LV/BE specializations exact power laws.
    #[test]
    fn pow0_convention(base in 0.0f64..10.0) {
        prop_assert_eq!(pow0(base, 0.0), 1.0);
    }
}
