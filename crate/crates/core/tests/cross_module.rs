//! Cross-module consistency: shooting events against the Pohozaev
//! obstruction, the ball eigenvalue against a 1-D Bessel-zero oracle, and the
//! bifurcation continuation against the scalar-reduction initializer.

use ell_core::dirichlet::{compute_lambda1, continuation_solve, Grid, GridField};
use ell_core::ineq::pohozaev_scan;
use ell_core::shooting::{
    counterexample_f, integrate_ivp, scalar_ground_state_on_ball, ShotEvent,
};
use ell_core::system::{Coefficients, Domain, Exponents, ProblemInstance};

/// The shoot stays positive-decreasing exactly when the Pohozaev function is
/// nonnegative on `(0, eps]`; checked in both directions on three sets.
#[test]
fn pohozaev_sign_matches_shoot_event() {
    let sets: [(f64, f64, f64); 3] = [(6.0, 1.0, 0.01), (6.0, 2.0, 0.05), (6.0, 1.0, 0.45)];
    for (p, q, eps) in sets {
        let shot = integrate_ivp(3, counterexample_f(p, q), eps, 1000.0, 1e-10);
        let scan = pohozaev_scan(counterexample_f(p, q), 3, eps, 300).unwrap();
        let positive_decreasing =
            matches!(shot.profile.event, ShotEvent::PositiveDecreasing { .. });
        assert!(
            !matches!(shot.profile.event, ShotEvent::Inconclusive { .. }),
            "no silent fallthrough for ({p},{q},{eps})"
        );
        assert_eq!(
            scan.nonnegative, positive_decreasing,
            "({p},{q},{eps}): min h = {:e} vs event {:?}",
            scan.min_h, shot.profile.event
        );
    }
}

/// The 2-D disk eigenvalue equals the square of the first zero of the
/// order-zero Bessel function; the zero comes from the radial shoot of
/// `u'' + u'/t + u = 0`, an independent 1-D oracle.
#[test]
fn ball_2d_eigenvalue_matches_bessel_oracle() {
    let shot = integrate_ivp(2, |u| u, 1.0, 10.0, 1e-12);
    let j01 = match shot.profile.event {
        ShotEvent::FirstZero { radius } => radius,
        ref e => panic!("Bessel shoot must cross zero, got {e:?}"),
    };
    assert!((j01 - 2.404825557695773).abs() < 1e-9, "first Bessel zero {j01}");
    let lam = compute_lambda1(&Domain::Ball { radius: 1.0 }, 2, 1.0 / 128.0).unwrap();
    let exact = j01 * j01;
    assert!(
        (lam.lambda_h - exact).abs() / exact < 5e-3,
        "lambda_h {} vs j01^2 {exact}",
        lam.lambda_h
    );
    assert!((lam.lambda_richardson - exact).abs() / exact < 2e-4);
}

fn chemical_instance(eps: f64) -> ProblemInstance {
    // a = b = sqrt(1 + eps), c = d = 1 keeps K = 1 and ab - cd = eps; at
    // eps = 0 this is the degenerate a = d, b = c reaction structure.
    let ab = (1.0 + eps).sqrt();
    ProblemInstance::constant(
        3,
        Exponents::new(1.0, 1.0, 1.0),
        Coefficients::new(ab, ab, 1.0, 1.0),
        Domain::Ball { radius: 1.0 },
    )
}

/// Positive branch along `ab = cd + eps`, eps halving from 0.5 to 0.125:
/// positive solutions with a single run-reported sup bound.
#[test]
fn chemical_branch_continuation() {
    let eps_of = |s: f64| 0.5 * 4.0f64.powf(-s);
    let c1 = (1.5f64).sqrt() - 1.0;
    let sol = scalar_ground_state_on_ball(3, 3.0, c1, 1.0, 1e-10, 257).unwrap();
    let init = GridField::from_scalar_reduction(&sol, 1.0);
    let result = continuation_solve(|s| chemical_instance(eps_of(s)), 2, &init).unwrap();
    assert!(result.failure_index.is_none());
    assert_eq!(result.steps.len(), 3);
    for step in &result.steps {
        assert!(step.report.converged);
        assert!(
            step.report.min_interior_u > 0.0 && step.report.min_interior_v > 0.0,
            "positive solution at eps = {}",
            eps_of(step.s)
        );
        assert!(step.report.sup_u.max(step.report.sup_v) <= result.sup_bound);
    }
    // The branch grows toward the bifurcation point (it enters from infinity).
    assert!(result.steps[2].report.sup_u > result.steps[0].report.sup_u);
    assert!(result.sup_bound < 1e3, "desk-scale bound, got {}", result.sup_bound);
}

/// Inside `ab < cd` the absorption dominates: Newton collapses every step of
/// the path onto the trivial state.
#[test]
fn absorption_path_collapses_to_trivial() {
    let eps_of = |s: f64| -0.1 - 0.4 * s;
    let grid = Grid::from_domain(&Domain::Ball { radius: 1.0 }, 3, 1.0 / 128.0).unwrap();
    let mut bump = GridField::zeros(grid);
    let m = bump.u.len();
    for i in 0..m - 1 {
        let r = i as f64 / (m - 1) as f64;
        bump.u[i] = 0.5 * (1.0 - r * r);
        bump.v[i] = 0.4 * (1.0 - r * r);
    }
    let result = continuation_solve(|s| chemical_instance(eps_of(s)), 4, &bump).unwrap();
    assert!(result.failure_index.is_none());
    for step in &result.steps {
        assert!(step.report.converged);
        assert!(
            step.report.sup_u.max(step.report.sup_v) <= 1e-8,
            "sup must collapse, got {}",
            step.report.sup_u.max(step.report.sup_v)
        );
    }
}

/// Mesh-halving against the shooting reference: the discrete solution error
/// shrinks by the stencil order.
#[test]
fn mesh_halving_error_ratio() {
    use ell_core::dirichlet::newton_solve;
    let inst = ProblemInstance::constant(
        3,
        Exponents::new(0.0, 2.0, 1.0),
        Coefficients::new(2.0, 2.0, 1.0, 1.0),
        Domain::Ball { radius: 1.0 },
    );
    let err_at = |nodes: usize| -> f64 {
        let sol = scalar_ground_state_on_ball(3, 3.0, 1.0, 1.0, 1e-12, nodes).unwrap();
        let init = GridField::from_scalar_reduction(&sol, 1.0);
        let (solved, report) = newton_solve(&init, &inst, None).unwrap();
        assert!(report.converged);
        // The shooting profile is the reference (integration error ~1e-10).
        let mut worst = 0.0f64;
        for i in 0..nodes {
            worst = worst.max((solved.v[i] - sol.v[i]).abs());
        }
        worst
    };
    let e1 = err_at(129);
    let e2 = err_at(257);
    let ratio = e1 / e2;
    assert!(
        (2.8..=5.2).contains(&ratio),
        "error ratio {ratio} (errors {e1:e}, {e2:e})"
    );
}
