//! Explicit inequality constructions: the Pohozaev obstruction function, the
//! blow-up barrier on balls, the mixed decay/saturation pair, pointwise
//! minorants of the nonlinearities, cone-weight admissibility, half-space
//! exponent gates, and discrete sub/superharmonicity of `W = |u - Kv|`,
//! `Z = min(u, Kv)` on solved fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dirichlet::{assemble_residual, GridField};
use crate::proportionality::SampleSpec;
use crate::quad::adaptive_quad;
use crate::system::{eval_f_at, eval_g_at, pow0, Coefficients, Exponents, ProblemInstance};

#[derive(Debug, Error)]
pub enum IneqError {
    #[error("the critical exponent (n+2)/(n-2) needs n >= 3, got n = {0}")]
    CriticalExponentUndefined(usize),
    #[error("barrier needs p > 1, A > 0, C > 0 and R >= 1")]
    BadBarrierSpec,
    #[error("empty exponent window: need p > 2/(n-2) and r - 1 > 2/(n-2), got p = {p}, r = {r}, n = {n}")]
    EmptyExponentWindow { p: f64, r: f64, n: usize },
    #[error("decay exponent 1/alpha = {inv_alpha} outside (2/(n-2), min(p, r-1)) = ({lo}, {hi})")]
    AlphaOutsideWindow { inv_alpha: f64, lo: f64, hi: f64 },
    #[error("saturation exponent beta = {beta} outside (0, p*alpha - 1) = (0, {hi})")]
    BetaOutsideWindow { beta: f64, hi: f64 },
    #[error("field does not solve the system: residual {residual:e} above the truncation bound {bound:e}")]
    ResidualPrecondition { residual: f64, bound: f64 },
    #[error(transparent)]
    Solve(#[from] crate::dirichlet::SolveError),
}

/// Scan of the Pohozaev obstruction `h(X) = X f(X) - (p_S + 1) F(X)` over a
/// logarithmic grid on `(1e-8, eps]`, with `F` by adaptive quadrature.
#[derive(Debug, Clone, Serialize)]
pub struct PohozaevScan {
    pub xs: Vec<f64>,
    pub h_values: Vec<f64>,
    pub min_h: f64,
    /// max over the grid of `max(|X f(X)|, (p_S+1)|F(X)|)`.
    pub scale: f64,
    /// Floor `-1e-15 * scale`: `min_h` above it counts as nonnegative.
    pub floor: f64,
    pub nonnegative: bool,
}

pub fn pohozaev_scan<F: Fn(f64) -> f64>(
    f_scalar: F,
    n: usize,
    eps: f64,
    points: usize,
) -> Result<PohozaevScan, IneqError> {
    if n <= 2 {
        return Err(IneqError::CriticalExponentUndefined(n));
    }
    assert!(eps > 1e-8 && points >= 2);
    let p_s = (n as f64 + 2.0) / (n as f64 - 2.0);
    let lo = 1e-8f64;
    let ratio = (eps / lo).ln();
    let mut xs = Vec::with_capacity(points);
    let mut h_values = Vec::with_capacity(points);
    let mut min_h = f64::INFINITY;
    let mut scale = 0.0f64;
    for i in 0..points {
        let x = lo * (ratio * i as f64 / (points - 1) as f64).exp();
        let f_x = f_scalar(x);
        let big_f = adaptive_quad(&|t| f_scalar(t), 0.0, x, 1e-12, 0.0);
        let h = x * f_x - (p_s + 1.0) * big_f;
        scale = scale.max((x * f_x).abs()).max(((p_s + 1.0) * big_f).abs());
        min_h = min_h.min(h);
        xs.push(x);
        h_values.push(h);
    }
    let floor = -1e-15 * scale;
    Ok(PohozaevScan { xs, h_values, min_h, scale, floor, nonnegative: min_h >= floor })
}

/// Finite-difference estimate of `h'(X)/X^p` at `x0`; the leading behaviour
/// of the obstruction near zero is `(p - p_S) X^p`.
pub fn pohozaev_leading_ratio<F: Fn(f64) -> f64>(
    f_scalar: F,
    n: usize,
    p: f64,
    x0: f64,
) -> Result<f64, IneqError> {
    if n <= 2 {
        return Err(IneqError::CriticalExponentUndefined(n));
    }
    let p_s = (n as f64 + 2.0) / (n as f64 - 2.0);
    let h = |x: f64| {
        let big_f = adaptive_quad(&|t| f_scalar(t), 0.0, x, 1e-13, 0.0);
        x * f_scalar(x) - (p_s + 1.0) * big_f
    };
    let dx = 1e-2 * x0;
    let deriv = (h(x0 + dx) - h(x0 - dx)) / (2.0 * dx);
    Ok(deriv / x0.powf(p))
}

/// Blow-up barrier `W_R(x) = C R^{2α} / (R² - |x|²)^α`, `α = 2/(p-1)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BarrierSpec {
    pub n: usize,
    pub p: f64,
    /// Weight constant `A` of `Δ W >= A (1+|x|²)^{-1} W^p`.
    pub a_weight: f64,
    /// Barrier amplitude `C`.
    pub c_amp: f64,
    pub radius: f64,
}

impl BarrierSpec {
    pub fn new(n: usize, p: f64, a_weight: f64, c_amp: f64, radius: f64) -> Result<Self, IneqError> {
        if p <= 1.0 || a_weight <= 0.0 || c_amp <= 0.0 || radius < 1.0 {
            return Err(IneqError::BadBarrierSpec);
        }
        Ok(Self { n, p, a_weight, c_amp, radius })
    }

    pub fn alpha(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    /// Sufficient amplitude threshold `C^{p-1} >= 4α[n + 2(α+1)]/A`.
    pub fn amplitude_threshold(&self) -> f64 {
        let alpha = self.alpha();
        (4.0 * alpha * (self.n as f64 + 2.0 * (alpha + 1.0)) / self.a_weight)
            .powf(1.0 / (self.p - 1.0))
    }

    pub fn admissible(&self) -> bool {
        self.c_amp >= self.amplitude_threshold()
    }

    pub fn barrier(&self, r: f64) -> f64 {
        let alpha = self.alpha();
        self.c_amp * self.radius.powf(2.0 * alpha)
            / (self.radius * self.radius - r * r).powf(alpha)
    }

    /// Closed-form `Δ W_R` at radius `r`.
    pub fn barrier_laplacian(&self, r: f64) -> f64 {
        let alpha = self.alpha();
        let rr = self.radius * self.radius - r * r;
        2.0 * alpha
            * self.c_amp
            * self.radius.powf(2.0 * alpha)
            * (self.n as f64 * rr + 2.0 * (alpha + 1.0) * r * r)
            / rr.powf(alpha + 2.0)
    }
}

/// 4th-order finite-difference radial Laplacian `w'' + (n-1)/r w'` of an
/// even radial profile (negative arguments reflected).
fn radial_fd_laplacian<F: Fn(f64) -> f64>(f: &F, n: usize, r: f64, delta: f64) -> f64 {
    let w = |t: f64| f(t.abs());
    let (m2, m1, w0, p1, p2) =
        (w(r - 2.0 * delta), w(r - delta), w(r), w(r + delta), w(r + 2.0 * delta));
    let d2 = (-m2 + 16.0 * m1 - 30.0 * w0 + 16.0 * p1 - p2) / (12.0 * delta * delta);
    if r <= 1e-9 {
        n as f64 * d2
    } else {
        let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * delta);
        d2 + (n as f64 - 1.0) / r * d1
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierReport {
    pub admissible: bool,
    pub amplitude_threshold: f64,
    /// min over samples of `A(1+r²)^{-1} W^p - ΔW` (>= 0 when the barrier works).
    pub min_margin: f64,
    pub inequality_holds: bool,
    /// max relative gap between the closed-form Laplacian and a radial FD
    /// Laplacian, away from the boundary layer `|x| > 0.95 R`.
    pub max_fd_gap: f64,
    pub samples: usize,
}

/// Sample the barrier inequality `ΔW_R <= A(1+|x|²)^{-1} W_R^p` on
/// `|x| in [0, R)` and cross-check the closed form against finite differences.
pub fn ko_barrier_check(spec: &BarrierSpec, samples: usize) -> BarrierReport {
    let mut min_margin = f64::INFINITY;
    let mut max_fd_gap = 0.0f64;
    for i in 0..samples {
        let r = spec.radius * i as f64 / samples as f64;
        let lap = spec.barrier_laplacian(r);
        let rhs = spec.a_weight / (1.0 + r * r) * spec.barrier(r).powf(spec.p);
        min_margin = min_margin.min(rhs - lap);
        if r <= 0.95 * spec.radius {
            let dr = 2.5e-3 * (spec.radius - r);
            let fd = radial_fd_laplacian(&|t| spec.barrier(t), spec.n, r, dr);
            max_fd_gap = max_fd_gap.max((fd - lap).abs() / lap.abs().max(1e-300));
        }
    }
    BarrierReport {
        admissible: spec.admissible(),
        amplitude_threshold: spec.amplitude_threshold(),
        min_margin,
        inequality_holds: min_margin >= -1e-12 * min_margin.abs().max(1.0),
        max_fd_gap,
        samples,
    }
}

/// Ansatz pair `Z = C_z (1+ρ²)^{-α}`, `W = B - A_w (1+ρ²)^{-β}` solving the
/// mixed system `-ΔZ >= W^{β_sys} Z^r`, `ΔW >= Z^p W^{γ_sys}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MixedPairSpec {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    /// Decay exponent of `Z`; must satisfy `2/(n-2) < 1/α < min(p, r-1)`.
    pub alpha_z: f64,
    /// Saturation exponent of `W`; must satisfy `0 < β < p α - 1`.
    pub beta_w: f64,
}

impl MixedPairSpec {
    pub fn new(
        n: usize,
        p: f64,
        q: f64,
        r: f64,
        alpha_z: f64,
        beta_w: f64,
    ) -> Result<Self, IneqError> {
        if n < 3 {
            return Err(IneqError::CriticalExponentUndefined(n));
        }
        let lo = 2.0 / (n as f64 - 2.0);
        let hi = p.min(r - 1.0);
        if hi <= lo {
            return Err(IneqError::EmptyExponentWindow { p, r, n });
        }
        let inv_alpha = 1.0 / alpha_z;
        if !(inv_alpha > lo && inv_alpha < hi) {
            return Err(IneqError::AlphaOutsideWindow { inv_alpha, lo, hi });
        }
        if !(beta_w > 0.0 && beta_w < p * alpha_z - 1.0) {
            return Err(IneqError::BetaOutsideWindow { beta: beta_w, hi: p * alpha_z - 1.0 });
        }
        Ok(Self { n, p, q, r, alpha_z, beta_w })
    }

    /// Default exponents: `1/α` at the window midpoint, `β` at half its cap.
    pub fn with_default_exponents(n: usize, p: f64, q: f64, r: f64) -> Result<Self, IneqError> {
        let lo = 2.0 / (n as f64 - 2.0);
        let hi = p.min(r - 1.0);
        if hi <= lo {
            return Err(IneqError::EmptyExponentWindow { p, r, n });
        }
        let alpha = 2.0 / (lo + hi);
        let beta = 0.5 * (p * alpha - 1.0).min((n as f64 - 2.0) / 2.0);
        Self::new(n, p, q, r, alpha, beta)
    }

    pub fn beta_sys(&self) -> f64 {
        (self.p + self.q).max(1.0)
    }

    pub fn gamma_sys(&self) -> f64 {
        (self.q + self.r).max(1.0)
    }

    fn z(&self, c_z: f64, rho: f64) -> f64 {
        c_z * (1.0 + rho * rho).powf(-self.alpha_z)
    }

    fn w(&self, a_w: f64, b: f64, rho: f64) -> f64 {
        b - a_w * (1.0 + rho * rho).powf(-self.beta_w)
    }

    /// Closed-form `ΔZ = 2α C_z (1+ρ²)^{-α-2} [(2α+2-n)ρ² - n]`.
    fn z_laplacian(&self, c_z: f64, rho: f64) -> f64 {
        let a = self.alpha_z;
        2.0 * a
            * c_z
            * (1.0 + rho * rho).powf(-a - 2.0)
            * ((2.0 * a + 2.0 - self.n as f64) * rho * rho - self.n as f64)
    }

    fn w_laplacian(&self, a_w: f64, rho: f64) -> f64 {
        let b = self.beta_w;
        -2.0 * b
            * a_w
            * (1.0 + rho * rho).powf(-b - 2.0)
            * ((2.0 * b + 2.0 - self.n as f64) * rho * rho - self.n as f64)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MixedPairReport {
    /// Witnessing constants: `Z` amplitude, `W` saturation pair `(A_w, B = 2 A_w)`.
    pub c_z: f64,
    pub a_w: f64,
    pub b: f64,
    /// min over radii of `-ΔZ - W^{β_sys} Z^r` and `ΔW - Z^p W^{γ_sys}`.
    pub min_margin_z: f64,
    pub min_margin_w: f64,
    pub both_hold: bool,
    pub max_fd_gap: f64,
    pub grid_pairs_tried: usize,
}

/// Find witnessing constants on a log grid (7 decades, 8 points per decade
/// per constant) so both mixed inequalities hold at all sampled radii.
pub fn mixed_pair_check(
    spec: &MixedPairSpec,
    radii: &[f64],
) -> Result<MixedPairReport, IneqError> {
    let mut tried = 0usize;
    let decades = 7;
    let per_decade = 8;
    let count = decades * per_decade;
    let grid_value = |k: usize| 10f64.powf(-4.0 + k as f64 / per_decade as f64);

    let margins = |c_z: f64, a_w: f64| -> (f64, f64) {
        let b = 2.0 * a_w;
        let mut mz = f64::INFINITY;
        let mut mw = f64::INFINITY;
        for &rho in radii {
            let z = spec.z(c_z, rho);
            let w = spec.w(a_w, b, rho);
            mz = mz.min(-spec.z_laplacian(c_z, rho) - w.powf(spec.beta_sys()) * z.powf(spec.r));
            mw = mw.min(spec.w_laplacian(a_w, rho) - z.powf(spec.p) * w.powf(spec.gamma_sys()));
        }
        (mz, mw)
    };

    let mut witness: Option<(f64, f64, f64, f64)> = None;
    'outer: for kc in 0..count {
        for ka in 0..count {
            tried += 1;
            let c_z = grid_value(kc);
            let a_w = grid_value(ka);
            let (mz, mw) = margins(c_z, a_w);
            if mz > 0.0 && mw > 0.0 {
                witness = Some((c_z, a_w, mz, mw));
                break 'outer;
            }
        }
    }
    let (c_z, a_w, min_margin_z, min_margin_w) = witness.unwrap_or_else(|| {
        let (mz, mw) = margins(1.0, 1.0);
        (1.0, 1.0, mz, mw)
    });

    // Cross-check the closed-form Laplacians against radial FD.
    let mut max_fd_gap = 0.0f64;
    for &rho in radii {
        let dr = 2.5e-3 * (1.0 + rho);
        let z_fd = radial_fd_laplacian(&|t| spec.z(c_z, t), spec.n, rho, dr);
        let w_fd = radial_fd_laplacian(&|t| spec.w(a_w, 2.0 * a_w, t), spec.n, rho, dr);
        let z_cf = spec.z_laplacian(c_z, rho);
        let w_cf = spec.w_laplacian(a_w, rho);
        max_fd_gap = max_fd_gap.max((z_fd - z_cf).abs() / z_cf.abs().max(1e-300));
        max_fd_gap = max_fd_gap.max((w_fd - w_cf).abs() / w_cf.abs().max(1e-300));
    }

    Ok(MixedPairReport {
        c_z,
        a_w,
        b: 2.0 * a_w,
        min_margin_z,
        min_margin_w,
        both_hold: min_margin_z > 0.0 && min_margin_w > 0.0,
        max_fd_gap,
        grid_pairs_tried: tried,
    })
}

/// Pointwise minorant report for the structural inequalities.
#[derive(Debug, Clone, Serialize)]
pub struct ZWBoundsReport {
    pub c_q: f64,
    pub beta: f64,
    pub gamma: f64,
    /// min over `{u <= Kv}` of `f - a C_q K^{-1} u^r v^{p+q-1} (Kv - u)`.
    pub min_slack_f: f64,
    /// min over `{u >= Kv}` of `g - b C_q v^r u^{p+q-1} (u - Kv)`.
    pub min_slack_g: f64,
    pub scale: f64,
    pub bounds_hold: bool,
    /// inf of `f / (u^r (Kv-u)^beta)` on `{u < Kv}`, when computable.
    pub beta_form_constant: Option<f64>,
    /// max relative gap in the ratio factorization identity.
    pub factorization_max_gap: f64,
    /// min of the factorized expression over sampled ratios (for `r <= 1`).
    pub factorization_min: Option<f64>,
}

/// Check the pointwise inequalities behind the sub/superharmonicity lemmas
/// and the ratio factorization
/// `X^r + X^{p+q+1} - X^{q+r} - X^{p+1} = X^r (1 - X^q)(1 - X^{p+1-r})`.
pub fn pointwise_zw_bounds(
    k: f64,
    coeffs: &Coefficients,
    exps: &Exponents,
    samples: &SampleSpec,
    boundedness_box: Option<f64>,
) -> ZWBoundsReport {
    let (p, q, r) = (exps.p, exps.q, exps.r);
    let c_q = if q >= 1.0 { 1.0 } else { q };
    let beta = (p + q).max(1.0);
    let gamma = (q + r).max(1.0);
    let m = samples.points_per_axis;
    let mut min_f = f64::INFINITY;
    let mut min_g = f64::INFINITY;
    let mut scale = 0.0f64;
    let mut beta_inf = f64::INFINITY;
    let beta_form_ok = p + q >= 1.0 || boundedness_box.is_some();
    let box_cap = boundedness_box.unwrap_or(f64::INFINITY).min(samples.u_max);

    for i in 1..=m {
        let u = samples.u_max * i as f64 / m as f64;
        for j in 1..=m {
            let v = samples.u_max * j as f64 / m as f64;
            let f = eval_f_at(u, v, coeffs, exps);
            let g = eval_g_at(u, v, coeffs, exps);
            if u <= k * v {
                let minorant =
                    coeffs.a * c_q / k * pow0(u, r) * pow0(v, p + q - 1.0) * (k * v - u);
                min_f = min_f.min(f - minorant);
                scale = scale.max(f.abs()).max(minorant.abs());
                if beta_form_ok && u < k * v && k * v - u > 1e-8 && u <= box_cap && v <= box_cap {
                    beta_inf = beta_inf.min(f / (pow0(u, r) * (k * v - u).powf(beta)));
                }
            }
            if u >= k * v {
                let minorant =
                    coeffs.b * c_q * pow0(v, r) * pow0(u, p + q - 1.0) * (u - k * v);
                min_g = min_g.min(g - minorant);
                scale = scale.max(g.abs()).max(minorant.abs());
            }
        }
    }

    // Factorization identity over 10^3 random ratios.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut max_gap = 0.0f64;
    let mut fact_min = f64::INFINITY;
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(-3.0..1.0f64);
        let x = 10f64.powf(x); // ratios spread over (1e-3, 10)
        let lhs = x.powf(r) + x.powf(p + q + 1.0) - x.powf(q + r) - x.powf(p + 1.0);
        let rhs = x.powf(r) * (1.0 - x.powf(q)) * (1.0 - x.powf(p + 1.0 - r));
        let term_scale = x
            .powf(r)
            .abs()
            .max(x.powf(p + q + 1.0))
            .max(x.powf(q + r))
            .max(x.powf(p + 1.0))
            .max(1e-300);
        max_gap = max_gap.max((lhs - rhs).abs() / term_scale);
        fact_min = fact_min.min(rhs);
    }

    let tol = 1e-12 * scale.max(1.0);
    ZWBoundsReport {
        c_q,
        beta,
        gamma,
        min_slack_f: min_f,
        min_slack_g: min_g,
        scale,
        bounds_hold: min_f >= -tol && min_g >= -tol,
        beta_form_constant: if beta_form_ok && beta_inf.is_finite() { Some(beta_inf) } else { None },
        factorization_max_gap: max_gap,
        factorization_min: if r <= 1.0 { Some(fact_min) } else { None },
    }
}

/// Cone-weight admissibility `κ > -2`, `κ + r >= -1`, `0 <= r <= (n+1+κ)/(n-1)`.
#[derive(Debug, Clone, Serialize)]
pub struct ConeWeightReport {
    pub kappa_margin: f64,
    pub kappa_plus_r_margin: f64,
    pub r_nonneg_margin: f64,
    pub r_upper_margin: f64,
    pub admissible: bool,
}

pub fn cone_weight_admissibility(r_ineq: f64, kappa: f64, n: usize) -> ConeWeightReport {
    let upper = (n as f64 + 1.0 + kappa) / (n as f64 - 1.0);
    let kappa_margin = kappa + 2.0;
    let kappa_plus_r_margin = kappa + r_ineq + 1.0;
    let r_upper_margin = upper - r_ineq;
    ConeWeightReport {
        kappa_margin,
        kappa_plus_r_margin,
        r_nonneg_margin: r_ineq,
        r_upper_margin,
        admissible: kappa_margin > 0.0
            && kappa_plus_r_margin >= 0.0
            && r_ineq >= 0.0
            && r_upper_margin >= 0.0,
    }
}

/// One disjunct of a half-space exponent gate.
#[derive(Debug, Clone, Serialize)]
pub struct Disjunct {
    pub value: f64,
    pub threshold: f64,
    pub holds: bool,
}

fn disjunct(value: f64, threshold: f64) -> Disjunct {
    Disjunct { value, threshold, holds: value <= threshold }
}

/// Gates for the half-space classification: both compound conditions and the
/// semitriviality threshold `min(p+r, q+s) <= (n+1)/(n-1)`.
#[derive(Debug, Clone, Serialize)]
pub struct HalfspaceGateReport {
    pub first_r: Disjunct,
    pub first_q: Disjunct,
    pub condition_first: bool,
    pub second_s: Disjunct,
    pub second_p: Disjunct,
    pub condition_second: bool,
    pub min_sum: Disjunct,
    /// Classification conclusion (either proportional or semitrivial).
    pub conclusion_ii: bool,
    /// Semitriviality conclusion.
    pub conclusion_iii: bool,
}

pub fn halfspace_gate_check(p: f64, q: f64, r: f64, s: f64, n: usize) -> HalfspaceGateReport {
    let nm1 = n as f64 - 1.0;
    let first_r = disjunct(r, (n as f64 + 1.0 + p) / nm1);
    let first_q = disjunct(q, (1.0 + s) / nm1);
    let second_s = disjunct(s, (n as f64 + 1.0 + q) / nm1);
    let second_p = disjunct(p, (1.0 + r) / nm1);
    let condition_first = first_r.holds || first_q.holds;
    let condition_second = second_s.holds || second_p.holds;
    let min_sum = disjunct((p + r).min(q + s), (n as f64 + 1.0) / nm1);
    HalfspaceGateReport {
        conclusion_ii: condition_first && condition_second,
        conclusion_iii: condition_first && condition_second && min_sum.holds,
        first_r,
        first_q,
        condition_first,
        second_s,
        second_p,
        condition_second,
        min_sum,
    }
}

/// Discrete sub/superharmonicity of `W = |u - Kv|` and `Z = min(u, Kv)` on a
/// field that approximately solves the system.
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicityReport {
    pub min_lap_w: f64,
    pub min_neg_lap_z: f64,
    /// Truncation slack `tol_factor * h^2 * max|Δ_h(u, v)|`.
    pub tau: f64,
    pub w_subharmonic: bool,
    pub z_superharmonic: bool,
}

/// Max-norm of the discrete Laplacian of a radial or box scalar field.
fn discrete_laplacian(grid: &crate::dirichlet::Grid, w: &[f64]) -> Vec<f64> {
    match grid {
        crate::dirichlet::Grid::Radial { dim, radius, nodes } => {
            let m = *nodes;
            let h = radius / (m as f64 - 1.0);
            let nf = *dim as f64;
            let mut out = vec![0.0; m];
            for i in 1..m - 1 {
                let r = h * i as f64;
                out[i] = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h)
                    + (nf - 1.0) / r * (w[i + 1] - w[i - 1]) / (2.0 * h);
            }
            out
        }
        crate::dirichlet::Grid::Box2 { sides, nx, ny } => {
            let hx = sides[0] / *nx as f64;
            let hy = sides[1] / *ny as f64;
            let stride = ny + 1;
            let mut out = vec![0.0; (nx + 1) * (ny + 1)];
            for i in 1..*nx {
                for j in 1..*ny {
                    let idx = i * stride + j;
                    out[idx] = (w[idx + stride] - 2.0 * w[idx] + w[idx - stride]) / (hx * hx)
                        + (w[idx + 1] - 2.0 * w[idx] + w[idx - 1]) / (hy * hy);
                }
            }
            out
        }
    }
}

pub fn discrete_harmonicity_check(
    field: &GridField,
    inst: &ProblemInstance,
    k: f64,
    tol_factor: f64,
) -> Result<HarmonicityReport, IneqError> {
    // Precondition: the field must approximately solve the system, i.e. the
    // residual must sit at truncation level, not O(1).
    let (res_u, res_v) = assemble_residual(field, inst, None)?;
    let lap_u = discrete_laplacian(&field.grid, &field.u);
    let lap_v = discrete_laplacian(&field.grid, &field.v);
    let lap_scale = lap_u
        .iter()
        .chain(lap_v.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()));
    let res_inf = res_u
        .iter()
        .chain(res_v.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()));
    let h = field.grid.h();
    let tau = tol_factor * h * h * lap_scale;
    // Truncation-level residuals pass; an O(1) mismatch fails. The looser of
    // the two scales guards resampled (non-grid-exact) solutions.
    let res_bound = tau.max(1e-6 * lap_scale).max(1e-12);
    if res_inf > res_bound {
        return Err(IneqError::ResidualPrecondition { residual: res_inf, bound: res_bound });
    }

    let total = field.grid.num_nodes();
    let mut w_vals = Vec::with_capacity(total);
    let mut z_vals = Vec::with_capacity(total);
    for i in 0..total {
        let (u, v) = (field.u[i], field.v[i]);
        w_vals.push((u - k * v).abs());
        z_vals.push(u.min(k * v));
    }
    let lap_w = discrete_laplacian(&field.grid, &w_vals);
    let lap_z = discrete_laplacian(&field.grid, &z_vals);
    let mut min_lap_w = f64::INFINITY;
    let mut min_neg_lap_z = f64::INFINITY;
    for i in 0..total {
        if field.grid.is_boundary(i) || matches!(field.grid, crate::dirichlet::Grid::Radial { .. } if i == 0)
        {
            continue;
        }
        min_lap_w = min_lap_w.min(lap_w[i]);
        min_neg_lap_z = min_neg_lap_z.min(-lap_z[i]);
    }
    Ok(HarmonicityReport {
        min_lap_w,
        min_neg_lap_z,
        tau,
        w_subharmonic: min_lap_w >= -tau,
        z_superharmonic: min_neg_lap_z >= -tau,
    })
}

/// `f(u) - Kg(u)`-style helpers for tests and scans live in
/// `proportionality`; this module re-exports the sampled-inequality entry
/// points only.
#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::{counterexample_f, counterexample_profile};
    use crate::system::Domain;

    #[test]
    fn pohozaev_counterexample_instance() {
        let scan = pohozaev_scan(counterexample_f(6.0, 1.0), 3, 0.01, 200).unwrap();
        assert!(scan.nonnegative, "min h = {} floor {}", scan.min_h, scan.floor);
        // h -> 0 as X -> 0+.
        assert!(scan.h_values[0].abs() < 1e-50);
        // Leading coefficient p - p_S = 6 - 5 = 1.
        let ratio = pohozaev_leading_ratio(counterexample_f(6.0, 1.0), 3, 6.0, 1e-4).unwrap();
        assert!((ratio - 1.0).abs() < 1e-2, "leading ratio {ratio}");
    }

    #[test]
    fn pohozaev_needs_three_dimensions() {
        assert!(matches!(
            pohozaev_scan(|u| u, 2, 0.1, 10),
            Err(IneqError::CriticalExponentUndefined(2))
        ));
    }

    #[test]
    fn barrier_passes_at_paper_constants() {
        // n=3, p=2, A=1: threshold C0 = 4*2*(3+6)/1 = 72.
        let spec = BarrierSpec::new(3, 2.0, 1.0, 72.0, 1.0).unwrap();
        assert!((spec.amplitude_threshold() - 72.0).abs() < 1e-12);
        assert!(spec.admissible());
        for radius in [1.0, 10.0] {
            let spec = BarrierSpec::new(3, 2.0, 1.0, 72.0, radius).unwrap();
            let rep = ko_barrier_check(&spec, 1000);
            assert!(rep.inequality_holds, "R={radius}: min margin {}", rep.min_margin);
            assert!(rep.max_fd_gap <= 1e-6, "fd gap {}", rep.max_fd_gap);
        }
    }

    #[test]
    fn barrier_center_value_is_amplitude() {
        for radius in [1.0, 5.0, 50.0] {
            let spec = BarrierSpec::new(3, 2.0, 1.0, 72.0, radius).unwrap();
            assert!((spec.barrier(0.0) - 72.0).abs() < 1e-9);
        }
    }

    #[test]
    fn barrier_inadmissible_amplitude_flagged() {
        let spec = BarrierSpec::new(3, 2.0, 1.0, 1.0, 1.0).unwrap();
        let rep = ko_barrier_check(&spec, 500);
        assert!(!rep.admissible);
        // The inequality itself fails for C far below threshold.
        assert!(!rep.inequality_holds);
    }

    #[test]
    fn mixed_pair_witnesses_for_n5() {
        // Spec example: n=5, p=r=2, alpha_z = 1.25, beta_w = 0.5.
        let spec = MixedPairSpec::new(5, 2.0, 1.0, 2.0, 1.25, 0.5).unwrap();
        let radii: Vec<f64> = (0..1000).map(|i| 1000.0 * i as f64 / 999.0).collect();
        let rep = mixed_pair_check(&spec, &radii).unwrap();
        assert!(rep.both_hold, "margins {} {}", rep.min_margin_z, rep.min_margin_w);
        assert!(rep.max_fd_gap <= 1e-6, "fd gap {}", rep.max_fd_gap);
        assert!(rep.b > rep.a_w && rep.a_w > 0.0 && rep.c_z > 0.0);
    }

    #[test]
    fn mixed_pair_w_stays_in_band() {
        let spec = MixedPairSpec::new(5, 2.0, 1.0, 2.0, 1.25, 0.5).unwrap();
        let (a_w, b) = (0.3, 0.6);
        for rho in [0.0, 0.5, 3.0, 100.0] {
            let w = spec.w(a_w, b, rho);
            assert!(w >= b - a_w - 1e-15 && w < b);
        }
    }

    #[test]
    fn mixed_pair_window_checks() {
        assert!(matches!(
            MixedPairSpec::new(3, 0.5, 1.0, 1.2, 1.0, 0.1),
            Err(IneqError::EmptyExponentWindow { .. })
        ));
        assert!(matches!(
            MixedPairSpec::new(5, 2.0, 1.0, 2.0, 0.9, 0.1), // 1/alpha > min(p, r-1)
            Err(IneqError::AlphaOutsideWindow { .. })
        ));
        assert!(matches!(
            MixedPairSpec::new(5, 2.0, 1.0, 2.0, 1.25, 2.0),
            Err(IneqError::BetaOutsideWindow { .. })
        ));
        assert!(MixedPairSpec::with_default_exponents(5, 2.0, 1.0, 2.0).is_ok());
    }

    #[test]
    fn zw_bounds_on_be_instance() {
        let coeffs = Coefficients::new(2.0, 2.0, 1.0, 1.0);
        let exps = Exponents::new(0.0, 2.0, 1.0);
        let cert = crate::proportionality::compute_k(&coeffs, &exps).unwrap();
        assert!((cert.k - 1.0).abs() < 1e-13);
        let rep = pointwise_zw_bounds(cert.k, &coeffs, &exps, &SampleSpec::new(10.0, 316), None);
        assert!(rep.bounds_hold, "slacks {} {}", rep.min_slack_f, rep.min_slack_g);
        assert_eq!(rep.beta, 2.0);
        assert_eq!(rep.gamma, 3.0);
        assert!(rep.factorization_max_gap < 1e-13, "gap {}", rep.factorization_max_gap);
        assert!(rep.factorization_min.unwrap() >= -1e-15);
        assert!(rep.beta_form_constant.unwrap() > 0.0);
    }

    #[test]
    fn zw_bounds_equality_on_diagonal() {
        let coeffs = Coefficients::new(3.0, 2.0, 1.0, 1.0);
        let exps = Exponents::new(0.0, 1.0, 1.0);
        let cert = crate::proportionality::compute_k(&coeffs, &exps).unwrap();
        let k = cert.k;
        for v in [0.5, 1.0, 2.0] {
            let u = k * v;
            let f = eval_f_at(u, v, &coeffs, &exps);
            let minor = coeffs.a / k * u * (k * v - u); // r=1, p+q-1 = 0
            assert_eq!(minor, 0.0);
            // On the diagonal f itself reduces to the exact semitrivial margin.
            let g = eval_g_at(u, v, &coeffs, &exps);
            assert!((f - k * g).abs() < 1e-12 * f.abs().max(1.0));
        }
    }

    #[test]
    fn zw_beta_form_needs_box_for_sublinear_sum() {
        // p + q < 1: the beta-form minorant needs a boundedness box.
        let coeffs = Coefficients::new(2.0, 2.0, 1.0, 1.0);
        let exps = Exponents::new(0.0, 0.5, 0.5);
        let no_box = pointwise_zw_bounds(1.0, &coeffs, &exps, &SampleSpec::new(5.0, 50), None);
        assert!(no_box.beta_form_constant.is_none());
        let boxed = pointwise_zw_bounds(1.0, &coeffs, &exps, &SampleSpec::new(5.0, 50), Some(5.0));
        assert!(boxed.beta_form_constant.is_some());
    }

    #[test]
    fn cone_weight_examples() {
        // Instantiation r = 0, kappa = s - (n-1)q with n=3, q=1, s=1.
        let rep = cone_weight_admissibility(0.0, -1.0, 3);
        assert!(rep.admissible);
        assert!((rep.r_upper_margin - 1.5).abs() < 1e-12);

        // Boundary equality is admissible.
        let n = 4;
        let upper = (n as f64 + 1.0) / (n as f64 - 1.0);
        let rep = cone_weight_admissibility(upper, 0.0, n);
        assert!(rep.admissible);
        assert!(rep.r_upper_margin.abs() < 1e-12);

        let rep = cone_weight_admissibility(upper + 0.1, 0.0, n);
        assert!(!rep.admissible);
    }

    #[test]
    fn halfspace_gates_symmetric_unit_exponents() {
        let rep = halfspace_gate_check(1.0, 1.0, 1.0, 1.0, 3);
        assert!(rep.first_r.holds && (rep.first_r.threshold - 2.5).abs() < 1e-12);
        assert!(rep.condition_first && rep.condition_second);
        assert!(rep.min_sum.holds && (rep.min_sum.value - 2.0).abs() < 1e-12);
        assert!(rep.conclusion_ii && rep.conclusion_iii);

        let zero = halfspace_gate_check(0.0, 0.0, 0.0, 0.0, 3);
        assert!(zero.conclusion_ii && zero.conclusion_iii);

        // Both disjuncts of the first condition failing disables everything.
        let out = halfspace_gate_check(0.0, 10.0, 10.0, 0.0, 3);
        assert!(!out.condition_first);
        assert!(!out.conclusion_ii && !out.conclusion_iii);
    }

    #[test]
    fn harmonicity_on_counterexample_profile() {
        let pair = counterexample_profile(3, 6.0, 1.0, 0.01, 1000.0, 1e-10, 2001).unwrap();
        let grid = crate::dirichlet::Grid::Radial { dim: 3, radius: 1000.0, nodes: 2001 };
        let field = GridField { grid, u: pair.u.clone(), v: pair.v.clone() };
        let inst = ProblemInstance::constant(
            3,
            Exponents::new(6.0, 1.0, 6.0),
            Coefficients::new(1.0, 1.0, 1.0, 1.0),
            Domain::Ball { radius: 1000.0 },
        );
        let rep = discrete_harmonicity_check(&field, &inst, 1.0, 10.0).unwrap();
        assert!(rep.w_subharmonic, "min lap W {} tau {}", rep.min_lap_w, rep.tau);
        assert!(rep.z_superharmonic, "min -lap Z {} tau {}", rep.min_neg_lap_z, rep.tau);
    }

    #[test]
    fn harmonicity_rejects_non_solution() {
        // A Gaussian bump pair does not solve the system.
        let grid = crate::dirichlet::Grid::Radial { dim: 3, radius: 10.0, nodes: 201 };
        let mut field = GridField::zeros(grid);
        for i in 0..200 {
            let r = 10.0 * i as f64 / 200.0;
            field.u[i] = (-r * r).exp();
            field.v[i] = 0.5 * (-r * r / 2.0).exp();
        }
        let inst = ProblemInstance::constant(
            3,
            Exponents::new(0.0, 2.0, 1.0),
            Coefficients::new(2.0, 2.0, 1.0, 1.0),
            Domain::Ball { radius: 10.0 },
        );
        assert!(matches!(
            discrete_harmonicity_check(&field, &inst, 1.0, 10.0),
            Err(IneqError::ResidualPrecondition { .. })
        ));
    }

    #[test]
    fn harmonicity_on_exact_proportional_solution() {
        // The converged BE ground state (u = v): W = 0, Z = u superharmonic.
        use crate::dirichlet::newton_solve;
        use crate::shooting::scalar_ground_state_on_ball;
        let inst = ProblemInstance::constant(
            3,
            Exponents::new(0.0, 2.0, 1.0),
            Coefficients::new(2.0, 2.0, 1.0, 1.0),
            Domain::Ball { radius: 1.0 },
        );
        let sol = scalar_ground_state_on_ball(3, 3.0, 1.0, 1.0, 1e-10, 257).unwrap();
        let init = GridField::from_scalar_reduction(&sol, 1.0);
        let (solved, report) = newton_solve(&init, &inst, None).unwrap();
        assert!(report.converged);
        let rep = discrete_harmonicity_check(&solved, &inst, 1.0, 10.0).unwrap();
        assert!(rep.w_subharmonic && rep.z_superharmonic);
        // W = |u - v| is identically zero for the symmetric solution.
        assert!(rep.min_lap_w.abs() <= rep.tau.max(1e-9));
    }
}
