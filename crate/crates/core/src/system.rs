//! The two-component power system, its nonlinearities, analytic Jacobian and
//! executable hypothesis gates.
//!
//! The nonlinearities are
//!
//! ```text
//!   f(u,v) = u^r v^p [a v^q - c u^q],
//!   g(u,v) = v^r u^p [b u^q - d v^q],
//! ```
//!
//! with the convention `0^0 = 1`, which makes the `p = 0` and `r = 0`
//! specializations (Lotka–Volterra, Bose–Einstein forms) exact power laws
//! rather than limits. The alternative convention `0^0 = 0` would silently
//! zero every semitrivial evaluation; callers who need it must pre-filter.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

/// Errors from system evaluation.
#[derive(Debug, Error)]
pub enum SystemError {
    #[error("state must be nonnegative, got u = {u}, v = {v}")]
    NegativeState { u: f64, v: f64 },
    #[error("spatial coefficients or general lower-order terms require an evaluation point")]
    MissingPoint,
    #[error("jacobian is singular at a corner: {factor}^{exponent} with zero base")]
    JacobianCorner { factor: &'static str, exponent: f64 },
    #[error("domain {0} does not support this operation")]
    UnsupportedDomain(String),
}

/// `base^exp` with the documented `0^0 = 1` convention.
#[inline]
pub fn pow0(base: f64, exp: f64) -> f64 {
    if exp == 0.0 {
        1.0
    } else {
        base.powf(exp)
    }
}

/// Exponent triple `(p, q, r)` of the power system.
///
/// `sigma` and `m` are always derived, never stored, so they cannot go stale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl Exponents {
    pub fn new(p: f64, q: f64, r: f64) -> Self {
        Self { p, q, r }
    }

    /// Total degree `sigma = p + q + r`.
    pub fn sigma(&self) -> f64 {
        self.p + self.q + self.r
    }

    /// `m = |r - p|`.
    pub fn m(&self) -> f64 {
        (self.r - self.p).abs()
    }

    /// Structural admissibility `p, r >= 0, q > 0, q >= |p - r|`.
    ///
    /// Violations are constructible on purpose: the gates must be able to
    /// report failure rather than refuse to exist.
    pub fn is_admissible(&self) -> bool {
        self.p >= 0.0 && self.r >= 0.0 && self.q > 0.0 && self.q >= self.m()
    }
}

/// Constant coefficient quadruple `(a, b, c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Coefficients {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// Reaction-absorption balance `D = ab - cd`.
    pub fn det(&self) -> f64 {
        self.a * self.b - self.c * self.d
    }

    pub fn signs_admissible(&self) -> bool {
        self.a > 0.0 && self.b > 0.0 && self.c >= 0.0 && self.d >= 0.0
    }

    /// Coefficients of the equivalent system with the roles of the two
    /// components exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.b, self.a, self.d, self.c)
    }
}

/// A scalar function of a spatial point.
pub type SpatialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Spatially varying coefficients given as pure callables; gates and the
/// solver sample them into per-grid-point arrays as needed.
#[derive(Clone)]
pub struct SpatialCoefficients {
    pub a: SpatialFn,
    pub b: SpatialFn,
    pub c: SpatialFn,
    pub d: SpatialFn,
}

/// Constant or spatial coefficient field.
#[derive(Clone)]
pub enum CoefficientField {
    Constant(Coefficients),
    Spatial(SpatialCoefficients),
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientField::Constant(c) => write!(f, "Constant({c:?})"),
            CoefficientField::Spatial(_) => write!(f, "Spatial(..)"),
        }
    }
}

impl CoefficientField {
    pub fn constant(&self) -> Option<Coefficients> {
        match self {
            CoefficientField::Constant(c) => Some(*c),
            CoefficientField::Spatial(_) => None,
        }
    }

    /// Coefficient values at `x`; constant fields ignore the point.
    pub fn at(&self, x: &[f64]) -> Coefficients {
        match self {
            CoefficientField::Constant(c) => *c,
            CoefficientField::Spatial(s) => {
                Coefficients::new((s.a)(x), (s.b)(x), (s.c)(x), (s.d)(x))
            }
        }
    }
}

/// A lower-order term callable `h(x, u, v)`.
pub type LowerOrderFn = Arc<dyn Fn(&[f64], f64, f64) -> f64 + Send + Sync>;

/// Lower-order terms: either the linear `mu(x) u`, `nu(x) v` pair with
/// constant `mu`, `nu`, or general evaluable `h_1`, `h_2` with a declared
/// growth exponent.
#[derive(Clone)]
pub enum LowerOrderTerms {
    Linear { mu: f64, nu: f64 },
    General { h1: LowerOrderFn, h2: LowerOrderFn, growth: f64 },
}

impl fmt::Debug for LowerOrderTerms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LowerOrderTerms::Linear { mu, nu } => write!(f, "Linear {{ mu: {mu}, nu: {nu} }}"),
            LowerOrderTerms::General { growth, .. } => {
                write!(f, "General {{ growth: {growth}, .. }}")
            }
        }
    }
}

impl Default for LowerOrderTerms {
    fn default() -> Self {
        LowerOrderTerms::Linear { mu: 0.0, nu: 0.0 }
    }
}

impl LowerOrderTerms {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn h1(&self, x: &[f64], u: f64, v: f64) -> f64 {
        match self {
            LowerOrderTerms::Linear { mu, .. } => mu * u,
            LowerOrderTerms::General { h1, .. } => h1(x, u, v),
        }
    }

    pub fn h2(&self, x: &[f64], u: f64, v: f64) -> f64 {
        match self {
            LowerOrderTerms::Linear { nu, .. } => nu * v,
            LowerOrderTerms::General { h2, .. } => h2(x, u, v),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, LowerOrderTerms::Linear { mu, nu } if *mu == 0.0 && *nu == 0.0)
    }
}

/// Domain descriptor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Domain {
    WholeSpace,
    HalfSpace,
    Ball { radius: f64 },
    Box { sides: Vec<f64> },
}

impl Domain {
    pub fn is_bounded(&self) -> bool {
        matches!(self, Domain::Ball { .. } | Domain::Box { .. })
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::WholeSpace => write!(f, "whole-space"),
            Domain::HalfSpace => write!(f, "half-space"),
            Domain::Ball { radius } => write!(f, "ball(radius={radius})"),
            Domain::Box { sides } => write!(f, "box(sides={sides:?})"),
        }
    }
}

/// A full problem instance: dimension, exponents, coefficients, lower-order
/// terms and domain.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub n: usize,
    pub exps: Exponents,
    pub coeffs: CoefficientField,
    pub lot: LowerOrderTerms,
    pub domain: Domain,
}

impl ProblemInstance {
    /// Constant-coefficient instance without lower-order terms.
    pub fn constant(n: usize, exps: Exponents, coeffs: Coefficients, domain: Domain) -> Self {
        assert!(n >= 1, "dimension must be at least 1");
        Self { n, exps, coeffs: CoefficientField::Constant(coeffs), lot: LowerOrderTerms::none(), domain }
    }

    pub fn with_lower_order(mut self, lot: LowerOrderTerms) -> Self {
        self.lot = lot;
        self
    }
}

fn check_state(u: f64, v: f64) -> Result<(), SystemError> {
    if u < 0.0 || v < 0.0 {
        return Err(SystemError::NegativeState { u, v });
    }
    Ok(())
}

fn coeffs_at(inst: &ProblemInstance, x: Option<&[f64]>) -> Result<Coefficients, SystemError> {
    match (x, &inst.coeffs) {
        (_, CoefficientField::Constant(c)) => Ok(*c),
        (Some(pt), CoefficientField::Spatial(_)) => Ok(inst.coeffs.at(pt)),
        (None, CoefficientField::Spatial(_)) => Err(SystemError::MissingPoint),
    }
}

/// Power part of `f` for explicit coefficients: `u^r v^p [a v^q - c u^q]`.
pub fn eval_f_at(u: f64, v: f64, cf: &Coefficients, e: &Exponents) -> f64 {
    pow0(u, e.r) * pow0(v, e.p) * (cf.a * pow0(v, e.q) - cf.c * pow0(u, e.q))
}

/// Power part of `g` for explicit coefficients: `v^r u^p [b u^q - d v^q]`.
pub fn eval_g_at(u: f64, v: f64, cf: &Coefficients, e: &Exponents) -> f64 {
    pow0(v, e.r) * pow0(u, e.p) * (cf.b * pow0(u, e.q) - cf.d * pow0(v, e.q))
}

/// First nonlinearity `f(u,v) = u^r v^p [a v^q - c u^q]`, plus the
/// lower-order contribution when an evaluation point is supplied.
pub fn eval_f(
    u: f64,
    v: f64,
    inst: &ProblemInstance,
    x: Option<&[f64]>,
) -> Result<f64, SystemError> {
    check_state(u, v)?;
    let cf = coeffs_at(inst, x)?;
    let mut val = eval_f_at(u, v, &cf, &inst.exps);
    if let Some(pt) = x {
        val += inst.lot.h1(pt, u, v);
    }
    Ok(val)
}

/// Second nonlinearity `g(u,v) = v^r u^p [b u^q - d v^q]`.
pub fn eval_g(
    u: f64,
    v: f64,
    inst: &ProblemInstance,
    x: Option<&[f64]>,
) -> Result<f64, SystemError> {
    check_state(u, v)?;
    let cf = coeffs_at(inst, x)?;
    let mut val = eval_g_at(u, v, &cf, &inst.exps);
    if let Some(pt) = x {
        val += inst.lot.h2(pt, u, v);
    }
    Ok(val)
}

/// One Jacobian term `coef * base^exp`, skipping the power when the
/// coefficient vanishes and refusing zero bases with negative exponents.
fn jac_term(
    coef: f64,
    base: f64,
    exp: f64,
    factor: &'static str,
) -> Result<f64, SystemError> {
    if coef == 0.0 {
        return Ok(0.0);
    }
    if base == 0.0 && exp < 0.0 {
        return Err(SystemError::JacobianCorner { factor, exponent: exp });
    }
    Ok(coef * pow0(base, exp))
}

/// Analytic Jacobian of the power parts for explicit coefficients.
pub fn eval_jacobian_at(
    u: f64,
    v: f64,
    cf: &Coefficients,
    e: &Exponents,
) -> Result<[[f64; 2]; 2], SystemError> {
    let (p, q, r) = (e.p, e.q, e.r);
    let bracket_f = cf.a * pow0(v, q) - cf.c * pow0(u, q);
    let bracket_g = cf.b * pow0(u, q) - cf.d * pow0(v, q);

    let df_du = jac_term(r * pow0(v, p) * bracket_f, u, r - 1.0, "u")?
        + jac_term(-cf.c * q * pow0(v, p), u, q + r - 1.0, "u")?;
    let df_dv = jac_term(p * pow0(u, r) * bracket_f, v, p - 1.0, "v")?
        + jac_term(cf.a * q * pow0(u, r), v, p + q - 1.0, "v")?;
    let dg_du = jac_term(p * pow0(v, r) * bracket_g, u, p - 1.0, "u")?
        + jac_term(cf.b * q * pow0(v, r), u, p + q - 1.0, "u")?;
    let dg_dv = jac_term(r * pow0(u, p) * bracket_g, v, r - 1.0, "v")?
        + jac_term(-cf.d * q * pow0(u, p), v, q + r - 1.0, "v")?;

    let jac = [[df_du, df_dv], [dg_du, dg_dv]];
    for row in &jac {
        for entry in row {
            if !entry.is_finite() {
                return Err(SystemError::JacobianCorner { factor: "u*v", exponent: f64::NAN });
            }
        }
    }
    Ok(jac)
}

/// Analytic Jacobian `[[df/du, df/dv], [dg/du, dg/dv]]` of `(f, g)`.
pub fn eval_jacobian(
    u: f64,
    v: f64,
    inst: &ProblemInstance,
    x: Option<&[f64]>,
) -> Result<[[f64; 2]; 2], SystemError> {
    check_state(u, v)?;
    let cf = coeffs_at(inst, x)?;
    let mut jac = eval_jacobian_at(u, v, &cf, &inst.exps)?;
    if let Some(pt) = x {
        let (h1u, h1v, h2u, h2v) = lower_order_jacobian(&inst.lot, pt, u, v);
        jac[0][0] += h1u;
        jac[0][1] += h1v;
        jac[1][0] += h2u;
        jac[1][1] += h2v;
    }
    Ok(jac)
}

/// Derivatives of the lower-order terms; linear terms analytically, general
/// callables by centered differences.
fn lower_order_jacobian(lot: &LowerOrderTerms, x: &[f64], u: f64, v: f64) -> (f64, f64, f64, f64) {
    match lot {
        LowerOrderTerms::Linear { mu, nu } => (*mu, 0.0, 0.0, *nu),
        LowerOrderTerms::General { h1, h2, .. } => {
            let du = 1e-6 * (1.0 + u.abs());
            let dv = 1e-6 * (1.0 + v.abs());
            let h1u = (h1(x, u + du, v) - h1(x, (u - du).max(0.0), v)) / (du + (u - (u - du).max(0.0)));
            let h1v = (h1(x, u, v + dv) - h1(x, u, (v - dv).max(0.0))) / (dv + (v - (v - dv).max(0.0)));
            let h2u = (h2(x, u + du, v) - h2(x, (u - du).max(0.0), v)) / (du + (u - (u - du).max(0.0)));
            let h2v = (h2(x, u, v + dv) - h2(x, u, (v - dv).max(0.0))) / (dv + (v - (v - dv).max(0.0)));
            (h1u, h1v, h2u, h2v)
        }
    }
}

/// Verdict of a single hypothesis gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    NotEvaluated,
}

/// One named hypothesis gate with both sides of its inequality.
///
/// A `threshold` of `None` encodes the `(n-2)_+` convention: the bound is
/// unbounded for `n <= 2` and the gate passes without a float comparison.
#[derive(Debug, Clone, Serialize)]
pub struct GateReport {
    pub name: String,
    pub description: String,
    pub value: f64,
    pub threshold: Option<f64>,
    pub verdict: Verdict,
}

impl GateReport {
    fn le(name: &str, description: &str, value: f64, threshold: Option<f64>) -> Self {
        let verdict = match threshold {
            None => Verdict::Pass,
            Some(t) => {
                if value <= t {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
        };
        Self { name: name.into(), description: description.into(), value, threshold, verdict }
    }

    fn lt(name: &str, description: &str, value: f64, threshold: Option<f64>) -> Self {
        let verdict = match threshold {
            None => Verdict::Pass,
            Some(t) => {
                if value < t {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
        };
        Self { name: name.into(), description: description.into(), value, threshold, verdict }
    }

    fn bool_gate(name: &str, description: &str, value: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            value,
            threshold: Some(0.0),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        }
    }

    fn not_evaluated(name: &str, description: &str) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            value: f64::NAN,
            threshold: None,
            verdict: Verdict::NotEvaluated,
        }
    }
}

/// Full gate report for an instance.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub gates: Vec<GateReport>,
}

impl HypothesisReport {
    pub fn gate(&self, name: &str) -> Option<&GateReport> {
        self.gates.iter().find(|g| g.name == name)
    }

    pub fn all_evaluated_pass(&self) -> bool {
        self.gates.iter().all(|g| g.verdict != Verdict::Fail)
    }
}

/// `x / (n-2)_+` thresholds: `None` means unbounded (`n <= 2`).
fn over_n_minus_2(numerator: f64, n: usize) -> Option<f64> {
    if n <= 2 {
        None
    } else {
        Some(numerator / (n as f64 - 2.0))
    }
}

/// Sample points used to take coefficient infima over bounded domains.
fn gate_sample_points(inst: &ProblemInstance) -> Vec<Vec<f64>> {
    match &inst.domain {
        Domain::Ball { radius } => {
            // Radial lattice; coefficients on balls are sampled along a ray.
            let m = 257;
            (0..m)
                .map(|i| {
                    let mut x = vec![0.0; inst.n];
                    x[0] = radius * i as f64 / (m - 1) as f64;
                    x
                })
                .collect()
        }
        Domain::Box { sides } if sides.len() == 2 => {
            let m = 33;
            let mut pts = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    pts.push(vec![
                        sides[0] * i as f64 / (m - 1) as f64,
                        sides[1] * j as f64 / (m - 1) as f64,
                    ]);
                }
            }
            pts
        }
        _ => vec![vec![0.0; inst.n]],
    }
}

/// Evaluate every named hypothesis gate of the instance.
///
/// `lambda1` is the first Dirichlet eigenvalue of `-Δ` on the instance's
/// domain, computed by the Dirichlet solver and passed in by the caller; the
/// `(1.7)` gate is reported as not evaluated when it is absent.
pub fn validate_hypotheses(inst: &ProblemInstance, lambda1: Option<f64>) -> HypothesisReport {
    let e = &inst.exps;
    let n = inst.n;
    let pts = gate_sample_points(inst);
    let sampled: Vec<Coefficients> = pts.iter().map(|x| inst.coeffs.at(x)).collect();
    let inf_of = |sel: &dyn Fn(&Coefficients) -> f64| {
        sampled.iter().map(|c| sel(c)).fold(f64::INFINITY, f64::min)
    };
    let inf_a = inf_of(&|c: &Coefficients| c.a);
    let inf_b = inf_of(&|c: &Coefficients| c.b);
    let inf_c = inf_of(&|c: &Coefficients| c.c);
    let inf_d = inf_of(&|c: &Coefficients| c.d);
    let inf_det = inf_of(&|c: &Coefficients| c.det());
    let signs_ok = sampled.iter().all(|c| c.signs_admissible());

    let mut gates = vec![
        GateReport::bool_gate(
            "1.8.exponent-signs",
            "p >= 0, r >= 0, q > 0",
            e.p.min(e.r).min(e.q),
            e.p >= 0.0 && e.r >= 0.0 && e.q > 0.0,
        ),
        GateReport {
            name: "1.8.q-ge-|p-r|".into(),
            description: "q >= |p - r|".into(),
            value: e.q,
            threshold: Some(e.m()),
            verdict: if e.q >= e.m() { Verdict::Pass } else { Verdict::Fail },
        },
        GateReport::bool_gate(
            "1.8.coefficient-signs",
            "a > 0, b > 0, c >= 0, d >= 0 (infima over grid samples)",
            inf_a.min(inf_b),
            signs_ok,
        ),
        GateReport {
            name: "1.3".into(),
            description: "model form (r = 1): q >= |1 - p|".into(),
            value: e.q,
            threshold: Some((1.0 - e.p).abs()),
            verdict: if e.q >= (1.0 - e.p).abs() { Verdict::Pass } else { Verdict::Fail },
        },
        GateReport::lt("1.6", "p + q < 4/(n-2)+", e.p + e.q, over_n_minus_2(4.0, n)),
    ];

    gates.push(match (lambda1, &inst.lot) {
        (Some(l1), LowerOrderTerms::Linear { mu, nu }) => GateReport::lt(
            "1.7",
            "mu, nu < lambda1(-Delta, Omega)",
            mu.max(*nu),
            Some(l1),
        ),
        _ => GateReport::not_evaluated("1.7", "mu, nu < lambda1(-Delta, Omega)"),
    });

    gates.push(GateReport::le("2.2", "r <= n/(n-2)+", e.r, over_n_minus_2(n as f64, n)));
    gates.push({
        let threshold = over_n_minus_2(2.0, n);
        let p_ok = threshold.map(|t| e.p <= t).unwrap_or(true);
        let cd_ok = inf_c > 0.0 && inf_d > 0.0;
        GateReport {
            name: "2.3".into(),
            description: "p <= 2/(n-2)+ and c, d > 0".into(),
            value: e.p,
            threshold,
            verdict: if p_ok && cd_ok { Verdict::Pass } else { Verdict::Fail },
        }
    });
    gates.push(GateReport::lt(
        "thm2.2",
        "sigma = p + q + r < (n+2)/(n-2)+",
        e.sigma(),
        over_n_minus_2(n as f64 + 2.0, n),
    ));
    gates.push(GateReport {
        name: "6.2".into(),
        description: "q + r >= 1".into(),
        value: e.q + e.r,
        threshold: Some(1.0),
        verdict: if e.q + e.r >= 1.0 { Verdict::Pass } else { Verdict::Fail },
    });
    gates.push(GateReport::bool_gate(
        "6.3",
        "inf (ab - cd) > 0 over grid samples",
        inf_det,
        inf_det > 0.0,
    ));
    gates.push(GateReport::bool_gate(
        "6.5",
        "r <= 1 and min(inf a, inf b) > 0",
        inf_a.min(inf_b),
        e.r <= 1.0 && inf_a.min(inf_b) > 0.0,
    ));
    gates.push(GateReport::bool_gate(
        "6.6",
        "min(inf c, inf d) > 0",
        inf_c.min(inf_d),
        inf_c.min(inf_d) > 0.0,
    ));

    HypothesisReport { gates }
}
