//! The proportionality constant `K`: existence, uniqueness, sign margins and
//! the structural inequality `[f - Kg][u - Kv] <= 0` it certifies.
//!
//! For the power system the defect `Kg - f` factors through a single
//! polynomial-like function of the ratio `X = u/v`:
//!
//! ```text
//!   H_K(X) = A X^{q+m} + B X^q - C X^m - D,      m = |r - p|,
//! ```
//!
//! with `(A,B,C,D) = (c, Kb, a, Kd)` when `r >= p` and `(Kb, c, Kd, a)`
//! otherwise. `K` is certified as the root of `J(K) = H_K(K)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::system::{pow0, Coefficients, Exponents};

#[derive(Debug, Error)]
pub enum ProportionalityError {
    #[error("exponents violate admissibility (p, r >= 0, q > 0, q >= |p - r|)")]
    InadmissibleExponents,
    #[error("coefficients violate sign conditions (a, b > 0, c, d >= 0)")]
    InadmissibleCoefficients,
    #[error("h_K is undefined for m = |r - p| = 0 (ell = q/m)")]
    EllUndefined,
    #[error("bracketing failed to find a sign change of J after {0} doublings")]
    BracketFailure(usize),
    #[error("root residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("lemma 7.2 case {case} precondition failed: {hypothesis}")]
    Lemma72Precondition { case: &'static str, hypothesis: &'static str },
}

/// How the certified `K` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KSource {
    ClosedForm,
    RootFind,
}

/// Certificate for the proportionality constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProportionalityCertificate {
    #[serde(rename = "K")]
    pub k: f64,
    /// `|J(K)|` at the certified root.
    pub residual: f64,
    /// `a - c K^q`; strictly positive when `ab > cd`, zero when `ab = cd`.
    pub margin_a: f64,
    /// `b K^q - d`; same sign behaviour as `margin_a`.
    pub margin_b: f64,
    /// Exactly one sign change of `J` on the log scan grid.
    pub unique: bool,
    pub source: KSource,
}

/// Coefficients of `H_K` with the branch selection made explicit.
#[derive(Debug, Clone, Copy)]
pub struct HKCoefficients {
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
    pub d_coef: f64,
    pub m: f64,
    /// `ell = q/m`, defined only when `m > 0`.
    pub ell: Option<f64>,
}

impl HKCoefficients {
    pub fn new(k: f64, coeffs: &Coefficients, exps: &Exponents) -> Self {
        let m = exps.m();
        let (a_coef, b_coef, c_coef, d_coef) = if exps.r >= exps.p {
            (coeffs.c, k * coeffs.b, coeffs.a, k * coeffs.d)
        } else {
            (k * coeffs.b, coeffs.c, k * coeffs.d, coeffs.a)
        };
        let ell = if m > 0.0 { Some(exps.q / m) } else { None };
        Self { a_coef, b_coef, c_coef, d_coef, m, ell }
    }
}

/// `H_K(X) = A X^{q+m} + B X^q - C X^m - D`.
pub fn eval_hk_big(k: f64, x: f64, coeffs: &Coefficients, exps: &Exponents) -> f64 {
    let hk = HKCoefficients::new(k, coeffs, exps);
    hk.a_coef * pow0(x, exps.q + hk.m) + hk.b_coef * pow0(x, exps.q)
        - hk.c_coef * pow0(x, hk.m)
        - hk.d_coef
}

/// `h_K(t) = A t^{ell+1} + B t^ell - C t - D`; requires `m > 0`.
pub fn eval_hk_small(
    k: f64,
    t: f64,
    coeffs: &Coefficients,
    exps: &Exponents,
) -> Result<f64, ProportionalityError> {
    let hk = HKCoefficients::new(k, coeffs, exps);
    let ell = hk.ell.ok_or(ProportionalityError::EllUndefined)?;
    Ok(hk.a_coef * t.powf(ell + 1.0) + hk.b_coef * t.powf(ell) - hk.c_coef * t - hk.d_coef)
}

/// `J(K) = H_K(K)`.
pub fn eval_j(k: f64, coeffs: &Coefficients, exps: &Exponents) -> f64 {
    let m = exps.m();
    let q = exps.q;
    if exps.r >= exps.p {
        coeffs.c * k.powf(q + m) + coeffs.b * k.powf(q + 1.0) - coeffs.a * pow0(k, m)
            - coeffs.d * k
    } else {
        coeffs.b * k.powf(q + m + 1.0) + coeffs.c * k.powf(q) - coeffs.d * k.powf(m + 1.0)
            - coeffs.a
    }
}

fn eval_j_prime(k: f64, coeffs: &Coefficients, exps: &Exponents) -> f64 {
    let m = exps.m();
    let q = exps.q;
    let term = |coef: f64, exp: f64| {
        if coef == 0.0 || exp == 0.0 {
            0.0
        } else {
            coef * exp * k.powf(exp - 1.0)
        }
    };
    if exps.r >= exps.p {
        term(coeffs.c, q + m) + term(coeffs.b, q + 1.0) - term(coeffs.a, m) - coeffs.d
    } else {
        term(coeffs.b, q + m + 1.0) + term(coeffs.c, q) - term(coeffs.d, m + 1.0)
    }
}

/// Sum of the absolute monomials of `J` at `K`, used to scale the residual.
fn j_term_scale(k: f64, coeffs: &Coefficients, exps: &Exponents) -> f64 {
    let m = exps.m();
    let q = exps.q;
    if exps.r >= exps.p {
        coeffs.c * k.powf(q + m)
            + coeffs.b * k.powf(q + 1.0)
            + coeffs.a * pow0(k, m)
            + coeffs.d * k
    } else {
        coeffs.b * k.powf(q + m + 1.0)
            + coeffs.c * k.powf(q)
            + coeffs.d * k.powf(m + 1.0)
            + coeffs.a
    }
}

const SCAN_LO: f64 = 1e-6;
const SCAN_HI: f64 = 1e6;
const SCAN_POINTS: usize = 10_000;

/// Sign-change brackets of `J` on the logarithmic scan grid.
fn scan_sign_changes(coeffs: &Coefficients, exps: &Exponents) -> Vec<(f64, f64)> {
    let mut brackets = Vec::new();
    let ratio = (SCAN_HI / SCAN_LO).ln();
    let mut prev_k = SCAN_LO;
    let mut prev_j = eval_j(prev_k, coeffs, exps);
    for i in 1..SCAN_POINTS {
        let k = SCAN_LO * (ratio * i as f64 / (SCAN_POINTS - 1) as f64).exp();
        let j = eval_j(k, coeffs, exps);
        if prev_j == 0.0 || (prev_j < 0.0) != (j < 0.0) {
            brackets.push((prev_k, k));
        }
        prev_k = k;
        prev_j = j;
    }
    brackets
}

fn bisect_then_polish(mut lo: f64, mut hi: f64, coeffs: &Coefficients, exps: &Exponents) -> f64 {
    let mut j_lo = eval_j(lo, coeffs, exps);
    if j_lo == 0.0 {
        return lo;
    }
    // Bisection to relative width 1e-14; Newton alone can escape the bracket
    // for steep J.
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let j_mid = eval_j(mid, coeffs, exps);
        if j_mid == 0.0 {
            return mid;
        }
        if (j_mid < 0.0) == (j_lo < 0.0) {
            lo = mid;
            j_lo = j_mid;
        } else {
            hi = mid;
        }
    }
    let mut k = 0.5 * (lo + hi);
    for _ in 0..4 {
        let j = eval_j(k, coeffs, exps);
        let jp = eval_j_prime(k, coeffs, exps);
        if jp == 0.0 {
            break;
        }
        let next = k - j / jp;
        if next.is_finite() && next >= lo && next <= hi {
            k = next;
        } else {
            break;
        }
    }
    k
}

/// Compute the proportionality constant with residual, margins and a
/// uniqueness scan.
///
/// Closed forms are used for `(p, r) = (0, 1)` and for the degenerate branch
/// `c = d = 0, q = r - p`; otherwise the root of `J` is found by geometric
/// bracketing from `K = 1`, bisection and a Newton polish.
pub fn compute_k(
    coeffs: &Coefficients,
    exps: &Exponents,
) -> Result<ProportionalityCertificate, ProportionalityError> {
    if !exps.is_admissible() {
        return Err(ProportionalityError::InadmissibleExponents);
    }
    if !coeffs.signs_admissible() {
        return Err(ProportionalityError::InadmissibleCoefficients);
    }

    let brackets = scan_sign_changes(coeffs, exps);
    let unique = brackets.len() == 1;

    let (k, source) = if exps.p == 0.0 && exps.r == 1.0 {
        (
            ((coeffs.a + coeffs.d) / (coeffs.b + coeffs.c)).powf(1.0 / exps.q),
            KSource::ClosedForm,
        )
    } else if coeffs.c == 0.0 && coeffs.d == 0.0 && exps.q == exps.r - exps.p {
        // Degenerate branch: Kg - f = (Kb - a) u^r v^r vanishes identically
        // exactly at K = a/b.
        (coeffs.a / coeffs.b, KSource::ClosedForm)
    } else if coeffs.det() < 0.0 && brackets.len() > 1 {
        // Multiple roots are possible once absorption dominates; return the
        // smallest one, flagged as non-unique.
        let (lo, hi) = brackets[0];
        (bisect_then_polish(lo, hi, coeffs, exps), KSource::RootFind)
    } else {
        let (lo, hi) = geometric_bracket(coeffs, exps)?;
        (bisect_then_polish(lo, hi, coeffs, exps), KSource::RootFind)
    };

    let residual = eval_j(k, coeffs, exps).abs();
    let tol = 1e-13 * j_term_scale(k, coeffs, exps).max(1.0);
    if residual > tol {
        return Err(ProportionalityError::ResidualTooLarge { residual, tol });
    }

    Ok(ProportionalityCertificate {
        k,
        residual,
        margin_a: coeffs.a - coeffs.c * k.powf(exps.q),
        margin_b: coeffs.b * k.powf(exps.q) - coeffs.d,
        unique,
        source,
    })
}

/// Expand geometrically from `K = 1` by factor 2 until `J` changes sign.
/// `J(K) < 0` for small `K > 0` and `J -> +inf`, so expanding downwards when
/// `J(1) > 0` and upwards otherwise always brackets a root.
fn geometric_bracket(
    coeffs: &Coefficients,
    exps: &Exponents,
) -> Result<(f64, f64), ProportionalityError> {
    let j1 = eval_j(1.0, coeffs, exps);
    if j1 == 0.0 {
        return Ok((1.0, 1.0));
    }
    let max_doublings = 200;
    if j1 > 0.0 {
        let mut hi = 1.0;
        let mut lo = 0.5;
        for _ in 0..max_doublings {
            if eval_j(lo, coeffs, exps) < 0.0 {
                return Ok((lo, hi));
            }
            hi = lo;
            lo *= 0.5;
        }
    } else {
        let mut lo = 1.0;
        let mut hi = 2.0;
        for _ in 0..max_doublings {
            if eval_j(hi, coeffs, exps) > 0.0 {
                return Ok((lo, hi));
            }
            lo = hi;
            hi *= 2.0;
        }
    }
    Err(ProportionalityError::BracketFailure(max_doublings))
}

/// Deterministic sample grid over `(0, u_max]^2`.
#[derive(Debug, Clone, Copy)]
pub struct SampleSpec {
    pub u_max: f64,
    pub points_per_axis: usize,
}

impl SampleSpec {
    pub fn new(u_max: f64, points_per_axis: usize) -> Self {
        Self { u_max, points_per_axis }
    }

    fn axis(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.points_per_axis;
        (1..=m).map(move |i| self.u_max * i as f64 / m as f64)
    }
}

/// Scan report for condition `[f - Kg][u - Kv] <= 0` and its strict form.
#[derive(Debug, Clone, Serialize)]
pub struct Condition19Report {
    /// max over samples of `(f - Kg)(u - Kv)`; nonpositive up to rounding.
    pub max_signed_product: f64,
    /// min over off-diagonal samples of `(Kg - f)(u - Kv)`; strictly positive
    /// when `ab >= cd`.
    pub strict_min_off_diagonal: f64,
    /// max over samples of `|f - Kg| |u - Kv|`, the natural rounding scale.
    pub scale: f64,
    pub samples_total: usize,
    pub samples_off_diagonal: usize,
}

fn f_only(u: f64, v: f64, coeffs: &Coefficients, exps: &Exponents) -> f64 {
    pow0(u, exps.r) * pow0(v, exps.p) * (coeffs.a * pow0(v, exps.q) - coeffs.c * pow0(u, exps.q))
}

fn g_only(u: f64, v: f64, coeffs: &Coefficients, exps: &Exponents) -> f64 {
    pow0(v, exps.r) * pow0(u, exps.p) * (coeffs.b * pow0(u, exps.q) - coeffs.d * pow0(v, exps.q))
}

/// Grid scan of the structural condition. The strict inequality is an exact
/// equality on the diagonal, so samples with `|u - Kv| <= 1e-8 u_max` are
/// reported separately rather than folded into the strict minimum.
pub fn check_condition_19(
    k: f64,
    coeffs: &Coefficients,
    exps: &Exponents,
    samples: &SampleSpec,
) -> Condition19Report {
    let cutoff = 1e-8 * samples.u_max;
    let mut max_signed = f64::NEG_INFINITY;
    let mut strict_min = f64::INFINITY;
    let mut scale = 0.0f64;
    let mut total = 0usize;
    let mut off_diag = 0usize;
    for u in samples.axis() {
        for v in samples.axis() {
            let f = f_only(u, v, coeffs, exps);
            let g = g_only(u, v, coeffs, exps);
            let defect = u - k * v;
            let signed = (f - k * g) * defect;
            max_signed = max_signed.max(signed);
            scale = scale.max((f - k * g).abs() * defect.abs());
            total += 1;
            if defect.abs() > cutoff {
                off_diag += 1;
                strict_min = strict_min.min((k * g - f) * defect);
            }
        }
    }
    Condition19Report {
        max_signed_product: max_signed,
        strict_min_off_diagonal: strict_min,
        scale,
        samples_total: total,
        samples_off_diagonal: off_diag,
    }
}

/// Which lower bound of the appendix lemma to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma72Case {
    /// `r > p`, `c, d > 0`: minorant `u^p v^p (u + Kv)^{q+r-p-1} (u - Kv)^2`.
    I,
    /// `d = 0`, `c > 0`: minorant `u^r v^{p∧r} (u + Kv)^{q-1+(p-r)_+} (u - Kv)^2`.
    II,
}

/// Infimum over the sample grid of `(Kg - f)(u - Kv)` divided by the lemma's
/// minorant; strictly positive when the lemma applies. Points with
/// `|u - Kv| < 1e-8` are excluded (the ratio is 0/0 there).
pub fn lemma72_ratio_inf(
    case: Lemma72Case,
    k: f64,
    coeffs: &Coefficients,
    exps: &Exponents,
    samples: &SampleSpec,
) -> Result<f64, ProportionalityError> {
    match case {
        Lemma72Case::I => {
            if exps.r <= exps.p {
                return Err(ProportionalityError::Lemma72Precondition {
                    case: "i",
                    hypothesis: "r > p",
                });
            }
            if coeffs.c <= 0.0 || coeffs.d <= 0.0 {
                return Err(ProportionalityError::Lemma72Precondition {
                    case: "i",
                    hypothesis: "c, d > 0",
                });
            }
        }
        Lemma72Case::II => {
            if coeffs.d != 0.0 {
                return Err(ProportionalityError::Lemma72Precondition {
                    case: "ii",
                    hypothesis: "d = 0",
                });
            }
            if coeffs.c <= 0.0 {
                return Err(ProportionalityError::Lemma72Precondition {
                    case: "ii",
                    hypothesis: "c > 0",
                });
            }
        }
    }
    let mut inf = f64::INFINITY;
    for u in samples.axis() {
        for v in samples.axis() {
            let defect = u - k * v;
            if defect.abs() < 1e-8 {
                continue;
            }
            let lhs = (k * g_only(u, v, coeffs, exps) - f_only(u, v, coeffs, exps)) * defect;
            let minorant = match case {
                Lemma72Case::I => {
                    pow0(u, exps.p)
                        * pow0(v, exps.p)
                        * (u + k * v).powf(exps.q + exps.r - exps.p - 1.0)
                        * defect
                        * defect
                }
                Lemma72Case::II => {
                    pow0(u, exps.r)
                        * pow0(v, exps.p.min(exps.r))
                        * (u + k * v).powf(exps.q - 1.0 + (exps.p - exps.r).max(0.0))
                        * defect
                        * defect
                }
            };
            inf = inf.min(lhs / minorant);
        }
    }
    Ok(inf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn cert(a: f64, b: f64, c: f64, d: f64, p: f64, q: f64, r: f64) -> ProportionalityCertificate {
        compute_k(&Coefficients::new(a, b, c, d), &Exponents::new(p, q, r)).unwrap()
    }

    #[test]
    fn closed_form_lv() {
        // (p, r) = (0, 1): K = ((a+d)/(b+c))^{1/q}; here (3+1)/(1+1) = 2.
        let c = cert(3.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0);
        assert!((c.k - 2.0).abs() < 1e-14);
        assert_eq!(c.source, KSource::ClosedForm);
        assert!(c.unique);
    }

    #[test]
    fn k_is_one_iff_a_plus_d_equals_b_plus_c() {
        let c = cert(2.0, 2.0, 1.0, 1.0, 0.0, 2.0, 1.0);
        assert!((c.k - 1.0).abs() < 1e-14);
        assert!(c.margin_a > 0.0 && c.margin_b > 0.0);
    }

    #[test]
    fn degenerate_branch_closed_form() {
        let c = cert(4.0, 1.0, 0.0, 0.0, 0.0, 2.0, 2.0);
        assert!((c.k - 4.0).abs() < 1e-14);
        assert_eq!(c.source, KSource::ClosedForm);
    }

    #[test]
    fn root_find_matches_bisection_oracle() {
        // p = r = 1, q = 2: m = 0 and J(K) = K^3 + K^2 - K - 2.
        let coeffs = Coefficients::new(2.0, 1.0, 1.0, 1.0);
        let exps = Exponents::new(1.0, 2.0, 1.0);
        let j = |k: f64| k.powi(3) + k.powi(2) - k - 2.0;
        // Independent oracle: plain bisection on the hand-expanded J.
        let (mut lo, mut hi) = (1.0, 2.0);
        assert!(j(lo) < 0.0 && j(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if j(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((oracle - 1.2056).abs() < 1e-3, "oracle root near 1.2056");

        let c = compute_k(&coeffs, &exps).unwrap();
        assert_eq!(c.source, KSource::RootFind);
        assert!((c.k - oracle).abs() < 1e-12, "K = {} vs oracle {}", c.k, oracle);
        assert!((eval_j(c.k, &coeffs, &exps)).abs() <= 1e-13 * j_term_scale(c.k, &coeffs, &exps));
    }

    #[test]
    fn hk_at_certified_root_vanishes() {
        let coeffs = Coefficients::new(3.0, 2.0, 1.0, 0.5, );
        let exps = Exponents::new(0.5, 1.5, 1.5);
        let c = compute_k(&coeffs, &exps).unwrap();
        let h = eval_hk_big(c.k, c.k, &coeffs, &exps);
        assert!(h.abs() < 1e-12, "H_K(K) = {h}");
    }

    #[test]
    fn j_negative_for_small_k() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = rng.gen_range(0.1..5.0);
            let b = rng.gen_range(0.1..5.0);
            let c = rng.gen_range(0.0..3.0);
            let d = rng.gen_range(0.0..3.0);
            let p: f64 = rng.gen_range(0.0..2.5);
            let r: f64 = rng.gen_range(0.0..2.5);
            let q = (p - r).abs() + rng.gen_range(0.01..2.0);
            let j = eval_j(1e-6, &Coefficients::new(a, b, c, d), &Exponents::new(p, q, r));
            assert!(j < 0.0, "J(1e-6) = {j} for ({a},{b},{c},{d}),({p},{q},{r})");
        }
    }

    #[test]
    fn hk_consistency_with_small_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let coeffs = Coefficients::new(2.0, 1.0, 0.5, 0.25);
        let exps = Exponents::new(0.5, 2.0, 1.5); // m = 1 > 0
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(1e-3..1e3);
            let k: f64 = rng.gen_range(0.1..10.0);
            let big = eval_hk_big(k, x, &coeffs, &exps);
            let small = eval_hk_small(k, x.powf(exps.m()), &coeffs, &exps).unwrap();
            let scale = big.abs().max(small.abs()).max(1.0);
            assert!((big - small).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn hk_small_requires_positive_m() {
        let coeffs = Coefficients::new(1.0, 1.0, 1.0, 1.0);
        let exps = Exponents::new(1.0, 2.0, 1.0); // m = 0
        assert!(matches!(
            eval_hk_small(1.0, 1.0, &coeffs, &exps),
            Err(ProportionalityError::EllUndefined)
        ));
    }

    #[test]
    fn margins_vanish_when_ab_equals_cd() {
        let c = cert(1.0, 1.0, 1.0, 1.0, 0.0, 2.0, 1.0);
        assert!(c.margin_a.abs() <= 1e-10 && c.margin_b.abs() <= 1e-10);
        let c2 = cert(2.0, 2.0, 4.0, 1.0, 0.0, 1.0, 1.0); // ab = cd = 4
        assert!(c2.margin_a.abs() <= 1e-10 && c2.margin_b.abs() <= 1e-10);
    }

    #[test]
    fn ordering_and_swap_duality() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let mut checked = 0;
        while checked < 200 {
            let a = rng.gen_range(0.2..4.0);
            let b = rng.gen_range(0.2..4.0);
            let c = rng.gen_range(0.0..2.0);
            let d = rng.gen_range(0.0..2.0);
            if a * b < c * d {
                continue;
            }
            let p: f64 = rng.gen_range(0.0..2.0);
            let r: f64 = rng.gen_range(0.0..2.0);
            let q = (p - r).abs() + rng.gen_range(0.05..2.0);
            let coeffs = Coefficients::new(a, b, c, d);
            let exps = Exponents::new(p, q, r);
            let cert = compute_k(&coeffs, &exps).unwrap();
            if (a + d - b - c).abs() > 1e-6 {
                assert_eq!(cert.k > 1.0, a + d > b + c, "ordering failed for {coeffs:?}");
            }
            // Swapping the components inverts K. The swapped exponents are the
            // same triple (the system is symmetric in (p, q, r)).
            let swapped = compute_k(&coeffs.swapped(), &exps).unwrap();
            assert!(
                (swapped.k - 1.0 / cert.k).abs() <= 1e-10 * (1.0 / cert.k).max(1.0),
                "swap duality: {} vs 1/{}",
                swapped.k,
                cert.k
            );
            checked += 1;
        }
    }

    #[test]
    fn condition_19_holds_on_grid() {
        let coeffs = Coefficients::new(3.0, 2.0, 1.0, 1.0);
        let exps = Exponents::new(0.0, 1.0, 1.0);
        let cert = compute_k(&coeffs, &exps).unwrap();
        let rep = check_condition_19(cert.k, &coeffs, &exps, &SampleSpec::new(10.0, 100));
        assert_eq!(rep.samples_total, 10_000);
        assert!(
            rep.max_signed_product <= 1e-12 * rep.scale.max(1.0),
            "max signed product {} vs scale {}",
            rep.max_signed_product,
            rep.scale
        );
        assert!(rep.strict_min_off_diagonal > 0.0);
    }

    #[test]
    fn diagonal_product_is_zero() {
        let coeffs = Coefficients::new(3.0, 2.0, 1.0, 1.0);
        let exps = Exponents::new(0.0, 1.0, 1.0);
        let cert = compute_k(&coeffs, &exps).unwrap();
        // u = Kv exactly: the (u - Kv) factor is an exact zero.
        for v in [0.25, 1.0, 4.0] {
            let u = cert.k * v;
            let f = f_only(u, v, &coeffs, &exps);
            let g = g_only(u, v, &coeffs, &exps);
            assert_eq!((f - cert.k * g) * (u - cert.k * v), 0.0);
        }
    }

    #[test]
    fn lemma72_case_i_positive() {
        let coeffs = Coefficients::new(3.0, 2.0, 1.0, 1.0);
        let exps = Exponents::new(0.0, 1.0, 1.0);
        let cert = compute_k(&coeffs, &exps).unwrap();
        let inf =
            lemma72_ratio_inf(Lemma72Case::I, cert.k, &coeffs, &exps, &SampleSpec::new(10.0, 100))
                .unwrap();
        assert!(inf > 0.0, "case i infimum {inf}");
    }

    #[test]
    fn lemma72_case_ii_positive() {
        let coeffs = Coefficients::new(2.0, 1.0, 1.0, 0.0);
        let exps = Exponents::new(1.0, 2.0, 1.0);
        let cert = compute_k(&coeffs, &exps).unwrap();
        assert!((cert.k - 1.0).abs() < 1e-12, "K = 1 solves K^3 + K^2 - 2 = 0");
        let inf =
            lemma72_ratio_inf(Lemma72Case::II, cert.k, &coeffs, &exps, &SampleSpec::new(10.0, 100))
                .unwrap();
        assert!(inf > 0.0, "case ii infimum {inf}");
    }

    #[test]
    fn lemma72_preconditions_enforced() {
        let coeffs = Coefficients::new(3.0, 2.0, 1.0, 1.0);
        let exps = Exponents::new(0.0, 1.0, 1.0);
        assert!(matches!(
            lemma72_ratio_inf(Lemma72Case::II, 2.0, &coeffs, &exps, &SampleSpec::new(1.0, 10)),
            Err(ProportionalityError::Lemma72Precondition { hypothesis: "d = 0", .. })
        ));
        let exps_bad = Exponents::new(1.0, 1.0, 1.0);
        assert!(matches!(
            lemma72_ratio_inf(Lemma72Case::I, 1.0, &coeffs, &exps_bad, &SampleSpec::new(1.0, 10)),
            Err(ProportionalityError::Lemma72Precondition { hypothesis: "r > p", .. })
        ));
    }

    #[test]
    fn uniqueness_scan_on_random_admissible_sets() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 200 {
            let a = rng.gen_range(0.2..4.0);
            let b = rng.gen_range(0.2..4.0);
            let c = rng.gen_range(0.0..2.0);
            let d = rng.gen_range(0.0..2.0);
            if a * b < c * d {
                continue;
            }
            let p: f64 = rng.gen_range(0.0..2.0);
            let r: f64 = rng.gen_range(0.0..2.0);
            let q = (p - r).abs() + rng.gen_range(0.05..2.0);
            let cert = compute_k(&Coefficients::new(a, b, c, d), &Exponents::new(p, q, r)).unwrap();
            assert!(cert.unique, "ab >= cd must give a unique K");
            checked += 1;
        }
    }
}
