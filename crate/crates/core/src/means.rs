//! Half-spherical means on the half-space `{x_n > 0}`:
//!
//! ```text
//!   [w]_y(R) = 1/(R^2 |S_R^+|) ∫_{S_R^+(y)} w(x) x_n dσ_R(x),
//! ```
//!
//! for boundary centers `y`, with the derivative identity
//!
//! ```text
//!   d/dR [w]_y(R) = 1/(R^2 |S_R^+|) [ ∫_{B_R^+(y)} Δw x_n dx - ∫_{D_R(y)} w dy' ],
//! ```
//!
//! monotonicity scans for superharmonic fields and the linear lower bound
//! `w >= (L/[x_n]) x_n`.
//!
//! Quadrature: composite Gauss–Legendre in the angle for `n = 2`, product
//! Gauss (polar cosine) x periodic trapezoid (azimuth) for `n = 3`, seeded
//! Monte Carlo on the half-sphere for `n >= 4`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::quad::gauss_legendre;

#[derive(Debug, Error)]
pub enum MeansError {
    #[error("derivative identity needs the Laplacian of the field")]
    MissingLaplacian,
    #[error("radii must be strictly increasing")]
    RadiiNotIncreasing,
    #[error("half-spherical means need dimension n >= 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("unknown catalogue field `{0}`")]
    UnknownField(String),
}

type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Evaluable scalar field on the closed half-space, with an optional
/// evaluable Laplacian.
#[derive(Clone)]
pub struct FieldWithLaplacian {
    pub name: String,
    w: ScalarField,
    lap: Option<ScalarField>,
}

impl std::fmt::Debug for FieldWithLaplacian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FieldWithLaplacian({})", self.name)
    }
}

impl FieldWithLaplacian {
    pub fn new(
        name: impl Into<String>,
        w: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        lap: Option<Box<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
    ) -> Self {
        Self { name: name.into(), w: Arc::new(w), lap: lap.map(|f| Arc::from(f) as ScalarField) }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.w)(x)
    }

    pub fn laplacian(&self, x: &[f64]) -> Option<f64> {
        self.lap.as_ref().map(|f| f(x))
    }

    /// `w = x_n`, harmonic, vanishing on the boundary.
    pub fn x_n() -> Self {
        Self::new("x_n", |x: &[f64]| x[x.len() - 1], Some(Box::new(|_: &[f64]| 0.0)))
    }

    /// `w = x_n^2`, `Δw = 2`.
    pub fn x_n_squared() -> Self {
        Self::new(
            "x_n^2",
            |x: &[f64]| x[x.len() - 1] * x[x.len() - 1],
            Some(Box::new(|_: &[f64]| 2.0)),
        )
    }

    /// `w = x_n + 1 - exp(-x_n)`: superharmonic (`Δw = -exp(-x_n) <= 0`),
    /// nonnegative, vanishing on the boundary.
    pub fn x_n_soft() -> Self {
        Self::new(
            "x_n_soft",
            |x: &[f64]| {
                let t = x[x.len() - 1];
                t + 1.0 - (-t).exp()
            },
            Some(Box::new(|x: &[f64]| -(-x[x.len() - 1]).exp())),
        )
    }

    /// `w = -x_n`: the negated harmonic field; its means increase.
    pub fn neg_x_n() -> Self {
        Self::new("neg_x_n", |x: &[f64]| -x[x.len() - 1], Some(Box::new(|_: &[f64]| 0.0)))
    }

    /// `w = (1 + |x - P|^2)^{-1/2}` with `P = (0,..,0,3)`: positive,
    /// smooth and superharmonic for `n = 3`, with genuinely center-dependent
    /// finite-radius means.
    pub fn decay_bump() -> Self {
        let shift = 3.0;
        Self::new(
            "decay_bump",
            move |x: &[f64]| {
                let mut s = 0.0;
                for (i, xi) in x.iter().enumerate() {
                    let d = if i == x.len() - 1 { xi - shift } else { *xi };
                    s += d * d;
                }
                1.0 / (1.0 + s).sqrt()
            },
            Some(Box::new(move |x: &[f64]| {
                let mut s = 0.0;
                for (i, xi) in x.iter().enumerate() {
                    let d = if i == x.len() - 1 { xi - shift } else { *xi };
                    s += d * d;
                }
                -3.0 * (1.0 + s).powf(-2.5)
            })),
        )
    }

    /// Multivariate polynomial from `(coefficient, exponent multi-index)`
    /// terms, with its exact Laplacian.
    pub fn polynomial(terms: Vec<(f64, Vec<u32>)>) -> Self {
        let terms2 = terms.clone();
        let eval = move |x: &[f64]| -> f64 {
            terms
                .iter()
                .map(|(c, alpha)| {
                    c * alpha.iter().zip(x.iter()).map(|(&a, &xi)| xi.powi(a as i32)).product::<f64>()
                })
                .sum()
        };
        let lap = move |x: &[f64]| -> f64 {
            let mut acc = 0.0;
            for (c, alpha) in &terms2 {
                for i in 0..alpha.len() {
                    if alpha[i] >= 2 {
                        let mut prod = c * (alpha[i] * (alpha[i] - 1)) as f64;
                        for (j, &a) in alpha.iter().enumerate() {
                            let e = if j == i { a - 2 } else { a };
                            prod *= x[j].powi(e as i32);
                        }
                        acc += prod;
                    }
                }
            }
            acc
        };
        Self::new("polynomial", eval, Some(Box::new(lap)))
    }

    /// Catalogue lookup for config-driven scans.
    pub fn by_name(name: &str) -> Result<Self, MeansError> {
        match name {
            "x_n" => Ok(Self::x_n()),
            "x_n^2" | "x_n_squared" => Ok(Self::x_n_squared()),
            "x_n_soft" => Ok(Self::x_n_soft()),
            "neg_x_n" => Ok(Self::neg_x_n()),
            "decay_bump" => Ok(Self::decay_bump()),
            other => Err(MeansError::UnknownField(other.into())),
        }
    }
}

/// Quadrature configuration; `nodes` is the base count, the error estimate
/// comes from comparing against the doubled rule.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadConfig {
    pub nodes: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { nodes: 48, mc_samples: 200_000, seed: 0 }
    }
}

/// How a mean value was computed.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeanMethod {
    Deterministic { nodes: usize },
    MonteCarlo { seed: u64, samples: usize, std_error: f64 },
}

/// A half-spherical mean sample with a quantified error estimate.
#[derive(Debug, Clone, Serialize)]
pub struct HalfMeanSample {
    pub center: Vec<f64>,
    pub radius: f64,
    pub n: usize,
    pub value: f64,
    pub error_estimate: f64,
    pub method: MeanMethod,
}

/// Γ at integer or half-integer argument `twice/2`.
fn gamma_half(twice: u32) -> f64 {
    match twice {
        0 => f64::INFINITY,
        1 => std::f64::consts::PI.sqrt(),
        2 => 1.0,
        t => (t as f64 / 2.0 - 1.0) * gamma_half(t - 2),
    }
}

/// Surface area of the unit half-sphere `S_1^+` in dimension `n`.
pub fn half_sphere_area(n: usize) -> f64 {
    std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n as u32)
}

/// Closed-form `∫_{S_1^+} x^alpha dσ`; zero when any tangential exponent is
/// odd, `∏ Γ((a_i+1)/2) / Γ((n + Σa_i)/2)` otherwise.
pub fn half_sphere_monomial_moment(alpha: &[u32]) -> f64 {
    let n = alpha.len();
    if alpha[..n - 1].iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let total: u32 = alpha.iter().sum();
    let mut num = 1.0;
    for &a in alpha {
        num *= gamma_half(a + 1);
    }
    num / gamma_half(total + n as u32)
}

/// The constant `[x_n]` (independent of the radius).
pub fn xn_mean_constant(n: usize) -> f64 {
    let mut alpha = vec![0u32; n];
    alpha[n - 1] = 2;
    half_sphere_monomial_moment(&alpha) / half_sphere_area(n)
}

fn mean_at_resolution(w: &FieldWithLaplacian, y: &[f64], r: f64, n: usize, nodes: usize) -> f64 {
    match n {
        2 => {
            // (1/(pi R)) ∫_0^pi w(y + R e(θ)) sin θ dθ, composite GL.
            let panels = 4;
            let (xs, ws) = gauss_legendre(nodes.div_ceil(panels));
            let mut acc = 0.0;
            let dp = std::f64::consts::PI / panels as f64;
            for k in 0..panels {
                let mid = dp * (k as f64 + 0.5);
                let half = 0.5 * dp;
                for (x, wgt) in xs.iter().zip(ws.iter()) {
                    let theta = mid + half * x;
                    let pt = [y[0] + r * theta.cos(), r * theta.sin()];
                    acc += wgt * half * w.eval(&pt) * theta.sin();
                }
            }
            acc / (std::f64::consts::PI * r)
        }
        3 => {
            // (1/(2 pi R)) ∫_0^{2pi} ∫_0^1 w(..) μ dμ dψ, GL x trapezoid.
            let (mus, mws) = gauss_legendre(nodes);
            let m_az = 2 * nodes;
            let dpsi = 2.0 * std::f64::consts::PI / m_az as f64;
            let mut acc = 0.0;
            for (mu_ref, mw) in mus.iter().zip(mws.iter()) {
                let mu = 0.5 * (mu_ref + 1.0); // map [-1,1] -> [0,1]
                let s = (1.0 - mu * mu).max(0.0).sqrt();
                let mut az = 0.0;
                for k in 0..m_az {
                    let psi = dpsi * k as f64;
                    let pt = [y[0] + r * s * psi.cos(), y[1] + r * s * psi.sin(), r * mu];
                    az += w.eval(&pt);
                }
                acc += mw * 0.5 * mu * az * dpsi;
            }
            acc / (2.0 * std::f64::consts::PI * r)
        }
        _ => unreachable!("deterministic rules are n <= 3 only"),
    }
}

/// The half-spherical mean `[w]_y(R)`.
pub fn half_sphere_mean(
    w: &FieldWithLaplacian,
    y: &[f64],
    r: f64,
    n: usize,
    cfg: &QuadConfig,
) -> Result<HalfMeanSample, MeansError> {
    if n < 2 {
        return Err(MeansError::DimensionTooSmall(n));
    }
    assert!(r > 0.0, "radius must be positive");
    if n <= 3 {
        let coarse = mean_at_resolution(w, y, r, n, cfg.nodes);
        let fine = mean_at_resolution(w, y, r, n, 2 * cfg.nodes);
        Ok(HalfMeanSample {
            center: y.to_vec(),
            radius: r,
            n,
            value: fine,
            error_estimate: (fine - coarse).abs() + 1e-15 * fine.abs(),
            method: MeanMethod::Deterministic { nodes: 2 * cfg.nodes },
        })
    } else {
        // [w]_y(R) = E[ w(y + R z) z_n ] / R over z uniform on S^+.
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut pt = vec![0.0; n];
        for _ in 0..cfg.mc_samples {
            let mut norm2 = 0.0;
            for slot in pt.iter_mut() {
                // Box-Muller pair would be fine; a rejection-free polar draw
                // via two uniforms keeps the stream simple.
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                *slot = (-2.0 * u1.ln()).sqrt() * u2.cos();
                norm2 += *slot * *slot;
            }
            let norm = norm2.sqrt();
            for slot in pt.iter_mut() {
                *slot /= norm;
            }
            pt[n - 1] = pt[n - 1].abs();
            let zn = pt[n - 1];
            // Centers are boundary points given by their n-1 tangential
            // coordinates; the last coordinate is 0.
            let mut x = vec![0.0; n];
            for i in 0..n {
                x[i] = if i < n - 1 { y[i] } else { 0.0 } + r * pt[i];
            }
            let val = w.eval(&x) * zn / r;
            sum += val;
            sum_sq += val * val;
        }
        let m = cfg.mc_samples as f64;
        let mean = sum / m;
        let var = (sum_sq / m - mean * mean).max(0.0);
        let std_error = (var / m).sqrt();
        Ok(HalfMeanSample {
            center: y.to_vec(),
            radius: r,
            n,
            value: mean,
            error_estimate: 3.0 * std_error,
            method: MeanMethod::MonteCarlo { seed: cfg.seed, samples: cfg.mc_samples, std_error },
        })
    }
}

/// Both sides of the derivative identity and their gap.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeIdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
}

/// Check `d/dR [w]_y(R)` against the interior/boundary integral form.
pub fn mean_derivative_identity_check(
    w: &FieldWithLaplacian,
    y: &[f64],
    r: f64,
    n: usize,
    cfg: &QuadConfig,
) -> Result<DerivativeIdentityReport, MeansError> {
    if w.lap.is_none() {
        return Err(MeansError::MissingLaplacian);
    }
    if n < 2 || n > 3 {
        return Err(MeansError::DimensionTooSmall(n));
    }

    // LHS: 5-point finite difference in R with step 1e-3 R.
    let dr = 1e-3 * r;
    let m = |rr: f64| half_sphere_mean(w, y, rr, n, cfg).map(|s| s.value);
    let lhs = (-m(r + 2.0 * dr)? + 8.0 * m(r + dr)? - 8.0 * m(r - dr)? + m(r - 2.0 * dr)?)
        / (12.0 * dr);

    // RHS: interior integral of Δw x_n minus the flat-disk integral of w.
    let lapf = w.lap.as_ref().unwrap();
    let (interior, disk) = match n {
        2 => {
            let (rs, rws) = gauss_legendre(cfg.nodes);
            let (ts, tws) = gauss_legendre(cfg.nodes);
            let mut interior = 0.0;
            for (rr, rw) in rs.iter().zip(rws.iter()) {
                let rho = 0.5 * r * (rr + 1.0);
                let mut ang = 0.0;
                for (tt, tw) in ts.iter().zip(tws.iter()) {
                    let theta = 0.5 * std::f64::consts::PI * (tt + 1.0);
                    let pt = [y[0] + rho * theta.cos(), rho * theta.sin()];
                    ang += tw * 0.5 * std::f64::consts::PI * lapf(&pt) * theta.sin();
                }
                interior += rw * 0.5 * r * rho * rho * ang;
            }
            let mut disk = 0.0;
            let (ss, sws) = gauss_legendre(2 * cfg.nodes);
            for (s, sw) in ss.iter().zip(sws.iter()) {
                let pt = [y[0] + r * s, 0.0];
                disk += sw * r * w.eval(&pt);
            }
            (interior, disk)
        }
        _ => {
            let (rs, rws) = gauss_legendre(cfg.nodes);
            let (mus, mws) = gauss_legendre(cfg.nodes);
            let m_az = 2 * cfg.nodes;
            let dpsi = 2.0 * std::f64::consts::PI / m_az as f64;
            let mut interior = 0.0;
            for (rr, rw) in rs.iter().zip(rws.iter()) {
                let rho = 0.5 * r * (rr + 1.0);
                let mut shell = 0.0;
                for (mu_ref, mw) in mus.iter().zip(mws.iter()) {
                    let mu = 0.5 * (mu_ref + 1.0);
                    let s = (1.0 - mu * mu).max(0.0).sqrt();
                    let mut az = 0.0;
                    for k in 0..m_az {
                        let psi = dpsi * k as f64;
                        let pt =
                            [y[0] + rho * s * psi.cos(), y[1] + rho * s * psi.sin(), rho * mu];
                        az += lapf(&pt);
                    }
                    shell += mw * 0.5 * mu * az * dpsi;
                }
                interior += rw * 0.5 * r * rho.powi(3) * shell;
            }
            let mut disk = 0.0;
            let (ts, tws) = gauss_legendre(cfg.nodes);
            for (t, tw) in ts.iter().zip(tws.iter()) {
                let rho = 0.5 * r * (t + 1.0);
                let mut az = 0.0;
                for k in 0..m_az {
                    let psi = dpsi * k as f64;
                    let pt = [y[0] + rho * psi.cos(), y[1] + rho * psi.sin(), 0.0];
                    az += w.eval(&pt);
                }
                disk += tw * 0.5 * r * rho * az * dpsi;
            }
            (interior, disk)
        }
    };
    let prefactor = 1.0 / (r * r * half_sphere_area(n) * r.powf(n as f64 - 1.0));
    let rhs = prefactor * (interior - disk);
    let abs_gap = (lhs - rhs).abs();
    let rel_gap = abs_gap / lhs.abs().max(rhs.abs()).max(1e-12);
    Ok(DerivativeIdentityReport { lhs, rhs, abs_gap, rel_gap })
}

/// Verdict of a monotonicity scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanVerdict {
    NonincreasingConsistent,
    NotSuperharmonicConsistent,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityScan {
    pub samples: Vec<HalfMeanSample>,
    pub verdict: ScanVerdict,
    /// Radii indices where the nonincreasing check failed beyond slack.
    pub violations: Vec<usize>,
    /// Last mean minus its last decrement, clamped at zero: a conservative
    /// bracket for the limit `L(w)` (the exact limit is out of reach; the
    /// scan only brackets it).
    pub limit_estimate: f64,
    /// Means of all centers at the largest radius, and whether they agree
    /// within combined slack.
    pub cross_center_values: Vec<f64>,
    pub cross_center_consistent: bool,
}

/// Scan `[w]_y(R)` over strictly increasing radii. The first center is the
/// primary; the limit agreement across the remaining centers is tested at
/// the largest radius.
pub fn monotonicity_scan(
    w: &FieldWithLaplacian,
    centers: &[Vec<f64>],
    radii: &[f64],
    n: usize,
    cfg: &QuadConfig,
) -> Result<MonotonicityScan, MeansError> {
    if radii.windows(2).any(|p| p[0] >= p[1]) || radii.is_empty() {
        return Err(MeansError::RadiiNotIncreasing);
    }
    assert!(!centers.is_empty());
    let mut samples = Vec::with_capacity(radii.len());
    for &r in radii {
        samples.push(half_sphere_mean(w, &centers[0], r, n, cfg)?);
    }
    let mut violations = Vec::new();
    for k in 0..samples.len() - 1 {
        let slack = samples[k].error_estimate + samples[k + 1].error_estimate;
        if samples[k + 1].value > samples[k].value + slack {
            violations.push(k + 1);
        }
    }
    let last = samples.last().unwrap();
    let limit_estimate = if samples.len() >= 2 {
        let prev = &samples[samples.len() - 2];
        (last.value - (prev.value - last.value)).max(0.0)
    } else {
        last.value.max(0.0)
    };

    let r_big = *radii.last().unwrap();
    let mut cross = vec![last.value];
    let mut consistent = true;
    for y in &centers[1..] {
        let s = half_sphere_mean(w, y, r_big, n, cfg)?;
        // Finite-radius centers differ by O(|y1-y2|/R); fold that into the
        // slack so the test measures limit agreement, not finite-R offsets.
        let dy: f64 = y
            .iter()
            .zip(centers[0].iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let slack = s.error_estimate
            + last.error_estimate
            + dy / r_big * last.value.abs().max(s.value.abs()).max(1e-12);
        if (s.value - last.value).abs() > slack {
            consistent = false;
        }
        cross.push(s.value);
    }

    Ok(MonotonicityScan {
        verdict: if violations.is_empty() {
            ScanVerdict::NonincreasingConsistent
        } else {
            ScanVerdict::NotSuperharmonicConsistent
        },
        samples,
        violations,
        limit_estimate,
        cross_center_values: cross,
        cross_center_consistent: consistent,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub l_over_xn_mean: f64,
    /// min over samples of `w(x) - (L/[x_n]) x_n`.
    pub min_slack: f64,
    pub passes: bool,
    pub samples: usize,
}

/// Check the linear lower bound `w(x) >= (L/[x_n]) x_n - tol` pointwise.
pub fn linear_lower_bound_check(
    w: &FieldWithLaplacian,
    l_value: f64,
    sample_points: &[Vec<f64>],
    tol: f64,
) -> LowerBoundReport {
    let n = sample_points.first().map(|p| p.len()).unwrap_or(2);
    let c = l_value / xn_mean_constant(n);
    let mut min_slack = f64::INFINITY;
    for x in sample_points {
        let slack = w.eval(x) - c * x[x.len() - 1];
        min_slack = min_slack.min(slack);
    }
    LowerBoundReport {
        l_over_xn_mean: c,
        min_slack,
        passes: min_slack >= -tol,
        samples: sample_points.len(),
    }
}
