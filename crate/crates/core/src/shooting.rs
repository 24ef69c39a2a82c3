//! Radial shooting for the singular IVP
//!
//! ```text
//!   -(t^{n-1} u')' = t^{n-1} f(u),   u(0) = eps,  u'(0) = 0,
//! ```
//!
//! i.e. `u'' + (n-1)/t u' = -f(u)`. The `(n-1)/t` term is singular at the
//! origin, so integration starts at `t0 = 1e-4` from the second-order Taylor
//! expansion `u(t0) = eps - f(eps) t0^2 / (2n)`, `u'(t0) = -f(eps) t0 / n`.
//!
//! Every completed integration is classified into exactly one of the two
//! dichotomy outcomes (first zero, or positive and nonincreasing up to
//! `t_max`) or an explicit `Inconclusive`.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShootError {
    #[error("counterexample requires p = r > (n+2)/(n-2), got p = {p} with n = {n}")]
    SupercriticalityRequired { p: f64, n: usize },
    #[error("counterexample requires 0 < eps < 1/2, got {0}")]
    EpsilonOutOfRange(f64),
    #[error("epsilon too large for counterexample: first zero at t = {radius:.6}; shrink eps until the Pohozaev obstruction applies")]
    EpsilonTooLarge { radius: f64 },
    #[error("shoot inconclusive: {0}")]
    Inconclusive(String),
    #[error("sigma = {sigma} outside the superlinear subcritical window 1 < sigma < (n+2)/(n-2)+ required by the existence gates")]
    SigmaOutsideWindow { sigma: f64 },
    #[error("c1 must be positive, got {0}")]
    NonpositiveC1(f64),
    #[error("no first zero found up to t = {0}; cannot build a ground state")]
    NoFirstZero(f64),
}

/// Terminal event of a radial shot.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShotEvent {
    /// `u > 0` on `(0, radius)` and `u` changes sign across `radius`.
    FirstZero { radius: f64 },
    /// `u > 0` and `u' <= tol` on the whole grid up to `t_max`.
    PositiveDecreasing { t_max: f64 },
    Inconclusive { reason: String },
}

/// Trace of one radial shot.
#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub n: usize,
    pub t_grid: Vec<f64>,
    pub u_values: Vec<f64>,
    pub du_values: Vec<f64>,
    pub event: ShotEvent,
}

/// Dense-output segment of one accepted Dormand–Prince step.
#[derive(Debug, Clone)]
struct DenseSeg {
    t0: f64,
    h: f64,
    rcont: [[f64; 5]; 2],
}

impl DenseSeg {
    fn eval(&self, t: f64) -> [f64; 2] {
        let theta = (t - self.t0) / self.h;
        let mut out = [0.0; 2];
        for (i, rc) in self.rcont.iter().enumerate() {
            out[i] = rc[0]
                + theta * (rc[1] + (1.0 - theta) * (rc[2] + theta * (rc[3] + (1.0 - theta) * rc[4])));
        }
        out
    }
}

/// A completed shot: the recorded profile plus the dense interpolant, so the
/// trajectory can be evaluated or resampled anywhere in `[0, t_end]`.
#[derive(Debug, Clone)]
pub struct RadialShot {
    pub profile: RadialProfile,
    segs: Vec<DenseSeg>,
    eps: f64,
    f_eps: f64,
    t_start: f64,
}

impl RadialShot {
    /// `(u, u')` at any `t` in the integrated range; below the Taylor offset
    /// the series start is used.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        if t <= self.t_start {
            let n = self.profile.n as f64;
            return (
                self.eps - self.f_eps * t * t / (2.0 * n),
                -self.f_eps * t / n,
            );
        }
        let idx = match self
            .segs
            .binary_search_by(|s| s.t0.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let seg = &self.segs[idx.min(self.segs.len() - 1)];
        let y = seg.eval(t);
        (y[0], y[1])
    }

    pub fn t_end(&self) -> f64 {
        *self.profile.t_grid.last().unwrap()
    }

    /// Resample onto `nodes` uniform abscissae over `[0, t_hi]`.
    pub fn resample_uniform(&self, t_hi: f64, nodes: usize) -> RadialProfile {
        assert!(nodes >= 2);
        let mut t_grid = Vec::with_capacity(nodes);
        let mut u_values = Vec::with_capacity(nodes);
        let mut du_values = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let t = t_hi * i as f64 / (nodes - 1) as f64;
            let (u, du) = self.eval(t);
            t_grid.push(t);
            u_values.push(u);
            du_values.push(du);
        }
        RadialProfile {
            n: self.profile.n,
            t_grid,
            u_values,
            du_values,
            event: self.profile.event.clone(),
        }
    }
}

// Dormand--Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    // b5 - b4: error estimator weights
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const BLOWUP_GUARD: f64 = 1e8;

/// Integrate the radial IVP with an adaptive embedded 5(4) pair and dense
/// output; classify the terminal event.
pub fn integrate_ivp<F: Fn(f64) -> f64>(
    n: usize,
    f_scalar: F,
    eps: f64,
    t_max: f64,
    tol: f64,
) -> RadialShot {
    assert!(n >= 1, "dimension must be at least 1");
    assert!(eps > 0.0, "eps must be positive");
    assert!(t_max > 0.0 && tol > 0.0);

    let nf = n as f64;
    let f_eps = f_scalar(eps);
    let t0 = 1e-4_f64.min(t_max / 2.0);
    let mut t = t0;
    let mut y = [
        eps - f_eps * t0 * t0 / (2.0 * nf),
        -f_eps * t0 / nf,
    ];
    let rhs = |t: f64, y: &[f64; 2]| -> [f64; 2] {
        [y[1], -f_scalar(y[0]) - (nf - 1.0) / t * y[1]]
    };

    let mut t_grid = vec![t];
    let mut u_values = vec![y[0]];
    let mut du_values = vec![y[1]];
    let mut segs: Vec<DenseSeg> = Vec::new();

    let h_max = (t_max - t0) / 16.0;
    let mut h = (1e-3 * (1.0 + t_max)).min(h_max);
    let mut k1 = rhs(t, &y);
    let mut event: Option<ShotEvent> = None;
    let tol_mono = 1e-10 * eps;
    let mut monotone = y[1] <= tol_mono;
    let max_steps = 2_000_000;

    'outer: for _ in 0..max_steps {
        if t >= t_max {
            break;
        }
        h = h.min(t_max - t);
        if h < 1e-14 * t.max(1.0) {
            event = Some(ShotEvent::Inconclusive { reason: "stiffness: step underflow".into() });
            break;
        }

        // Stage evaluations.
        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        for s in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                ys[0] += h * A[s][j] * kj[0];
                ys[1] += h * A[s][j] * kj[1];
            }
            k[s + 1] = rhs(t + C[s] * h, &ys);
        }
        let y_new = [
            y[0] + h * (A[5][0] * k[0][0] + A[5][2] * k[2][0] + A[5][3] * k[3][0]
                + A[5][4] * k[4][0]
                + A[5][5] * k[5][0]),
            y[1] + h * (A[5][0] * k[0][1] + A[5][2] * k[2][1] + A[5][3] * k[3][1]
                + A[5][4] * k[4][1]
                + A[5][5] * k[5][1]),
        ];
        // k7 is the derivative at the new point (FSAL).
        let k7 = rhs(t + h, &y_new);

        let mut err = 0.0f64;
        for i in 0..2 {
            let e_i = h
                * (E[0] * k[0][i]
                    + E[2] * k[2][i]
                    + E[3] * k[3][i]
                    + E[4] * k[4][i]
                    + E[5] * k[5][i]
                    + E[6] * k7[i]);
            let sc = tol + tol * y[i].abs().max(y_new[i].abs());
            err += (e_i / sc) * (e_i / sc);
        }
        err = (err / 2.0).sqrt();

        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            continue;
        }

        // Accepted: build the dense segment.
        let mut rcont = [[0.0; 5]; 2];
        for i in 0..2 {
            let dy = y_new[i] - y[i];
            let bspl = h * k[0][i] - dy;
            rcont[i][0] = y[i];
            rcont[i][1] = dy;
            rcont[i][2] = bspl;
            rcont[i][3] = dy - h * k7[i] - bspl;
            rcont[i][4] = h
                * (D[0] * k[0][i]
                    + D[2] * k[2][i]
                    + D[3] * k[3][i]
                    + D[4] * k[4][i]
                    + D[5] * k[5][i]
                    + D[6] * k7[i]);
        }
        let seg = DenseSeg { t0: t, h, rcont };

        if y_new[0].abs() >= BLOWUP_GUARD || y_new[1].abs() >= BLOWUP_GUARD {
            segs.push(seg);
            t += h;
            t_grid.push(t);
            u_values.push(y_new[0]);
            du_values.push(y_new[1]);
            event = Some(ShotEvent::Inconclusive { reason: "blow-up guard at 1e8".into() });
            break 'outer;
        }

        if y[0] > 0.0 && y_new[0] <= 0.0 {
            // First zero inside this step: bisect the dense output.
            let mut lo = t;
            let mut hi = t + h;
            while hi - lo > 1e-12 * hi {
                let mid = 0.5 * (lo + hi);
                if seg.eval(mid)[0] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let radius = 0.5 * (lo + hi);
            segs.push(seg);
            t += h;
            t_grid.push(t);
            u_values.push(y_new[0]);
            du_values.push(y_new[1]);
            event = Some(ShotEvent::FirstZero { radius });
            break 'outer;
        }

        segs.push(seg);
        t += h;
        y = y_new;
        k1 = k7;
        t_grid.push(t);
        u_values.push(y[0]);
        du_values.push(y[1]);
        if y[1] > tol_mono {
            monotone = false;
        }

        h = (h * (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0)).min(h_max);
    }

    let event = event.unwrap_or_else(|| {
        if t < t_max {
            ShotEvent::Inconclusive { reason: "step limit reached".into() }
        } else if u_values.iter().all(|&u| u > 0.0) && monotone {
            ShotEvent::PositiveDecreasing { t_max }
        } else if u_values.iter().all(|&u| u > 0.0) {
            ShotEvent::Inconclusive { reason: "positive but not monotone decreasing".into() }
        } else {
            ShotEvent::Inconclusive { reason: "sign change without detected zero".into() }
        }
    });

    RadialShot {
        profile: RadialProfile { n, t_grid, u_values, du_values, event },
        segs,
        eps,
        f_eps,
        t_start: t0,
    }
}

/// Counterexample pair `(u, v) = (u, 1 - u)` with non-constant ratio.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexamplePair {
    pub n: usize,
    pub t_grid: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub du: Vec<f64>,
    /// Relative spread `(max(u/v) - min(u/v)) / min(u/v)` across the grid;
    /// zero would mean a constant ratio.
    pub ratio_spread: f64,
    pub event: ShotEvent,
}

/// Scalar nonlinearity `f(u) = u^p (1-u)^p [(1-u)^q - u^q]` of the
/// counterexample construction, clamped so integrator stages stay finite.
pub fn counterexample_f(p: f64, q: f64) -> impl Fn(f64) -> f64 {
    move |u: f64| {
        let u = u.clamp(0.0, 1.0);
        let w = 1.0 - u;
        u.powf(p) * w.powf(p) * (w.powf(q) - u.powf(q))
    }
}

/// Shoot the counterexample profile: `p = r > (n+2)/(n-2)`, `a=b=c=d=1`, so
/// `u + v` is harmonic and `v = 1 - u` exactly; `K = 1` for these
/// coefficients. The ratio `u/v` across the grid is non-constant.
pub fn counterexample_profile(
    n: usize,
    p: f64,
    q: f64,
    eps: f64,
    t_max: f64,
    tol: f64,
    nodes: usize,
) -> Result<CounterexamplePair, ShootError> {
    if n < 3 || p <= (n as f64 + 2.0) / (n as f64 - 2.0) {
        return Err(ShootError::SupercriticalityRequired { p, n });
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(ShootError::EpsilonOutOfRange(eps));
    }
    assert!(q > 0.0, "q must be positive");

    let shot = integrate_ivp(n, counterexample_f(p, q), eps, t_max, tol);
    match &shot.profile.event {
        ShotEvent::FirstZero { radius } => Err(ShootError::EpsilonTooLarge { radius: *radius }),
        ShotEvent::Inconclusive { reason } => Err(ShootError::Inconclusive(reason.clone())),
        ShotEvent::PositiveDecreasing { .. } => {
            let prof = shot.resample_uniform(t_max, nodes);
            let mut ratio_min = f64::INFINITY;
            let mut ratio_max = f64::NEG_INFINITY;
            let mut v = Vec::with_capacity(nodes);
            for &ui in &prof.u_values {
                assert!(ui > 0.0 && ui < 1.0, "counterexample profile must stay in (0, 1)");
                let vi = 1.0 - ui;
                let ratio = ui / vi;
                ratio_min = ratio_min.min(ratio);
                ratio_max = ratio_max.max(ratio);
                v.push(vi);
            }
            Ok(CounterexamplePair {
                n,
                t_grid: prof.t_grid,
                u: prof.u_values,
                v,
                du: prof.du_values,
                ratio_spread: (ratio_max - ratio_min) / ratio_min,
                event: prof.event,
            })
        }
    }
}

/// Positive radial solution of `-Δ V = c1 V^sigma` on the ball of radius
/// `r_dom` with `V = 0` on the boundary, built by shooting from `V(0) = 1`
/// and applying the exact scaling symmetry.
#[derive(Debug, Clone, Serialize)]
pub struct ScalarBVPSolution {
    pub n: usize,
    pub r_dom: f64,
    pub sigma: f64,
    pub c1: f64,
    pub r_grid: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
}

impl ScalarBVPSolution {
    pub fn center_value(&self) -> f64 {
        self.v[0]
    }

    /// Max discrete residual `|Δ_h V + c1 V^sigma|` over interior nodes and
    /// the matching truncation bound `10 h^2 · max|V''''|/12`, with the
    /// fourth derivative measured by fourth differences.
    pub fn discrete_residual_report(&self) -> (f64, f64) {
        let m = self.v.len();
        let h = self.r_dom / (m - 1) as f64;
        let nf = self.n as f64;
        let mut max_res = 0.0f64;
        for i in 1..m - 1 {
            let lap = (self.v[i + 1] - 2.0 * self.v[i] + self.v[i - 1]) / (h * h)
                + (nf - 1.0) / self.r_grid[i] * (self.v[i + 1] - self.v[i - 1]) / (2.0 * h);
            let rhs = self.c1 * self.v[i].max(0.0).powf(self.sigma);
            max_res = max_res.max((lap + rhs).abs());
        }
        let mut d4 = 0.0f64;
        for i in 2..m - 2 {
            let fourth = self.v[i - 2] - 4.0 * self.v[i - 1] + 6.0 * self.v[i]
                - 4.0 * self.v[i + 1]
                + self.v[i + 2];
            d4 = d4.max(fourth.abs() / h.powi(4));
        }
        (max_res, 10.0 * h * h * d4 / 12.0)
    }
}

pub fn scalar_ground_state_on_ball(
    n: usize,
    sigma: f64,
    c1: f64,
    r_dom: f64,
    tol: f64,
    nodes: usize,
) -> Result<ScalarBVPSolution, ShootError> {
    let supercritical = n >= 3 && sigma >= (n as f64 + 2.0) / (n as f64 - 2.0);
    if sigma <= 1.0 || supercritical {
        return Err(ShootError::SigmaOutsideWindow { sigma });
    }
    if c1 <= 0.0 {
        return Err(ShootError::NonpositiveC1(c1));
    }
    assert!(r_dom > 0.0 && nodes >= 3);

    // Unit shoot with c1 = 1; odd extension keeps stages finite past the zero.
    let f = move |u: f64| u.signum() * u.abs().powf(sigma);
    let t_max = 1000.0;
    let shot = integrate_ivp(n, f, 1.0, t_max, tol);
    let r0 = match shot.profile.event {
        ShotEvent::FirstZero { radius } => radius,
        _ => return Err(ShootError::NoFirstZero(t_max)),
    };

    // V(x) = c1^{-1/(sigma-1)} lambda^alpha u(lambda |x|), lambda = R0/R_dom.
    let alpha = 2.0 / (sigma - 1.0);
    let lambda = r0 / r_dom;
    let amp = c1.powf(-1.0 / (sigma - 1.0)) * lambda.powf(alpha);
    let mut r_grid = Vec::with_capacity(nodes);
    let mut v = Vec::with_capacity(nodes);
    let mut dv = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let r = r_dom * i as f64 / (nodes - 1) as f64;
        let (u, du) = shot.eval(lambda * r);
        r_grid.push(r);
        v.push(amp * u);
        dv.push(amp * lambda * du);
    }
    let boundary = v[nodes - 1].abs();
    if boundary > tol.max(1e-9) {
        return Err(ShootError::Inconclusive(format!(
            "boundary value {boundary:e} above tolerance after rescaling"
        )));
    }
    v[nodes - 1] = 0.0;
    Ok(ScalarBVPSolution { n, r_dom, sigma, c1, r_grid, v, dv })
}
