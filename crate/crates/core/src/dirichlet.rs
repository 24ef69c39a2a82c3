//! Finite-difference Newton/continuation solver for the Dirichlet system on
//! balls (radial reduction, any dimension) and 2-D boxes, plus the first
//! Dirichlet eigenvalue, the homotopy residual family and the blow-up
//! rescaling diagnostic.
//!
//! Discretization: 3-point radial stencil with a `u'(0) = 0` ghost node at
//! the origin (`Δ_h u(0) = 2n (u_1 - u_0)/h^2`), 5-point stencil on boxes.
//! Boundary nodes carry exact zeros and are never unknowns.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::BandedMatrix;
use crate::proportionality::compute_k;
use crate::shooting::ScalarBVPSolution;
use crate::system::{
    eval_f_at, eval_g_at, eval_jacobian_at, Coefficients, Domain, Exponents, LowerOrderTerms,
    ProblemInstance, SystemError,
};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("field shape does not match the instance grid: {0}")]
    ShapeMismatch(String),
    #[error("domain not supported by the grid solver: {0}")]
    UnsupportedDomain(String),
    #[error("linear solve failed (singular Jacobian)")]
    SingularJacobian,
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("rescaling requires sigma > 1, got {0}")]
    SigmaNotSuperlinear(f64),
    #[error("center node is not the argmax of the dominating component")]
    CenterNotArgmax,
    #[error("grid spacing {h} does not fit domain {domain}")]
    BadSpacing { h: f64, domain: String },
}

/// Discretized domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Grid {
    /// Radial mesh on `[0, radius]` with `nodes` equally spaced points
    /// (boundary included) in ambient dimension `dim`.
    Radial { dim: usize, radius: f64, nodes: usize },
    /// Tensor mesh on `(0, sides[0]) x (0, sides[1])` with `nx`/`ny` cells.
    Box2 { sides: [f64; 2], nx: usize, ny: usize },
}

impl Grid {
    pub fn from_domain(domain: &Domain, n: usize, h: f64) -> Result<Self, SolveError> {
        match domain {
            Domain::Ball { radius } => {
                let cells = (radius / h).round() as usize;
                if cells < 2 {
                    return Err(SolveError::BadSpacing { h, domain: domain.to_string() });
                }
                Ok(Grid::Radial { dim: n, radius: *radius, nodes: cells + 1 })
            }
            Domain::Box { sides } if sides.len() == 2 => {
                let nx = (sides[0] / h).round() as usize;
                let ny = (sides[1] / h).round() as usize;
                if nx < 2 || ny < 2 {
                    return Err(SolveError::BadSpacing { h, domain: domain.to_string() });
                }
                Ok(Grid::Box2 { sides: [sides[0], sides[1]], nx, ny })
            }
            other => Err(SolveError::UnsupportedDomain(other.to_string())),
        }
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            Grid::Radial { nodes, .. } => *nodes,
            Grid::Box2 { nx, ny, .. } => (nx + 1) * (ny + 1),
        }
    }

    /// Mesh spacing (min over axes for boxes).
    pub fn h(&self) -> f64 {
        match self {
            Grid::Radial { radius, nodes, .. } => radius / (*nodes as f64 - 1.0),
            Grid::Box2 { sides, nx, ny } => (sides[0] / *nx as f64).min(sides[1] / *ny as f64),
        }
    }

    /// Ambient coordinates of node `idx` (radial nodes sit on the first axis).
    pub fn point(&self, idx: usize) -> Vec<f64> {
        match self {
            Grid::Radial { dim, radius, nodes } => {
                let mut x = vec![0.0; *dim];
                x[0] = radius * idx as f64 / (*nodes as f64 - 1.0);
                x
            }
            Grid::Box2 { sides, nx, ny } => {
                let i = idx / (ny + 1);
                let j = idx % (ny + 1);
                vec![sides[0] * i as f64 / *nx as f64, sides[1] * j as f64 / *ny as f64]
            }
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        match self {
            Grid::Radial { nodes, .. } => idx == nodes - 1,
            Grid::Box2 { nx, ny, .. } => {
                let i = idx / (ny + 1);
                let j = idx % (ny + 1);
                i == 0 || j == 0 || i == *nx || j == *ny
            }
        }
    }
}

/// Discretized nonnegative pair on a grid; boundary nodes are exact zeros.
#[derive(Debug, Clone, Serialize)]
pub struct GridField {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.num_nodes();
        Self { grid, u: vec![0.0; n], v: vec![0.0; n] }
    }

    /// Proportional pair `(K V, V)` from a scalar ball ground state.
    pub fn from_scalar_reduction(sol: &ScalarBVPSolution, k: f64) -> Self {
        let grid = Grid::Radial { dim: sol.n, radius: sol.r_dom, nodes: sol.v.len() };
        let u = sol.v.iter().map(|&w| k * w).collect();
        Self { grid, u, v: sol.v.clone() }
    }

    pub fn sup_u(&self) -> f64 {
        self.u.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn sup_v(&self) -> f64 {
        self.v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    fn min_interior(&self) -> (f64, f64) {
        let mut mu = f64::INFINITY;
        let mut mv = f64::INFINITY;
        for idx in 0..self.grid.num_nodes() {
            if !self.grid.is_boundary(idx) {
                mu = mu.min(self.u[idx]);
                mv = mv.min(self.v[idx]);
            }
        }
        (mu, mv)
    }

    /// `max_i |u_i - K v_i|`.
    pub fn proportionality_defect(&self, k: f64) -> f64 {
        self.u
            .iter()
            .zip(self.v.iter())
            .fold(0.0f64, |m, (&u, &v)| m.max((u - k * v).abs()))
    }
}

/// Homotopy parameters of the deformed system: the nonlinearity coefficients
/// gain `+ t A` and the lower-order terms gain `+ A t (1 + u)` (resp. `v`).
#[derive(Debug, Clone, Serialize)]
pub struct HomotopyConfig {
    pub t: f64,
    /// Deformation constant `A`.
    pub a_const: f64,
    /// Lower bound constant for the lower-order terms.
    pub c1_bound: f64,
    /// Strict subdomain used for the eigenvalue in the choice of `A`.
    pub omega: Domain,
}

impl HomotopyConfig {
    /// Choose `A = max{C1 + lambda1(-Δ, omega), sup c, sup d}` with `omega`
    /// the concentric half-size subdomain.
    pub fn for_instance(
        inst: &ProblemInstance,
        t: f64,
        c1_bound: f64,
        h: f64,
    ) -> Result<Self, SolveError> {
        let omega = match &inst.domain {
            Domain::Ball { radius } => Domain::Ball { radius: radius / 2.0 },
            Domain::Box { sides } => {
                Domain::Box { sides: sides.iter().map(|s| s / 2.0).collect() }
            }
            other => return Err(SolveError::UnsupportedDomain(other.to_string())),
        };
        let lambda1 = compute_lambda1(&omega, inst.n, h)?.lambda_h;
        let grid = Grid::from_domain(&inst.domain, inst.n, h)?;
        let mut sup_c = 0.0f64;
        let mut sup_d = 0.0f64;
        for idx in 0..grid.num_nodes() {
            let cf = inst.coeffs.at(&grid.point(idx));
            sup_c = sup_c.max(cf.c);
            sup_d = sup_d.max(cf.d);
        }
        let a_const = (c1_bound + lambda1).max(sup_c).max(sup_d);
        Ok(Self { t, a_const, c1_bound, omega })
    }
}

/// Solver-facing right-hand sides `F`, `G` of the (possibly homotopy-deformed)
/// system at one node. Iterates may dip to `-1e-12`, so states are clamped at
/// zero for the power evaluations; converged solutions are sign-checked.
fn rhs_fg(
    u: f64,
    v: f64,
    cf: &Coefficients,
    exps: &Exponents,
    lot: &LowerOrderTerms,
    x: &[f64],
    hcfg: Option<&HomotopyConfig>,
) -> (f64, f64) {
    let ue = u.max(0.0);
    let ve = v.max(0.0);
    let (cf_eff, ta) = match hcfg {
        Some(h) => {
            let shift = h.t * h.a_const;
            (Coefficients::new(cf.a + shift, cf.b + shift, cf.c, cf.d), shift)
        }
        None => (*cf, 0.0),
    };
    let mut fval = eval_f_at(ue, ve, &cf_eff, exps) + lot.h1(x, ue, ve);
    let mut gval = eval_g_at(ue, ve, &cf_eff, exps) + lot.h2(x, ue, ve);
    if ta != 0.0 {
        fval += ta * (1.0 + ue);
        gval += ta * (1.0 + ve);
    }
    (fval, gval)
}

fn rhs_jacobian(
    u: f64,
    v: f64,
    cf: &Coefficients,
    exps: &Exponents,
    lot: &LowerOrderTerms,
    x: &[f64],
    hcfg: Option<&HomotopyConfig>,
) -> Result<[[f64; 2]; 2], SystemError> {
    let ue = u.max(0.0);
    let ve = v.max(0.0);
    let (cf_eff, ta) = match hcfg {
        Some(h) => {
            let shift = h.t * h.a_const;
            (Coefficients::new(cf.a + shift, cf.b + shift, cf.c, cf.d), shift)
        }
        None => (*cf, 0.0),
    };
    let mut jac = eval_jacobian_at(ue, ve, &cf_eff, exps)?;
    match lot {
        LowerOrderTerms::Linear { mu, nu } => {
            jac[0][0] += mu;
            jac[1][1] += nu;
        }
        LowerOrderTerms::General { h1, h2, .. } => {
            let du = 1e-6 * (1.0 + ue);
            let dv = 1e-6 * (1.0 + ve);
            jac[0][0] += (h1(x, ue + du, ve) - h1(x, (ue - du).max(0.0), ve))
                / (ue + du - (ue - du).max(0.0));
            jac[0][1] += (h1(x, ue, ve + dv) - h1(x, ue, (ve - dv).max(0.0)))
                / (ve + dv - (ve - dv).max(0.0));
            jac[1][0] += (h2(x, ue + du, ve) - h2(x, (ue - du).max(0.0), ve))
                / (ue + du - (ue - du).max(0.0));
            jac[1][1] += (h2(x, ue, ve + dv) - h2(x, ue, (ve - dv).max(0.0)))
                / (ve + dv - (ve - dv).max(0.0));
        }
    }
    if ta != 0.0 {
        jac[0][0] += ta;
        jac[1][1] += ta;
    }
    Ok(jac)
}

/// Residual arrays `Δ_h u + F`, `Δ_h v + G` per node; boundary entries are 0.
pub fn assemble_residual(
    field: &GridField,
    inst: &ProblemInstance,
    hcfg: Option<&HomotopyConfig>,
) -> Result<(Vec<f64>, Vec<f64>), SolveError> {
    let (res_u, res_v, _) = assemble_residual_scaled(field, inst, hcfg)?;
    Ok((res_u, res_v))
}

/// Residuals plus the max magnitude of the terms being cancelled,
/// `max_i (|Δ_h w_i| + |rhs_i|)`; the convergence tolerance is relative to
/// this scale since the stencil's rounding floor grows like `sup/h^2`.
fn assemble_residual_scaled(
    field: &GridField,
    inst: &ProblemInstance,
    hcfg: Option<&HomotopyConfig>,
) -> Result<(Vec<f64>, Vec<f64>, f64), SolveError> {
    let total = field.grid.num_nodes();
    if field.u.len() != total || field.v.len() != total {
        return Err(SolveError::ShapeMismatch(format!(
            "{} nodes expected, got u: {}, v: {}",
            total,
            field.u.len(),
            field.v.len()
        )));
    }
    let mut res_u = vec![0.0; total];
    let mut res_v = vec![0.0; total];
    let mut scale = 0.0f64;
    match &field.grid {
        Grid::Radial { dim, radius, nodes } => {
            let m = *nodes;
            let h = radius / (m as f64 - 1.0);
            let nf = *dim as f64;
            for i in 0..m - 1 {
                let x = field.grid.point(i);
                let cf = inst.coeffs.at(&x);
                let (fv, gv) = rhs_fg(field.u[i], field.v[i], &cf, &inst.exps, &inst.lot, &x, hcfg);
                let (lap_u, lap_v) = if i == 0 {
                    (
                        2.0 * nf * (field.u[1] - field.u[0]) / (h * h),
                        2.0 * nf * (field.v[1] - field.v[0]) / (h * h),
                    )
                } else {
                    let r = h * i as f64;
                    (
                        (field.u[i + 1] - 2.0 * field.u[i] + field.u[i - 1]) / (h * h)
                            + (nf - 1.0) / r * (field.u[i + 1] - field.u[i - 1]) / (2.0 * h),
                        (field.v[i + 1] - 2.0 * field.v[i] + field.v[i - 1]) / (h * h)
                            + (nf - 1.0) / r * (field.v[i + 1] - field.v[i - 1]) / (2.0 * h),
                    )
                };
                res_u[i] = lap_u + fv;
                res_v[i] = lap_v + gv;
                scale = scale.max(lap_u.abs() + fv.abs()).max(lap_v.abs() + gv.abs());
            }
        }
        Grid::Box2 { sides, nx, ny } => {
            let hx = sides[0] / *nx as f64;
            let hy = sides[1] / *ny as f64;
            let stride = ny + 1;
            for i in 1..*nx {
                for j in 1..*ny {
                    let idx = i * stride + j;
                    let x = field.grid.point(idx);
                    let cf = inst.coeffs.at(&x);
                    let (fv, gv) =
                        rhs_fg(field.u[idx], field.v[idx], &cf, &inst.exps, &inst.lot, &x, hcfg);
                    let lap = |w: &[f64]| {
                        (w[idx + stride] - 2.0 * w[idx] + w[idx - stride]) / (hx * hx)
                            + (w[idx + 1] - 2.0 * w[idx] + w[idx - 1]) / (hy * hy)
                    };
                    let (lap_u, lap_v) = (lap(&field.u), lap(&field.v));
                    res_u[idx] = lap_u + fv;
                    res_v[idx] = lap_v + gv;
                    scale = scale.max(lap_u.abs() + fv.abs()).max(lap_v.abs() + gv.abs());
                }
            }
        }
    }
    Ok((res_u, res_v, scale))
}

fn residual_inf(res_u: &[f64], res_v: &[f64]) -> f64 {
    res_u
        .iter()
        .chain(res_v.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Interior (unknown) node indices of a grid.
fn interior_nodes(grid: &Grid) -> Vec<usize> {
    (0..grid.num_nodes()).filter(|&i| !grid.is_boundary(i)).collect()
}

/// Solver outcome summary.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_inf: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub min_interior_u: f64,
    pub min_interior_v: f64,
    /// `||u - K v||_inf` when a certified constant-coefficient `K` exists.
    pub proportionality_defect: Option<f64>,
    /// Post-hoc sign check of the converged iterate (slack `1e-12 * sup`).
    pub nonnegative: bool,
    pub h: f64,
    /// `1e-10 * max(1, residual scale)`: the convergence threshold used.
    pub tol_effective: f64,
}

const NEWTON_TOL: f64 = 1e-10;
const MAX_NEWTON_ITERS: usize = 100;
const MAX_BACKTRACKS: usize = 30;
const NEG_SLACK: f64 = 1e-12;

/// Damped Newton iteration with backtracking line search on the max-norm
/// residual. Divergence and line-search stalls yield a non-converged report,
/// never a fabricated solution.
pub fn newton_solve(
    init: &GridField,
    inst: &ProblemInstance,
    hcfg: Option<&HomotopyConfig>,
) -> Result<(GridField, SolveReport), SolveError> {
    let mut field = init.clone();
    let interior = interior_nodes(&field.grid);
    let m = interior.len();
    let (mut res_u, mut res_v, scale0) = assemble_residual_scaled(&field, inst, hcfg)?;
    let mut res_norm = residual_inf(&res_u, &res_v);
    let mut tol = NEWTON_TOL * scale0.max(1.0);
    let mut iterations = 0;
    let mut converged = res_norm <= tol;

    while !converged && iterations < MAX_NEWTON_ITERS {
        let jac = assemble_jacobian(&field, inst, hcfg, &interior)?;
        let mut rhs = vec![0.0; 2 * m];
        for (k, &idx) in interior.iter().enumerate() {
            rhs[2 * k] = -res_u[idx];
            rhs[2 * k + 1] = -res_v[idx];
        }
        let delta = jac.solve(&rhs).ok_or(SolveError::SingularJacobian)?;

        // Backtracking on the residual max-norm.
        let mut step = 1.0f64;
        let mut accepted = false;
        for _ in 0..=MAX_BACKTRACKS {
            let mut trial = field.clone();
            for (k, &idx) in interior.iter().enumerate() {
                trial.u[idx] += step * delta[2 * k];
                trial.v[idx] += step * delta[2 * k + 1];
            }
            let (tr_u, tr_v, tr_scale) = assemble_residual_scaled(&trial, inst, hcfg)?;
            let trial_norm = residual_inf(&tr_u, &tr_v);
            let trial_tol = NEWTON_TOL * tr_scale.max(1.0);
            if trial_norm < res_norm * (1.0 - 1e-4 * step) || trial_norm <= trial_tol {
                field = trial;
                res_u = tr_u;
                res_v = tr_v;
                res_norm = trial_norm;
                tol = trial_tol;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break; // line-search stall
        }
        converged = res_norm <= tol;
    }

    let (min_u, min_v) = field.min_interior();
    let sup_u = field.sup_u();
    let sup_v = field.sup_v();
    let scale = sup_u.max(sup_v).max(1.0);
    let nonnegative = min_u >= -NEG_SLACK * scale && min_v >= -NEG_SLACK * scale;
    if converged && nonnegative {
        // Clip the sub-slack negatives introduced by the iteration.
        for w in field.u.iter_mut().chain(field.v.iter_mut()) {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
    }

    let defect = match (&inst.coeffs, hcfg) {
        (crate::system::CoefficientField::Constant(cf), None) => {
            compute_k(cf, &inst.exps).ok().map(|c| field.proportionality_defect(c.k))
        }
        _ => None,
    };

    let report = SolveReport {
        converged,
        iterations,
        residual_inf: res_norm,
        sup_u,
        sup_v,
        min_interior_u: min_u,
        min_interior_v: min_v,
        proportionality_defect: defect,
        nonnegative,
        h: field.grid.h(),
        tol_effective: tol,
    };
    Ok((field, report))
}

fn assemble_jacobian(
    field: &GridField,
    inst: &ProblemInstance,
    hcfg: Option<&HomotopyConfig>,
    interior: &[usize],
) -> Result<BandedMatrix, SolveError> {
    let m = interior.len();
    match &field.grid {
        Grid::Radial { dim, radius, nodes } => {
            let mnodes = *nodes - 1; // unknowns 0..nodes-2
            debug_assert_eq!(m, mnodes);
            let h = radius / (*nodes as f64 - 1.0);
            let nf = *dim as f64;
            let mut a = BandedMatrix::zeros(2 * m, 3, 3);
            for i in 0..mnodes {
                let x = field.grid.point(i);
                let cf = inst.coeffs.at(&x);
                let jl =
                    rhs_jacobian(field.u[i], field.v[i], &cf, &inst.exps, &inst.lot, &x, hcfg)?;
                let (ru, rv) = (2 * i, 2 * i + 1);
                if i == 0 {
                    let w = 2.0 * nf / (h * h);
                    a.set(ru, ru, -w + jl[0][0]);
                    a.set(ru, rv, jl[0][1]);
                    a.set(rv, rv, -w + jl[1][1]);
                    a.set(rv, ru, jl[1][0]);
                    if mnodes > 1 {
                        a.set(ru, ru + 2, w);
                        a.set(rv, rv + 2, w);
                    }
                } else {
                    let r = h * i as f64;
                    let w2 = 1.0 / (h * h);
                    let wr = (nf - 1.0) / r / (2.0 * h);
                    a.set(ru, ru, -2.0 * w2 + jl[0][0]);
                    a.set(ru, rv, jl[0][1]);
                    a.set(rv, rv, -2.0 * w2 + jl[1][1]);
                    a.set(rv, ru, jl[1][0]);
                    a.set(ru, ru - 2, w2 - wr);
                    a.set(rv, rv - 2, w2 - wr);
                    if i + 1 < mnodes {
                        a.set(ru, ru + 2, w2 + wr);
                        a.set(rv, rv + 2, w2 + wr);
                    }
                }
            }
            Ok(a)
        }
        Grid::Box2 { sides, nx, ny } => {
            let hx = sides[0] / *nx as f64;
            let hy = sides[1] / *ny as f64;
            let stride_nodes = ny + 1;
            let inner_y = ny - 1;
            let band = 2 * inner_y;
            let mut a = BandedMatrix::zeros(2 * m, band + 1, band + 1);
            for (k, &idx) in interior.iter().enumerate() {
                let x = field.grid.point(idx);
                let cf = inst.coeffs.at(&x);
                let jl = rhs_jacobian(
                    field.u[idx],
                    field.v[idx],
                    &cf,
                    &inst.exps,
                    &inst.lot,
                    &x,
                    hcfg,
                )?;
                let i = idx / stride_nodes;
                let j = idx % stride_nodes;
                let (ru, rv) = (2 * k, 2 * k + 1);
                let wx = 1.0 / (hx * hx);
                let wy = 1.0 / (hy * hy);
                a.set(ru, ru, -2.0 * (wx + wy) + jl[0][0]);
                a.set(ru, rv, jl[0][1]);
                a.set(rv, rv, -2.0 * (wx + wy) + jl[1][1]);
                a.set(rv, ru, jl[1][0]);
                if i > 1 {
                    a.set(ru, ru - 2 * inner_y, wx);
                    a.set(rv, rv - 2 * inner_y, wx);
                }
                if i < nx - 1 {
                    a.set(ru, ru + 2 * inner_y, wx);
                    a.set(rv, rv + 2 * inner_y, wx);
                }
                if j > 1 {
                    a.set(ru, ru - 2, wy);
                    a.set(rv, rv - 2, wy);
                }
                if j < ny - 1 {
                    a.set(ru, ru + 2, wy);
                    a.set(rv, rv + 2, wy);
                }
            }
            Ok(a)
        }
    }
}

/// One continuation step outcome.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuationStep {
    /// Path parameter in `[0, 1]`.
    pub s: f64,
    pub field: GridField,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationResult {
    pub steps: Vec<ContinuationStep>,
    /// Index of the first target the corrector could not reach, if any.
    pub failure_index: Option<usize>,
    /// Max sup-norm over all converged steps (the run-reported bound `M`).
    pub sup_bound: f64,
}

const STEP_FLOOR: f64 = 1e-4;

/// Predictor-corrector continuation along `path(s)`, `s in [0, 1]`, reporting
/// the solutions at `s_k = k/steps`. A failed correction bisects the substep
/// down to a floor of `1e-4` of the path, then returns the partial result.
pub fn continuation_solve<P: Fn(f64) -> ProblemInstance>(
    path: P,
    steps: usize,
    init: &GridField,
) -> Result<ContinuationResult, SolveError> {
    assert!(steps >= 1);
    let interior = interior_nodes(&init.grid);

    // Correct the anchor first.
    let (mut current, report0) = newton_solve(init, &path(0.0), None)?;
    let mut sup_bound = report0.sup_u.max(report0.sup_v);
    let mut result =
        ContinuationResult { steps: Vec::new(), failure_index: None, sup_bound };
    if !report0.converged {
        result.failure_index = Some(0);
        return Ok(result);
    }
    result.steps.push(ContinuationStep { s: 0.0, field: current.clone(), report: report0 });

    let mut s = 0.0f64;
    let mut prev: Option<(f64, GridField)> = None;

    for k in 1..=steps {
        let target = k as f64 / steps as f64;
        let mut ds = target - s;
        while s < target {
            ds = ds.min(target - s);
            if ds < STEP_FLOOR {
                result.failure_index = Some(k);
                result.sup_bound = sup_bound;
                return Ok(result);
            }
            let s_try = s + ds;
            // Secant predictor when two converged points are available.
            let mut guess = current.clone();
            if let Some((s_prev, ref f_prev)) = prev {
                let scale = if s - s_prev > 0.0 { ds / (s - s_prev) } else { 0.0 };
                for (j, idx) in interior.iter().enumerate() {
                    let _ = j;
                    guess.u[*idx] += scale * (current.u[*idx] - f_prev.u[*idx]);
                    guess.v[*idx] += scale * (current.v[*idx] - f_prev.v[*idx]);
                }
            }
            let (solved, report) = newton_solve(&guess, &path(s_try), None)?;
            if report.converged {
                sup_bound = sup_bound.max(report.sup_u.max(report.sup_v));
                prev = Some((s, current));
                current = solved;
                s = s_try;
                if (s - target).abs() < 1e-12 {
                    result.steps.push(ContinuationStep {
                        s,
                        field: current.clone(),
                        report,
                    });
                }
                ds *= 2.0;
            } else {
                ds *= 0.5;
            }
        }
    }
    result.sup_bound = sup_bound;
    Ok(result)
}

/// First Dirichlet eigenvalue result.
#[derive(Debug, Clone, Serialize)]
pub struct Lambda1Result {
    pub lambda_h: f64,
    pub lambda_half: f64,
    /// Richardson extrapolation `(4 λ_{h/2} - λ_h)/3`.
    pub lambda_richardson: f64,
    pub eigenfield: Vec<f64>,
    pub grid: Grid,
}

/// Inverse power iteration for `λ₁(-Δ)` on a ball (radial) or 2-D box, to
/// relative tolerance `1e-10`, with Richardson extrapolation over `h, h/2`.
pub fn compute_lambda1(domain: &Domain, n: usize, h: f64) -> Result<Lambda1Result, SolveError> {
    let (lambda_h, eigenfield, grid) = lambda1_single(domain, n, h)?;
    let (lambda_half, _, _) = lambda1_single(domain, n, h / 2.0)?;
    Ok(Lambda1Result {
        lambda_h,
        lambda_half,
        lambda_richardson: (4.0 * lambda_half - lambda_h) / 3.0,
        eigenfield,
        grid,
    })
}

fn lambda1_single(domain: &Domain, n: usize, h: f64) -> Result<(f64, Vec<f64>, Grid), SolveError> {
    let grid = Grid::from_domain(domain, n, h)?;
    let interior = interior_nodes(&grid);
    let m = interior.len();

    // Assemble -Δ_h (positive definite) and the self-adjointness weights.
    let (matrix, weights, apply): (BandedMatrix, Vec<f64>, Box<dyn Fn(&[f64]) -> Vec<f64>>) =
        match &grid {
            Grid::Radial { dim, radius, nodes } => {
                let hh = radius / (*nodes as f64 - 1.0);
                let nf = *dim as f64;
                let mut a = BandedMatrix::zeros(m, 1, 1);
                for i in 0..m {
                    if i == 0 {
                        let w = 2.0 * nf / (hh * hh);
                        a.set(0, 0, w);
                        if m > 1 {
                            a.set(0, 1, -w);
                        }
                    } else {
                        let r = hh * i as f64;
                        let w2 = 1.0 / (hh * hh);
                        let wr = (nf - 1.0) / r / (2.0 * hh);
                        a.set(i, i, 2.0 * w2);
                        a.set(i, i - 1, -(w2 - wr));
                        if i + 1 < m {
                            a.set(i, i + 1, -(w2 + wr));
                        }
                    }
                }
                // Weight r^{n-1} makes the radial operator self-adjoint.
                let w: Vec<f64> = (0..m)
                    .map(|i| if i == 0 { (hh * 0.25).powf(nf - 1.0) } else { (hh * i as f64).powf(nf - 1.0) })
                    .collect();
                let nf2 = nf;
                let hh2 = hh;
                let mcap = m;
                let apply = move |x: &[f64]| -> Vec<f64> {
                    let mut y = vec![0.0; mcap];
                    for i in 0..mcap {
                        if i == 0 {
                            let w = 2.0 * nf2 / (hh2 * hh2);
                            y[0] = w * x[0] - if mcap > 1 { w * x[1] } else { 0.0 };
                        } else {
                            let r = hh2 * i as f64;
                            let w2 = 1.0 / (hh2 * hh2);
                            let wr = (nf2 - 1.0) / r / (2.0 * hh2);
                            let right = if i + 1 < mcap { x[i + 1] } else { 0.0 };
                            y[i] = 2.0 * w2 * x[i] - (w2 - wr) * x[i - 1] - (w2 + wr) * right;
                        }
                    }
                    y
                };
                (a, w, Box::new(apply))
            }
            Grid::Box2 { sides, nx, ny } => {
                let hx = sides[0] / *nx as f64;
                let hy = sides[1] / *ny as f64;
                let inner_y = ny - 1;
                let mut a = BandedMatrix::zeros(m, inner_y, inner_y);
                for k in 0..m {
                    let i = k / inner_y + 1;
                    let j = k % inner_y + 1;
                    let wx = 1.0 / (hx * hx);
                    let wy = 1.0 / (hy * hy);
                    a.set(k, k, 2.0 * (wx + wy));
                    if i > 1 {
                        a.set(k, k - inner_y, -wx);
                    }
                    if i < nx - 1 {
                        a.set(k, k + inner_y, -wx);
                    }
                    if j > 1 {
                        a.set(k, k - 1, -wy);
                    }
                    if j < ny - 1 {
                        a.set(k, k + 1, -wy);
                    }
                }
                let (nx2, ny2) = (*nx, *ny);
                let (hx2, hy2) = (hx, hy);
                let mcap = m;
                let apply = move |x: &[f64]| -> Vec<f64> {
                    let inner_y = ny2 - 1;
                    let mut y = vec![0.0; mcap];
                    for k in 0..mcap {
                        let i = k / inner_y + 1;
                        let j = k % inner_y + 1;
                        let wx = 1.0 / (hx2 * hx2);
                        let wy = 1.0 / (hy2 * hy2);
                        let mut acc = 2.0 * (wx + wy) * x[k];
                        if i > 1 {
                            acc -= wx * x[k - inner_y];
                        }
                        if i < nx2 - 1 {
                            acc -= wx * x[k + inner_y];
                        }
                        if j > 1 {
                            acc -= wy * x[k - 1];
                        }
                        if j < ny2 - 1 {
                            acc -= wy * x[k + 1];
                        }
                        y[k] = acc;
                    }
                    y
                };
                (a, vec![1.0; m], Box::new(apply))
            }
        };

    let lu = matrix.factor().ok_or(SolveError::SingularJacobian)?;
    let mut x = vec![1.0; m];
    let mut lambda = 0.0f64;
    let mut stable = 0;
    for _ in 0..1000 {
        let y = lu.solve(&x);
        let norm = y.iter().fold(0.0f64, |mx, &t| mx.max(t.abs()));
        let y: Vec<f64> = y.iter().map(|t| t / norm).collect();
        let ay = apply(&y);
        let num: f64 = y.iter().zip(ay.iter()).zip(weights.iter()).map(|((a, b), w)| w * a * b).sum();
        let den: f64 = y.iter().zip(weights.iter()).map(|(a, w)| w * a * a).sum();
        let new_lambda = num / den;
        if (new_lambda - lambda).abs() <= 1e-10 * new_lambda.abs() {
            stable += 1;
            if stable >= 2 {
                lambda = new_lambda;
                x = y;
                break;
            }
        } else {
            stable = 0;
        }
        lambda = new_lambda;
        x = y;
    }

    // Positive, sup-normalized eigenfield on the full grid.
    let sign = if x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let mut eigenfield = vec![0.0; grid.num_nodes()];
    for (k, &idx) in interior.iter().enumerate() {
        eigenfield[idx] = sign * x[k];
    }
    Ok((lambda, eigenfield, grid))
}

/// Blow-up rescaling of a field around a center node:
/// `ũ(y) = λ^α u(x_c + λ y)` with `α = 2/(σ-1)` and
/// `λ = (sup u^{1/α} + sup v^{1/α})^{-1}`.
#[derive(Debug, Clone, Serialize)]
pub struct RescaleDiagnostics {
    pub lambda: f64,
    pub alpha: f64,
    /// Sample points (offsets `y` from the center along the grid).
    pub y_grid: Vec<f64>,
    pub u_scaled: Vec<f64>,
    pub v_scaled: Vec<f64>,
    pub max_scaled: f64,
    pub center_value_scaled: f64,
    /// The `2^{-α}` lower bound that the centered value must meet.
    pub center_lower_bound: f64,
    pub max_bound_ok: bool,
    pub center_bound_ok: bool,
}

pub fn blowup_rescale(
    field: &GridField,
    inst: &ProblemInstance,
    center: usize,
    check_center: bool,
) -> Result<RescaleDiagnostics, SolveError> {
    let sigma = inst.exps.sigma();
    if sigma <= 1.0 {
        return Err(SolveError::SigmaNotSuperlinear(sigma));
    }
    let alpha = 2.0 / (sigma - 1.0);
    let sup_u = field.sup_u();
    let sup_v = field.sup_v();
    let lambda = 1.0 / (sup_u.powf(1.0 / alpha) + sup_v.powf(1.0 / alpha));

    let u_dominates = sup_u >= sup_v;
    if check_center {
        let value = if u_dominates { field.u[center] } else { field.v[center] };
        let sup = if u_dominates { sup_u } else { sup_v };
        if (value - sup).abs() > 1e-14 * sup.max(1.0) {
            return Err(SolveError::CenterNotArgmax);
        }
    }

    // Resample along the grid line through the center by linear interpolation.
    let (y_grid, u_scaled, v_scaled, center_value_scaled) = match &field.grid {
        Grid::Radial { radius, nodes, .. } => {
            let h = radius / (*nodes as f64 - 1.0);
            let r_c = h * center as f64;
            let samples = *nodes;
            let y_lo = -r_c / lambda;
            let y_hi = (radius - r_c) / lambda;
            let mut ys = Vec::with_capacity(samples);
            let mut us = Vec::with_capacity(samples);
            let mut vs = Vec::with_capacity(samples);
            let scale = lambda.powf(alpha);
            for k in 0..samples {
                let y = y_lo + (y_hi - y_lo) * k as f64 / (samples as f64 - 1.0);
                let r = (r_c + lambda * y).abs().min(*radius);
                ys.push(y);
                us.push(scale * interp_radial(&field.u, h, r));
                vs.push(scale * interp_radial(&field.v, h, r));
            }
            let center_val = scale
                * if u_dominates { field.u[center] } else { field.v[center] };
            (ys, us, vs, center_val)
        }
        Grid::Box2 { sides, nx, ny } => {
            // Trace along the x-axis through the center node.
            let hx = sides[0] / *nx as f64;
            let stride = ny + 1;
            let ci = center / stride;
            let cj = center % stride;
            let xc = hx * ci as f64;
            let samples = nx + 1;
            let y_lo = -xc / lambda;
            let y_hi = (sides[0] - xc) / lambda;
            let scale = lambda.powf(alpha);
            let mut ys = Vec::with_capacity(samples);
            let mut us = Vec::with_capacity(samples);
            let mut vs = Vec::with_capacity(samples);
            for k in 0..samples {
                let y = y_lo + (y_hi - y_lo) * k as f64 / (samples as f64 - 1.0);
                let x = (xc + lambda * y).clamp(0.0, sides[0]);
                let frac = x / hx;
                let i0 = (frac.floor() as usize).min(nx - 1);
                let t = frac - i0 as f64;
                let lerp = |w: &[f64]| {
                    (1.0 - t) * w[i0 * stride + cj] + t * w[(i0 + 1) * stride + cj]
                };
                ys.push(y);
                us.push(scale * lerp(&field.u));
                vs.push(scale * lerp(&field.v));
            }
            let center_val =
                scale * if u_dominates { field.u[center] } else { field.v[center] };
            (ys, us, vs, center_val)
        }
    };

    let max_scaled = u_scaled
        .iter()
        .chain(v_scaled.iter())
        .fold(0.0f64, |m, &x| m.max(x));
    let center_lower_bound = 2.0f64.powf(-alpha);
    Ok(RescaleDiagnostics {
        lambda,
        alpha,
        y_grid,
        u_scaled,
        v_scaled,
        max_scaled,
        center_value_scaled,
        center_lower_bound,
        max_bound_ok: max_scaled <= 1.0 + 1e-12,
        center_bound_ok: !check_center || center_value_scaled >= center_lower_bound - 1e-12,
    })
}

fn interp_radial(w: &[f64], h: f64, r: f64) -> f64 {
    let frac = r / h;
    let i0 = (frac.floor() as usize).min(w.len() - 2);
    let t = frac - i0 as f64;
    (1.0 - t) * w[i0] + t * w[i0 + 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::scalar_ground_state_on_ball;
    

    fn be_instance() -> ProblemInstance {
        // (a,b,c,d) = (2,2,1,1), (p,q,r) = (0,2,1): K = 1, c1 = 1, sigma = 3.
        ProblemInstance::constant(
            3,
            Exponents::new(0.0, 2.0, 1.0),
            Coefficients::new(2.0, 2.0, 1.0, 1.0),
            Domain::Ball { radius: 1.0 },
        )
    }

    #[test]
    fn zero_field_zero_residual() {
        let inst = be_instance();
        let grid = Grid::from_domain(&inst.domain, 3, 1.0 / 64.0).unwrap();
        let field = GridField::zeros(grid);
        let (ru, rv) = assemble_residual(&field, &inst, None).unwrap();
        assert!(residual_inf(&ru, &rv) == 0.0);
    }

    #[test]
    fn constant_field_breaks_at_boundary_ring() {
        // (C, 0) extended by the boundary zero is not grid-admissible: the
        // residual max sits on the ring next to the boundary.
        let inst = ProblemInstance::constant(
            3,
            Exponents::new(1.0, 1.0, 1.0),
            Coefficients::new(1.0, 1.0, 0.0, 0.0),
            Domain::Ball { radius: 1.0 },
        );
        let grid = Grid::from_domain(&inst.domain, 3, 1.0 / 32.0).unwrap();
        let mut field = GridField::zeros(grid);
        let m = field.u.len();
        for i in 0..m - 1 {
            field.u[i] = 0.7; // v stays 0, f = g = 0 for p > 0
        }
        let (ru, rv) = assemble_residual(&field, &inst, None).unwrap();
        let worst = ru
            .iter()
            .chain(rv.iter())
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap()
            .0;
        // Residual concentrated at the last interior node of u.
        assert_eq!(worst, m - 2);
    }

    #[test]
    fn manufactured_solution_order_two_radial() {
        let inst = be_instance();
        let k = std::f64::consts::PI / 2.0;
        let err_at = |cells: usize| -> f64 {
            let grid = Grid::Radial { dim: 3, radius: 1.0, nodes: cells + 1 };
            let h = 1.0 / cells as f64;
            let mut field = GridField::zeros(grid);
            for i in 0..cells {
                let r = h * i as f64;
                field.u[i] = (k * r).cos();
                field.v[i] = (k * r).cos();
            }
            let (ru, rv) = assemble_residual(&field, &inst, None).unwrap();
            let mut worst = 0.0f64;
            for i in 0..cells {
                let r = h * i as f64;
                let analytic_lap = if i == 0 {
                    -3.0 * k * k
                } else {
                    -k * k * (k * r).cos() - 2.0 * k * (k * r).sin() / r
                };
                let u = (k * r).cos();
                let x = [r, 0.0, 0.0];
                let cf = inst.coeffs.at(&x);
                let (fv, gv) = rhs_fg(u, u, &cf, &inst.exps, &inst.lot, &x, None);
                worst = worst.max((ru[i] - (analytic_lap + fv)).abs());
                worst = worst.max((rv[i] - (analytic_lap + gv)).abs());
            }
            worst
        };
        let e1 = err_at(64);
        let e2 = err_at(128);
        let ratio = e1 / e2;
        assert!((2.8..=5.2).contains(&ratio), "truncation ratio {ratio}, errors {e1} {e2}");
    }

    #[test]
    fn manufactured_solution_order_two_box() {
        let inst = ProblemInstance::constant(
            2,
            Exponents::new(0.0, 2.0, 1.0),
            Coefficients::new(2.0, 2.0, 1.0, 1.0),
            Domain::Box { sides: vec![1.0, 1.0] },
        );
        let pi = std::f64::consts::PI;
        let err_at = |cells: usize| -> f64 {
            let grid = Grid::Box2 { sides: [1.0, 1.0], nx: cells, ny: cells };
            let h = 1.0 / cells as f64;
            let mut field = GridField::zeros(grid.clone());
            for idx in 0..grid.num_nodes() {
                let p = grid.point(idx);
                let w = (pi * p[0]).sin() * (pi * p[1]).sin();
                field.u[idx] = w;
                field.v[idx] = w;
            }
            let (ru, rv) = assemble_residual(&field, &inst, None).unwrap();
            let mut worst = 0.0f64;
            for idx in 0..grid.num_nodes() {
                if grid.is_boundary(idx) {
                    continue;
                }
                let p = grid.point(idx);
                let w = (pi * p[0]).sin() * (pi * p[1]).sin();
                let lap = -2.0 * pi * pi * w;
                let cf = inst.coeffs.at(&p);
                let (fv, gv) = rhs_fg(w, w, &cf, &inst.exps, &inst.lot, &p, None);
                worst = worst.max((ru[idx] - (lap + fv)).abs());
                worst = worst.max((rv[idx] - (lap + gv)).abs());
            }
            let _ = h;
            worst
        };
        let ratio = err_at(16) / err_at(32);
        assert!((2.8..=5.2).contains(&ratio), "truncation ratio {ratio}");
    }

    #[test]
    fn trivial_init_converges_immediately() {
        let inst = be_instance();
        let grid = Grid::from_domain(&inst.domain, 3, 1.0 / 64.0).unwrap();
        let field = GridField::zeros(grid);
        let (solved, report) = newton_solve(&field, &inst, None).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert_eq!(solved.sup_u(), 0.0);
    }

    #[test]
    fn be_classification_on_ball() {
        // Criterion-6 configuration at 257 radial nodes.
        let inst = be_instance();
        let sol = scalar_ground_state_on_ball(3, 3.0, 1.0, 1.0, 1e-10, 257).unwrap();
        let init = GridField::from_scalar_reduction(&sol, 1.0);
        let (solved, report) = newton_solve(&init, &inst, None).unwrap();
        assert!(report.converged, "newton must converge from the scalar reduction");
        assert!(report.nonnegative);
        assert!(report.min_interior_u > 0.0);
        let defect = report.proportionality_defect.unwrap();
        assert!(
            defect / report.sup_u <= 1e-3,
            "relative proportionality defect {}",
            defect / report.sup_u
        );
        // The converged solution stays close to the shooting reference.
        let mut worst = 0.0f64;
        for (i, &r) in sol.r_grid.iter().enumerate() {
            let _ = r;
            worst = worst.max((solved.v[i] - sol.v[i]).abs());
        }
        assert!(worst < 1e-3 * report.sup_v, "drift from shooting reference {worst}");
    }

    #[test]
    fn asymmetric_lv_solution_is_proportional() {
        // K = 2 instance: (a,b,c,d) = (3,1,1,1), (p,q,r) = (0,1,1), sigma = 2.
        let inst = ProblemInstance::constant(
            3,
            Exponents::new(0.0, 1.0, 1.0),
            Coefficients::new(3.0, 1.0, 1.0, 1.0),
            Domain::Ball { radius: 1.0 },
        );
        let cert = compute_k(&Coefficients::new(3.0, 1.0, 1.0, 1.0), &inst.exps).unwrap();
        assert!((cert.k - 2.0).abs() < 1e-13);
        // c1 = K^p (b K^q - d) = 2 - 1 = 1.
        let sol = scalar_ground_state_on_ball(3, 2.0, 1.0, 1.0, 1e-10, 257).unwrap();
        let mut init = GridField::from_scalar_reduction(&sol, cert.k);
        // Perturb off the proportional ray; Newton must come back to it.
        let m = init.u.len();
        for i in 0..m - 1 {
            let r = i as f64 / (m - 1) as f64;
            let bump = 0.05 * (std::f64::consts::PI * r).sin();
            init.u[i] += bump;
            init.v[i] -= 0.5 * bump;
        }
        let (_, report) = newton_solve(&init, &inst, None).unwrap();
        assert!(report.converged);
        assert!(report.min_interior_u > 0.0, "positive branch expected");
        let defect = report.proportionality_defect.unwrap();
        assert!(defect / report.sup_u <= 1e-3, "defect {}", defect / report.sup_u);
    }

    #[test]
    fn degenerate_coefficients_collapse_to_trivial() {
        // a=b=c=d=1 with small positive init: only the trivial state remains.
        let inst = ProblemInstance::constant(
            3,
            Exponents::new(1.0, 1.0, 1.0),
            Coefficients::new(1.0, 1.0, 1.0, 1.0),
            Domain::Ball { radius: 1.0 },
        );
        let grid = Grid::from_domain(&inst.domain, 3, 1.0 / 64.0).unwrap();
        let mut field = GridField::zeros(grid);
        let m = field.u.len();
        for i in 0..m - 1 {
            let r = i as f64 / (m - 1) as f64;
            let bump = 0.1 * (std::f64::consts::PI * r).cos();
            field.u[i] = bump.max(0.0);
            field.v[i] = 0.5 * bump.max(0.0);
        }
        let (_, report) = newton_solve(&field, &inst, None).unwrap();
        assert!(report.converged);
        assert!(report.sup_u <= 1e-8 && report.sup_v <= 1e-8, "sup {} {}", report.sup_u, report.sup_v);
    }

    #[test]
    fn harmonic_sum_structure_for_chemical_form() {
        // p = r and a = d, b = c make f + g vanish identically, so the
        // residual sum is exactly the discrete Laplacian of u + v.
        let inst = ProblemInstance::constant(
            3,
            Exponents::new(1.0, 1.0, 1.0),
            Coefficients::new(1.2, 0.9, 0.9, 1.2),
            Domain::Ball { radius: 1.0 },
        );
        let grid = Grid::from_domain(&inst.domain, 3, 1.0 / 32.0).unwrap();
        let mut field = GridField::zeros(grid.clone());
        let m = field.u.len();
        for i in 0..m - 1 {
            let r = i as f64 / (m - 1) as f64;
            field.u[i] = (1.0 - r * r) * 0.8;
            field.v[i] = (1.0 - r * r) * (0.3 + 0.2 * r);
        }
        let (ru, rv) = assemble_residual(&field, &inst, None).unwrap();
        // Direct discrete Laplacian of the sum.
        let sum_field = GridField {
            grid,
            u: field.u.iter().zip(field.v.iter()).map(|(a, b)| a + b).collect(),
            v: vec![0.0; m],
        };
        let zero_inst = ProblemInstance::constant(
            3,
            Exponents::new(1.0, 1.0, 1.0),
            Coefficients::new(1.0, 1.0, 1.0, 1.0),
            Domain::Ball { radius: 1.0 },
        );
        let (lap_sum, _) = assemble_residual(&sum_field, &zero_inst, None).unwrap();
        for i in 0..m {
            let got = ru[i] + rv[i];
            assert!(
                (got - lap_sum[i]).abs() <= 1e-9 * lap_sum[i].abs().max(1.0),
                "node {i}: {} vs {}",
                got,
                lap_sum[i]
            );
        }
    }

    #[test]
    fn homotopy_residual_reduces_to_plain_at_t_zero() {
        let inst = be_instance();
        let grid = Grid::from_domain(&inst.domain, 3, 1.0 / 32.0).unwrap();
        let mut field = GridField::zeros(grid);
        let m = field.u.len();
        for i in 0..m - 1 {
            let r = i as f64 / (m - 1) as f64;
            field.u[i] = 1.0 - r * r;
            field.v[i] = 0.5 * (1.0 - r * r);
        }
        let hcfg = HomotopyConfig {
            t: 0.0,
            a_const: 25.0,
            c1_bound: 0.0,
            omega: Domain::Ball { radius: 0.5 },
        };
        let (pu, pv) = assemble_residual(&field, &inst, None).unwrap();
        let (hu, hv) = assemble_residual(&field, &inst, Some(&hcfg)).unwrap();
        assert_eq!(pu, hu);
        assert_eq!(pv, hv);

        // At t = 1 the zero field is no longer residual-free: At(1+0) = A.
        let hcfg1 = HomotopyConfig { t: 1.0, ..hcfg };
        let zero = GridField::zeros(Grid::from_domain(&inst.domain, 3, 1.0 / 32.0).unwrap());
        let (zu, _) = assemble_residual(&zero, &inst, Some(&hcfg1)).unwrap();
        let interior_max = zu.iter().fold(0.0f64, |mx, &x| mx.max(x.abs()));
        assert!((interior_max - 25.0).abs() < 1e-12);
    }

    #[test]
    fn lambda1_box_and_balls() {
        // Box (0,1)^2: 2 pi^2; ball n=3: pi^2; ball n=2: j_{0,1}^2.
        let box_dom = Domain::Box { sides: vec![1.0, 1.0] };
        let res = compute_lambda1(&box_dom, 2, 1.0 / 64.0).unwrap();
        let exact = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        assert!((res.lambda_h - exact).abs() / exact < 5e-3, "box lambda {}", res.lambda_h);
        assert!((res.lambda_richardson - exact).abs() / exact < 1e-4);

        let ball3 = Domain::Ball { radius: 1.0 };
        let res3 = compute_lambda1(&ball3, 3, 1.0 / 64.0).unwrap();
        let exact3 = std::f64::consts::PI * std::f64::consts::PI;
        assert!((res3.lambda_h - exact3).abs() / exact3 < 5e-3, "ball3 lambda {}", res3.lambda_h);

        let res2 = compute_lambda1(&ball3, 2, 1.0 / 64.0).unwrap();
        let j01 = 2.404825557695773;
        assert!(
            (res2.lambda_h - j01 * j01).abs() / (j01 * j01) < 5e-3,
            "ball2 lambda {}",
            res2.lambda_h
        );
    }

    #[test]
    fn continuation_constant_path_is_stationary() {
        let inst = be_instance();
        let sol = scalar_ground_state_on_ball(3, 3.0, 1.0, 1.0, 1e-10, 129).unwrap();
        let init = GridField::from_scalar_reduction(&sol, 1.0);
        let result = continuation_solve(|_s| be_instance(), 3, &init).unwrap();
        let _ = inst;
        assert!(result.failure_index.is_none());
        assert_eq!(result.steps.len(), 4);
        let first = &result.steps[0].field;
        for step in &result.steps[1..] {
            for (a, b) in step.field.u.iter().zip(first.u.iter()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rescale_bounds_and_identity() {
        let inst = be_instance();
        let sol = scalar_ground_state_on_ball(3, 3.0, 1.0, 1.0, 1e-10, 129).unwrap();
        let field = GridField::from_scalar_reduction(&sol, 1.0);
        let diag = blowup_rescale(&field, &inst, 0, true).unwrap();
        assert!(diag.max_bound_ok, "scaled max {} must be <= 1", diag.max_scaled);
        assert!(diag.center_bound_ok, "center {} vs 2^-alpha {}", diag.center_value_scaled, diag.center_lower_bound);

        // Unit sups (sup = 2^{-alpha} each) make lambda = 1: identity trace.
        let mut unit = field.clone();
        let alpha = 1.0; // sigma = 3
        let target = 2.0f64.powf(-alpha);
        let s = target / unit.sup_u();
        for w in unit.u.iter_mut().chain(unit.v.iter_mut()) {
            *w *= s;
        }
        let diag = blowup_rescale(&unit, &inst, 0, true).unwrap();
        assert!((diag.lambda - 1.0).abs() < 1e-12);
        for (k, &y) in diag.y_grid.iter().enumerate() {
            let r = y; // center 0, lambda 1
            let expect = interp_radial(&unit.u, 1.0 / 128.0, r.max(0.0));
            assert!((diag.u_scaled[k] - expect).abs() < 1e-12);
        }

        // Center that is not the argmax must error when checked.
        assert!(matches!(
            blowup_rescale(&field, &inst, 5, true),
            Err(SolveError::CenterNotArgmax)
        ));
        let sub = blowup_rescale(&field, &inst, 5, false).unwrap();
        assert!(sub.max_bound_ok);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let inst = be_instance();
        let grid = Grid::from_domain(&inst.domain, 3, 1.0 / 16.0).unwrap();
        let mut field = GridField::zeros(grid);
        field.u.pop();
        assert!(matches!(
            assemble_residual(&field, &inst, None),
            Err(SolveError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn homotopy_constant_choice() {
        let inst = be_instance();
        let hcfg = HomotopyConfig::for_instance(&inst, 1.0, 0.0, 1.0 / 32.0).unwrap();
        // A >= max(sup c, sup d) = 1 and >= lambda1 of the half ball.
        let lam_half = compute_lambda1(&Domain::Ball { radius: 0.5 }, 3, 1.0 / 32.0)
            .unwrap()
            .lambda_h;
        assert!(hcfg.a_const >= 1.0);
        assert!(hcfg.a_const >= lam_half - 1e-9);
    }


}
