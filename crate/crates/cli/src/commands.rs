//! Subcommand handlers. Each parses its config keys, runs the scenario,
//! writes the report plus CSV artifacts, and returns whether every verdict
//! passed. Expected runtime failures (non-convergence, inequality
//! violations) are reported as failing verdicts, not process errors.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use ell_core::config::ConfigError;
use ell_core::dirichlet::{
    blowup_rescale, compute_lambda1, continuation_solve, newton_solve, Grid, GridField,
};
use ell_core::ineq::{
    cone_weight_admissibility, discrete_harmonicity_check, halfspace_gate_check, ko_barrier_check,
    mixed_pair_check, pohozaev_leading_ratio, pohozaev_scan, pointwise_zw_bounds, BarrierSpec,
    MixedPairSpec,
};
use ell_core::means::{
    linear_lower_bound_check, mean_derivative_identity_check, monotonicity_scan,
    xn_mean_constant, FieldWithLaplacian, QuadConfig, ScanVerdict,
};
use ell_core::proportionality::{check_condition_19, lemma72_ratio_inf, Lemma72Case, SampleSpec};
use ell_core::shooting::{
    counterexample_f, counterexample_profile, integrate_ivp, scalar_ground_state_on_ball,
    ShotEvent,
};
use ell_core::system::{validate_hypotheses, Coefficients, Domain, Verdict};
use ell_core::FlatConfig;

use crate::report::{fmt as f, write_csv, write_json};

/// Usage/config/environment failures: exit code 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(format!("config: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io: {e}"))
    }
}

fn coeffs_from(cfg: &FlatConfig) -> Result<Coefficients, CliError> {
    Ok(Coefficients::new(
        cfg.require_f64("a")?,
        cfg.require_f64("b")?,
        cfg.require_f64("c")?,
        cfg.require_f64("d")?,
    ))
}

fn exps_from(cfg: &FlatConfig) -> Result<ell_core::Exponents, CliError> {
    Ok(ell_core::Exponents::new(
        cfg.require_f64("p")?,
        cfg.require_f64("q")?,
        cfg.require_f64("r")?,
    ))
}

// ---------------------------------------------------------------- compute-k

pub fn compute_k_cmd_params(cfg: &FlatConfig) -> Result<(Coefficients, ell_core::Exponents), CliError> {
    cfg.check_keys(&[])?;
    Ok((coeffs_from(cfg)?, exps_from(cfg)?))
}

pub fn compute_k(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    let (coeffs, exps) = compute_k_cmd_params(cfg)?;
    match ell_core::proportionality::compute_k(&coeffs, &exps) {
        Ok(cert) => {
            let pass = cert.unique;
            write_json(out, "compute-k", (&coeffs, &exps), &cert, pass)?;
            Ok(pass)
        }
        Err(e) => Err(CliError::Usage(format!("compute-k: {e}"))),
    }
}

// -------------------------------------------------------- check-hypotheses

pub fn check_hypotheses(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    cfg.check_keys(&[])?;
    let inst = cfg.instance()?;
    // Supply lambda1 to the (1.7) gate when the domain is discretizable.
    let lambda1 = match (&inst.domain, cfg.get_f64("grid.h")?) {
        (Domain::Ball { .. } | Domain::Box { .. }, Some(h)) => {
            compute_lambda1(&inst.domain, inst.n, h).ok().map(|r| r.lambda_h)
        }
        _ => None,
    };
    let report = validate_hypotheses(&inst, lambda1);
    let pass = report.gates.iter().all(|g| g.verdict != Verdict::Fail);
    write_json(out, "check-hypotheses", FlatConfigParams(cfg), &report, pass)?;
    Ok(pass)
}

/// Params echo: the config itself, for reproducibility.
struct FlatConfigParams<'a>(&'a FlatConfig);

impl Serialize for FlatConfigParams<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_text())
    }
}

// -------------------------------------------------------------- check-ineq

pub fn check_ineq(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    cfg.check_keys(&["scan.u_max", "scan.points", "lemma72.case"])?;
    let coeffs = coeffs_from(cfg)?;
    let exps = exps_from(cfg)?;
    let samples = SampleSpec::new(
        cfg.get_f64("scan.u_max")?.unwrap_or(10.0),
        cfg.get_usize("scan.points")?.unwrap_or(100),
    );
    let cert = ell_core::proportionality::compute_k(&coeffs, &exps)
        .map_err(|e| CliError::Usage(format!("check-ineq: {e}")))?;
    let cond = check_condition_19(cert.k, &coeffs, &exps, &samples);
    let lemma72 = match cfg.get_str("lemma72.case") {
        Some("i") => Some(
            lemma72_ratio_inf(Lemma72Case::I, cert.k, &coeffs, &exps, &samples)
                .map_err(|e| CliError::Usage(format!("lemma72: {e}")))?,
        ),
        Some("ii") => Some(
            lemma72_ratio_inf(Lemma72Case::II, cert.k, &coeffs, &exps, &samples)
                .map_err(|e| CliError::Usage(format!("lemma72: {e}")))?,
        ),
        Some(other) => {
            return Err(CliError::Usage(format!("lemma72.case must be i or ii, got {other}")))
        }
        None => None,
    };

    #[derive(Serialize)]
    struct Results<'a> {
        certificate: &'a ell_core::ProportionalityCertificate,
        condition: &'a ell_core::proportionality::Condition19Report,
        lemma72_ratio_inf: Option<f64>,
    }
    let pass = cond.max_signed_product <= 1e-12 * cond.scale.max(1.0)
        && cond.strict_min_off_diagonal > 0.0
        && lemma72.map(|v| v > 0.0).unwrap_or(true);
    write_json(
        out,
        "check-ineq",
        (&coeffs, &exps, samples.u_max, samples.points_per_axis),
        Results { certificate: &cert, condition: &cond, lemma72_ratio_inf: lemma72 },
        pass,
    )?;
    Ok(pass)
}

// -------------------------------------------------------------------- shoot

pub fn shoot(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    cfg.check_keys(&["shoot.f", "shoot.sigma", "shoot.eps", "shoot.t_max", "shoot.tol"])?;
    let n = cfg.require_usize("n")?;
    let eps = cfg.get_f64("shoot.eps")?.unwrap_or(1.0);
    let t_max = cfg.get_f64("shoot.t_max")?.unwrap_or(100.0);
    let tol = cfg.get_f64("shoot.tol")?.unwrap_or(1e-10);
    let fname = cfg.get_str("shoot.f").unwrap_or("linear").to_string();
    let f_scalar: Box<dyn Fn(f64) -> f64> = match fname.as_str() {
        "zero" => Box::new(|_| 0.0),
        "linear" => Box::new(|u| u),
        "cubic" => Box::new(|u: f64| u * u * u),
        "power" => {
            let sigma = cfg.require_f64("shoot.sigma")?;
            Box::new(move |u: f64| u.signum() * u.abs().powf(sigma))
        }
        "counterexample" => {
            let p = cfg.require_f64("p")?;
            let q = cfg.require_f64("q")?;
            Box::new(counterexample_f(p, q))
        }
        other => return Err(CliError::Usage(format!("unknown shoot.f `{other}`"))),
    };
    let shot = integrate_ivp(n, |u| f_scalar(u), eps, t_max, tol);
    let prof = &shot.profile;
    write_csv(
        out,
        "shoot_profile.csv",
        "t,u,du",
        prof.t_grid.iter().zip(prof.u_values.iter()).zip(prof.du_values.iter()).map(
            |((t, u), du)| format!("{},{},{}", f(*t), f(*u), f(*du)),
        ),
    )?;
    let pass = !matches!(prof.event, ShotEvent::Inconclusive { .. });
    write_json(out, "shoot", (n, &fname, eps, t_max, tol), &prof.event, pass)?;
    Ok(pass)
}

// ----------------------------------------------------------- counterexample

pub fn counterexample(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    cfg.check_keys(&["eps", "t_max", "tol", "nodes", "zw.check", "zw.tol_factor"])?;
    let n = cfg.require_usize("n")?;
    let p = cfg.require_f64("p")?;
    let q = cfg.require_f64("q")?;
    let eps = cfg.require_f64("eps")?;
    let t_max = cfg.get_f64("t_max")?.unwrap_or(1000.0);
    let tol = cfg.get_f64("tol")?.unwrap_or(1e-10);
    let nodes = cfg.get_usize("nodes")?.unwrap_or(2001);

    #[derive(Serialize)]
    struct Results<'a> {
        event: Option<&'a ShotEvent>,
        ratio_spread: Option<f64>,
        error: Option<String>,
        harmonicity: Option<ell_core::ineq::HarmonicityReport>,
    }

    match counterexample_profile(n, p, q, eps, t_max, tol, nodes) {
        Ok(pair) => {
            write_csv(
                out,
                "counterexample_profile.csv",
                "t,u,v,du",
                pair.t_grid
                    .iter()
                    .zip(pair.u.iter())
                    .zip(pair.v.iter())
                    .zip(pair.du.iter())
                    .map(|(((t, u), v), du)| format!("{},{},{},{}", f(*t), f(*u), f(*v), f(*du))),
            )?;
            let harmonicity = if cfg.get_str("zw.check") == Some("true") {
                let tol_factor = cfg.get_f64("zw.tol_factor")?.unwrap_or(10.0);
                let grid = Grid::Radial { dim: n, radius: t_max, nodes };
                let field = GridField { grid, u: pair.u.clone(), v: pair.v.clone() };
                let inst = ell_core::ProblemInstance::constant(
                    n,
                    ell_core::Exponents::new(p, q, p),
                    Coefficients::new(1.0, 1.0, 1.0, 1.0),
                    Domain::Ball { radius: t_max },
                );
                Some(
                    discrete_harmonicity_check(&field, &inst, 1.0, tol_factor)
                        .map_err(|e| CliError::Usage(format!("zw.check: {e}")))?,
                )
            } else {
                None
            };
            let pass = pair.ratio_spread > 1e-6
                && harmonicity
                    .as_ref()
                    .map(|h| h.w_subharmonic && h.z_superharmonic)
                    .unwrap_or(true);
            write_json(
                out,
                "counterexample",
                (n, p, q, eps, t_max, tol, nodes),
                Results {
                    event: Some(&pair.event),
                    ratio_spread: Some(pair.ratio_spread),
                    error: None,
                    harmonicity,
                },
                pass,
            )?;
            Ok(pass)
        }
        Err(err @ ell_core::shooting::ShootError::EpsilonTooLarge { .. })
        | Err(err @ ell_core::shooting::ShootError::Inconclusive(_)) => {
            // A run outcome, not a usage error: report it as a failing verdict.
            write_json(
                out,
                "counterexample",
                (n, p, q, eps, t_max, tol, nodes),
                Results {
                    event: None,
                    ratio_spread: None,
                    error: Some(err.to_string()),
                    harmonicity: None,
                },
                false,
            )?;
            Ok(false)
        }
        Err(err) => Err(CliError::Usage(format!("counterexample: {err}"))),
    }
}

// ---------------------------------------------------------- solve-dirichlet

fn scalar_reduction_init(
    inst: &ell_core::ProblemInstance,
    h: f64,
) -> Result<GridField, CliError> {
    let coeffs = inst
        .coeffs
        .constant()
        .ok_or_else(|| CliError::Usage("scalar-reduction init needs constant coefficients".into()))?;
    let cert = ell_core::proportionality::compute_k(&coeffs, &inst.exps)
        .map_err(|e| CliError::Usage(format!("init: {e}")))?;
    let sigma = inst.exps.sigma();
    let c1 = cert.k.powf(inst.exps.p) * (coeffs.b * cert.k.powf(inst.exps.q) - coeffs.d);
    let Domain::Ball { radius } = inst.domain else {
        return Err(CliError::Usage("scalar-reduction init needs a ball domain".into()));
    };
    let nodes = (radius / h).round() as usize + 1;
    let sol = scalar_ground_state_on_ball(inst.n, sigma, c1, radius, 1e-10, nodes)
        .map_err(|e| CliError::Usage(format!("init: {e}")))?;
    Ok(GridField::from_scalar_reduction(&sol, cert.k))
}

pub fn solve_dirichlet(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    cfg.check_keys(&["init", "rescale.check"])?;
    let inst = cfg.instance()?;
    let h = cfg.require_f64("grid.h")?;
    let init = match cfg.get_str("init").unwrap_or("scalar-reduction") {
        "zero" => GridField::zeros(
            Grid::from_domain(&inst.domain, inst.n, h)
                .map_err(|e| CliError::Usage(format!("grid: {e}")))?,
        ),
        "scalar-reduction" => scalar_reduction_init(&inst, h)?,
        other => return Err(CliError::Usage(format!("unknown init `{other}`"))),
    };
    let (field, report) =
        newton_solve(&init, &inst, None).map_err(|e| CliError::Usage(format!("solve: {e}")))?;

    match &field.grid {
        Grid::Radial { radius, nodes, .. } => {
            let hh = radius / (*nodes as f64 - 1.0);
            write_csv(
                out,
                "field.csv",
                "r,u,v",
                (0..*nodes).map(|i| {
                    format!("{},{},{}", f(hh * i as f64), f(field.u[i]), f(field.v[i]))
                }),
            )?;
        }
        Grid::Box2 { sides, nx, ny } => {
            let hx = sides[0] / *nx as f64;
            let hy = sides[1] / *ny as f64;
            let stride = ny + 1;
            write_csv(
                out,
                "field.csv",
                "x,y,u,v",
                (0..field.u.len()).map(|idx| {
                    let i = idx / stride;
                    let j = idx % stride;
                    format!(
                        "{},{},{},{}",
                        f(hx * i as f64),
                        f(hy * j as f64),
                        f(field.u[idx]),
                        f(field.v[idx])
                    )
                }),
            )?;
        }
    }

    #[derive(Serialize)]
    struct Results<'a> {
        report: &'a ell_core::SolveReport,
        rescale: Option<ell_core::dirichlet::RescaleDiagnostics>,
    }
    let rescale = if cfg.get_str("rescale.check") == Some("true") && report.sup_u > 0.0 {
        let center = field
            .u
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        let center = if report.sup_u >= report.sup_v {
            center
        } else {
            field
                .v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap_or(0)
        };
        Some(
            blowup_rescale(&field, &inst, center, true)
                .map_err(|e| CliError::Usage(format!("rescale: {e}")))?,
        )
    } else {
        None
    };
    let pass = report.converged
        && report.nonnegative
        && rescale.as_ref().map(|r| r.max_bound_ok && r.center_bound_ok).unwrap_or(true);
    write_json(
        out,
        "solve-dirichlet",
        FlatConfigParams(cfg),
        Results { report: &report, rescale },
        pass,
    )?;
    Ok(pass)
}

// ----------------------------------------------------------------- continue

pub fn continue_path(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    cfg.check_keys(&["path.eps.start", "path.eps.end", "path.steps"])?;
    let base = cfg.instance()?;
    let h = cfg.require_f64("grid.h")?;
    let eps_start = cfg.require_f64("path.eps.start")?;
    let eps_end = cfg.require_f64("path.eps.end")?;
    let steps = cfg.get_usize("path.steps")?.unwrap_or(2);
    let coeffs = base
        .coeffs
        .constant()
        .ok_or_else(|| CliError::Usage("continuation path needs constant coefficients".into()))?;

    // eps(s): geometric when both endpoints are positive, else linear.
    let eps_of = move |s: f64| -> f64 {
        if eps_start > 0.0 && eps_end > 0.0 {
            eps_start * (eps_end / eps_start).powf(s)
        } else {
            eps_start + (eps_end - eps_start) * s
        }
    };
    // Keep c, d; set a = b = sqrt(cd + eps) so that ab - cd = eps.
    let make = move |s: f64| -> ell_core::ProblemInstance {
        let eps = eps_of(s);
        let ab = (coeffs.c * coeffs.d + eps).max(0.0).sqrt();
        ell_core::ProblemInstance {
            coeffs: ell_core::system::CoefficientField::Constant(Coefficients::new(
                ab, ab, coeffs.c, coeffs.d,
            )),
            ..base.clone()
        }
    };

    let init = scalar_reduction_init(&make(0.0), h)?;
    let result = continuation_solve(make, steps, &init)
        .map_err(|e| CliError::Usage(format!("continuation: {e}")))?;

    write_csv(
        out,
        "continuation_steps.csv",
        "s,eps,converged,sup_u,sup_v,min_interior_u,min_interior_v,defect",
        result.steps.iter().map(|st| {
            format!(
                "{},{},{},{},{},{},{},{}",
                f(st.s),
                f(eps_of(st.s)),
                st.report.converged,
                f(st.report.sup_u),
                f(st.report.sup_v),
                f(st.report.min_interior_u),
                f(st.report.min_interior_v),
                f(st.report.proportionality_defect.unwrap_or(f64::NAN)),
            )
        }),
    )?;

    #[derive(Serialize)]
    struct Results {
        sup_bound: f64,
        failure_index: Option<usize>,
        steps: Vec<(f64, bool, f64, f64)>,
    }
    let pass = result.failure_index.is_none()
        && result.steps.iter().all(|s| s.report.converged);
    write_json(
        out,
        "continue",
        (eps_start, eps_end, steps, h),
        Results {
            sup_bound: result.sup_bound,
            failure_index: result.failure_index,
            steps: result
                .steps
                .iter()
                .map(|s| (s.s, s.report.converged, s.report.sup_u, s.report.min_interior_u))
                .collect(),
        },
        pass,
    )?;
    Ok(pass)
}

// ------------------------------------------------------------------ lambda1

pub fn lambda1(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    cfg.check_keys(&[])?;
    let domain = cfg.domain()?;
    let n = match &domain {
        Domain::Box { .. } => 2,
        _ => cfg.require_usize("n")?,
    };
    let h = cfg.require_f64("grid.h")?;
    let res = compute_lambda1(&domain, n, h).map_err(|e| CliError::Usage(format!("lambda1: {e}")))?;
    match &res.grid {
        Grid::Radial { radius, nodes, .. } => {
            let hh = radius / (*nodes as f64 - 1.0);
            write_csv(
                out,
                "eigenfield.csv",
                "r,value",
                (0..*nodes).map(|i| format!("{},{}", f(hh * i as f64), f(res.eigenfield[i]))),
            )?;
        }
        Grid::Box2 { sides, nx, ny } => {
            let hx = sides[0] / *nx as f64;
            let hy = sides[1] / *ny as f64;
            let stride = ny + 1;
            write_csv(
                out,
                "eigenfield.csv",
                "x,y,value",
                (0..res.eigenfield.len()).map(|idx| {
                    let i = idx / stride;
                    let j = idx % stride;
                    format!(
                        "{},{},{}",
                        f(hx * i as f64),
                        f(hy * j as f64),
                        f(res.eigenfield[idx])
                    )
                }),
            )?;
        }
    }
    #[derive(Serialize)]
    struct Results {
        lambda_h: f64,
        lambda_half: f64,
        lambda_richardson: f64,
    }
    write_json(
        out,
        "lambda1",
        (format!("{domain}"), n, h),
        Results {
            lambda_h: res.lambda_h,
            lambda_half: res.lambda_half,
            lambda_richardson: res.lambda_richardson,
        },
        true,
    )?;
    Ok(true)
}

// -------------------------------------------------------------------- means

fn parse_centers(raw: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let mut out = Vec::new();
    for chunk in raw.split(';') {
        let coords: Result<Vec<f64>, _> =
            chunk.split_whitespace().map(|t| t.parse::<f64>()).collect();
        out.push(coords.map_err(|_| {
            CliError::Usage(format!("means.centers: cannot parse point `{chunk}`"))
        })?);
    }
    Ok(out)
}

fn field_from_config(cfg: &FlatConfig) -> Result<FieldWithLaplacian, CliError> {
    match cfg.get_str("means.field").unwrap_or("x_n") {
        "poly" => {
            let raw = cfg
                .get_str("means.poly")
                .ok_or_else(|| CliError::Usage("means.field = poly needs means.poly".into()))?;
            let mut terms = Vec::new();
            for chunk in raw.split(';') {
                let mut toks = chunk.split_whitespace();
                let coeff: f64 = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| CliError::Usage(format!("means.poly: bad term `{chunk}`")))?;
                let alpha: Result<Vec<u32>, _> = toks.map(|t| t.parse::<u32>()).collect();
                terms.push((
                    coeff,
                    alpha.map_err(|_| {
                        CliError::Usage(format!("means.poly: bad exponents in `{chunk}`"))
                    })?,
                ));
            }
            Ok(FieldWithLaplacian::polynomial(terms))
        }
        name => FieldWithLaplacian::by_name(name)
            .map_err(|e| CliError::Usage(format!("means: {e}"))),
    }
}

pub fn means(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    cfg.check_keys(&[
        "means.field",
        "means.poly",
        "means.centers",
        "means.radii",
        "means.identity.r",
        "means.lower_bound.check",
        "means.lower_bound.tol",
        "quad.nodes",
        "quad.mc_samples",
        "seed",
    ])?;
    let n = cfg.require_usize("n")?;
    let field = field_from_config(cfg)?;
    let centers = match cfg.get_str("means.centers") {
        Some(raw) => parse_centers(raw)?,
        None => vec![vec![0.0; n - 1]],
    };
    let radii = cfg
        .get_f64_list("means.radii")?
        .unwrap_or_else(|| (0..7).map(|k| 2.0f64.powi(k)).collect());
    let quad = QuadConfig {
        nodes: cfg.get_usize("quad.nodes")?.unwrap_or(48),
        mc_samples: cfg.get_usize("quad.mc_samples")?.unwrap_or(200_000),
        seed: cfg.get_u64("seed")?.unwrap_or(0),
    };

    let scan = monotonicity_scan(&field, &centers, &radii, n, &quad)
        .map_err(|e| CliError::Usage(format!("means: {e}")))?;
    write_csv(
        out,
        "means_scan.csv",
        "R,mean,err",
        scan.samples
            .iter()
            .map(|s| format!("{},{},{}", f(s.radius), f(s.value), f(s.error_estimate))),
    )?;

    let identity = match cfg.get_f64("means.identity.r")? {
        Some(r) => Some(
            mean_derivative_identity_check(&field, &centers[0], r, n, &quad)
                .map_err(|e| CliError::Usage(format!("means identity: {e}")))?,
        ),
        None => None,
    };

    let lower_bound = if cfg.get_str("means.lower_bound.check") == Some("true") {
        let tol = cfg.get_f64("means.lower_bound.tol")?.unwrap_or(1e-6);
        // Deterministic lattice of sample points in a slab above the boundary.
        let mut pts = Vec::new();
        for i in 0..40 {
            for j in 1..=25 {
                let mut x = vec![0.0; n];
                x[0] = -20.0 + i as f64;
                x[n - 1] = 20.0 * j as f64 / 25.0;
                pts.push(x);
            }
        }
        Some(linear_lower_bound_check(&field, scan.limit_estimate, &pts, tol))
    } else {
        None
    };

    #[derive(Serialize)]
    struct Results<'a> {
        scan: &'a ell_core::means::MonotonicityScan,
        xn_mean: f64,
        identity: Option<ell_core::means::DerivativeIdentityReport>,
        lower_bound: Option<ell_core::means::LowerBoundReport>,
    }
    let pass = scan.verdict == ScanVerdict::NonincreasingConsistent
        && scan.cross_center_consistent
        && identity.as_ref().map(|i| i.rel_gap <= 1e-4).unwrap_or(true)
        && lower_bound.as_ref().map(|l| l.passes).unwrap_or(true);
    write_json(
        out,
        "means",
        FlatConfigParams(cfg),
        Results { scan: &scan, xn_mean: xn_mean_constant(n), identity, lower_bound },
        pass,
    )?;
    Ok(pass)
}

// ----------------------------------------------------------------- pohozaev

pub fn pohozaev(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    cfg.check_keys(&["eps", "points", "leading.x0"])?;
    let n = cfg.require_usize("n")?;
    let p = cfg.require_f64("p")?;
    let q = cfg.require_f64("q")?;
    let eps = cfg.require_f64("eps")?;
    let points = cfg.get_usize("points")?.unwrap_or(200);
    let scan = pohozaev_scan(counterexample_f(p, q), n, eps, points)
        .map_err(|e| CliError::Usage(format!("pohozaev: {e}")))?;
    write_csv(
        out,
        "pohozaev.csv",
        "X,h",
        scan.xs.iter().zip(scan.h_values.iter()).map(|(x, h)| format!("{},{}", f(*x), f(*h))),
    )?;
    let leading = match cfg.get_f64("leading.x0")? {
        Some(x0) => Some(
            pohozaev_leading_ratio(counterexample_f(p, q), n, p, x0)
                .map_err(|e| CliError::Usage(format!("pohozaev: {e}")))?,
        ),
        None => None,
    };
    #[derive(Serialize)]
    struct Results<'a> {
        min_h: f64,
        floor: f64,
        nonnegative: bool,
        leading_ratio: Option<f64>,
        scan_points: usize,
        #[serde(skip)]
        _p: &'a (),
    }
    let pass = scan.nonnegative;
    write_json(
        out,
        "pohozaev",
        (n, p, q, eps, points),
        Results {
            min_h: scan.min_h,
            floor: scan.floor,
            nonnegative: scan.nonnegative,
            leading_ratio: leading,
            scan_points: scan.xs.len(),
            _p: &(),
        },
        pass,
    )?;
    Ok(pass)
}

// ------------------------------------------------------------------ barrier

pub fn barrier(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    cfg.check_keys(&["barrier.p", "barrier.a", "barrier.c", "barrier.radii", "barrier.samples"])?;
    let n = cfg.require_usize("n")?;
    let p = cfg.require_f64("barrier.p")?;
    let a = cfg.require_f64("barrier.a")?;
    let c = cfg.require_f64("barrier.c")?;
    let radii = cfg.get_f64_list("barrier.radii")?.unwrap_or_else(|| vec![1.0, 10.0]);
    let samples = cfg.get_usize("barrier.samples")?.unwrap_or(1000);

    #[derive(Serialize)]
    struct PerRadius {
        radius: f64,
        report: ell_core::ineq::BarrierReport,
    }
    let mut all = Vec::new();
    let mut pass = true;
    for radius in &radii {
        let spec = BarrierSpec::new(n, p, a, c, *radius)
            .map_err(|e| CliError::Usage(format!("barrier: {e}")))?;
        let rep = ko_barrier_check(&spec, samples);
        pass &= rep.admissible && rep.inequality_holds && rep.max_fd_gap <= 1e-6;
        all.push(PerRadius { radius: *radius, report: rep });
    }
    // Scan artifact for the largest radius.
    if let Some(&radius) = radii.last() {
        let spec = BarrierSpec::new(n, p, a, c, radius)
            .map_err(|e| CliError::Usage(format!("barrier: {e}")))?;
        write_csv(
            out,
            "barrier_scan.csv",
            "r,laplacian,weighted_power",
            (0..samples).map(|i| {
                let r = radius * i as f64 / samples as f64;
                let lap = spec.barrier_laplacian(r);
                let rhs = spec.a_weight / (1.0 + r * r) * spec.barrier(r).powf(spec.p);
                format!("{},{},{}", f(r), f(lap), f(rhs))
            }),
        )?;
    }
    write_json(out, "barrier", (n, p, a, c, &radii, samples), &all, pass)?;
    Ok(pass)
}

// --------------------------------------------------------------- mixed-pair

pub fn mixed_pair(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    cfg.check_keys(&["mp.alpha", "mp.beta", "mp.rho_max", "mp.samples"])?;
    let n = cfg.require_usize("n")?;
    let p = cfg.require_f64("p")?;
    let q = cfg.require_f64("q")?;
    let r = cfg.require_f64("r")?;
    let spec = match (cfg.get_f64("mp.alpha")?, cfg.get_f64("mp.beta")?) {
        (Some(alpha), Some(beta)) => MixedPairSpec::new(n, p, q, r, alpha, beta),
        _ => MixedPairSpec::with_default_exponents(n, p, q, r),
    }
    .map_err(|e| CliError::Usage(format!("mixed-pair: {e}")))?;
    let rho_max = cfg.get_f64("mp.rho_max")?.unwrap_or(1000.0);
    let samples = cfg.get_usize("mp.samples")?.unwrap_or(1000);
    let radii: Vec<f64> =
        (0..samples).map(|i| rho_max * i as f64 / (samples as f64 - 1.0)).collect();
    let rep = mixed_pair_check(&spec, &radii)
        .map_err(|e| CliError::Usage(format!("mixed-pair: {e}")))?;
    let pass = rep.both_hold && rep.max_fd_gap <= 1e-6;
    write_json(out, "mixed-pair", &spec, &rep, pass)?;
    Ok(pass)
}

// ----------------------------------------------------------------- zw-check

pub fn zw_check(cfg: &FlatConfig, out: &Path) -> Result<bool, CliError> {
    cfg.check_keys(&[
        "scan.u_max",
        "scan.points",
        "zw.box",
        "cone.r",
        "cone.kappa",
        "halfspace.s",
    ])?;
    let coeffs = coeffs_from(cfg)?;
    let exps = exps_from(cfg)?;
    let n = cfg.require_usize("n")?;
    let samples = SampleSpec::new(
        cfg.get_f64("scan.u_max")?.unwrap_or(10.0),
        cfg.get_usize("scan.points")?.unwrap_or(100),
    );
    let cert = ell_core::proportionality::compute_k(&coeffs, &exps)
        .map_err(|e| CliError::Usage(format!("zw-check: {e}")))?;
    let bounds =
        pointwise_zw_bounds(cert.k, &coeffs, &exps, &samples, cfg.get_f64("zw.box")?);
    let cone = match (cfg.get_f64("cone.r")?, cfg.get_f64("cone.kappa")?) {
        (Some(r_ineq), Some(kappa)) => Some(cone_weight_admissibility(r_ineq, kappa, n)),
        _ => None,
    };
    let halfspace = cfg
        .get_f64("halfspace.s")?
        .map(|s| halfspace_gate_check(exps.p, exps.q, exps.r, s, n));

    #[derive(Serialize)]
    struct Results<'a> {
        certificate: &'a ell_core::ProportionalityCertificate,
        bounds: &'a ell_core::ineq::ZWBoundsReport,
        cone: Option<ell_core::ineq::ConeWeightReport>,
        halfspace: Option<ell_core::ineq::HalfspaceGateReport>,
    }
    let pass = bounds.bounds_hold
        && bounds.factorization_max_gap <= 1e-12
        && bounds.factorization_min.map(|m| m >= -1e-15).unwrap_or(true)
        && cone.as_ref().map(|c| c.admissible).unwrap_or(true)
        && halfspace.as_ref().map(|h| h.conclusion_ii).unwrap_or(true);
    write_json(
        out,
        "zw-check",
        (&coeffs, &exps, n),
        Results { certificate: &cert, bounds: &bounds, cone, halfspace },
        pass,
    )?;
    Ok(pass)
}
