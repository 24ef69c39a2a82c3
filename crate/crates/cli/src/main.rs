//! `ell-lab`: scenario runner for the elliptic-system laboratory.
//!
//! Every subcommand reads a flat `key = value` config (plus `--set`
//! overrides), runs one scenario, writes a JSON report and CSV artifacts
//! into the output directory, and exits 0 when all verdicts pass, 1 on a
//! verdict failure, and 2 on usage or config errors.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ell_core::FlatConfig;

#[derive(Parser)]
#[command(name = "ell-lab", version, about = "Numerical laboratory for noncooperative elliptic systems")]
struct Cli {
    /// Flat key-value config file (one `key = value` per line, `#` comments).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override or add a config entry (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,

    /// Output directory for reports and CSV artifacts
    /// (the ELL_LAB_OUT environment variable takes precedence).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify the proportionality constant K.
    ComputeK,
    /// Evaluate every named hypothesis gate of the instance.
    CheckHypotheses,
    /// Scan the structural inequality and the appendix lower bounds.
    CheckIneq,
    /// Integrate the radial IVP and classify the terminal event.
    Shoot,
    /// Build the supercritical non-proportional pair (u, 1-u).
    Counterexample,
    /// Newton-solve the Dirichlet system on a ball or box.
    SolveDirichlet,
    /// Predictor-corrector continuation along the ab - cd = eps path.
    Continue,
    /// First Dirichlet eigenvalue of -Laplace on a ball or box.
    Lambda1(Lambda1Args),
    /// Half-spherical mean scans, derivative identity and lower bound.
    Means,
    /// Pohozaev obstruction scan for the counterexample nonlinearity.
    Pohozaev,
    /// Blow-up barrier admissibility and inequality sampling.
    Barrier,
    /// Mixed decay/saturation pair witnesses.
    MixedPair,
    /// Pointwise minorants and the ratio factorization identity.
    ZwCheck,
}

#[derive(Args)]
struct Lambda1Args {
    /// ball | box
    #[arg(long)]
    domain: Option<String>,
    /// Ball radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Box side lengths.
    #[arg(long, num_args = 2)]
    sides: Option<Vec<f64>>,
    /// Grid spacing.
    #[arg(long)]
    h: Option<f64>,
    /// Ambient dimension (balls only; boxes are 2-D).
    #[arg(long)]
    n: Option<usize>,
}

fn load_config(cli: &Cli) -> Result<FlatConfig, commands::CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                commands::CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            FlatConfig::parse(&text)
                .map_err(|e| commands::CliError::Usage(format!("config: {e}")))?
        }
        None => FlatConfig::default(),
    };
    for pair in &cli.sets {
        let Some((key, value)) = pair.split_once('=') else {
            return Err(commands::CliError::Usage(format!(
                "--set expects KEY=VALUE, got `{pair}`"
            )));
        };
        cfg.set(key.trim(), value.trim());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<bool, commands::CliError> {
        let mut cfg = load_config(&cli)?;
        if cfg.is_empty() && !matches!(cli.cmd, Cmd::Lambda1(_)) {
            return Err(commands::CliError::Usage(
                "empty config: supply --config or --set entries".into(),
            ));
        }
        let out = report::out_dir(cli.out.as_deref());
        match &cli.cmd {
            Cmd::ComputeK => commands::compute_k(&cfg, &out),
            Cmd::CheckHypotheses => commands::check_hypotheses(&cfg, &out),
            Cmd::CheckIneq => commands::check_ineq(&cfg, &out),
            Cmd::Shoot => commands::shoot(&cfg, &out),
            Cmd::Counterexample => commands::counterexample(&cfg, &out),
            Cmd::SolveDirichlet => commands::solve_dirichlet(&cfg, &out),
            Cmd::Continue => commands::continue_path(&cfg, &out),
            Cmd::Lambda1(args) => {
                if let Some(domain) = &args.domain {
                    cfg.set("domain.kind", domain);
                }
                if let Some(radius) = args.radius {
                    cfg.set("domain.radius", radius);
                }
                if let Some(sides) = &args.sides {
                    let list =
                        sides.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
                    cfg.set("domain.sides", list);
                }
                if let Some(h) = args.h {
                    cfg.set("grid.h", h);
                }
                if let Some(n) = args.n {
                    cfg.set("n", n);
                }
                commands::lambda1(&cfg, &out)
            }
            Cmd::Means => commands::means(&cfg, &out),
            Cmd::Pohozaev => commands::pohozaev(&cfg, &out),
            Cmd::Barrier => commands::barrier(&cfg, &out),
            Cmd::MixedPair => commands::mixed_pair(&cfg, &out),
            Cmd::ZwCheck => commands::zw_check(&cfg, &out),
        }
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("ell-lab: {err}");
            ExitCode::from(2)
        }
    }
}
