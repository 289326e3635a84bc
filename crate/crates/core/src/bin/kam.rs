use std::path::PathBuf;
use std::process::ExitCode;

use aperiodic_kam::cli::{cmd_audit, cmd_flow, cmd_normalize, cmd_threshold, CliError, Outcome, Overrides};
use aperiodic_kam::config::RunConfig;
use clap::{Args, Parser, Subcommand};

/// Kolmogorov normalization for Hamiltonians with aperiodic, exponentially
/// decaying time dependence.
///
/// The config is one JSON document. Required keys: n, Gamma, m, omega or
/// p_hat, tau, perturbation {decay, terms: [{k, amplitude, phase?, p_monomial?}]},
/// eps. Defaults: steps 4, k_modes 20, k_checked 40, nu 0.25, rho 0.5,
/// sigma 0.5, schedule "geometric", output_dir "out", tolerances {lie_tol 1e-15,
/// lie_max_terms 30, contraction_limit 0.5, floor 1e-250, rtol 1e-11,
/// atol 1e-13}, flow {t_end 200, samples 400, q0 [], random_q0 1}.
#[derive(Parser)]
#[command(name = "kam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of normalization steps; overrides `steps`.
    #[arg(long)]
    steps: Option<usize>,
    /// Also exit nonzero when a step-lemma hypothesis fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scheme and audit it: history.json, audit.csv, audit.json.
    Normalize(Common),
    /// Print ε_a and the constant table; threshold.json.
    Threshold(Common),
    /// Torus orbit and pulled-back error per step: trajectory.csv, torus_error.csv, torus_j*.csv.
    Flow {
        #[command(flatten)]
        common: Common,
        /// Seed for random torus phases (used only when flow.q0 is empty).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Audit a stored history: audit.csv, audit.json.
    Audit {
        #[command(flatten)]
        common: Common,
        /// History JSON; defaults to <out>/history.json.
        #[arg(long)]
        history: Option<PathBuf>,
    },
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        out: c.out.clone(),
        steps: c.steps,
        strict: c.strict,
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Normalize(c) => cmd_normalize(&RunConfig::load(&c.config)?, &overrides(&c)),
        Command::Threshold(c) => cmd_threshold(&RunConfig::load(&c.config)?, &overrides(&c)),
        Command::Flow { common, seed } => cmd_flow(&RunConfig::load(&common.config)?, &overrides(&common), seed),
        Command::Audit { common, history } => {
            let cfg = RunConfig::load(&common.config)?;
            let ov = overrides(&common);
            let path = history.unwrap_or_else(|| ov.out.clone().unwrap_or_else(|| cfg.output_dir.clone()).join("history.json"));
            cmd_audit(&cfg, &path, &ov)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            for line in &out.lines {
                println!("{line}");
            }
            match out.failure {
                Some(msg) => {
                    eprintln!("error: {msg}");
                    ExitCode::FAILURE
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
