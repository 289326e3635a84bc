//! The four subcommands as library functions. The `kam` binary only parses
//! flags and forwards here.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, Problem, RunConfig};
use crate::dynamics::{apply_transformation, integrate, step_maps, torus_error, Direction, ExtendedPoint, IntegratorError, PhasePoint};
use crate::estimates::{AuditReport, ConstantSet, EstimateError, ParamState, RowKind, Schedule, Threshold};
use crate::normalizer::{BoundCheck, NormalizeHistory, NormalizerError};

pub const THRESHOLD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Normalizer(#[from] NormalizerError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error("history {path}: {message}")]
    History { path: PathBuf, message: String },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// What a command printed and wrote. `failure` set means a nonzero exit.
#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
    pub failure: Option<String>,
}

impl Outcome {
    fn write(&mut self, dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }
}

/// Common flag overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub steps: Option<usize>,
    /// Fail when any step-lemma hypothesis is unmet, not only on bound failures.
    pub strict: bool,
}

impl Overrides {
    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| cfg.output_dir.clone())
    }

    fn steps(&self, cfg: &RunConfig) -> usize {
        self.steps.unwrap_or(cfg.steps)
    }
}

/// Copy the applicable bound rows of step `j` into the history diagnostics.
pub fn attach_bound_checks(history: &mut NormalizeHistory, report: &AuditReport) {
    for (j, step) in history.steps.iter_mut().enumerate() {
        step.diagnostics.bound_check = report
            .rows
            .iter()
            .filter(|r| r.step == j && r.kind == RowKind::Bound && r.applicable)
            .map(|r| BoundCheck {
                name: r.name.clone(),
                measured: r.measured,
                bound: r.bound,
                pass: r.pass,
            })
            .collect();
    }
}

fn summarize_audit(out: &mut Outcome, sched: &Schedule, report: &AuditReport, strict: bool) {
    let fails = report.failures();
    let unmet = report.unmet_hypotheses();
    out.lines.push(format!(
        "audit: {} applicable bound rows, {} failures, max ratio {:.3e}",
        report.applicable_bounds(),
        fails.len(),
        report.max_ratio()
    ));
    if let Some(v) = sched.violations.first() {
        out.lines.push(format!("schedule not admissible, first violation {v}"));
    }
    if let Some(h) = unmet.first() {
        out.lines.push(format!(
            "{} unmet hypotheses; first: step {} {} ({:.6e} vs {:.6e})",
            unmet.len(),
            h.step,
            h.name,
            h.measured,
            h.bound
        ));
    }
    if !fails.is_empty() {
        let mut msg = String::from("bound audit failed:");
        for r in &fails {
            let _ = write!(msg, " [step {} {}: {:.6e} > {:.6e}]", r.step, r.name, r.measured, r.bound);
        }
        out.failure = Some(msg);
    } else if strict {
        if let Some(v) = sched.violations.first() {
            out.failure = Some(format!("inequality fails at {v}"));
        } else if let Some(h) = unmet.first() {
            out.failure = Some(format!("hypothesis {} fails at step {} ({:.6e} > {:.6e})", h.name, h.step, h.measured, h.bound));
        }
    }
}

fn write_audit(out: &mut Outcome, dir: &Path, report: &AuditReport) -> Result<(), CliError> {
    out.write(dir, "audit.csv", &report.to_csv())?;
    out.write(dir, "audit.json", &report.to_json())
}

/// `normalize`: run the scheme, audit it, write `history.json`, `audit.csv`, `audit.json`.
pub fn cmd_normalize(cfg: &RunConfig, ov: &Overrides) -> Result<Outcome, CliError> {
    let problem = cfg.build()?;
    let dir = ov.out_dir(cfg);
    let steps = ov.steps(cfg);
    let mut out = Outcome::default();
    let mut history = match problem.normalize(steps) {
        Ok(h) => h,
        Err(partial) => {
            out.write(&dir, "history.json", &partial.history.to_json())?;
            out.failure = Some(partial.to_string());
            return Ok(out);
        }
    };
    let sizes = history
        .hamiltonians
        .iter()
        .map(|h| h.eps_measure(cfg.sigma, cfg.nu, 0.0, 0.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(NormalizerError::from)?;
    if history.steps.is_empty() {
        out.lines.push(format!("trivial: H_0 already in normal form (perturbation size {:.3e}), 0 steps", sizes[0]));
    } else {
        for (j, size) in sizes.iter().enumerate() {
            let terms = history.steps.get(j).map(|s| format!(", lie terms {}", s.diagnostics.lie_terms_used));
            out.lines.push(format!("H_{j}: max(|A|,|B|) = {size:.3e}{}", terms.unwrap_or_default()));
        }
    }
    let (sched, report) = problem.audit(&history)?;
    attach_bound_checks(&mut history, &report);
    out.write(&dir, "history.json", &history.to_json())?;
    write_audit(&mut out, &dir, &report)?;
    summarize_audit(&mut out, &sched, &report, ov.strict);
    Ok(out)
}

/// `audit`: re-audit a stored history against the config's estimates.
pub fn cmd_audit(cfg: &RunConfig, history_path: &Path, ov: &Overrides) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(history_path).map_err(|e| CliError::History {
        path: history_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let history = NormalizeHistory::from_json(&text).map_err(|e| CliError::History {
        path: history_path.to_path_buf(),
        message: format!("line {}: {e}", e.line()),
    })?;
    let problem = cfg.build()?;
    if history.frequency.omega != problem.freq.omega {
        return Err(CliError::History {
            path: history_path.to_path_buf(),
            message: "frequency differs from the config".into(),
        });
    }
    let (sched, report) = problem.audit(&history)?;
    let mut out = Outcome::default();
    write_audit(&mut out, &ov.out_dir(cfg), &report)?;
    summarize_audit(&mut out, &sched, &report, ov.strict);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub schema_version: u32,
    pub m_f: f64,
    pub initial_state: ParamState,
    pub constants: ConstantSet,
    pub threshold: Threshold,
    /// `ε/ε_a` for the configured `ε`.
    pub eps_over_eps_a: f64,
}

impl ThresholdReport {
    pub fn new(p: &Problem) -> Self {
        Self {
            schema_version: THRESHOLD_SCHEMA_VERSION,
            m_f: p.m_f,
            initial_state: p.u0,
            constants: p.consts,
            threshold: p.threshold,
            eps_over_eps_a: p.config.eps / p.threshold.eps_a,
        }
    }
}

/// `threshold`: `ε_a` and the constant table; writes `threshold.json`.
pub fn cmd_threshold(cfg: &RunConfig, ov: &Overrides) -> Result<Outcome, CliError> {
    let problem = cfg.build()?;
    let report = ThresholdReport::new(&problem);
    let mut out = Outcome::default();
    let t = &report.threshold;
    out.lines.push(format!("eps_a = {:.6e}", t.eps_a));
    out.lines.push(format!(
        "  first branch {:.6e}{}",
        t.first_branch,
        if t.first_branch_binds { " (binding)" } else { "" }
    ));
    out.lines.push(format!(
        "  eps_tilde    {:.6e}{}",
        t.eps_tilde,
        if t.first_branch_binds { "" } else { " (binding)" }
    ));
    out.lines.push(format!("  coefficient (2^9 12^(4(tau+1)) D)^-1 = {:.6e}", t.coefficient));
    out.lines.push(format!("  M_f = {:.6e}, eps/eps_a = {:.3e}", report.m_f, report.eps_over_eps_a));
    for (name, v) in report.constants.table() {
        out.lines.push(format!("  {name:<3} {v:.6e}"));
    }
    let json = serde_json::to_string_pretty(&report).expect("threshold serializes");
    out.write(&ov.out_dir(cfg), "threshold.json", &json)?;
    Ok(out)
}

/// Torus phases: the configured ones, or `flow.random_q0` uniform draws.
pub fn initial_phases(cfg: &RunConfig, seed: u64) -> Vec<Vec<f64>> {
    if !cfg.flow.q0.is_empty() {
        return cfg.flow.q0.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cfg.flow.random_q0.max(1))
        .map(|_| (0..cfg.n).map(|_| rng.gen_range(0.0..TAU)).collect())
        .collect()
}

/// `flow`: normalize, then follow the torus orbit for `j = 0..=steps`.
///
/// Writes `trajectory.csv` (the orbit in original variables for the first
/// phase, using all steps), `torus_error.csv` (one row per phase and `j`)
/// and `torus_j{j}.csv` (samples with the pulled-back action, first phase).
pub fn cmd_flow(cfg: &RunConfig, ov: &Overrides, seed: u64) -> Result<Outcome, CliError> {
    let problem = cfg.build()?;
    let dir = ov.out_dir(cfg);
    let history = problem.normalize(ov.steps(cfg)).map_err(|p| p.source)?;
    let maps = step_maps(&history.generators(), &cfg.lie_options())?;
    let opts = cfg.integrator_options();
    let omega = problem.freq.omega.clone();
    let phases = initial_phases(cfg, seed);
    let (t_end, samples) = (cfg.flow.t_end, cfg.flow.samples);
    let mut out = Outcome::default();

    let start = apply_transformation(&maps, &ExtendedPoint::new(phases[0].clone(), vec![0.0; cfg.n], 0.0), Direction::ToOriginal);
    let traj = integrate(&problem.h0, &PhasePoint::new(start.q, start.p, 0.0), t_end, samples, &opts)?;
    out.write(&dir, "trajectory.csv", &traj.to_csv())?;

    let mut table = String::from("phase,steps,sup_p_norm,freq_drift\n");
    for j in 0..=maps.len() {
        let mut worst = (0.0f64, 0.0f64);
        for (i, q0) in phases.iter().enumerate() {
            let rep = torus_error(&problem.h0, &maps[..j], &omega, q0, t_end, samples, &opts)?;
            let _ = writeln!(table, "{i},{j},{:.17e},{:.17e}", rep.sup_p_norm, rep.freq_drift);
            worst = (worst.0.max(rep.sup_p_norm), worst.1.max(rep.freq_drift));
            if i == 0 {
                out.write(&dir, &format!("torus_j{j}.csv"), &rep.to_csv())?;
            }
        }
        out.lines.push(format!(
            "j = {j}: sup|p| {:.3e}, frequency drift {:.3e} (worst of {} phases)",
            worst.0,
            worst.1,
            phases.len()
        ));
    }
    out.write(&dir, "torus_error.csv", &table)?;
    Ok(out)
}
