//! Run configuration and the problem it describes.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::IntegratorOptions;
use crate::estimates::{
    audit_run, compute_constants, gamma_inf_norm, initial_state, schedule_unchecked, threshold_eps, AuditReport,
    ConstantSet, EstimateError, ParamState, Schedule, ScheduleKind, Threshold,
};
use crate::hamiltonian::{induction_basis, HamiltonianError, KolmogorovHamiltonian, Perturbation};
use crate::homological::{DiophantineFrequency, HomologicalError};
use crate::normalizer::{normalize, LieOptions, NormalizeHistory, NormalizeOptions, PartialRun, StepOptions};
use crate::series::{PolySeries, DEFAULT_NU};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Homological(#[from] HomologicalError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub lie_tol: f64,
    pub lie_max_terms: usize,
    pub contraction_limit: f64,
    /// `normalize` stops once `max(‖A‖,‖B‖)` is below this.
    pub floor: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let lie = LieOptions::default();
        let integ = IntegratorOptions::default();
        Self {
            lie_tol: lie.tol,
            lie_max_terms: lie.max_terms,
            contraction_limit: lie.contraction_limit,
            floor: NormalizeOptions::default().floor,
            rtol: integ.rtol,
            atol: integ.atol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub t_end: f64,
    pub samples: usize,
    /// Explicit torus phases; when empty, `random_q0` phases are drawn from `--seed`.
    pub q0: Vec<Vec<f64>>,
    pub random_q0: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            t_end: 200.0,
            samples: 400,
            q0: Vec::new(),
            random_q0: 1,
        }
    }
}

fn default_schema() -> u32 {
    CONFIG_SCHEMA_VERSION
}
fn default_steps() -> usize {
    4
}
fn default_k_modes() -> u32 {
    20
}
fn default_k_checked() -> u32 {
    40
}
fn default_nu() -> f64 {
    DEFAULT_NU
}
fn default_half() -> f64 {
    0.5
}
fn default_schedule() -> ScheduleKind {
    ScheduleKind::Geometric
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub n: usize,
    #[serde(rename = "Gamma")]
    pub gamma: Vec<Vec<f64>>,
    /// Declared `m` with `|Γv| ≤ m⁻¹|v|`.
    pub m: f64,
    /// Either `omega` or `p_hat` (then `ω = ΓP̂`).
    #[serde(default)]
    pub omega: Option<Vec<f64>>,
    #[serde(default)]
    pub p_hat: Option<Vec<f64>>,
    pub tau: f64,
    pub perturbation: Perturbation,
    pub eps: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_k_modes")]
    pub k_modes: u32,
    #[serde(default = "default_k_checked")]
    pub k_checked: u32,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_half")]
    pub rho: f64,
    #[serde(default = "default_half")]
    pub sigma: f64,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleKind,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

/// Largest `|λ|` of a symmetric matrix, i.e. its Euclidean operator norm.
pub fn spectral_norm(gamma: &[Vec<f64>]) -> f64 {
    let n = gamma.len();
    let m = DMatrix::from_fn(n, n, |i, j| gamma[i][j]);
    m.symmetric_eigenvalues().iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn omega(&self) -> Vec<f64> {
        match (&self.omega, &self.p_hat) {
            (Some(w), _) => w.clone(),
            (None, Some(p)) => self.gamma.iter().map(|row| row.iter().zip(p).map(|(g, x)| g * x).sum()).collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let n = self.n;
        if n == 0 {
            return bad("n must be positive".into());
        }
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return bad(format!("schema_version {} is not {}", self.schema_version, CONFIG_SCHEMA_VERSION));
        }
        if self.gamma.len() != n || self.gamma.iter().any(|r| r.len() != n) {
            return bad(format!("Gamma must be {n}×{n}"));
        }
        for i in 0..n {
            for j in 0..i {
                if self.gamma[i][j] != self.gamma[j][i] {
                    return bad(format!("Gamma is not symmetric at ({i},{j})"));
                }
            }
        }
        if !(self.m > 0.0 && self.m < 1.0) {
            return bad(format!("m = {} outside (0,1)", self.m));
        }
        let norm = spectral_norm(&self.gamma);
        if norm > 1.0 / self.m {
            return bad(format!("|Γv| ≤ m⁻¹|v| fails: ‖Γ‖₂ = {norm} > 1/m = {}", 1.0 / self.m));
        }
        match (&self.omega, &self.p_hat) {
            (Some(_), Some(_)) => return bad("give omega or p_hat, not both".into()),
            (None, None) => return bad("one of omega, p_hat is required".into()),
            (Some(w), None) if w.len() != n => return bad(format!("omega must have {n} components")),
            (None, Some(p)) if p.len() != n => return bad(format!("p_hat must have {n} components")),
            _ => {}
        }
        let a = self.perturbation.decay;
        if !(a > 0.0 && a < 1.0) {
            return bad(format!("decay rate a = {a} outside (0,1)"));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps = {} must be finite and ≥ 0", self.eps));
        }
        if !(self.nu > 0.0 && self.nu <= 0.5) {
            return bad(format!("nu = {} outside (0,1/2]", self.nu));
        }
        if !(self.rho > 0.0 && self.sigma > 0.0) {
            return bad("rho and sigma must be positive".into());
        }
        if self.k_checked < self.k_modes {
            return bad("k_checked must be at least k_modes".into());
        }
        if self.flow.q0.iter().any(|q| q.len() != n) {
            return bad(format!("every flow.q0 entry needs {n} angles"));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Problem, ConfigError> {
        self.validate()?;
        let omega = self.omega();
        let freq = DiophantineFrequency::new(omega.clone(), self.tau, self.k_checked)?;
        let f = self.perturbation.to_poly(self.n, self.k_modes)?;
        let h0 = induction_basis(omega, &self.gamma, &f, self.eps)?;
        let omega_norm = freq.omega_norm();
        let zeta0 = crate::estimates::D_MAX * self.sigma / (2.0 * omega_norm);
        let m_f = f.norm_at(self.sigma, self.rho, self.nu, self.perturbation.decay, zeta0)
            .map_err(HamiltonianError::from)?;
        let u0 = initial_state(self.eps, m_f, self.rho, self.sigma, self.m, omega_norm);
        let consts = compute_constants(self.n, self.tau, freq.gamma, self.nu, u0.sigma / 4.0, u0.rho / 4.0, omega_norm)?;
        let threshold = threshold_eps(
            self.n,
            self.tau,
            self.m,
            self.rho,
            self.sigma,
            m_f,
            gamma_inf_norm(&self.gamma),
            self.perturbation.decay,
            &consts,
        );
        Ok(Problem {
            config: self.clone(),
            freq,
            f,
            h0,
            m_f,
            u0,
            consts,
            threshold,
        })
    }

    pub fn lie_options(&self) -> LieOptions {
        LieOptions {
            tol: self.tolerances.lie_tol,
            max_terms: self.tolerances.lie_max_terms,
            contraction_limit: self.tolerances.contraction_limit,
        }
    }

    pub fn normalize_options(&self, steps: usize) -> NormalizeOptions {
        NormalizeOptions {
            max_steps: steps,
            step: StepOptions {
                lie: self.lie_options(),
                norm_sigma: self.sigma,
                nu: self.nu,
            },
            floor: self.tolerances.floor,
        }
    }

    pub fn integrator_options(&self) -> IntegratorOptions {
        IntegratorOptions {
            rtol: self.tolerances.rtol,
            atol: self.tolerances.atol,
            ..Default::default()
        }
    }
}

/// A validated configuration with everything derived from it.
#[derive(Clone, Debug)]
pub struct Problem {
    pub config: RunConfig,
    pub freq: DiophantineFrequency,
    pub f: PolySeries,
    pub h0: KolmogorovHamiltonian,
    pub m_f: f64,
    pub u0: ParamState,
    pub consts: ConstantSet,
    pub threshold: Threshold,
}

impl Problem {
    pub fn decay(&self) -> f64 {
        self.config.perturbation.decay
    }

    pub fn normalize(&self, steps: usize) -> Result<NormalizeHistory, PartialRun> {
        normalize(&self.h0, &self.freq, &self.config.normalize_options(steps))
    }

    pub fn schedule(&self, steps: usize, kind: ScheduleKind) -> Schedule {
        schedule_unchecked(self.u0, self.decay(), self.freq.omega_norm(), &self.consts, steps, kind)
    }

    /// Audit against the configured schedule kind, sized to the run.
    pub fn audit(&self, history: &NormalizeHistory) -> Result<(Schedule, AuditReport), EstimateError> {
        let steps = history.steps.len();
        let sched = self.schedule(steps, self.config.schedule);
        let report = audit_run(history, &self.consts, &sched, self.config.nu, &self.config.lie_options())?;
        Ok((sched, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: &str = r#"{
        "n": 2,
        "Gamma": [[1.0, 0.1], [0.1, 0.8]],
        "m": 0.9,
        "omega": [1.0, 1.618033988749895],
        "tau": 1.2,
        "perturbation": {"decay": 0.1, "terms": [{"k": [1, 0], "amplitude": 1.0}]},
        "eps": 0.001
    }"#;

    #[test]
    fn defaults_and_build() {
        let cfg = RunConfig::from_json(GOLDEN).unwrap();
        assert_eq!(cfg.k_modes, 20);
        assert_eq!(cfg.steps, 4);
        let p = cfg.build().unwrap();
        assert!(p.threshold.coefficient < 1e-9);
        assert_eq!(p.u0.d, 1.0 / 6.0);
    }

    #[test]
    fn parse_error_has_line() {
        let text = GOLDEN.replace("\"m\": 0.9,", "\"m\": 0.9");
        match RunConfig::from_json(&text) {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gamma_hypothesis_checked() {
        let text = GOLDEN.replace("[[1.0, 0.1], [0.1, 0.8]]", "[[1.2, 0.1], [0.1, 0.8]]");
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("1/m"), "{err}");
        let text = GOLDEN.replace("[[1.0, 0.1], [0.1, 0.8]]", "[[1.0, 0.1], [0.2, 0.8]]");
        assert!(RunConfig::from_json(&text).unwrap_err().to_string().contains("symmetric"));
    }

    #[test]
    fn p_hat_gives_omega() {
        let text = GOLDEN.replace("\"omega\": [1.0, 1.618033988749895]", "\"p_hat\": [1.0, 2.0]");
        let cfg = RunConfig::from_json(&text).unwrap();
        assert_eq!(cfg.omega(), vec![1.2, 1.7000000000000002]);
    }

    #[test]
    fn spectral_norm_known() {
        assert!((spectral_norm(&[vec![2.0, 1.0], vec![1.0, 2.0]]) - 3.0).abs() < 1e-12);
    }
}
