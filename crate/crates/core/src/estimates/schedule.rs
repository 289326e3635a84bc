//! The control sequence `u_j = (d_j, ε_j, ζ_j, m_j, ρ_j, σ_j)`.

use serde::{Deserialize, Serialize};

use super::constants::{ConstantSet, D_MAX};
use super::EstimateError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamState {
    pub d: f64,
    pub eps: f64,
    pub zeta: f64,
    pub m: f64,
    pub rho: f64,
    pub sigma: f64,
}

/// `u₀`: `ρ₀ = ρ/2`, `σ₀ = σ`, `m₀ = m/2`, `d₀ = 1/6`, `ε₀ = εM_f/ρ₀`,
/// `2|ω|ζ₀ = d₀σ₀`.
pub fn initial_state(eps: f64, m_f: f64, rho: f64, sigma: f64, m: f64, omega_norm: f64) -> ParamState {
    let rho0 = rho / 2.0;
    let d0 = D_MAX;
    ParamState {
        d: d0,
        eps: eps * m_f / rho0,
        zeta: d0 * sigma / (2.0 * omega_norm),
        m: m / 2.0,
        rho: rho0,
        sigma,
    }
}

/// `ε·D/(a³m⁴d^{4(τ+1)}) ≤ 1/2`.
pub fn check_step_condition(u: &ParamState, a: f64, d_const: f64, tau: f64) -> bool {
    step_quantity(u, a, d_const, tau) <= 0.5
}

/// Left side of the step condition; `0` when `ε = 0`.
pub fn step_quantity(u: &ParamState, a: f64, d_const: f64, tau: f64) -> f64 {
    if u.eps == 0.0 {
        return 0.0;
    }
    let den = a.powi(3) * u.m.powi(4) * u.d.powf(4.0 * (tau + 1.0));
    let direct = u.eps * d_const / den;
    if den > 0.0 && direct.is_finite() && direct > 0.0 {
        return direct;
    }
    // far along a sequence both ε and d^{4(τ+1)} underflow
    (u.eps.ln() + d_const.ln() - 3.0 * a.ln() - 4.0 * u.m.ln() - 4.0 * (tau + 1.0) * u.d.ln()).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// `ε_j = ε₀j^{−8(τ+1)}` for `j ≥ 1` and `d_j` solved from the step recursion.
    Paper,
    /// `d_{j+1} = d_j/2` and `ε_{j+1} = Dε_j²/(a³m_j⁴d_j^{4(τ+1)})`.
    Geometric,
}

impl std::str::FromStr for ScheduleKind {
    type Err = EstimateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Self::Paper),
            "geometric" => Ok(Self::Geometric),
            other => Err(EstimateError::Input(format!("unknown schedule '{other}'"))),
        }
    }
}

/// An intermediate inequality of the convergence argument, evaluated on
/// the sequence. These are not hypotheses of the step lemma, so a failing
/// claim does not make the schedule inadmissible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub step: usize,
    pub claim: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// A named inequality that failed at some step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub step: usize,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "step {}: {} ({:.6e} vs {:.6e})", self.step, self.inequality, self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub a: f64,
    pub tau: f64,
    pub omega_norm: f64,
    pub states: Vec<ParamState>,
    pub sigma_star: f64,
    pub rho_star: f64,
    pub m_star: f64,
    /// `𝒜 = (Dε₀/(a³m_*⁴))^{1/(4(τ+1))}`.
    pub script_a: f64,
    /// Every failed constraint over the returned states and the look-ahead.
    pub violations: Vec<Violation>,
    /// Paper-schedule claims that fail somewhere, each at its first failure.
    pub failed_claims: Vec<ClaimCheck>,
}

impl Schedule {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }

    /// Violations up to and including step `j`.
    pub fn violations_through(&self, j: usize) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.step <= j)
    }
}

/// States beyond the requested ones that are still checked, so that the
/// lower limits `σ_*, ρ_*, m_*` are tested on a long stretch of the sequence.
pub const LOOKAHEAD: usize = 256;

/// Builds `u_0 … u_steps`; see [`schedule_unchecked`] for the variant that
/// reports rather than rejects violations.
pub fn schedule(
    u0: ParamState,
    a: f64,
    omega_norm: f64,
    consts: &ConstantSet,
    steps: usize,
    kind: ScheduleKind,
) -> Result<Schedule, EstimateError> {
    let s = schedule_unchecked(u0, a, omega_norm, consts, steps, kind);
    match s.violations.first() {
        Some(v) => Err(EstimateError::Inadmissible(v.clone())),
        None => Ok(s),
    }
}

pub fn schedule_unchecked(
    u0: ParamState,
    a: f64,
    omega_norm: f64,
    consts: &ConstantSet,
    steps: usize,
    kind: ScheduleKind,
) -> Schedule {
    let tau = consts.inputs.tau;
    let dc = consts.d;
    let e4 = 4.0 * (tau + 1.0);
    let sigma_star = u0.sigma / 4.0;
    let rho_star = u0.rho / 4.0;
    let m_star = u0.m / 2.0;
    let script_a = (dc * u0.eps / (a.powi(3) * m_star.powi(4))).powf(1.0 / e4);
    let mut violations = Vec::new();
    let mut check = |step: usize, name: &str, lhs: f64, rhs: f64, ok: bool| {
        if !ok {
            violations.push(Violation { step, inequality: name.to_string(), lhs, rhs });
        }
    };

    if !(a > 0.0 && a < 1.0) {
        check(0, "0 < a < 1", a, 1.0, false);
    }
    if kind == ScheduleKind::Paper {
        let lhs = dc * u0.eps / (a.powi(3) * m_star.powi(4));
        let rhs = 12f64.powf(-e4);
        check(0, "Dε₀/(a³m_*⁴) ≤ 12^{−4(τ+1)}", lhs, rhs, lhs <= rhs);
    }

    let total = steps + LOOKAHEAD;
    let mut states = vec![u0];
    for j in 0..total {
        let u = states[j];
        let sigma = (1.0 - 3.0 * u.d) * u.sigma;
        let rho = (1.0 - 3.0 * u.d) * u.rho;
        let m = u.m * (1.0 - u.d.powf(2.0 * tau + 1.0));
        let (d, eps) = match kind {
            ScheduleKind::Paper => {
                let jn = (j + 1) as f64;
                let d = (dc * u0.eps / (a.powi(3) * m.powi(4))).powf(1.0 / e4) * (jn + 1.0).powi(2) / jn.powi(4);
                (d, u0.eps * jn.powf(-2.0 * e4))
            }
            ScheduleKind::Geometric => (u.d / 2.0, u.eps * step_quantity(&u, a, dc, tau)),
        };
        states.push(ParamState {
            d,
            eps,
            zeta: d * sigma / (2.0 * omega_norm),
            m,
            rho,
            sigma,
        });
    }
    let mut lookahead_q = None;
    for (j, u) in states.iter().enumerate() {
        let q = step_quantity(u, a, dc, tau);
        if j <= steps {
            check(j, "εD/(a³m⁴d^{4(τ+1)}) ≤ 1/2", q, 0.5, q <= 0.5);
        } else if q > 0.5 && lookahead_q.is_none() {
            lookahead_q = Some((j, q));
        }
        check(j, "d_j ≤ 1/6", u.d, D_MAX, u.d <= D_MAX);
        check(j, "σ_j ≥ σ_*", sigma_star, u.sigma, u.sigma >= sigma_star);
        check(j, "ρ_j ≥ ρ_*", rho_star, u.rho, u.rho >= rho_star);
        check(j, "m_j ≥ m_*", m_star, u.m, u.m >= m_star);
        if j > 0 {
            let p = &states[j - 1];
            check(j, "d_j < d_{j−1}", u.d, p.d, u.d < p.d);
            check(j, "ε_j ≤ ε_{j−1}", u.eps, p.eps, u.eps <= p.eps);
        }
    }
    let mut failed_claims = Vec::new();
    // With ε_j = ε₀j^{−8(τ+1)} the step condition reduces to
    // (j/(j+1))^{8(τ+1)} ≤ 1/2, which fails for all large j; beyond the
    // requested steps it is reported, not enforced.
    if let Some((j, q)) = lookahead_q {
        failed_claims.push(ClaimCheck {
            step: j,
            claim: "εD/(a³m⁴d^{4(τ+1)}) ≤ 1/2 beyond the requested steps".into(),
            lhs: q,
            rhs: 0.5,
            holds: false,
        });
    }
    if kind == ScheduleKind::Paper {
        let mut claim = |step: usize, name: &str, lhs: f64, rhs: f64, holds: bool| {
            if !holds && !failed_claims.iter().any(|c: &ClaimCheck| c.claim == name) {
                failed_claims.push(ClaimCheck { step, claim: name.to_string(), lhs, rhs, holds });
            }
        };
        for (j, u) in states.iter().enumerate().skip(1) {
            let bound = 2.0 * script_a / (j * j) as f64;
            claim(j, "d_j ≤ 2𝒜/j²", u.d, bound, u.d <= bound);
        }
        let sum: f64 = states.iter().skip(1).map(|u| u.d).sum();
        let limit = (std::f64::consts::PI / 6.0).powi(2);
        claim(total, "Σ_{j≥1} d_j < (π/6)²", sum, limit, sum < limit);
        claim(0, "𝒜 ≤ 1/12", script_a, 1.0 / 12.0, script_a <= 1.0 / 12.0);
    }
    // report each inequality once, at its first failure
    let mut seen = std::collections::HashSet::new();
    violations.retain(|v| seen.insert(v.inequality.clone()));
    states.truncate(steps + 1);
    Schedule {
        kind,
        a,
        tau,
        omega_norm,
        states,
        sigma_star,
        rho_star,
        m_star,
        script_a,
        violations,
        failed_claims,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::compute_constants;

    fn consts() -> ConstantSet {
        compute_constants(2, 1.2, 0.4, 0.25, 0.125, 0.0625, 1.618).unwrap()
    }

    fn admissible_u0(c: &ConstantSet, fraction: f64, a: f64) -> ParamState {
        let mut u = initial_state(0.0, 1.0, 0.5, 0.5, 0.9, 1.618);
        let limit = 12f64.powf(-4.0 * 2.2) * a.powi(3) * (u.m / 2.0).powi(4) / c.d;
        u.eps = fraction * limit;
        u
    }

    #[test]
    fn step_condition_edges() {
        let u = ParamState { d: 0.1, eps: 0.0, zeta: 0.0, m: 0.5, rho: 0.1, sigma: 0.1 };
        assert!(check_step_condition(&u, 0.1, 1e10, 1.2));
        let tiny = ParamState { d: 1e-30, eps: 1e-10, ..u };
        assert!(!check_step_condition(&tiny, 0.1, 1e10, 1.2));
        // choose ε so that the left side is exactly 1/2
        let eps = 0.5 * 0.5f64.powi(3) * 0.5f64.powi(4) * 0.5f64.powi(8) / 2.0;
        let edge = ParamState { d: 0.5, eps, zeta: 0.0, m: 0.5, rho: 0.1, sigma: 0.1 };
        assert_eq!(step_quantity(&edge, 0.5, 2.0, 1.0), 0.5);
        assert!(check_step_condition(&edge, 0.5, 2.0, 1.0));
    }

    #[test]
    fn paper_schedule_admissible_far_below_threshold() {
        let c = consts();
        let u0 = admissible_u0(&c, 1e-6, 0.1);
        let s = schedule(u0, 0.1, 1.618, &c, 10, ScheduleKind::Paper).unwrap();
        assert_eq!(s.states.len(), 11);
        for (j, u) in s.states.iter().enumerate() {
            assert!((2.0 * 1.618 * u.zeta - u.d * u.sigma).abs() <= 1e-15 * u.d * u.sigma);
            assert!(check_step_condition(u, 0.1, c.d, 1.2), "j={j}");
            if j >= 1 {
                assert!(u.d < s.states[j - 1].d);
            }
        }
        assert!(s.script_a <= 1.0 / 12.0);
        // d_j ≤ 2𝒜/j² is false at j = 1: there (j+1)²/j⁴ = 4
        let bound_claim = s.failed_claims.iter().find(|c| c.claim == "d_j ≤ 2𝒜/j²").unwrap();
        assert_eq!(bound_claim.step, 1);
        // and the majorant sequence breaks the step condition once (j/(j+1))^{8(τ+1)} > 1/2
        let first_bad = (1..).find(|&j: &usize| (j as f64 / (j + 1) as f64).powf(17.6) > 0.5).unwrap();
        let cond = s.failed_claims.iter().find(|c| c.claim.starts_with("εD/")).unwrap();
        assert_eq!(cond.step, first_bad);
        assert!(s.failed_claims.iter().all(|c| !c.claim.starts_with("Σ")));
    }

    #[test]
    fn paper_schedule_at_threshold_names_failure() {
        let c = consts();
        let u0 = admissible_u0(&c, 1.0, 0.1);
        let s = schedule_unchecked(u0, 0.1, 1.618, &c, 4, ScheduleKind::Paper);
        // d₁ = 4𝒜 can exceed d₀ = 1/6 at the boundary of the admissible range
        assert!(s.violations.iter().any(|v| v.inequality.starts_with("d_j < d_{j−1}")));
        let err = schedule(u0, 0.1, 1.618, &c, 4, ScheduleKind::Paper).unwrap_err();
        assert!(err.to_string().contains("step"));
    }

    #[test]
    fn rejects_large_eps() {
        let c = consts();
        let mut u0 = admissible_u0(&c, 1.0, 0.1);
        u0.eps = 1e-3;
        let err = schedule(u0, 0.1, 1.618, &c, 4, ScheduleKind::Paper).unwrap_err();
        assert!(err.to_string().contains("12^{−4(τ+1)}"), "{err}");
    }

    #[test]
    fn geometric_halves() {
        let c = consts();
        let u0 = admissible_u0(&c, 1e-3, 0.1);
        let s = schedule(u0, 0.1, 1.618, &c, 5, ScheduleKind::Geometric).unwrap();
        for w in s.states.windows(2) {
            assert_eq!(w[1].d, w[0].d / 2.0);
            assert!(w[1].eps < w[0].eps);
        }
    }
}
