//! Measured norms of a normalization run against the step lemma's bounds.
//!
//! Every norm is the weighted Fourier norm at the analyticity width the
//! bound refers to, dominated by `K e^{−r ξ}` on the strip of half-width
//! `ζ_j`; the audit compares the `K`s. Hypothesis rows record whether the
//! lemma applies at that step. A bound row whose hypotheses fail is kept
//! but marked not applicable, and only applicable bound rows can fail.

use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::constants::{ConstantSet, D_MAX};
use super::schedule::{step_quantity, Schedule, ScheduleKind};
use super::EstimateError;
use crate::dynamics::chi_map;
use crate::normalizer::{LieOptions, NormalizeHistory};
use crate::series::{fourier_norm_at, FourierSeries, PolySeries, SeriesError};

pub const AUDIT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Hypothesis,
    Bound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub step: usize,
    pub name: String,
    pub kind: RowKind,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
    pub applicable: bool,
    /// Failed hypotheses this row depends on, `;`-separated.
    pub unmet: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub schedule: ScheduleKind,
    pub rows: Vec<AuditRow>,
}

impl AuditReport {
    /// Applicable bound rows whose measured value exceeds the bound.
    pub fn failures(&self) -> Vec<&AuditRow> {
        self.rows
            .iter()
            .filter(|r| r.kind == RowKind::Bound && r.applicable && !r.pass)
            .collect()
    }

    pub fn applicable_bounds(&self) -> usize {
        self.rows.iter().filter(|r| r.kind == RowKind::Bound && r.applicable).count()
    }

    pub fn unmet_hypotheses(&self) -> Vec<&AuditRow> {
        self.rows.iter().filter(|r| r.kind == RowKind::Hypothesis && !r.pass).collect()
    }

    /// Largest measured/bound ratio over applicable bound rows.
    pub fn max_ratio(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.kind == RowKind::Bound && r.applicable)
            .map(|r| r.ratio)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,name,kind,measured,bound,ratio,pass,applicable,unmet\n");
        for r in &self.rows {
            let kind = match r.kind {
                RowKind::Hypothesis => "hypothesis",
                RowKind::Bound => "bound",
            };
            out.push_str(&format!(
                "{},{},{},{:.10e},{:.10e},{:.6e},{},{},{}\n",
                r.step, r.name, kind, r.measured, r.bound, r.ratio, r.pass, r.applicable, r.unmet
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("audit serializes")
    }
}

fn vec_norm(v: &[FourierSeries], sigma: f64, nu: f64, rate: f64, zeta: f64) -> Result<f64, SeriesError> {
    v.iter().map(|s| fourier_norm_at(s, sigma, nu, rate, zeta)).sum()
}

fn poly_vec_norm(v: &[PolySeries], sigma: f64, rho: f64, nu: f64, rate: f64, zeta: f64) -> Result<f64, SeriesError> {
    v.iter().map(|s| s.norm_at(sigma, rho, nu, rate, zeta)).sum()
}

fn ratio(measured: f64, bound: f64) -> f64 {
    if measured == 0.0 {
        0.0
    } else {
        measured / bound
    }
}

struct Rows {
    rows: Vec<AuditRow>,
    hyp: BTreeMap<&'static str, bool>,
    step: usize,
}

impl Rows {
    fn hypothesis(&mut self, name: &'static str, measured: f64, bound: f64) {
        let pass = measured <= bound;
        self.hyp.insert(name, pass);
        self.rows.push(AuditRow {
            step: self.step,
            name: name.to_string(),
            kind: RowKind::Hypothesis,
            measured,
            bound,
            ratio: ratio(measured, bound),
            pass,
            applicable: true,
            unmet: String::new(),
        });
    }

    fn bound(&mut self, name: &str, measured: f64, bound: f64, requires: &[&str]) {
        let unmet: Vec<&str> = requires
            .iter()
            .copied()
            .filter(|h| !self.hyp.get(h).copied().unwrap_or(false))
            .collect();
        self.rows.push(AuditRow {
            step: self.step,
            name: name.to_string(),
            kind: RowKind::Bound,
            measured,
            bound,
            ratio: ratio(measured, bound),
            pass: measured <= bound,
            applicable: unmet.is_empty(),
            unmet: unmet.join(";"),
        });
    }
}

const H_C: &str = "C_operator";
const H_D: &str = "d_max";
const H_LIE: &str = "lie_convergence";
const H_STEP: &str = "step_condition";
const H_M: &str = "m_update";
const H_SCHED: &str = "schedule_admissible";

/// One row group per Hamiltonian of the run, using the schedule's
/// `(d_j, σ_j, ρ_j, m_j, ζ_j)` and the measured `ε_j`.
pub fn audit_run(
    history: &NormalizeHistory,
    consts: &ConstantSet,
    schedule: &Schedule,
    nu: f64,
    lie: &LieOptions,
) -> Result<AuditReport, EstimateError> {
    if schedule.states.len() < history.hamiltonians.len() {
        return Err(EstimateError::Input(format!(
            "schedule has {} states but the run has {} Hamiltonians",
            schedule.states.len(),
            history.hamiltonians.len()
        )));
    }
    let a = schedule.a;
    let tau = consts.inputs.tau;
    let n = consts.inputs.n as f64;
    let (m0, m1, m2, m3, m4, m5, m6, dc, t) =
        (consts.m0, consts.m1, consts.m2, consts.m3, consts.m4, consts.m5, consts.m6, consts.d, consts.t);
    let sigma_star = consts.inputs.sigma_star;
    let rho_star = consts.inputs.rho_star;
    let e2 = E * E;
    let mut rows = Rows { rows: Vec::new(), hyp: BTreeMap::new(), step: 0 };
    let mut chain_ok = true;

    for (j, h) in history.hamiltonians.iter().enumerate() {
        let u = schedule.states[j];
        let (d, sigma, rho, m, zeta) = (u.d, u.sigma, u.rho, u.m, u.zeta);
        rows.step = j;
        rows.hyp.clear();
        let eps = h.eps_measure(sigma, nu, a, zeta)?;

        let sched_ok = schedule.violations_through(j).next().is_none();
        rows.hypothesis(H_SCHED, if sched_ok { 0.0 } else { 1.0 }, 0.0);
        rows.hypothesis(H_C, h.c_operator_norm(sigma, nu, zeta)?, 1.0 / m);
        rows.hypothesis(H_D, d, D_MAX);
        let base = [H_SCHED, H_C, H_D];
        // the schedule's ε_j majorizes the measured one only while the induction holds
        rows.hyp.insert("chain", chain_ok);
        rows.bound("eps_vs_schedule", eps, u.eps, &[H_SCHED, "chain"]);

        let Some(rec) = history.steps.get(j) else {
            break;
        };
        let next = &history.hamiltonians[j + 1];
        rows.hypothesis(H_STEP, step_quantity(&u, a, dc, tau), 0.5);
        let q1 = eps * 8.0 * E * m2 / (a * a * m * d.powf(2.0 * tau + 3.0));
        rows.hypothesis(H_LIE, q1, 0.5);
        rows.hypothesis(H_M, eps * m6 / (a * a * m.powi(4) * d.powf(2.0 * tau + 3.0)), 0.5);
        let lie_req = [H_SCHED, H_C, H_D, H_LIE];
        let t_req = [H_SCHED, H_C, H_D, H_LIE, H_STEP];

        let s1 = (1.0 - d) * sigma;
        let s2 = (1.0 - 2.0 * d) * sigma;
        let s3 = (1.0 - 3.0 * d) * sigma;
        let gens = &rec.generators;

        let phi = fourier_norm_at(&gens.phi, s1, nu, a, zeta)?;
        rows.bound("phi", phi, eps * m0 / (a * d.powf(tau)), &base);
        let dphi_q: Vec<FourierSeries> = (0..h.dim()).map(|l| gens.phi.partial_q(l)).collect();
        let dphi = vec_norm(&dphi_q, s1, nu, a, zeta)?;
        rows.bound("dphi_q", dphi, eps * m1 / (a * d.powf(tau + 1.0)), &base);
        let dphi_xi = fourier_norm_at(&gens.phi.partial_xi(), s1, nu, a, zeta)?;
        rows.bound("dphi_xi", dphi_xi, eps * m0 / (a * d.powf(tau + 1.0) * zeta), &base);
        let b_hat = vec_norm(&rec.b_hat, s1, nu, a, zeta)?;
        rows.bound("B_hat", b_hat, eps * (1.0 + m1) / (a * m * d.powf(tau + 1.0)), &base);
        let a_hat = fourier_norm_at(&rec.a_hat, s1, nu, 2.0 * a, zeta)?;
        rows.bound(
            "A_hat",
            a_hat,
            eps * eps * m1 * (1.0 + m1) / (a * a * m * d.powf(2.0 * tau + 2.0)),
            &base,
        );
        let y = vec_norm(&gens.y, s2, nu, a, zeta)?;
        rows.bound("Y", y, eps * m2 * sigma_star / (a * a * m * d.powf(2.0 * tau + 1.0)), &base);
        let mut dy = 0.0;
        for yl in &gens.y {
            for r in 0..h.dim() {
                dy += fourier_norm_at(&yl.partial_q(r), s2, nu, a, zeta)?;
            }
        }
        rows.bound("dY_q", dy, eps * m3 / (a * a * m * d.powf(2.0 * tau + 2.0)), &base);

        let a_next = fourier_norm_at(&next.a, s3, nu, 2.0 * a, zeta)?;
        rows.bound("A_next", a_next, eps * eps * m4 / (a * a * m * d.powf(2.0 * tau + 2.0)), &lie_req);
        let b_next = vec_norm(&next.b, s3, nu, 2.0 * a, zeta)?;
        rows.bound(
            "B_next",
            b_next,
            eps * eps * m5 / (a.powi(3) * m * m * d.powf(3.0 * tau + 4.0)),
            &lie_req,
        );
        let mut dc_max: f64 = 0.0;
        for row in &rec.c_increment {
            for c in row {
                dc_max = dc_max.max(fourier_norm_at(c, s3, nu, a, zeta)?);
            }
        }
        rows.bound(
            "C_increment",
            dc_max,
            eps * m6 / (a * a * m.powi(3) * n * d.powf(2.0 * tau + 3.0)),
            &lie_req,
        );
        let eps_next = next.eps_measure(s3, nu, a, zeta)?;
        rows.bound(
            "eps_next",
            eps_next,
            dc * eps * eps / (a.powi(3) * m.powi(4) * d.powf(4.0 * (tau + 1.0))),
            &lie_req,
        );
        let slow_a = next.a.min_decay().unwrap_or(f64::INFINITY);
        rows.bound("rate_A_next", 2.0 * a, slow_a, &[]);
        let slow_b = next.b.iter().filter_map(FourierSeries::min_decay).fold(f64::INFINITY, f64::min);
        rows.bound("rate_B_next", 2.0 * a, slow_b, &[]);

        let (map, _) = chi_map(&gens.chi(), lie)?;
        let dq = poly_vec_norm(&map.dq, s3, rho, nu, a, zeta)?;
        let dp_chi = poly_vec_norm(&map.dp, s3, rho, nu, a, zeta)?;
        let deta_chi = map.deta.norm_at(s3, rho, nu, a, zeta)?;
        let fine = eps / (a * a * e2 * m);
        rows.bound("disp_q", dq, fine * 2.0 * m2 / d.powf(2.0 * tau + 1.0), &lie_req);
        rows.bound("disp_p_chi", dp_chi, fine * 2.0 * m3 * rho / d.powf(2.0 * tau + 2.0), &lie_req);
        rows.bound(
            "disp_eta_chi",
            deta_chi,
            fine * 2.0 * m2 * rho / (d.powf(2.0 * tau + 2.0) * zeta),
            &lie_req,
        );
        let disp_p = dphi + dp_chi;
        let disp_eta = dphi_xi + deta_chi;
        rows.bound(
            "disp_p",
            disp_p,
            fine * (m1 * e2 + 2.0 * m3) * rho / (d.powf(2.0 * tau + 2.0) * rho_star),
            &lie_req,
        );
        rows.bound(
            "disp_eta",
            disp_eta,
            fine * (m0 * e2 + 2.0 * m2) * rho / (d.powf(2.0 * tau + 2.0) * rho_star * zeta),
            &lie_req,
        );
        rows.bound("disp_q_T", dq, t * sigma * d, &t_req);
        rows.bound("disp_p_T", disp_p, t * rho * d, &t_req);
        rows.bound("disp_eta_T", disp_eta, t * rho * d, &t_req);

        chain_ok = chain_ok && [H_SCHED, H_C, H_D, H_LIE, H_STEP, H_M].iter().all(|k| rows.hyp[k]);
    }
    Ok(AuditReport {
        schema_version: AUDIT_SCHEMA_VERSION,
        schedule: schedule.kind,
        rows: rows.rows,
    })
}
