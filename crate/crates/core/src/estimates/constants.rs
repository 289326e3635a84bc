//! The constants `S₁, S₂, M₀ … M₆, D, T` of the quantitative step lemma.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::EstimateError;
use crate::homological::{small_divisor_constants, LatticeSum};

/// Largest `d` the step lemma admits; with `δ ≤ d` the small-divisor lattice
/// sums are evaluated at the worst strip `(1 − 2/6)σ_* = (2/3)σ_*`.
pub const D_MAX: f64 = 1.0 / 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantInputs {
    pub n: usize,
    pub tau: f64,
    pub gamma: f64,
    pub nu: f64,
    pub sigma_star: f64,
    pub rho_star: f64,
    /// `|ω|`, the largest absolute frequency component. Only `T` uses it.
    pub omega_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantSet {
    pub inputs: ConstantInputs,
    pub s1: f64,
    pub s2: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub m6: f64,
    pub d: f64,
    pub t: f64,
    pub lattice: LatticeSum,
}

pub fn compute_constants(
    n: usize,
    tau: f64,
    gamma: f64,
    nu: f64,
    sigma_star: f64,
    rho_star: f64,
    omega_norm: f64,
) -> Result<ConstantSet, EstimateError> {
    let positive = [tau, gamma, sigma_star, rho_star, omega_norm];
    if n == 0 || positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(EstimateError::Input(format!(
            "constants need n ≥ 1 and positive τ, γ, σ_*, ρ_*, |ω|; got n={n}, τ={tau}, γ={gamma}, σ_*={sigma_star}, ρ_*={rho_star}, |ω|={omega_norm}"
        )));
    }
    if !(nu > 0.0 && nu <= 0.5) {
        return Err(EstimateError::Input(format!("ν = {nu} outside (0, 1/2]")));
    }
    let sd = small_divisor_constants(n, tau, gamma, nu, sigma_star, D_MAX, D_MAX)
        .map_err(|e| EstimateError::Input(e.to_string()))?;
    let nf = n as f64;
    let (s1, s2) = (sd.s1, sd.s2);
    let m0 = s1 * sigma_star.powf(-tau);
    let m1 = nf * s2 * sigma_star.powf(-(tau + 1.0));
    let m2 = nf * s1 * (1.0 + m1) * sigma_star.powf(-(tau + 1.0));
    let m3 = nf * nf * s2 * (1.0 + m1) * sigma_star.powf(-(tau + 1.0));
    let m4 = 2.0 * m1 * (1.0 + m1);
    let m5 = 16.0 * nf * (1.0 + m1) * m2 / (E * sigma_star);
    let m6 = 16.0 * nf * m2 / (E * sigma_star);
    let d = (8.0 * E * m2).max(m4).max(m5).max(m6);
    let e2 = E * E;
    let t = (m2 * rho_star)
        .max((m1 * e2 + 2.0 * m3) * sigma_star)
        .max(2.0 * omega_norm * (m0 * e2 + 2.0 * m2))
        / (d * e2 * rho_star * sigma_star);
    Ok(ConstantSet {
        inputs: ConstantInputs {
            n,
            tau,
            gamma,
            nu,
            sigma_star,
            rho_star,
            omega_norm,
        },
        s1,
        s2,
        m0,
        m1,
        m2,
        m3,
        m4,
        m5,
        m6,
        d,
        t,
        lattice: sd.lattice,
    })
}

impl ConstantSet {
    /// `(name, value)` pairs in a fixed order, for tables.
    pub fn table(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("S1", self.s1),
            ("S2", self.s2),
            ("M0", self.m0),
            ("M1", self.m1),
            ("M2", self.m2),
            ("M3", self.m3),
            ("M4", self.m4),
            ("M5", self.m5),
            ("M6", self.m6),
            ("D", self.d),
            ("T", self.t),
        ]
    }
}
