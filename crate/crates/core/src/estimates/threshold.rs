//! The admissible perturbation size `ε_a`.

use serde::{Deserialize, Serialize};

use super::constants::ConstantSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub eps_a: f64,
    /// `ρa³m⁴(2⁹·12^{4(τ+1)}·D·M_f)^{−1}`.
    pub first_branch: f64,
    /// `ε̃`, the bound keeping `|C⁽⁰⁾v| ≤ m₀⁻¹|v|`.
    pub eps_tilde: f64,
    /// `(2⁹·12^{4(τ+1)}·D)^{−1}`.
    pub coefficient: f64,
    pub first_branch_binds: bool,
}

/// `ε̃ = ρ²(16M_f n)^{−1}(√(m²‖Γ‖∞² + 12) − m‖Γ‖∞)`.
pub fn eps_tilde(n: usize, m: f64, rho: f64, m_f: f64, gamma_inf_norm: f64) -> f64 {
    let g = m * gamma_inf_norm;
    // rationalized to avoid cancellation when m‖Γ‖∞ is large
    rho * rho / (16.0 * m_f * n as f64) * 12.0 / ((g * g + 12.0).sqrt() + g)
}

/// `‖Γ‖∞ = max_i Σ_j |Γ_ij|`.
pub fn gamma_inf_norm(gamma: &[Vec<f64>]) -> f64 {
    gamma.iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `σ` does not enter the formula directly; it is carried by the constants
/// through `σ_* = σ/4`.
#[allow(clippy::too_many_arguments)]
pub fn threshold_eps(
    n: usize,
    tau: f64,
    m: f64,
    rho: f64,
    _sigma: f64,
    m_f: f64,
    gamma_inf_norm: f64,
    a: f64,
    consts: &ConstantSet,
) -> Threshold {
    let coefficient = 1.0 / (2f64.powi(9) * 12f64.powf(4.0 * (tau + 1.0)) * consts.d);
    let first_branch = rho * a.powi(3) * m.powi(4) * coefficient / m_f;
    let tilde = eps_tilde(n, m, rho, m_f, gamma_inf_norm);
    Threshold {
        eps_a: first_branch.min(tilde),
        first_branch,
        eps_tilde: tilde,
        coefficient,
        first_branch_binds: first_branch <= tilde,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::compute_constants;

    fn consts() -> ConstantSet {
        compute_constants(2, 1.2, 0.4, 0.25, 0.125, 0.0625, 1.618).unwrap()
    }

    #[test]
    fn cubic_in_a() {
        let c = consts();
        let t1 = threshold_eps(2, 1.2, 0.9, 0.5, 0.5, 1.5, 1.1, 0.1, &c);
        let t2 = threshold_eps(2, 1.2, 0.9, 0.5, 0.5, 1.5, 1.1, 0.2, &c);
        assert!(t1.first_branch_binds && t2.first_branch_binds);
        assert!((t2.eps_a / t1.eps_a - 8.0).abs() < 1e-12);
    }

    #[test]
    fn tilde_limit() {
        let lim = 0.25 * 12f64.sqrt() / (16.0 * 1.5 * 2.0);
        assert!((eps_tilde(2, 1e-12, 0.5, 1.5, 1.0) / lim - 1.0).abs() < 1e-11);
        assert!(eps_tilde(2, 0.99, 0.5, 1.5, 1e6) > 0.0);
        let g = 0.9 * 1.1;
        let naive = 0.25 / (16.0 * 1.5 * 2.0) * ((g * g + 12.0f64).sqrt() - g);
        assert!((eps_tilde(2, 0.9, 0.5, 1.5, 1.1) - naive).abs() < 1e-15);
    }

    #[test]
    fn inf_norm() {
        assert_eq!(gamma_inf_norm(&[vec![1.0, -0.1], vec![0.1, 0.8]]), 1.1);
    }
}
