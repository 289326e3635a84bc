//! The time-dependent homological equation `∂_ξφ + ∂_ωφ = ψ`.
//!
//! Mode by mode this is `iλφ_k + φ_k' = ψ_k` with `λ = ⟨ω,k⟩`. For an
//! exp-poly forcing with strictly negative rates the solution vanishing at
//! `ξ → +∞` is again an exp-poly with the same rates, obtained by
//! undetermined coefficients. This works for `k = 0` too, which is what
//! keeps the frequency fixed along the scheme.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{modes_in_ball, shell_count, ExpPoly, FourierSeries, Mode, NormEnvelope, SeriesError, Term};

#[derive(Debug, Error)]
pub enum HomologicalError {
    #[error("exact resonance ⟨ω,k⟩ = 0 at k = {0:?}")]
    Resonance(Vec<i32>),
    #[error("forcing term with Re β = {0} does not decay; no decaying solution")]
    NotDecaying(f64),
    #[error("mode |k| = {l1} lies beyond the Diophantine check radius {k_checked}")]
    Unchecked { l1: u32, k_checked: u32 },
    #[error("parameter constraint violated: {0}")]
    Constraint(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// A frequency vector with a verified Diophantine constant up to `k_checked`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineFrequency {
    pub omega: Vec<f64>,
    pub tau: f64,
    pub gamma: f64,
    pub k_checked: u32,
}

impl DiophantineFrequency {
    pub fn new(omega: Vec<f64>, tau: f64, k_checked: u32) -> Result<Self, HomologicalError> {
        let n = omega.len();
        if !(tau > n as f64 - 1.0) {
            return Err(HomologicalError::Constraint(format!("τ = {tau} must exceed n − 1 = {}", n - 1)));
        }
        let gamma = estimate_gamma(&omega, tau, k_checked)?;
        Ok(Self {
            omega,
            tau,
            gamma,
            k_checked,
        })
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    /// `|ω|` as used in `|⟨ω,k⟩| ≤ |k||ω|` with the ℓ¹ mode norm, i.e. the max-norm.
    pub fn omega_norm(&self) -> f64 {
        self.omega.iter().fold(0.0f64, |m, w| m.max(w.abs()))
    }
}

/// `γ = min_{0<|k|≤K} |⟨ω,k⟩|·|k|^τ` by exhaustive scan.
pub fn estimate_gamma(omega: &[f64], tau: f64, k_max: u32) -> Result<f64, HomologicalError> {
    let mut gamma = f64::INFINITY;
    for k in modes_in_ball(omega.len(), k_max) {
        let lambda = k.dot(omega).abs();
        let scale: f64 = k.0.iter().zip(omega).map(|(&ki, &w)| (ki as f64 * w).abs()).sum();
        if lambda <= 64.0 * f64::EPSILON * scale {
            return Err(HomologicalError::Resonance(k.0));
        }
        gamma = gamma.min(lambda * (k.l1() as f64).powf(tau));
    }
    Ok(gamma)
}

/// The decaying solution of `iλφ + φ' = ψ` for one Fourier mode.
pub fn mode_solve(psi: &ExpPoly, lambda: f64) -> Result<ExpPoly, HomologicalError> {
    let mut out = Vec::new();
    for t in psi.terms() {
        if !(t.rate.re < 0.0) {
            return Err(HomologicalError::NotDecaying(t.rate.re));
        }
        // (iλ+β)P + P' = c ξ^m with deg P = m, solved from the top power down
        let s = t.rate + Complex64::new(0.0, lambda);
        let m = t.power as usize;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); m + 1];
        coeffs[m] = t.coeff / s;
        for j in (0..m).rev() {
            coeffs[j] = -((j + 1) as f64) * coeffs[j + 1] / s;
        }
        for (j, c) in coeffs.into_iter().enumerate() {
            out.push(Term::new(c, j as u32, t.rate));
        }
    }
    Ok(ExpPoly::from_terms(out)?)
}

/// `−∫₀^∞ ψ(x) e^{iλx} dx` in closed form.
pub fn boundary_value(psi: &ExpPoly, lambda: f64) -> Result<Complex64, HomologicalError> {
    let mut total = Complex64::new(0.0, 0.0);
    for t in psi.terms() {
        if !(t.rate.re < 0.0) {
            return Err(HomologicalError::NotDecaying(t.rate.re));
        }
        let s = t.rate + Complex64::new(0.0, lambda);
        let m = t.power as i32;
        let fact: f64 = (1..=t.power).map(|i| i as f64).product();
        // ∫₀^∞ x^m e^{sx} dx = m! / (−s)^{m+1}
        total -= t.coeff * fact / (-s).powi(m + 1);
    }
    Ok(total)
}

/// Solves `∂_ξφ + ∂_ωφ = ψ` mode by mode, including the average `k = 0`.
pub fn solve_homological(
    psi: &FourierSeries,
    freq: &DiophantineFrequency,
) -> Result<FourierSeries, HomologicalError> {
    if psi.dim() != freq.dim() {
        return Err(SeriesError::DimensionMismatch {
            left: psi.dim(),
            right: freq.dim(),
        }
        .into());
    }
    let real = psi.is_real();
    let phi = psi.map_coeffs(|k, c| {
        if k.l1() > freq.k_checked {
            return Err(HomologicalError::Unchecked {
                l1: k.l1(),
                k_checked: freq.k_checked,
            });
        }
        mode_solve(c, k.dot(&freq.omega))
    })?;
    Ok(phi.with_real(real))
}

/// `∂_ξφ + ∂_ωφ − ψ`.
pub fn homological_residual(
    phi: &FourierSeries,
    psi: &FourierSeries,
    omega: &[f64],
) -> Result<FourierSeries, SeriesError> {
    phi.partial_xi().add(&phi.partial_omega(omega))?.sub(psi)
}

/// Truncated lattice sum `Σ_{k≠0} e^{-c|k|}` with a rigorous tail bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSum {
    pub partial: f64,
    pub tail: f64,
    pub shells: u32,
}

impl LatticeSum {
    /// Partial sum plus tail bound: an upper bound on the full sum.
    pub fn value(&self) -> f64 {
        self.partial + self.tail
    }
}

pub fn lattice_sum(dim: usize, c: f64) -> LatticeSum {
    assert!(c > 0.0, "lattice sum needs a positive exponent");
    let n = dim as f64;
    let mut partial = 0.0;
    let mut r: u32 = 0;
    loop {
        r += 1;
        partial += shell_count(dim, r) * (-c * r as f64).exp();
        // N(s) ≤ 2ⁿ C(s+n−1, n−1) =: U(s), and U(s+1)/U(s) = (s+n)/(s+1) decreases in s
        let next = r + 1;
        let ratio = (-c).exp() * (next as f64 + n) / (next as f64 + 1.0);
        if ratio < 1.0 {
            let first = 2f64.powi(dim as i32) * binom_f(next as f64 + n - 1.0, dim - 1) * (-c * next as f64).exp();
            let tail = first / (1.0 - ratio);
            if tail < 1e-13 * partial {
                return LatticeSum {
                    partial,
                    tail,
                    shells: r,
                };
            }
        }
    }
}

fn binom_f(top: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (top - i as f64) / (i + 1) as f64)
}

/// `S₁` and `S₂` of the homological estimate at `(σ, d, δ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallDivisorConstants {
    pub s1: f64,
    pub s2: f64,
    pub lattice: LatticeSum,
}

pub fn small_divisor_constants(
    dim: usize,
    tau: f64,
    gamma: f64,
    nu: f64,
    sigma: f64,
    d: f64,
    delta: f64,
) -> Result<SmallDivisorConstants, HomologicalError> {
    if !(d > 0.0 && d < 1.0 - delta) {
        return Err(HomologicalError::Constraint(format!("need 0 < d < 1 − δ, got d = {d}, δ = {delta}")));
    }
    if !(nu > 0.0 && nu <= 0.5) || !(sigma > 0.0) {
        return Err(HomologicalError::Constraint(format!("need ν ∈ (0,1/2] and σ > 0, got ν = {nu}, σ = {sigma}")));
    }
    let e = std::f64::consts::E;
    let lattice = lattice_sum(dim, 2.0 * nu * (1.0 - delta - d) * sigma);
    let sum = lattice.value();
    let s1 = 4.0 * e * e + 2.0 * (gamma + e) * (tau / e).powf(tau) * sum;
    let s2 = ((tau + 1.0) / e).powf(tau + 1.0) * sum;
    Ok(SmallDivisorConstants { s1, s2, lattice })
}

/// Theoretical envelopes `(‖φ‖, ‖∂_{q_m}φ‖)` for a forcing with envelope
/// `psi` (whose rate plays the role of `a`).
#[allow(clippy::too_many_arguments)]
pub fn homological_bound_audit(
    psi: NormEnvelope,
    freq: &DiophantineFrequency,
    sigma: f64,
    d: f64,
    delta: f64,
    nu: f64,
    zeta: f64,
) -> Result<(f64, f64), HomologicalError> {
    let a = psi.rate;
    if !(a > 0.0 && a < 1.0) {
        return Err(HomologicalError::Constraint(format!("decay rate a = {a} outside (0,1)")));
    }
    if 2.0 * freq.omega_norm() * zeta > d * sigma * (1.0 + 1e-15) {
        return Err(HomologicalError::Constraint(format!(
            "2|ω|ζ = {} exceeds dσ = {}",
            2.0 * freq.omega_norm() * zeta,
            d * sigma
        )));
    }
    let sd = small_divisor_constants(freq.dim(), freq.tau, freq.gamma, nu, sigma, d, delta)?;
    let ds = d * sigma;
    Ok((
        psi.k * sd.s1 / (a * ds.powf(freq.tau)),
        psi.k * sd.s2 / (a * ds.powf(freq.tau + 1.0)),
    ))
}

/// Mode `k` of a solved series as a check on small-divisor growth:
/// returns `|φ_k(0)|·|⟨ω,k⟩| / |ψ_k(0)|` for single-exponential forcings.
pub fn divisor_gain(phi: &FourierSeries, psi: &FourierSeries, k: &Mode, omega: &[f64]) -> Option<f64> {
    let num = phi.coeff(k)?.eval(0.0).norm();
    let den = psi.coeff(k)?.eval(0.0).norm();
    Some(num * k.dot(omega).abs() / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_one_dimensional() {
        assert_eq!(estimate_gamma(&[1.0], 2.0, 10).unwrap(), 1.0);
    }

    #[test]
    fn resonance_named() {
        match estimate_gamma(&[1.0, 2.0], 1.5, 3) {
            Err(HomologicalError::Resonance(k)) => {
                assert!(k == vec![2, -1] || k == vec![-2, 1], "{k:?}")
            }
            other => panic!("expected resonance, got {other:?}"),
        }
    }

    #[test]
    fn zero_forcing() {
        assert!(mode_solve(&ExpPoly::zero(), 1.0).unwrap().is_zero());
        assert_eq!(boundary_value(&ExpPoly::zero(), 1.0).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn single_exponential_solutions() {
        let a = 0.1;
        let psi = ExpPoly::decaying(c(1.0, 0.0), a).unwrap();
        let phi = mode_solve(&psi, 1.0).unwrap();
        assert_eq!(phi.len(), 1);
        let want = c(1.0, 0.0) / c(-0.1, 1.0);
        assert!((phi.terms()[0].coeff - want).norm() < 1e-15);
        assert!((boundary_value(&psi, 1.0).unwrap() - want).norm() < 1e-15);
        let avg = mode_solve(&psi, 0.0).unwrap();
        assert!((avg.terms()[0].coeff - c(-1.0 / a, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn non_decaying_rejected() {
        let psi = ExpPoly::exp(c(1.0, 0.0), c(0.0, 0.5)).unwrap();
        assert!(matches!(mode_solve(&psi, 1.0), Err(HomologicalError::NotDecaying(_))));
        assert!(boundary_value(&psi, 1.0).is_err());
    }

    #[test]
    fn polynomial_forcing_residual() {
        let psi = ExpPoly::from_terms(vec![
            Term::new(c(1.0, 0.5), 3, c(-0.2, 0.7)),
            Term::new(c(-2.0, 0.0), 1, c(-0.05, 0.0)),
        ])
        .unwrap();
        let lambda = -0.37;
        let phi = mode_solve(&psi, lambda).unwrap();
        let lhs = phi.scale(c(0.0, lambda)).add(&phi.derivative());
        let res = lhs.sub(&psi);
        assert!(res.max_abs_coeff() < 1e-12 * psi.max_abs_coeff());
    }

    #[test]
    fn lattice_sum_matches_generating_function() {
        for dim in 1..=3 {
            for c in [0.05f64, 0.2, 1.0] {
                let x = (-c).exp();
                let exact = ((1.0 + x) / (1.0 - x)).powi(dim as i32) - 1.0;
                let s = lattice_sum(dim, c);
                assert!(s.partial <= exact * (1.0 + 1e-12));
                assert!(s.value() >= exact * (1.0 - 1e-12));
                assert!((s.value() - exact).abs() < 1e-10 * exact, "dim {dim} c {c}");
            }
        }
    }

    #[test]
    fn s1_finite_for_reference_parameters() {
        let sd = small_divisor_constants(2, 1.2, 0.3, 0.25, 0.5, 1.0 / 6.0, 0.0).unwrap();
        assert!(sd.s1.is_finite() && sd.s1 > 0.0);
        assert!(sd.s2.is_finite() && sd.s2 > 0.0);
        // the tail bound is below 1e-12 of the partial sum
        assert!(sd.lattice.tail < 1e-12 * sd.lattice.partial);
    }

    #[test]
    fn bounds_blow_up_as_d_plus_delta_approaches_one() {
        let freq = DiophantineFrequency::new(vec![1.0, 0.5 * (1.0 + 5f64.sqrt())], 1.2, 20).unwrap();
        let env = NormEnvelope { k: 1.0, rate: 0.1 };
        let mut last = 0.0;
        for d in [0.1, 0.3, 0.6, 0.9, 0.99] {
            let (b, db) = homological_bound_audit(env, &freq, 0.5, d, 0.0, 0.25, 0.0).unwrap();
            let _ = db;
            if d > 0.5 {
                assert!(b > last, "d = {d}");
            }
            last = b;
        }
        assert!(homological_bound_audit(env, &freq, 0.5, 0.6, 0.5, 0.25, 0.0).is_err());
    }
}
