//! Polynomials of degree ≤ 2 in the actions `p` with Fourier–exp-poly
//! coefficients, plus an optional `η` term with coefficient 1.
//!
//! This is the space the scheme lives in: every Hamiltonian, generating
//! function and transformed coordinate is such a polynomial.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{fourier_norm_at, FourierSeries, SeriesError};

/// Exponent vector of a monomial `p^α`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub Vec<u8>);

impl Monomial {
    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim])
    }

    pub fn p(dim: usize, l: usize) -> Self {
        let mut e = vec![0; dim];
        e[l] = 1;
        Monomial(e)
    }

    pub fn pp(dim: usize, l: usize, m: usize) -> Self {
        let mut e = vec![0; dim];
        e[l] += 1;
        e[m] += 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    fn times(&self, other: &Self) -> Self {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn eval(&self, p: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(p)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }
}

/// What to do when a bracket would produce terms of degree ≥ 3 in `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreePolicy {
    /// Non-zero terms of degree ≥ 3 are an error.
    Strict,
    /// Terms of degree ≥ 3 are dropped.
    Truncate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolySeries {
    dim: usize,
    k_max: u32,
    coeffs: BTreeMap<Monomial, FourierSeries>,
    eta: bool,
}

impl PolySeries {
    pub fn zero(dim: usize, k_max: u32) -> Self {
        Self {
            dim,
            k_max,
            coeffs: BTreeMap::new(),
            eta: false,
        }
    }

    /// A function of `(q, ξ)` only.
    pub fn scalar(s: FourierSeries) -> Self {
        let mut out = Self::zero(s.dim(), s.k_max());
        out.insert(Monomial::one(s.dim()), s);
        out
    }

    /// `⟨b, p⟩`.
    pub fn linear(b: &[FourierSeries]) -> Self {
        let (dim, k_max) = dims(b);
        let mut out = Self::zero(dim, k_max);
        for (l, s) in b.iter().enumerate() {
            out.insert(Monomial::p(dim, l), s.clone());
        }
        out
    }

    /// `½⟨Cp, p⟩` for a symmetric matrix `C`.
    pub fn quadratic_form(c: &[Vec<FourierSeries>]) -> Self {
        let (dim, k_max) = dims(&c[0]);
        let mut out = Self::zero(dim, k_max);
        for l in 0..dim {
            out.insert(Monomial::pp(dim, l, l), c[l][l].scale_real(0.5));
            for m in (l + 1)..dim {
                out.insert(Monomial::pp(dim, l, m), c[l][m].clone());
            }
        }
        out
    }

    /// `s · p^α`.
    pub fn monomial(m: Monomial, s: FourierSeries) -> Self {
        let mut out = Self::zero(s.dim(), s.k_max());
        out.insert(m, s);
        out
    }

    /// `⟨ω, p⟩` with constant coefficients.
    pub fn constant_linear(omega: &[f64], k_max: u32) -> Self {
        let dim = omega.len();
        let mut out = Self::zero(dim, k_max);
        for (l, &w) in omega.iter().enumerate() {
            out.insert(Monomial::p(dim, l), FourierSeries::constant(dim, k_max, Complex64::new(w, 0.0)));
        }
        out
    }

    /// The momentum `η` conjugate to time.
    pub fn eta(dim: usize, k_max: u32) -> Self {
        let mut out = Self::zero(dim, k_max);
        out.eta = true;
        out
    }

    pub fn with_eta(mut self, eta: bool) -> Self {
        self.eta = eta;
        self
    }

    fn insert(&mut self, m: Monomial, s: FourierSeries) {
        if !s.is_zero() {
            self.coeffs.insert(m, s);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn has_eta(&self) -> bool {
        self.eta
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && !self.eta
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &FourierSeries)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> FourierSeries {
        self.coeffs
            .get(m)
            .cloned()
            .unwrap_or_else(|| FourierSeries::zero(self.dim, self.k_max))
    }

    /// Highest degree in `p` with a non-zero coefficient (`η` counts as 0).
    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// The homogeneous part of the given degree.
    pub fn part(&self, degree: u32) -> Self {
        let mut out = Self::zero(self.dim, self.k_max);
        out.coeffs = self
            .coeffs
            .iter()
            .filter(|(m, _)| m.degree() == degree)
            .map(|(m, s)| (m.clone(), s.clone()))
            .collect();
        out
    }

    /// The degree-0 coefficient.
    pub fn scalar_part(&self) -> FourierSeries {
        self.coeff(&Monomial::one(self.dim))
    }

    /// Coefficients `b_l` of the linear part.
    pub fn linear_coeffs(&self) -> Vec<FourierSeries> {
        (0..self.dim).map(|l| self.coeff(&Monomial::p(self.dim, l))).collect()
    }

    /// Symmetric `C` with quadratic part `½⟨Cp, p⟩`.
    pub fn quadratic_matrix(&self) -> Vec<Vec<FourierSeries>> {
        let n = self.dim;
        let mut c = vec![vec![FourierSeries::zero(n, self.k_max); n]; n];
        for l in 0..n {
            c[l][l] = self.coeff(&Monomial::pp(n, l, l)).scale_real(2.0);
            for m in (l + 1)..n {
                let v = self.coeff(&Monomial::pp(n, l, m));
                c[l][m] = v.clone();
                c[m][l] = v;
            }
        }
        c
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        check_dims(self.dim, other.dim)?;
        let mut out = self.clone();
        out.k_max = self.k_max.max(other.k_max);
        for (m, s) in &other.coeffs {
            let v = match out.coeffs.get(m) {
                Some(cur) => cur.add(s)?,
                None => s.clone(),
            };
            out.coeffs.remove(m);
            out.insert(m.clone(), v);
        }
        if self.eta && other.eta {
            return Err(SeriesError::EtaCoefficient);
        }
        out.eta = self.eta || other.eta;
        Ok(out)
    }

    /// Difference; `η − η` cancels, a lone `−η` is not representable.
    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        let eta = match (self.eta, other.eta) {
            (false, true) => return Err(SeriesError::EtaCoefficient),
            (l, r) => l && !r,
        };
        let mut lhs = self.clone();
        lhs.eta = false;
        let mut out = lhs.add(&other.scale_real(-1.0))?;
        out.eta = eta;
        Ok(out)
    }

    /// Scales the series part; the `η` flag is dropped unless `s == 1`.
    pub fn scale_real(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs = self
            .coeffs
            .iter()
            .filter(|_| s != 0.0)
            .map(|(m, c)| (m.clone(), c.scale_real(s)))
            .collect();
        out.eta = self.eta && s == 1.0;
        out
    }

    pub fn partial_p(&self, l: usize) -> Self {
        let mut out = Self::zero(self.dim, self.k_max);
        for (m, s) in &self.coeffs {
            let e = m.0[l];
            if e == 0 {
                continue;
            }
            let mut lowered = m.clone();
            lowered.0[l] -= 1;
            out.insert(lowered, s.scale_real(e as f64));
        }
        out
    }

    pub fn partial_q(&self, l: usize) -> Self {
        let mut out = Self::zero(self.dim, self.k_max);
        for (m, s) in &self.coeffs {
            out.insert(m.clone(), s.partial_q(l));
        }
        out
    }

    pub fn partial_xi(&self) -> Self {
        let mut out = Self::zero(self.dim, self.k_max);
        for (m, s) in &self.coeffs {
            out.insert(m.clone(), s.partial_xi());
        }
        out
    }

    /// Product of the series parts (`η` must be absent on both sides).
    pub fn mul_report(&self, other: &Self, max_degree: Option<u32>) -> Result<(Self, f64), SeriesError> {
        check_dims(self.dim, other.dim)?;
        if self.eta || other.eta {
            return Err(SeriesError::EtaCoefficient);
        }
        let mut out = Self::zero(self.dim, self.k_max.max(other.k_max));
        let mut lost = 0.0;
        for (m1, s1) in &self.coeffs {
            for (m2, s2) in &other.coeffs {
                let m = m1.times(m2);
                if let Some(cap) = max_degree {
                    if m.degree() > cap {
                        continue;
                    }
                }
                let (prod, d) = s1.mul_report(s2)?;
                lost += d;
                let v = match out.coeffs.remove(&m) {
                    Some(cur) => cur.add(&prod)?,
                    None => prod,
                };
                out.insert(m, v);
            }
        }
        Ok((out, lost))
    }

    /// `L_G F` with `G = self`:
    /// `(∂_q G ∂_p + ∂_ξ G ∂_η − ∂_p G ∂_q − ∂_η G ∂_ξ) F`.
    /// Returns the result and the Fourier mass lost to truncation.
    pub fn lie_derivative_report(
        &self,
        f: &PolySeries,
        policy: DegreePolicy,
    ) -> Result<(PolySeries, f64), SeriesError> {
        check_dims(self.dim, f.dim)?;
        let g = self;
        let cap = match policy {
            DegreePolicy::Strict => None,
            DegreePolicy::Truncate => Some(2),
        };
        let mut out = Self::zero(self.dim, self.k_max.max(f.k_max));
        let mut lost = 0.0;
        let mut g_series = g.clone();
        g_series.eta = false;
        let mut f_series = f.clone();
        f_series.eta = false;
        for l in 0..self.dim {
            let (t1, d1) = g_series.partial_q(l).mul_report(&f_series.partial_p(l), cap)?;
            let (t2, d2) = g_series.partial_p(l).mul_report(&f_series.partial_q(l), cap)?;
            lost += d1 + d2;
            out = out.add(&t1)?.sub(&t2)?;
        }
        if f.eta {
            out = out.add(&g_series.partial_xi())?;
        }
        if g.eta {
            out = out.sub(&f_series.partial_xi())?;
        }
        if policy == DegreePolicy::Strict {
            if let Some((m, _)) = out.coeffs.iter().find(|(m, _)| m.degree() > 2) {
                return Err(SeriesError::DegreeOverflow(m.degree()));
            }
        }
        Ok((out, lost))
    }

    pub fn lie_derivative(&self, f: &PolySeries) -> Result<PolySeries, SeriesError> {
        self.lie_derivative_report(f, DegreePolicy::Strict).map(|(s, _)| s)
    }

    /// Value at a real phase-space point.
    pub fn evaluate(&self, q: &[f64], p: &[f64], xi: f64, eta: f64) -> Complex64 {
        let mut v: Complex64 = self
            .coeffs
            .iter()
            .map(|(m, s)| s.evaluate(q, xi) * m.eval(p))
            .sum();
        if self.eta {
            v += eta;
        }
        v
    }

    /// `Σ_α ‖f_α‖ ρ^{|α|}`, each coefficient dominated at rate 0.
    pub fn sup_norm(&self, sigma: f64, rho: f64, nu: f64) -> Result<f64, SeriesError> {
        let mut total = 0.0;
        for (m, s) in &self.coeffs {
            total += fourier_norm_at(s, sigma, nu, 0.0, 0.0)? * rho.powi(m.degree() as i32);
        }
        Ok(total)
    }

    /// `Σ_α ‖f_α‖ ρ^{|α|}` with every coefficient dominated at `rate` on a strip of width `ζ`.
    pub fn norm_at(&self, sigma: f64, rho: f64, nu: f64, rate: f64, zeta: f64) -> Result<f64, SeriesError> {
        let mut total = 0.0;
        for (m, s) in &self.coeffs {
            total += fourier_norm_at(s, sigma, nu, rate, zeta)? * rho.powi(m.degree() as i32);
        }
        Ok(total)
    }

    /// Slowest decay rate among the coefficients.
    pub fn min_decay(&self) -> Option<f64> {
        self.coeffs.values().filter_map(FourierSeries::min_decay).reduce(f64::min)
    }

    /// Largest absolute coefficient across all monomials.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().map(FourierSeries::max_abs_coeff).fold(0.0, f64::max)
    }
}

/// `L_G F`, the Lie derivative of `f` along `g`.
pub fn poisson_bracket(f: &PolySeries, g: &PolySeries) -> Result<PolySeries, SeriesError> {
    g.lie_derivative(f)
}

fn dims(v: &[FourierSeries]) -> (usize, u32) {
    let first = v.first().expect("non-empty component list");
    (first.dim(), first.k_max())
}

fn check_dims(a: usize, b: usize) -> Result<(), SeriesError> {
    if a != b {
        Err(SeriesError::DimensionMismatch { left: a, right: b })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{ExpPoly, Mode};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mode(k: Vec<i32>, amp: Complex64, decay: f64) -> FourierSeries {
        FourierSeries::single(Mode(k), ExpPoly::decaying(amp, decay).unwrap(), 12)
    }

    #[test]
    fn self_bracket_vanishes() {
        let f = PolySeries::scalar(mode(vec![1, 0], c(1.0, 0.0), 0.1))
            .add(&PolySeries::linear(&[mode(vec![0, 1], c(0.5, 0.1), 0.2), mode(vec![1, 1], c(0.3, 0.0), 0.1)]))
            .unwrap()
            .with_eta(true);
        let b = poisson_bracket(&f, &f).unwrap();
        assert!(b.max_abs_coeff() < 1e-15, "{}", b.max_abs_coeff());
    }

    #[test]
    fn linear_generator_on_scalar() {
        // L_χ A = -⟨Y, ∂_q A⟩ for χ = ⟨Y,p⟩, one mode each
        let a = mode(vec![1], c(2.0, 0.0), 0.1);
        let y = mode(vec![2], c(0.0, 1.0), 0.3);
        let chi = PolySeries::linear(std::slice::from_ref(&y));
        let got = chi.lie_derivative(&PolySeries::scalar(a.clone())).unwrap();
        assert_eq!(got.degree(), 0);
        // hand expansion: -(i e^{2iq} e^{-0.3ξ}) · (2i e^{iq} e^{-0.1ξ}) = 2 e^{3iq} e^{-0.4ξ}
        let coeff = got.scalar_part();
        let k3 = coeff.coeff(&Mode(vec![3])).unwrap();
        assert_eq!(k3.terms().len(), 1);
        assert!((k3.terms()[0].coeff - c(2.0, 0.0)).norm() < 1e-15);
        assert!((k3.terms()[0].rate - c(-0.4, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eta_contributes_time_derivative() {
        // L_χ(η + h) picks up ∂_ξ χ
        let y = mode(vec![1], c(1.0, 0.0), 0.1);
        let chi = PolySeries::linear(std::slice::from_ref(&y));
        let eta = PolySeries::eta(1, 12);
        let got = chi.lie_derivative(&eta).unwrap();
        let want = PolySeries::linear(&[y.partial_xi()]);
        assert_eq!(got, want);
    }

    #[test]
    fn degree_growth_is_reported() {
        let quad = PolySeries::quadratic_form(&[vec![mode(vec![1], c(1.0, 0.0), 0.1)]]);
        assert!(matches!(
            quad.lie_derivative(&quad.scale_real(2.0)),
            Ok(_) | Err(SeriesError::DegreeOverflow(3))
        ));
        let other = PolySeries::quadratic_form(&[vec![mode(vec![2], c(1.0, 0.0), 0.1)]]);
        assert!(matches!(quad.lie_derivative(&other), Err(SeriesError::DegreeOverflow(3))));
        let (t, _) = quad.lie_derivative_report(&other, DegreePolicy::Truncate).unwrap();
        assert!(t.degree() <= 2);
    }

    #[test]
    fn quadratic_matrix_roundtrip() {
        let a = mode(vec![1, 0], c(1.0, 0.0), 0.1);
        let b = mode(vec![0, 1], c(0.0, 2.0), 0.1);
        let d = FourierSeries::constant(2, 12, c(3.0, 0.0));
        let m = vec![vec![a.clone(), b.clone()], vec![b.clone(), d.clone()]];
        let back = PolySeries::quadratic_form(&m).quadratic_matrix();
        assert_eq!(back, m);
    }
}
