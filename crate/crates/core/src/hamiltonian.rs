//! Hamiltonians of the recursive shape
//! `⟨ω,p⟩ + η + A(q,ξ) + ⟨B(q,ξ),p⟩ + ½⟨C(q,ξ)p,p⟩`
//! and the perturbation problems they are built from.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{
    fourier_norm_at, FourierSeries, Mode, Monomial, PolySeries, SeriesDoc, SeriesError,
};

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `C` is stored as its upper triangle, so it is symmetric by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct KolmogorovHamiltonian {
    pub omega: Vec<f64>,
    pub a: FourierSeries,
    pub b: Vec<FourierSeries>,
    c_upper: Vec<FourierSeries>,
    pub includes_eta: bool,
}

fn tri(n: usize, l: usize, m: usize) -> usize {
    let (l, m) = if l <= m { (l, m) } else { (m, l) };
    l * n - l * (l + 1) / 2 + m
}

impl KolmogorovHamiltonian {
    /// Builds from a full matrix `c`, which must be exactly symmetric.
    pub fn new(
        omega: Vec<f64>,
        a: FourierSeries,
        b: Vec<FourierSeries>,
        c: Vec<Vec<FourierSeries>>,
    ) -> Result<Self, HamiltonianError> {
        let n = omega.len();
        if a.dim() != n || b.len() != n || c.len() != n || c.iter().any(|r| r.len() != n) {
            return Err(HamiltonianError::Shape(format!("components do not match dimension {n}")));
        }
        for l in 0..n {
            for m in (l + 1)..n {
                if c[l][m] != c[m][l] {
                    return Err(HamiltonianError::Shape(format!("C is not symmetric at ({l},{m})")));
                }
            }
        }
        let mut c_upper = Vec::with_capacity(n * (n + 1) / 2);
        for (l, row) in c.into_iter().enumerate() {
            c_upper.extend(row.into_iter().skip(l));
        }
        Ok(Self {
            omega,
            a,
            b,
            c_upper,
            includes_eta: true,
        })
    }

    /// `⟨ω,p⟩ + η + ½⟨Γp,p⟩` with constant symmetric `Γ`.
    pub fn unperturbed(omega: Vec<f64>, gamma: &[Vec<f64>], k_max: u32) -> Result<Self, HamiltonianError> {
        let n = omega.len();
        let zero = FourierSeries::zero(n, k_max);
        let c = gamma
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&g| FourierSeries::constant(n, k_max, Complex64::new(g, 0.0)))
                    .collect()
            })
            .collect();
        Self::new(omega, zero.clone(), vec![zero; n], c)
    }

    /// Reads `A`, `B`, `C` off a polynomial of degree ≤ 2 in `p`.
    pub fn from_perturbation(omega: Vec<f64>, poly: &PolySeries) -> Result<Self, HamiltonianError> {
        if poly.degree() > 2 {
            return Err(HamiltonianError::Shape(format!("degree {} in p", poly.degree())));
        }
        if poly.has_eta() {
            return Err(HamiltonianError::Shape("perturbative part carries η".into()));
        }
        Self::new(omega, poly.scalar_part(), poly.linear_coeffs(), poly.quadratic_matrix())
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn k_max(&self) -> u32 {
        self.a.k_max()
    }

    pub fn c(&self, l: usize, m: usize) -> &FourierSeries {
        &self.c_upper[tri(self.dim(), l, m)]
    }

    pub fn c_matrix(&self) -> Vec<Vec<FourierSeries>> {
        let n = self.dim();
        (0..n).map(|l| (0..n).map(|m| self.c(l, m).clone()).collect()).collect()
    }

    /// `A + ⟨B,p⟩ + ½⟨Cp,p⟩`.
    pub fn perturbation_poly(&self) -> Result<PolySeries, SeriesError> {
        PolySeries::scalar(self.a.clone())
            .add(&PolySeries::linear(&self.b))?
            .add(&PolySeries::quadratic_form(&self.c_matrix()))
    }

    /// The full Hamiltonian, including `⟨ω,p⟩` and `η` when flagged.
    pub fn to_poly(&self) -> Result<PolySeries, SeriesError> {
        let lin = PolySeries::constant_linear(&self.omega, self.k_max());
        let h = lin.add(&self.perturbation_poly()?)?;
        Ok(h.with_eta(self.includes_eta))
    }

    /// Value at a real point; the imaginary part of the series sum is discarded.
    pub fn evaluate(&self, q: &[f64], p: &[f64], xi: f64, eta: f64) -> f64 {
        let n = self.dim();
        let mut v = self.a.evaluate(q, xi).re;
        for l in 0..n {
            v += (self.omega[l] + self.b[l].evaluate(q, xi).re) * p[l];
            for m in 0..n {
                v += 0.5 * self.c(l, m).evaluate(q, xi).re * p[l] * p[m];
            }
        }
        if self.includes_eta {
            v += eta;
        }
        v
    }

    /// `max(‖A‖, ‖B‖)` at rate `rate` on the strip `ζ`, the `ε_j` of the scheme.
    pub fn eps_measure(&self, sigma: f64, nu: f64, rate: f64, zeta: f64) -> Result<f64, SeriesError> {
        let a = fourier_norm_at(&self.a, sigma, nu, rate, zeta)?;
        let mut b = 0.0;
        for s in &self.b {
            b += fourier_norm_at(s, sigma, nu, rate, zeta)?;
        }
        Ok(a.max(b))
    }

    /// Largest column sum of entry norms: a bound for `‖Cw‖/‖w‖`.
    pub fn c_operator_norm(&self, sigma: f64, nu: f64, zeta: f64) -> Result<f64, SeriesError> {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for m in 0..n {
            let mut col = 0.0;
            for l in 0..n {
                col += fourier_norm_at(self.c(l, m), sigma, nu, 0.0, zeta)?;
            }
            worst = worst.max(col);
        }
        Ok(worst)
    }

    pub fn to_doc(&self) -> HamiltonianDoc {
        HamiltonianDoc {
            omega: self.omega.clone(),
            includes_eta: self.includes_eta,
            a: self.a.to_doc(),
            b: self.b.iter().map(FourierSeries::to_doc).collect(),
            c: self
                .c_matrix()
                .iter()
                .map(|row| row.iter().map(FourierSeries::to_doc).collect())
                .collect(),
        }
    }

    pub fn from_doc(doc: &HamiltonianDoc) -> Result<Self, HamiltonianError> {
        let a = FourierSeries::from_doc(&doc.a)?;
        let b = doc.b.iter().map(FourierSeries::from_doc).collect::<Result<_, _>>()?;
        let c = doc
            .c
            .iter()
            .map(|row| row.iter().map(FourierSeries::from_doc).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        let mut h = Self::new(doc.omega.clone(), a, b, c)?;
        h.includes_eta = doc.includes_eta;
        Ok(h)
    }
}

impl Serialize for KolmogorovHamiltonian {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for KolmogorovHamiltonian {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = HamiltonianDoc::deserialize(d)?;
        Self::from_doc(&doc).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HamiltonianDoc {
    pub omega: Vec<f64>,
    pub includes_eta: bool,
    #[serde(rename = "A")]
    pub a: SeriesDoc,
    #[serde(rename = "B")]
    pub b: Vec<SeriesDoc>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<SeriesDoc>>,
}

/// One term `amplitude · cos(⟨k,q⟩ + phase) · p^α` of `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTerm {
    pub k: Vec<i32>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
    /// Exponents of `p`, total degree ≤ 2; empty means `p`-independent.
    #[serde(default)]
    pub p_monomial: Vec<u8>,
}

/// `f(q,p,ξ) = e^{-aξ} Σ terms`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub decay: f64,
    pub terms: Vec<PerturbationTerm>,
}

impl Perturbation {
    pub fn to_poly(&self, dim: usize, k_max: u32) -> Result<PolySeries, HamiltonianError> {
        let mut f = PolySeries::zero(dim, k_max);
        for t in &self.terms {
            if t.k.len() != dim {
                return Err(HamiltonianError::Shape(format!("mode {:?} has wrong length", t.k)));
            }
            let mono = if t.p_monomial.is_empty() {
                Monomial::one(dim)
            } else if t.p_monomial.len() == dim {
                Monomial(t.p_monomial.clone())
            } else {
                return Err(HamiltonianError::Shape(format!("monomial {:?} has wrong length", t.p_monomial)));
            };
            if mono.degree() > 2 {
                return Err(HamiltonianError::Shape(format!("monomial {:?} has degree > 2", t.p_monomial)));
            }
            let s = FourierSeries::cosine(Mode(t.k.clone()), t.amplitude, t.phase, self.decay, k_max)?;
            f = f.add(&PolySeries::monomial(mono, s))?;
        }
        Ok(f)
    }

    /// `M_f`: the `[ρ,σ;ζ]` norm of `f` at rate `a`.
    pub fn m_f(&self, dim: usize, k_max: u32, rho: f64, sigma: f64, nu: f64, zeta: f64) -> Result<f64, HamiltonianError> {
        Ok(self.to_poly(dim, k_max)?.norm_at(sigma, rho, nu, self.decay, zeta)?)
    }
}

/// `H₀` with `A = εf(q,0,ξ)`, `B = ε∂_pf(q,0,ξ)`, `C = Γ + ε∂²_pf(q,0,ξ)`.
pub fn induction_basis(
    omega: Vec<f64>,
    gamma: &[Vec<f64>],
    f: &PolySeries,
    eps: f64,
) -> Result<KolmogorovHamiltonian, HamiltonianError> {
    let n = omega.len();
    let base = KolmogorovHamiltonian::unperturbed(omega.clone(), gamma, f.k_max())?;
    if n != gamma.len() || f.dim() != n {
        return Err(HamiltonianError::Shape("Γ, f and ω disagree in dimension".into()));
    }
    let poly = base.perturbation_poly()?.add(&f.scale_real(eps))?;
    KolmogorovHamiltonian::from_perturbation(omega, &poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_f() -> Perturbation {
        Perturbation {
            decay: 0.1,
            terms: vec![
                PerturbationTerm { k: vec![1, 0], amplitude: 1.0, phase: 0.0, p_monomial: vec![] },
                PerturbationTerm { k: vec![0, 1], amplitude: 0.5, phase: 0.3, p_monomial: vec![1, 0] },
                PerturbationTerm { k: vec![1, -1], amplitude: 0.5, phase: 0.0, p_monomial: vec![0, 2] },
            ],
        }
    }

    #[test]
    fn poly_roundtrip_and_evaluation() {
        let f = golden_f().to_poly(2, 10).unwrap();
        let gamma = vec![vec![1.0, 0.2], vec![0.2, 0.8]];
        let h = induction_basis(vec![1.0, 1.6], &gamma, &f, 1e-2).unwrap();
        let (q, p, xi, eta) = ([0.3, -1.1], [0.2, -0.4], 0.7, 0.25);
        let direct = 1.0 * p[0] + 1.6 * p[1]
            + 0.5 * (gamma[0][0] * p[0] * p[0] + 2.0 * gamma[0][1] * p[0] * p[1] + gamma[1][1] * p[1] * p[1])
            + eta
            + 1e-2 * f.evaluate(&q, &p, xi, 0.0).re;
        assert!((h.evaluate(&q, &p, xi, eta) - direct).abs() < 1e-14);
        assert!((h.to_poly().unwrap().evaluate(&q, &p, xi, eta).re - direct).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_c_rejected() {
        let s = |v: f64| FourierSeries::constant(2, 4, Complex64::new(v, 0.0));
        let z = FourierSeries::zero(2, 4);
        let r = KolmogorovHamiltonian::new(
            vec![1.0, 2.0],
            z.clone(),
            vec![z.clone(), z],
            vec![vec![s(1.0), s(0.1)], vec![s(0.2), s(1.0)]],
        );
        assert!(r.is_err());
    }

    #[test]
    fn json_roundtrip() {
        let f = golden_f().to_poly(2, 10).unwrap();
        let h = induction_basis(vec![1.0, 1.6], &[vec![1.0, 0.0], vec![0.0, 1.0]], &f, 1e-3).unwrap();
        let text = serde_json::to_string(&h.to_doc()).unwrap();
        let back = KolmogorovHamiltonian::from_doc(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn m_f_is_the_weighted_sum() {
        let p = golden_f();
        let (rho, sigma, nu) = (0.5, 0.4, 0.25);
        let w = |l1: f64| (2.0 * l1 * (1.0 - nu) * sigma).exp();
        // each cosine has two modes of amplitude/2
        let want = 1.0 * w(1.0) + 0.5 * w(1.0) * rho + 0.5 * w(2.0) * rho * rho;
        assert!((p.m_f(2, 10, rho, sigma, nu, 0.0).unwrap() - want).abs() < 1e-13);
    }
}
