//! Exponential-polynomial time coefficients `Σ c·ξ^m·e^{βξ}` with `Re β ≤ 0`.
//!
//! The class is closed under sums, products, `∂_ξ` and the decaying solve
//! of `iλφ + φ' = ψ`, so every time dependence produced by the normal form
//! scheme stays exact up to scalar rounding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SeriesError;

/// Two rates closer than this are treated as the same exponential.
pub const RATE_MERGE_TOL: f64 = 1e-12;

/// A single term `coeff · ξ^power · e^{rate·ξ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub power: u32,
    pub rate: Complex64,
}

impl Term {
    pub fn new(coeff: Complex64, power: u32, rate: Complex64) -> Self {
        Self { coeff, power, rate }
    }

    /// Decay rate `-Re β` (non-negative for admissible terms).
    pub fn decay(&self) -> f64 {
        -self.rate.re
    }

    pub fn eval(&self, xi: f64) -> Complex64 {
        self.coeff * xi.powi(self.power as i32) * (self.rate * xi).exp()
    }
}

/// Wire form of a term: `{re, im, m, beta_re, beta_im}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TermDoc {
    pub re: f64,
    pub im: f64,
    pub m: u32,
    pub beta_re: f64,
    pub beta_im: f64,
}

impl From<&Term> for TermDoc {
    fn from(t: &Term) -> Self {
        TermDoc {
            re: t.coeff.re,
            im: t.coeff.im,
            m: t.power,
            beta_re: t.rate.re,
            beta_im: t.rate.im,
        }
    }
}

/// A time coefficient in canonical form: terms sorted by `(m, Re β, Im β)`,
/// no two terms sharing a key, no exact zeros.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpPoly {
    terms: Vec<Term>,
}

fn key_order(a: &Term, b: &Term) -> std::cmp::Ordering {
    a.power
        .cmp(&b.power)
        .then(a.rate.re.total_cmp(&b.rate.re))
        .then(a.rate.im.total_cmp(&b.rate.im))
}

/// Rates agreeing to `RATE_MERGE_TOL` in both components.
#[inline]
pub(crate) fn same_rate(a: Complex64, b: Complex64) -> bool {
    (a.re - b.re).abs() <= RATE_MERGE_TOL && (a.im - b.im).abs() <= RATE_MERGE_TOL
}

pub(crate) fn canonicalize(mut terms: Vec<Term>) -> Vec<Term> {
    terms.sort_by(key_order);
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    'next: for t in terms {
        for u in out.iter_mut().rev() {
            if u.power != t.power || t.rate.re - u.rate.re > RATE_MERGE_TOL {
                break;
            }
            if same_rate(u.rate, t.rate) {
                u.coeff += t.coeff;
                continue 'next;
            }
        }
        out.push(t);
    }
    out.retain(|t| t.coeff != Complex64::new(0.0, 0.0));
    out
}

impl ExpPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds a coefficient from raw terms, rejecting growing exponentials.
    pub fn from_terms(terms: Vec<Term>) -> Result<Self, SeriesError> {
        for t in &terms {
            if !(t.rate.re <= 0.0) || !t.coeff.is_finite() || !t.rate.is_finite() {
                return Err(SeriesError::GrowingTerm { beta_re: t.rate.re });
            }
        }
        Ok(Self {
            terms: canonicalize(terms),
        })
    }

    /// `c · e^{βξ}`.
    pub fn exp(coeff: Complex64, rate: Complex64) -> Result<Self, SeriesError> {
        Self::from_terms(vec![Term::new(coeff, 0, rate)])
    }

    /// `c · e^{-aξ}` for a real decay rate `a ≥ 0`.
    pub fn decaying(coeff: Complex64, decay: f64) -> Result<Self, SeriesError> {
        Self::exp(coeff, Complex64::new(-decay, 0.0))
    }

    /// Time-independent constant.
    pub fn constant(c: Complex64) -> Self {
        Self {
            terms: canonicalize(vec![Term::new(c, 0, Complex64::new(0.0, 0.0))]),
        }
    }

    pub(crate) fn from_canonical(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = self.terms.clone();
        t.extend_from_slice(&other.terms);
        Self {
            terms: canonicalize(t),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            terms: canonicalize(
                self.terms
                    .iter()
                    .map(|t| Term::new(t.coeff * s, t.power, t.rate))
                    .collect(),
            ),
        }
    }

    /// Raw pairwise product terms, not yet merged.
    pub(crate) fn product_terms(&self, other: &Self, out: &mut Vec<Term>) {
        for a in &self.terms {
            for b in &other.terms {
                out.push(Term::new(a.coeff * b.coeff, a.power + b.power, a.rate + b.rate));
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.len() * other.len());
        self.product_terms(other, &mut out);
        Self {
            terms: canonicalize(out),
        }
    }

    /// `∂_ξ` by the product rule on `ξ^m e^{βξ}`.
    pub fn derivative(&self) -> Self {
        let mut out = Vec::with_capacity(2 * self.len());
        for t in &self.terms {
            out.push(Term::new(t.coeff * t.rate, t.power, t.rate));
            if t.power > 0 {
                out.push(Term::new(t.coeff * t.power as f64, t.power - 1, t.rate));
            }
        }
        Self {
            terms: canonicalize(out),
        }
    }

    /// Complex conjugate as a function of real `ξ`.
    pub fn conj(&self) -> Self {
        Self {
            terms: canonicalize(
                self.terms
                    .iter()
                    .map(|t| Term::new(t.coeff.conj(), t.power, t.rate.conj()))
                    .collect(),
            ),
        }
    }

    pub fn eval(&self, xi: f64) -> Complex64 {
        self.terms.iter().map(|t| t.eval(xi)).sum()
    }

    /// Slowest decay rate present, `None` for the zero coefficient.
    pub fn min_decay(&self) -> Option<f64> {
        self.terms.iter().map(Term::decay).reduce(f64::min)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max)
    }

    /// Sum of `|c|` over all terms.
    pub fn abs_mass(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    pub(crate) fn retain_terms(&mut self, keep: impl FnMut(&Term) -> bool) {
        self.terms.retain(keep);
    }

    /// Smallest `K` (per-term triangle bound) with
    /// `|c(ξ)| ≤ K e^{-target·ξ}` on `ξ ≥ 0`, times the strip factor
    /// `e^{target·ζ}`.
    pub fn envelope(&self, target: f64, zeta: f64) -> Result<f64, SeriesError> {
        let mut k = 0.0;
        for t in &self.terms {
            let gap = t.decay() - target;
            if gap < -RATE_MERGE_TOL {
                return Err(SeriesError::RateTooSlow {
                    target,
                    decay: t.decay(),
                });
            }
            let sup = if t.power == 0 {
                1.0
            } else if gap <= 0.0 {
                return Err(SeriesError::RateTooSlow {
                    target,
                    decay: t.decay(),
                });
            } else {
                // max of ξ^m e^{-gap ξ} sits at ξ = m / gap
                let m = t.power as f64;
                (m / (gap * std::f64::consts::E)).powf(m)
            };
            k += t.coeff.norm() * sup;
        }
        Ok(k * (target * zeta).exp())
    }
}
