use serde::{Deserialize, Serialize};

use super::{ExpPoly, FourierSeries, SeriesError};

/// Default analyticity-loss parameter `ν` in the Fourier weight.
pub const DEFAULT_NU: f64 = 0.25;

/// `‖·‖(ξ) ≤ k · e^{-rate·ξ}` on the real half-line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEnvelope {
    pub k: f64,
    pub rate: f64,
}

impl NormEnvelope {
    pub const ZERO: NormEnvelope = NormEnvelope {
        k: 0.0,
        rate: f64::INFINITY,
    };

    pub fn at(&self, xi: f64) -> f64 {
        if self.k == 0.0 {
            0.0
        } else {
            self.k * (-self.rate * xi).exp()
        }
    }

    /// Envelope of a sum of two functions.
    pub fn plus(&self, other: &NormEnvelope) -> NormEnvelope {
        NormEnvelope {
            k: self.k + other.k,
            rate: self.rate.min(other.rate),
        }
    }
}

/// See [`ExpPoly::envelope`].
pub fn envelope_of(c: &ExpPoly, target_rate: f64, zeta: f64) -> Result<f64, SeriesError> {
    c.envelope(target_rate, zeta)
}

/// Weighted ℓ¹ norm `Σ_k K_k e^{2|k|(1-ν)σ}` where each mode is dominated
/// at the series' slowest decay rate.
pub fn fourier_norm(s: &FourierSeries, sigma: f64, nu: f64) -> Result<NormEnvelope, SeriesError> {
    match s.min_decay() {
        None => Ok(NormEnvelope::ZERO),
        Some(rate) => fourier_norm_at(s, sigma, nu, rate, 0.0).map(|k| NormEnvelope { k, rate }),
    }
}

/// Weighted norm with every mode dominated at a prescribed rate and strip width `ζ`.
pub fn fourier_norm_at(
    s: &FourierSeries,
    sigma: f64,
    nu: f64,
    rate: f64,
    zeta: f64,
) -> Result<f64, SeriesError> {
    if !(nu > 0.0 && nu <= 0.5) {
        return Err(SeriesError::BadNu(nu));
    }
    let mut total = 0.0;
    for (k, c) in s.modes() {
        let weight = (2.0 * k.l1() as f64 * (1.0 - nu) * sigma).exp();
        total += c.envelope(rate, zeta)? * weight;
    }
    Ok(total)
}

/// Vector norm: sum of component norms, slowest rate.
pub fn vector_norm<'a>(
    comps: impl IntoIterator<Item = &'a FourierSeries>,
    sigma: f64,
    nu: f64,
) -> Result<NormEnvelope, SeriesError> {
    let mut acc = NormEnvelope::ZERO;
    for c in comps {
        acc = acc.plus(&fourier_norm(c, sigma, nu)?);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Mode;
    use num_complex::Complex64;

    #[test]
    fn zero_series_norm() {
        let n = fourier_norm(&FourierSeries::zero(2, 5), 0.5, 0.25).unwrap();
        assert_eq!(n.k, 0.0);
        assert!(n.rate.is_infinite());
    }

    #[test]
    fn single_mode_norm() {
        let a = 0.1;
        let s = FourierSeries::single(
            Mode(vec![1, 0]),
            ExpPoly::decaying(Complex64::new(1.0, 0.0), a).unwrap(),
            10,
        );
        let n = fourier_norm(&s, 0.5, 0.5).unwrap();
        assert!((n.k - 0.5f64.exp()).abs() < 1e-15);
        assert_eq!(n.rate, a);
    }

    #[test]
    fn bad_nu_rejected() {
        let s = FourierSeries::constant(1, 3, Complex64::new(1.0, 0.0));
        assert!(fourier_norm(&s, 0.5, 0.0).is_err());
        assert!(fourier_norm(&s, 0.5, 0.6).is_err());
    }
}
