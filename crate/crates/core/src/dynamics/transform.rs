//! Coordinate form of the per-step canonical maps.
//!
//! The Lie transform of `F` by `G` equals `F` composed with the map
//! `x ↦ exp(L_G)·id (x)`, so each step's old coordinates are series in the
//! new ones. Going from the normalized variables back to the original ones
//! applies the χ-map first and then the φ-map, one step at a time from
//! the last step down to the first.

use serde::{Deserialize, Serialize};

use crate::normalizer::{lie_transform, GeneratorPair, LieOptions, LieReport, NormalizerError};
use crate::series::{FourierSeries, PolySeries};

/// A point of the extended phase space `(q, p, ξ, η)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedPoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub xi: f64,
    pub eta: f64,
}

impl ExtendedPoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>, xi: f64) -> Self {
        Self { q, p, xi, eta: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Flattened as `(q, ξ, p, η)`: positions first, conjugate momenta after.
    pub fn to_canonical(&self) -> Vec<f64> {
        let mut v = self.q.clone();
        v.push(self.xi);
        v.extend_from_slice(&self.p);
        v.push(self.eta);
        v
    }

    pub fn from_canonical(v: &[f64]) -> Self {
        let n = v.len() / 2 - 1;
        Self {
            q: v[..n].to_vec(),
            xi: v[n],
            p: v[n + 1..2 * n + 1].to_vec(),
            eta: v[2 * n + 1],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Normalized variables to original ones.
    ToOriginal,
    /// Original variables to normalized ones.
    ToNormalized,
}

/// Coordinate series of `exp(L_{±χ})`: increments of `q` and `η`, new `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiMap {
    pub dq: Vec<PolySeries>,
    pub dp: Vec<PolySeries>,
    pub deta: PolySeries,
}

/// `∂_qφ` and `∂_ξφ`, the shifts of the φ-map.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiMap {
    pub dphi_q: Vec<FourierSeries>,
    pub dphi_xi: FourierSeries,
}

/// Both directions of one normalization step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepMap {
    pub phi: PhiMap,
    pub chi_forward: ChiMap,
    pub chi_inverse: ChiMap,
    pub report: LieReport,
}

fn inv_factorial_shifted(t: usize) -> f64 {
    (1..=t + 1).fold(1.0, |acc, i| acc / i as f64)
}

/// `exp(L_G) x - x` for each coordinate, as `Σ_{t≥0} L_G^t(L_G x)/(t+1)!`.
pub fn chi_map(chi: &PolySeries, opts: &LieOptions) -> Result<(ChiMap, LieReport), NormalizerError> {
    let n = chi.dim();
    let mut report = LieReport::default();
    let mut run = |seed: PolySeries| -> Result<PolySeries, NormalizerError> {
        let (s, r) = lie_transform(chi, &seed, inv_factorial_shifted, 0, opts)?;
        report.terms_used = report.terms_used.max(r.terms_used);
        report.max_ratio = report.max_ratio.max(r.max_ratio);
        report.tail_bound += r.tail_bound;
        report.discarded_mass += r.discarded_mass;
        Ok(s)
    };
    let mut dq = Vec::with_capacity(n);
    let mut dp = Vec::with_capacity(n);
    for l in 0..n {
        // L_χ q_l = -∂_{p_l}χ, L_χ p_l = ∂_{q_l}χ
        dq.push(run(chi.partial_p(l).scale_real(-1.0))?);
        dp.push(run(chi.partial_q(l))?);
    }
    let deta = run(chi.partial_xi())?;
    Ok((ChiMap { dq, dp, deta }, report))
}

impl ChiMap {
    pub fn apply(&self, x: &ExtendedPoint) -> ExtendedPoint {
        let n = x.dim();
        let mut out = x.clone();
        for l in 0..n {
            out.q[l] += self.dq[l].evaluate(&x.q, &x.p, x.xi, 0.0).re;
            out.p[l] += self.dp[l].evaluate(&x.q, &x.p, x.xi, 0.0).re;
        }
        out.eta += self.deta.evaluate(&x.q, &x.p, x.xi, 0.0).re;
        out
    }
}

impl PhiMap {
    pub fn new(phi: &FourierSeries) -> Self {
        Self {
            dphi_q: (0..phi.dim()).map(|l| phi.partial_q(l)).collect(),
            dphi_xi: phi.partial_xi(),
        }
    }

    /// `p ↦ p + sign·∂_qφ(q,ξ)`, `η ↦ η + sign·∂_ξφ(q,ξ)`.
    pub fn apply(&self, x: &ExtendedPoint, sign: f64) -> ExtendedPoint {
        let mut out = x.clone();
        for (pl, d) in out.p.iter_mut().zip(&self.dphi_q) {
            *pl += sign * d.evaluate(&x.q, x.xi).re;
        }
        out.eta += sign * self.dphi_xi.evaluate(&x.q, x.xi).re;
        out
    }
}

impl StepMap {
    pub fn new(gens: &GeneratorPair, opts: &LieOptions) -> Result<Self, NormalizerError> {
        let chi = gens.chi();
        let (chi_forward, mut report) = chi_map(&chi, opts)?;
        let (chi_inverse, r) = chi_map(&chi.scale_real(-1.0), opts)?;
        report.terms_used = report.terms_used.max(r.terms_used);
        report.max_ratio = report.max_ratio.max(r.max_ratio);
        report.tail_bound += r.tail_bound;
        report.discarded_mass += r.discarded_mass;
        Ok(Self {
            phi: PhiMap::new(&gens.phi),
            chi_forward,
            chi_inverse,
            report,
        })
    }

    /// Old variables of the step as functions of the new ones.
    pub fn to_original(&self, x: &ExtendedPoint) -> ExtendedPoint {
        self.phi.apply(&self.chi_forward.apply(x), 1.0)
    }

    /// New variables of the step as functions of the old ones.
    pub fn to_normalized(&self, x: &ExtendedPoint) -> ExtendedPoint {
        self.chi_inverse.apply(&self.phi.apply(x, -1.0))
    }
}

pub fn step_maps(gens: &[GeneratorPair], opts: &LieOptions) -> Result<Vec<StepMap>, NormalizerError> {
    gens.iter().map(|g| StepMap::new(g, opts)).collect()
}

/// Composition of all step maps in the requested direction. `ξ` is never
/// changed.
pub fn apply_transformation(maps: &[StepMap], x: &ExtendedPoint, direction: Direction) -> ExtendedPoint {
    match direction {
        Direction::ToOriginal => maps.iter().rev().fold(x.clone(), |acc, m| m.to_original(&acc)),
        Direction::ToNormalized => maps.iter().fold(x.clone(), |acc, m| m.to_normalized(&acc)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{induction_basis, Perturbation, PerturbationTerm};
    use crate::homological::DiophantineFrequency;
    use crate::normalizer::{kolmogorov_step, StepOptions};

    fn golden_step(eps: f64) -> (crate::hamiltonian::KolmogorovHamiltonian, crate::hamiltonian::KolmogorovHamiltonian, GeneratorPair) {
        let omega = vec![1.0, (1.0 + 5f64.sqrt()) / 2.0];
        let freq = DiophantineFrequency::new(omega.clone(), 1.2, 40).unwrap();
        let pert = Perturbation {
            decay: 0.1,
            terms: vec![
                PerturbationTerm { k: vec![1, 0], amplitude: 1.0, phase: 0.0, p_monomial: vec![] },
                PerturbationTerm { k: vec![1, -1], amplitude: 0.5, phase: 0.3, p_monomial: vec![] },
                PerturbationTerm { k: vec![0, 1], amplitude: 0.5, phase: 0.0, p_monomial: vec![1, 0] },
                PerturbationTerm { k: vec![1, 0], amplitude: 0.25, phase: 0.0, p_monomial: vec![0, 2] },
            ],
        };
        let f = pert.to_poly(2, 12).unwrap();
        let gamma = vec![vec![1.0, 0.1], vec![0.1, 0.8]];
        let h0 = induction_basis(omega, &gamma, &f, eps).unwrap();
        let (h1, rec) = kolmogorov_step(&h0, &freq, 0, &StepOptions::default()).unwrap();
        (h0, h1, rec.generators)
    }

    fn sample(seed: u64) -> ExtendedPoint {
        let s = seed as f64;
        ExtendedPoint {
            q: vec![(1.3 * s).sin() * 3.0, (0.7 * s + 1.0).cos() * 3.0],
            p: vec![0.05 * (2.1 * s).sin(), 0.05 * (1.7 * s).cos()],
            xi: 0.4 * s,
            eta: 0.1 * s,
        }
    }

    #[test]
    fn zero_generators_identity() {
        let g = GeneratorPair::zero(2, 8);
        let m = StepMap::new(&g, &LieOptions::default()).unwrap();
        let x = sample(3);
        assert_eq!(apply_transformation(std::slice::from_ref(&m), &x, Direction::ToOriginal), x);
        assert_eq!(apply_transformation(&[m], &x, Direction::ToNormalized), x);
    }

    #[test]
    fn exchange_identity() {
        let (h0, h1, g) = golden_step(1e-2);
        let m = StepMap::new(&g, &LieOptions::default()).unwrap();
        for s in 0..6 {
            let x = sample(s);
            let lhs = h1.evaluate(&x.q, &x.p, x.xi, x.eta);
            let y = m.to_original(&x);
            let rhs = h0.evaluate(&y.q, &y.p, y.xi, y.eta);
            assert!((lhs - rhs).abs() < 1e-12, "s={s}: {lhs} vs {rhs}");
            assert_eq!(y.xi, x.xi);
        }
    }

    #[test]
    fn forward_then_inverse() {
        let (_, _, g) = golden_step(1e-2);
        let maps = vec![StepMap::new(&g, &LieOptions::default()).unwrap()];
        for s in 0..6 {
            let x = sample(s);
            let back = apply_transformation(&maps, &apply_transformation(&maps, &x, Direction::ToOriginal), Direction::ToNormalized);
            for (a, b) in back.to_canonical().iter().zip(x.to_canonical()) {
                assert!((a - b).abs() < 1e-13, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn displacement_linear_in_eps() {
        let disp = |eps: f64| {
            let (_, _, g) = golden_step(eps);
            let m = StepMap::new(&g, &LieOptions::default()).unwrap();
            let x = sample(2);
            let y = m.to_original(&x);
            y.to_canonical().iter().zip(x.to_canonical()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let r = disp(1e-3) / disp(1e-4);
        assert!((r - 10.0).abs() < 0.1, "ratio {r}");
    }
}
