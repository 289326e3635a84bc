//! Torus persistence through the normalizing transformation, and a
//! symplecticity check of the maps themselves.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::flow::{flow_to, HamiltonianField, PhasePoint};
use super::integrator::{IntegratorError, IntegratorOptions};
use super::transform::{apply_transformation, Direction, ExtendedPoint, StepMap};
use crate::hamiltonian::KolmogorovHamiltonian;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusSample {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// Pulled back through the inverse transformation.
    pub q_normal: Vec<f64>,
    pub p_normal: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusReport {
    pub steps: usize,
    pub sup_p_norm: f64,
    pub freq_drift: f64,
    pub samples: Vec<TorusSample>,
}

impl TorusReport {
    /// CSV with header `t,q1..,p1..,pn1..` where `pn` is the pulled-back action.
    pub fn to_csv(&self) -> String {
        let n = self.samples.first().map_or(0, |s| s.q.len());
        let mut out = String::from("t");
        for prefix in ["q", "p", "pn"] {
            for l in 1..=n {
                out.push_str(&format!(",{prefix}{l}"));
            }
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!("{:.17e}", s.t));
            for v in s.q.iter().map(|x| x.rem_euclid(TAU)).chain(s.p.iter().copied()).chain(s.p_normal.iter().copied()) {
                out.push_str(&format!(",{v:.17e}"));
            }
            out.push('\n');
        }
        out
    }
}

fn wrap(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r == -PI { PI } else { r }
}

/// Follows the orbit of the normalized torus point `(q0, 0)` under `H_0`.
///
/// Reports `sup_t |p⁽ᴶ⁾(t)|_∞` and `sup_t |q⁽ᴶ⁾(t) − q0 − ωt|_∞ (mod 2π)`
/// over `n_samples` equally spaced times in `(0, t_end]` plus `t = 0`.
pub fn torus_error(
    h0: &KolmogorovHamiltonian,
    maps: &[StepMap],
    omega: &[f64],
    q0: &[f64],
    t_end: f64,
    n_samples: usize,
    opts: &IntegratorOptions,
) -> Result<TorusReport, IntegratorError> {
    let n = omega.len();
    let start = apply_transformation(maps, &ExtendedPoint::new(q0.to_vec(), vec![0.0; n], 0.0), Direction::ToOriginal);
    let x0 = PhasePoint::new(start.q, start.p, 0.0);
    let n_samples = n_samples.max(1);
    let times: Vec<f64> = (1..=n_samples).map(|i| t_end * i as f64 / n_samples as f64).collect();
    let traj = flow_to(&HamiltonianField::new(h0), &x0, &times, opts)?;
    let mut report = TorusReport {
        steps: maps.len(),
        sup_p_norm: 0.0,
        freq_drift: 0.0,
        samples: Vec::with_capacity(n_samples + 1),
    };
    for s in std::iter::once(&x0).chain(&traj.samples) {
        let back = apply_transformation(maps, &ExtendedPoint::new(s.q.clone(), s.p.clone(), s.t), Direction::ToNormalized);
        for l in 0..n {
            report.sup_p_norm = report.sup_p_norm.max(back.p[l].abs());
            report.freq_drift = report.freq_drift.max(wrap(back.q[l] - q0[l] - omega[l] * s.t).abs());
        }
        report.samples.push(TorusSample {
            t: s.t,
            q: s.q.clone(),
            p: s.p.clone(),
            q_normal: back.q,
            p_normal: back.p,
        });
    }
    Ok(report)
}

/// `max |JᵀΩJ − Ω|` for the composed map `direction`, with `J` from central
/// differences of step `h` in the canonical ordering `(q, ξ, p, η)`.
pub fn canonicity_check(maps: &[StepMap], points: &[ExtendedPoint], h: f64, direction: Direction) -> f64 {
    let mut worst: f64 = 0.0;
    for x in points {
        let base = x.to_canonical();
        let dim = base.len();
        let half = dim / 2;
        // jac[i][j] = ∂ out_i / ∂ in_j
        let mut jac = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[j] += h;
            minus[j] -= h;
            let fp = apply_transformation(maps, &ExtendedPoint::from_canonical(&plus), direction).to_canonical();
            let fm = apply_transformation(maps, &ExtendedPoint::from_canonical(&minus), direction).to_canonical();
            for i in 0..dim {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        // (JᵀΩJ)_{ab} = Σ_{i<half} J_{i,a} J_{i+half,b} − J_{i+half,a} J_{i,b}
        for a in 0..dim {
            for b in 0..dim {
                let mut s = 0.0;
                for i in 0..half {
                    s += jac[i][a] * jac[i + half][b] - jac[i + half][a] * jac[i][b];
                }
                let omega_ab = if b == a + half {
                    1.0
                } else if a == b + half {
                    -1.0
                } else {
                    0.0
                };
                worst = worst.max((s - omega_ab).abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalizer::{GeneratorPair, LieOptions};

    #[test]
    fn wrap_range() {
        assert_eq!(wrap(0.0), 0.0);
        assert!((wrap(TAU + 0.1) - 0.1).abs() < 1e-12);
        assert!((wrap(-TAU - 0.1) + 0.1).abs() < 1e-12);
        assert_eq!(wrap(PI), PI);
    }

    #[test]
    fn identity_map_is_canonical() {
        let m = StepMap::new(&GeneratorPair::zero(2, 4), &LieOptions::default()).unwrap();
        let pts = vec![ExtendedPoint::new(vec![0.1, 0.2], vec![0.3, 0.4], 0.5)];
        assert!(canonicity_check(&[m], &pts, 1e-5, Direction::ToOriginal) < 1e-10);
        assert!(canonicity_check(&[], &pts, 1e-5, Direction::ToOriginal) < 1e-10);
    }

    #[test]
    fn unperturbed_torus_is_exact() {
        let h = KolmogorovHamiltonian::unperturbed(vec![1.0, 2f64.sqrt()], &[vec![1.0, 0.0], vec![0.0, 1.0]], 4).unwrap();
        let r = torus_error(&h, &[], &h.omega.clone(), &[0.3, 0.5], 50.0, 20, &IntegratorOptions::default()).unwrap();
        assert_eq!(r.sup_p_norm, 0.0);
        assert!(r.freq_drift < 1e-10);
        assert_eq!(r.samples.len(), 21);
    }
}
