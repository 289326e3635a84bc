//! Hamilton's equations of a Kolmogorov Hamiltonian with `ξ = t`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::integrator::{integrate as dopri5, IntegratorError, IntegratorOptions, IntegratorStats};
use crate::hamiltonian::KolmogorovHamiltonian;
use crate::series::FourierSeries;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>, t: f64) -> Self {
        Self { q, p, t }
    }

    /// Same point with every angle reduced to `[0, 2π)`.
    pub fn normalized(&self) -> Self {
        Self {
            q: self.q.iter().map(|x| x.rem_euclid(TAU)).collect(),
            p: self.p.clone(),
            t: self.t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(|v| v.is_finite()) && self.t.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<PhasePoint>,
    pub method: String,
    pub rtol: f64,
    pub atol: f64,
    pub stats: IntegratorStats,
}

impl Trajectory {
    /// CSV with header `t,q1..qn,p1..pn`.
    pub fn to_csv(&self) -> String {
        let n = self.samples.first().map_or(0, |s| s.q.len());
        let mut out = String::from("t");
        for l in 1..=n {
            out.push_str(&format!(",q{l}"));
        }
        for l in 1..=n {
            out.push_str(&format!(",p{l}"));
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!("{:.17e}", s.t));
            for v in s.q.iter().chain(&s.p) {
                out.push_str(&format!(",{v:.17e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// `H` unpacked for repeated evaluation of its gradients.
#[derive(Clone, Debug)]
pub struct HamiltonianField {
    omega: Vec<f64>,
    a: FourierSeries,
    b: Vec<FourierSeries>,
    c: Vec<Vec<FourierSeries>>,
}

impl HamiltonianField {
    pub fn new(h: &KolmogorovHamiltonian) -> Self {
        Self {
            omega: h.omega.clone(),
            a: h.a.clone(),
            b: h.b.clone(),
            c: h.c_matrix(),
        }
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    /// `(∂_pH, ∂_qH)` at `(q, p, ξ)`.
    pub fn gradients(&self, q: &[f64], p: &[f64], xi: f64, dq: &mut [f64], dp: &mut [f64]) {
        let n = self.dim();
        let mut grad = vec![Complex64::new(0.0, 0.0); n];
        self.a.evaluate_with_grad(q, xi, &mut grad);
        for l in 0..n {
            dp[l] = grad[l].re;
            dq[l] = self.omega[l];
        }
        for (l, bl) in self.b.iter().enumerate() {
            let v = bl.evaluate_with_grad(q, xi, &mut grad).re;
            dq[l] += v;
            for r in 0..n {
                dp[r] += grad[r].re * p[l];
            }
        }
        for l in 0..n {
            for m in l..n {
                let v = self.c[l][m].evaluate_with_grad(q, xi, &mut grad).re;
                let w = if l == m { 0.5 * p[l] * p[l] } else { p[l] * p[m] };
                if l == m {
                    dq[l] += v * p[l];
                } else {
                    dq[l] += v * p[m];
                    dq[m] += v * p[l];
                }
                for r in 0..n {
                    dp[r] += grad[r].re * w;
                }
            }
        }
    }

    /// Right-hand side on the flat state `(q, p)`.
    pub fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.dim();
        let (q, p) = y.split_at(n);
        let (dq, dp) = dy.split_at_mut(n);
        self.gradients(q, p, t, dq, dp);
        dp.iter_mut().for_each(|v| *v = -*v);
    }
}

/// `(dq/dt, dp/dt)` at `x`, with `ξ = x.t`.
pub fn vector_field(h: &KolmogorovHamiltonian, x: &PhasePoint) -> (Vec<f64>, Vec<f64>) {
    let field = HamiltonianField::new(h);
    let n = field.dim();
    let mut dq = vec![0.0; n];
    let mut dp = vec![0.0; n];
    field.gradients(&x.q, &x.p, x.t, &mut dq, &mut dp);
    dp.iter_mut().for_each(|v| *v = -*v);
    (dq, dp)
}

/// States at each of `times` (monotone, any direction) starting from `x0`.
/// Angles are left unwrapped.
pub fn flow_to(
    field: &HamiltonianField,
    x0: &PhasePoint,
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<Trajectory, IntegratorError> {
    let n = field.dim();
    let mut y0 = x0.q.clone();
    y0.extend_from_slice(&x0.p);
    let (ys, stats) = dopri5(|t, y, dy| field.rhs(t, y, dy), x0.t, &y0, times, opts)?;
    let samples = ys
        .into_iter()
        .zip(times)
        .map(|(y, &t)| PhasePoint::new(y[..n].to_vec(), y[n..].to_vec(), t))
        .collect();
    Ok(Trajectory {
        samples,
        method: "dopri5".into(),
        rtol: opts.rtol,
        atol: opts.atol,
        stats,
    })
}

/// Integrates from `x0.t` to `t_end`, sampling `n_samples` equally spaced
/// times after the start. The first sample is `x0` itself.
pub fn integrate(
    h: &KolmogorovHamiltonian,
    x0: &PhasePoint,
    t_end: f64,
    n_samples: usize,
    opts: &IntegratorOptions,
) -> Result<Trajectory, IntegratorError> {
    assert!(t_end > x0.t, "t_end must exceed the start time");
    let n_samples = n_samples.max(1);
    let times: Vec<f64> = (1..=n_samples)
        .map(|i| x0.t + (t_end - x0.t) * i as f64 / n_samples as f64)
        .collect();
    let mut traj = flow_to(&HamiltonianField::new(h), x0, &times, opts)?;
    traj.samples.insert(0, x0.clone());
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{induction_basis, Perturbation, PerturbationTerm};

    fn golden(eps: f64) -> KolmogorovHamiltonian {
        let omega = vec![1.0, (1.0 + 5f64.sqrt()) / 2.0];
        let pert = Perturbation {
            decay: 0.1,
            terms: vec![
                PerturbationTerm { k: vec![1, 0], amplitude: 1.0, phase: 0.0, p_monomial: vec![] },
                PerturbationTerm { k: vec![0, 1], amplitude: 0.5, phase: 0.2, p_monomial: vec![1, 0] },
                PerturbationTerm { k: vec![1, -1], amplitude: 0.25, phase: 0.0, p_monomial: vec![1, 1] },
            ],
        };
        let f = pert.to_poly(2, 8).unwrap();
        induction_basis(omega, &[vec![1.0, 0.1], vec![0.1, 0.8]], &f, eps).unwrap()
    }

    #[test]
    fn unperturbed_drift() {
        let h = golden(0.0);
        let (dq, dp) = vector_field(&h, &PhasePoint::new(vec![0.3, 1.0], vec![0.0, 0.0], 2.0));
        assert_eq!(dq, h.omega);
        assert!(dp.iter().all(|v| *v == 0.0));
        let traj = integrate(&h, &PhasePoint::new(vec![0.3, 1.0], vec![0.0, 0.0], 0.0), 50.0, 5, &IntegratorOptions::default()).unwrap();
        for s in &traj.samples {
            assert!((s.q[0] - 0.3 - s.t).abs() < 1e-12);
            assert!((s.q[1] - 1.0 - h.omega[1] * s.t).abs() < 1e-11);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = golden(0.3);
        let x = PhasePoint::new(vec![0.7, -1.1], vec![0.2, -0.4], 1.5);
        let (dq, dp) = vector_field(&h, &x);
        let e = 1e-6;
        for l in 0..2 {
            let mut qp = x.q.clone();
            let mut qm = x.q.clone();
            qp[l] += e;
            qm[l] -= e;
            let fd = (h.evaluate(&qp, &x.p, x.t, 0.0) - h.evaluate(&qm, &x.p, x.t, 0.0)) / (2.0 * e);
            assert!((fd + dp[l]).abs() < 1e-6, "dp {l}");
            let mut pp = x.p.clone();
            let mut pm = x.p.clone();
            pp[l] += e;
            pm[l] -= e;
            let fd = (h.evaluate(&x.q, &pp, x.t, 0.0) - h.evaluate(&x.q, &pm, x.t, 0.0)) / (2.0 * e);
            assert!((fd - dq[l]).abs() < 1e-6, "dq {l}");
        }
    }

    #[test]
    fn energy_balance() {
        let h = golden(0.1);
        let dt_h = {
            let poly = h.perturbation_poly().unwrap().partial_xi();
            move |x: &PhasePoint| poly.evaluate(&x.q, &x.p, x.t, 0.0).re
        };
        let n = 2000;
        let traj = integrate(&h, &PhasePoint::new(vec![0.1, 0.2], vec![0.05, 0.0], 0.0), 20.0, n, &IntegratorOptions::default()).unwrap();
        // composite Simpson on the samples
        let dt = 20.0 / n as f64;
        let mut integral = 0.0;
        for (i, s) in traj.samples.iter().enumerate() {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            integral += w * dt_h(s);
        }
        integral *= dt / 3.0;
        let e = |s: &PhasePoint| h.evaluate(&s.q, &s.p, s.t, 0.0);
        let change = e(&traj.samples[n]) - e(&traj.samples[0]);
        assert!((change - integral).abs() < 1e-9, "{change} vs {integral}");
    }

    #[test]
    fn time_reversal() {
        let h = golden(0.2);
        let field = HamiltonianField::new(&h);
        let x0 = PhasePoint::new(vec![0.4, 2.0], vec![0.1, -0.05], 0.0);
        let opts = IntegratorOptions::default();
        let fwd = flow_to(&field, &x0, &[30.0], &opts).unwrap();
        let back = flow_to(&field, &fwd.samples[0], &[0.0], &opts).unwrap();
        for (a, b) in back.samples[0].q.iter().chain(&back.samples[0].p).zip(x0.q.iter().chain(&x0.p)) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn csv_shape() {
        let h = golden(0.0);
        let traj = integrate(&h, &PhasePoint::new(vec![0.0, 0.0], vec![0.0, 0.0], 0.0), 1.0, 4, &IntegratorOptions::default()).unwrap();
        let csv = traj.to_csv();
        assert!(csv.starts_with("t,q1,q2,p1,p2\n"));
        assert_eq!(csv.lines().count(), 6);
    }
}
