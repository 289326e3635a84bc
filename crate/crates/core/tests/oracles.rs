//! Test-side reimplementations of the quantitative pieces, then frozen
//! values for the shipped golden config.

use std::f64::consts::E;
use std::path::Path;

use aperiodic_kam::config::RunConfig;
use aperiodic_kam::estimates::compute_constants;
use aperiodic_kam::homological::{boundary_value, mode_solve, small_divisor_constants, DiophantineFrequency};
use aperiodic_kam::series::{ExpPoly, Term};
use num_complex::Complex64;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn golden() -> RunConfig {
    RunConfig::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/golden.json"))).unwrap()
}

/// `Σ_{k≠0} e^{-c|k|₁}` over `Zⁿ` by the generating function.
fn lattice_exact(n: usize, c: f64) -> f64 {
    let x = (-c).exp();
    ((1.0 + x) / (1.0 - x)).powi(n as i32) - 1.0
}

struct Oracle {
    s1: f64,
    s2: f64,
    m: [f64; 7],
    d: f64,
    t: f64,
}

fn oracle(n: usize, tau: f64, gamma: f64, nu: f64, ss: f64, rs: f64, w: f64) -> Oracle {
    let sum = lattice_exact(n, 2.0 * nu * (2.0 / 3.0) * ss);
    let s1 = 4.0 * E * E + 2.0 * (gamma + E) * (tau / E).powf(tau) * sum;
    let s2 = ((tau + 1.0) / E).powf(tau + 1.0) * sum;
    let nf = n as f64;
    let m0 = s1 / ss.powf(tau);
    let m1 = nf * s2 / ss.powf(tau + 1.0);
    let m2 = nf * s1 * (1.0 + m1) / ss.powf(tau + 1.0);
    let m3 = nf * nf * s2 * (1.0 + m1) / ss.powf(tau + 1.0);
    let m4 = 2.0 * m1 * (1.0 + m1);
    let m5 = 16.0 * nf * (1.0 + m1) * m2 / (E * ss);
    let m6 = 16.0 * nf * m2 / (E * ss);
    let d = [8.0 * E * m2, m4, m5, m6].into_iter().fold(0.0, f64::max);
    let t = [m2 * rs, (m1 * E * E + 2.0 * m3) * ss, 2.0 * w * (m0 * E * E + 2.0 * m2)]
        .into_iter()
        .fold(0.0, f64::max)
        / (d * E * E * rs * ss);
    Oracle {
        s1,
        s2,
        m: [m0, m1, m2, m3, m4, m5, m6],
        d,
        t,
    }
}

#[test]
fn constants_match_closed_form_lattice() {
    for &(n, tau, gamma, ss) in &[(2, 1.2, 1.0, 0.125), (2, 2.0, 0.3, 0.2), (3, 1.5, 0.1, 0.1), (1, 0.5, 1.0, 0.5)] {
        let c = compute_constants(n, tau, gamma, 0.25, ss, 0.0625, 1.618).unwrap();
        let o = oracle(n, tau, gamma, 0.25, ss, 0.0625, 1.618);
        let got = [c.m0, c.m1, c.m2, c.m3, c.m4, c.m5, c.m6];
        assert!(rel(c.s1, o.s1) < 1e-12 && rel(c.s2, o.s2) < 1e-12, "n={n} τ={tau}");
        for (i, (g, w)) in got.iter().zip(o.m).enumerate() {
            assert!(rel(*g, w) < 1e-12, "M{i}: {g} vs {w}");
        }
        assert!(rel(c.d, o.d) < 1e-12 && rel(c.t, o.t) < 1e-12);
    }
}

#[test]
fn small_divisor_lattice_at_reduced_strip() {
    let sd = small_divisor_constants(2, 1.2, 1.0, 0.25, 0.5, 0.3, 0.2).unwrap();
    let exact = lattice_exact(2, 2.0 * 0.25 * 0.5 * 0.5);
    assert!(rel(sd.lattice.value(), exact) < 1e-12);
    assert!(sd.lattice.partial <= exact);
}

#[test]
fn golden_gamma_is_attained_at_unit_mode() {
    // |⟨ω,k⟩|·|k|^τ over |k| ≤ 40, scanned here independently of the library
    let w = [1.0, (1.0 + 5f64.sqrt()) / 2.0];
    let mut best = f64::INFINITY;
    for k1 in -40i32..=40 {
        for k2 in -40i32..=40 {
            let l1 = k1.abs() + k2.abs();
            if l1 == 0 || l1 > 40 {
                continue;
            }
            let v = (k1 as f64 * w[0] + k2 as f64 * w[1]).abs() * (l1 as f64).powf(1.2);
            best = best.min(v);
        }
    }
    let freq = DiophantineFrequency::new(w.to_vec(), 1.2, 40).unwrap();
    assert_eq!(freq.gamma, best);
    assert_eq!(best, 1.0);
}

#[test]
fn golden_m_f_closed_form() {
    let cfg = golden();
    let p = cfg.build().unwrap();
    // four cosines, each split into ±k with half amplitude, weighted by
    // e^{2|k|(1-ν)σ}, ρ^{|α|} and the strip factor e^{aζ₀}
    let (nu, sigma, rho, a) = (cfg.nu, cfg.sigma, cfg.rho, cfg.perturbation.decay);
    let zeta0 = sigma / (12.0 * p.freq.omega_norm());
    let w = |l1: f64| (2.0 * l1 * (1.0 - nu) * sigma).exp();
    let expected = (a * zeta0).exp() * (1.0 * w(1.0) + 0.5 * w(2.0) + 0.5 * w(1.0) * rho + 0.25 * w(1.0) * rho * rho);
    assert!(rel(p.m_f, expected) < 1e-14, "{} vs {expected}", p.m_f);
}

#[test]
fn mode_solution_matches_integral_form() {
    // φ(0) from the closed-form recursion against −∫₀^∞ ψ(x)e^{iλx}dx by
    // composite Simpson on [0, 400]
    let psi = ExpPoly::from_terms(vec![
        Term::new(Complex64::new(0.7, -0.2), 0, Complex64::new(-0.1, 0.3)),
        Term::new(Complex64::new(0.3, 0.1), 2, Complex64::new(-0.25, 0.0)),
    ])
    .unwrap();
    for lambda in [0.0, 0.618, -2.3] {
        let phi0 = mode_solve(&psi, lambda).unwrap().eval(0.0);
        let integrand = |x: f64| psi.eval(x) * Complex64::from_polar(1.0, lambda * x);
        let (n, top) = (400_000, 400.0);
        let h = top / n as f64;
        let mut acc = integrand(0.0) + integrand(top);
        for i in 1..n {
            acc += integrand(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let quad = -acc * h / 3.0;
        assert!((phi0 - quad).norm() < 1e-9, "λ={lambda}: {phi0} vs {quad}");
        assert!((phi0 - boundary_value(&psi, lambda).unwrap()).norm() < 1e-14);
    }
}

// Frozen from the oracles above and the shipped golden config.
#[test]
fn golden_frozen_values() {
    let p = golden().build().unwrap();
    let frozen = [
        ("M_f", p.m_f, 5.032349398020694),
        ("S1", p.consts.s1, 6.451345647670557e3),
        ("S2", p.consts.s2, 1.4464441898531675e3),
        ("M2", p.consts.m2, 3.51244452653536e11),
        ("D", p.consts.d, 9.2829530370722e18),
        ("T", p.consts.t, 4.24221148503034e-6),
        ("coefficient", p.threshold.coefficient, 6.702686709012995e-32),
        ("eps_a", p.threshold.eps_a, 4.369363494030333e-36),
        ("eps_tilde", p.threshold.eps_tilde, 4.056241892510468e-3),
    ];
    for (name, got, want) in frozen {
        assert!(rel(got, want) < 1e-12, "{name}: {got:e} vs {want:e}");
    }
    // D is attained by M5 here
    assert_eq!(p.consts.d, p.consts.m5);
}

#[test]
fn golden_frozen_envelopes() {
    let cfg = golden();
    let h = cfg.build().unwrap().normalize(4).unwrap();
    let frozen = [4.357844551781707e-3, 1.5535428429054365e-5, 4.388127949507783e-10, 3.4423113363381807e-19];
    for (j, want) in frozen.iter().enumerate() {
        let got = h.hamiltonians[j].eps_measure(cfg.sigma, cfg.nu, 0.0, 0.0).unwrap();
        assert!(rel(got, *want) < 1e-9, "H_{j}: {got:e} vs {want:e}");
    }
}
