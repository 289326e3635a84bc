//! One Kolmogorov step and the iteration driver.
//!
//! A step applies `exp(L_φ)` with `φ(q,ξ)` removing `A`, then `exp(L_χ)`
//! with `χ = ⟨Y(q,ξ),p⟩` removing the linear part. Both generators solve a
//! time-dependent homological equation, so `ω` is never corrected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::{HamiltonianError, KolmogorovHamiltonian};
use crate::homological::{homological_residual, solve_homological, DiophantineFrequency, HomologicalError};
use crate::series::{
    fourier_norm, fourier_norm_at, vector_norm, DegreePolicy, FourierSeries, NormEnvelope, PolySeries,
    SeriesError,
};

pub const HISTORY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum NormalizerError {
    #[error("Lie series contraction proxy {ratio:.3e} exceeds {limit} at term {term}")]
    Divergence { ratio: f64, limit: f64, term: usize },
    #[error("structure check failed: {0}")]
    Structure(String),
    #[error(transparent)]
    Homological(#[from] HomologicalError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieOptions {
    /// Stop once a weighted term is below `tol` times the running sum.
    pub tol: f64,
    pub max_terms: usize,
    /// Largest admissible ratio of successive `L^s/s!` term norms.
    pub contraction_limit: f64,
}

impl Default for LieOptions {
    fn default() -> Self {
        Self {
            tol: 1e-15,
            max_terms: 30,
            contraction_limit: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LieReport {
    pub terms_used: usize,
    pub max_ratio: f64,
    pub tail_bound: f64,
    pub discarded_mass: f64,
}

impl LieReport {
    fn merge(&mut self, other: &LieReport) {
        self.terms_used = self.terms_used.max(other.terms_used);
        self.max_ratio = self.max_ratio.max(other.max_ratio);
        self.tail_bound += other.tail_bound;
        self.discarded_mass += other.discarded_mass;
    }
}

fn size(f: &PolySeries) -> Result<f64, SeriesError> {
    f.sup_norm(0.0, 1.0, 0.5)
}

/// `Σ_{s≥start} w(s) L_G^s f`, truncated adaptively.
///
/// `w(s) = 1/s!` with `start = 0` is `exp(L_G)`; other weights give the
/// reshuffled sums of the scheme and the coordinate series.
pub fn lie_transform(
    gen: &PolySeries,
    f: &PolySeries,
    weight: impl Fn(usize) -> f64,
    start: usize,
    opts: &LieOptions,
) -> Result<(PolySeries, LieReport), NormalizerError> {
    let mut report = LieReport::default();
    let mut term = f.clone();
    let mut out = if start == 0 {
        f.scale_real(weight(0))
    } else {
        PolySeries::zero(f.dim(), f.k_max())
    };
    let mut prev = size(f)?;
    let mut result_size = size(&out)?;
    for s in 1..=opts.max_terms {
        if prev == 0.0 {
            break;
        }
        let (next, lost) = gen.lie_derivative_report(&term, DegreePolicy::Strict)?;
        report.discarded_mass += lost;
        let cur = size(&next)?;
        let ratio = cur / (s as f64 * prev);
        report.max_ratio = report.max_ratio.max(ratio);
        if ratio > opts.contraction_limit {
            return Err(NormalizerError::Divergence {
                ratio,
                limit: opts.contraction_limit,
                term: s,
            });
        }
        term = next;
        prev = cur;
        report.terms_used = s;
        if s < start {
            continue;
        }
        let w = weight(s);
        out = out.add(&term.scale_real(w))?;
        result_size = size(&out)?;
        let contribution = w * cur;
        if contribution <= opts.tol * result_size {
            let r = report.max_ratio;
            report.tail_bound = contribution * r / (1.0 - r);
            return Ok((out, report));
        }
    }
    let r = report.max_ratio;
    report.tail_bound = if prev == 0.0 { 0.0 } else { weight(report.terms_used) * prev * r / (1.0 - r) };
    let _ = result_size;
    Ok((out, report))
}

pub fn inv_factorial(s: usize) -> f64 {
    (1..=s).fold(1.0, |acc, i| acc / i as f64)
}

/// `exp(L_G) f`.
pub fn exp_lie(gen: &PolySeries, f: &PolySeries, opts: &LieOptions) -> Result<(PolySeries, LieReport), NormalizerError> {
    lie_transform(gen, f, inv_factorial, 0, opts)
}

/// The per-step generating functions: `φ(q,ξ)` and `χ = ⟨Y(q,ξ),p⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorPair {
    pub phi: FourierSeries,
    #[serde(rename = "Y")]
    pub y: Vec<FourierSeries>,
}

impl GeneratorPair {
    pub fn zero(dim: usize, k_max: u32) -> Self {
        Self {
            phi: FourierSeries::zero(dim, k_max),
            y: vec![FourierSeries::zero(dim, k_max); dim],
        }
    }

    pub fn phi_poly(&self) -> PolySeries {
        PolySeries::scalar(self.phi.clone())
    }

    pub fn chi(&self) -> PolySeries {
        PolySeries::linear(&self.y)
    }

    pub fn is_zero(&self) -> bool {
        self.phi.is_zero() && self.y.iter().all(FourierSeries::is_zero)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstTransformation {
    pub phi: FourierSeries,
    pub a_hat: FourierSeries,
    pub b_hat: Vec<FourierSeries>,
    pub discarded_mass: f64,
}

/// `φ` from `∂_ξφ + ∂_ωφ = −A`, then `Â = ⟨B,∂_qφ⟩ + ½⟨C∂_qφ,∂_qφ⟩`
/// and `B̂ = B + C∂_qφ`. `C` is unchanged.
pub fn first_transformation(
    h: &KolmogorovHamiltonian,
    freq: &DiophantineFrequency,
) -> Result<FirstTransformation, NormalizerError> {
    let n = h.dim();
    let phi = solve_homological(&h.a.neg(), freq)?;
    let dphi: Vec<FourierSeries> = (0..n).map(|l| phi.partial_q(l)).collect();
    let mut lost = 0.0;
    let mut a_hat = FourierSeries::zero(n, h.k_max());
    let mut b_hat = h.b.clone();
    for l in 0..n {
        let (t, d) = h.b[l].mul_report(&dphi[l])?;
        lost += d;
        a_hat = a_hat.add(&t)?;
        for m in 0..n {
            let (cd, d) = h.c(l, m).mul_report(&dphi[m])?;
            lost += d;
            b_hat[l] = b_hat[l].add(&cd)?;
            if m >= l {
                let (t, d) = cd.mul_report(&dphi[l])?;
                lost += d;
                let w = if m == l { 0.5 } else { 1.0 };
                a_hat = a_hat.add(&t.scale_real(w))?;
            }
        }
    }
    Ok(FirstTransformation {
        phi,
        a_hat,
        b_hat,
        discarded_mass: lost,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SecondTransformation {
    pub y: Vec<FourierSeries>,
    pub h_next: KolmogorovHamiltonian,
    pub c_increment: Vec<Vec<FourierSeries>>,
    pub lie: LieReport,
}

/// `Y` from `∂_ξY + ∂_ωY = −B̂`, then
/// `A' = exp(L_χ)Â`, `B' = Σ_{s≥1} s/(s+1)! L_χ^s⟨B̂,p⟩`, `½⟨C'p,p⟩ = exp(L_χ)½⟨Cp,p⟩`.
pub fn second_transformation(
    omega: &[f64],
    a_hat: &FourierSeries,
    b_hat: &[FourierSeries],
    c: &[Vec<FourierSeries>],
    freq: &DiophantineFrequency,
    opts: &LieOptions,
) -> Result<SecondTransformation, NormalizerError> {
    let y = b_hat
        .iter()
        .map(|b| solve_homological(&b.neg(), freq))
        .collect::<Result<Vec<_>, _>>()?;
    let chi = PolySeries::linear(&y);
    let mut lie = LieReport::default();

    let (a_next, r) = exp_lie(&chi, &PolySeries::scalar(a_hat.clone()), opts)?;
    lie.merge(&r);
    let (b_next, r) = lie_transform(
        &chi,
        &PolySeries::linear(b_hat),
        |s| s as f64 * inv_factorial(s + 1),
        1,
        opts,
    )?;
    lie.merge(&r);
    let (dc, r) = lie_transform(&chi, &PolySeries::quadratic_form(c), inv_factorial, 1, opts)?;
    lie.merge(&r);

    if a_next.degree() != 0 || b_next.part(0).terms().next().is_some() || b_next.degree() > 1 {
        return Err(NormalizerError::Structure("L_χ changed the degree in p".into()));
    }
    let c_increment = dc.quadratic_matrix();
    let c_next: Vec<Vec<FourierSeries>> = c
        .iter()
        .zip(&c_increment)
        .map(|(row, inc)| row.iter().zip(inc).map(|(x, d)| x.add(d)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let h_next = KolmogorovHamiltonian::new(omega.to_vec(), a_next.scalar_part(), b_next.linear_coeffs(), c_next)?;
    Ok(SecondTransformation {
        y,
        h_next,
        c_increment,
        lie,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    pub lie: LieOptions,
    /// Strip half-width `σ` at which diagnostic envelopes are reported.
    pub norm_sigma: f64,
    pub nu: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            lie: LieOptions::default(),
            norm_sigma: 0.5,
            nu: crate::series::DEFAULT_NU,
        }
    }
}

/// A measured quantity against its theoretical bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub eps_a: NormEnvelope,
    pub eps_b: NormEnvelope,
    pub lie_terms_used: usize,
    pub lie_max_ratio: f64,
    pub lie_tail_bound: f64,
    pub discarded_mass: f64,
    /// Relative homological residuals of `φ` and of the worst `Y_l`.
    pub residual_phi: f64,
    pub residual_y: f64,
    /// Always 0: `C` is stored symmetrically.
    pub c_asymmetry: f64,
    #[serde(default)]
    pub bound_check: Vec<BoundCheck>,
}

/// Everything a step produced besides `H_{j+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub generators: GeneratorPair,
    pub a_hat: FourierSeries,
    pub b_hat: Vec<FourierSeries>,
    pub c_increment: Vec<Vec<FourierSeries>>,
    pub diagnostics: StepDiagnostics,
}

fn relative_residual(
    sol: &FourierSeries,
    psi: &FourierSeries,
    omega: &[f64],
    sigma: f64,
    nu: f64,
) -> Result<f64, SeriesError> {
    let Some(rate) = psi.min_decay() else {
        return Ok(0.0);
    };
    let res = homological_residual(sol, psi, omega)?;
    let den = fourier_norm_at(psi, sigma, nu, rate, 0.0)?;
    Ok(fourier_norm_at(&res, sigma, nu, rate, 0.0)? / den)
}

pub fn kolmogorov_step(
    h: &KolmogorovHamiltonian,
    freq: &DiophantineFrequency,
    step: usize,
    opts: &StepOptions,
) -> Result<(KolmogorovHamiltonian, StepRecord), NormalizerError> {
    let first = first_transformation(h, freq)?;
    let c = h.c_matrix();
    let second = second_transformation(&h.omega, &first.a_hat, &first.b_hat, &c, freq, &opts.lie)?;
    let h_next = second.h_next;
    if h_next.omega != h.omega {
        return Err(NormalizerError::Structure("frequency changed".into()));
    }

    let residual_phi = relative_residual(&first.phi, &h.a.neg(), &h.omega, opts.norm_sigma, opts.nu)?;
    let mut residual_y: f64 = 0.0;
    for (y, b) in second.y.iter().zip(&first.b_hat) {
        residual_y = residual_y.max(relative_residual(y, &b.neg(), &h.omega, opts.norm_sigma, opts.nu)?);
    }
    let diagnostics = StepDiagnostics {
        step,
        eps_a: fourier_norm(&h_next.a, opts.norm_sigma, opts.nu)?,
        eps_b: vector_norm(&h_next.b, opts.norm_sigma, opts.nu)?,
        lie_terms_used: second.lie.terms_used,
        lie_max_ratio: second.lie.max_ratio,
        lie_tail_bound: second.lie.tail_bound,
        discarded_mass: first.discarded_mass + second.lie.discarded_mass,
        residual_phi,
        residual_y,
        c_asymmetry: 0.0,
        bound_check: Vec::new(),
    };
    let record = StepRecord {
        generators: GeneratorPair {
            phi: first.phi,
            y: second.y,
        },
        a_hat: first.a_hat,
        b_hat: first.b_hat,
        c_increment: second.c_increment,
        diagnostics,
    };
    Ok((h_next, record))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizeOptions {
    pub max_steps: usize,
    pub step: StepOptions,
    /// Stop once `max(‖A‖,‖B‖)` falls below this.
    pub floor: f64,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            max_steps: 4,
            step: StepOptions::default(),
            floor: 1e-250,
        }
    }
}

/// The run: `H_0 … H_J` and one record per step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizeHistory {
    pub schema_version: u32,
    pub frequency: DiophantineFrequency,
    pub hamiltonians: Vec<KolmogorovHamiltonian>,
    pub steps: Vec<StepRecord>,
}

impl NormalizeHistory {
    pub fn final_hamiltonian(&self) -> &KolmogorovHamiltonian {
        self.hamiltonians.last().expect("history holds H_0")
    }

    pub fn generators(&self) -> Vec<GeneratorPair> {
        self.steps.iter().map(|s| s.generators.clone()).collect()
    }

    pub fn diagnostics(&self) -> Vec<&StepDiagnostics> {
        self.steps.iter().map(|s| &s.diagnostics).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("history serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// A step failure with the history up to the failing step.
#[derive(Debug, Error)]
#[error("step {step} failed: {source}")]
pub struct PartialRun {
    pub step: usize,
    pub history: Box<NormalizeHistory>,
    #[source]
    pub source: NormalizerError,
}

pub fn normalize(
    h0: &KolmogorovHamiltonian,
    freq: &DiophantineFrequency,
    opts: &NormalizeOptions,
) -> Result<NormalizeHistory, PartialRun> {
    let mut history = NormalizeHistory {
        schema_version: HISTORY_SCHEMA_VERSION,
        frequency: freq.clone(),
        hamiltonians: vec![h0.clone()],
        steps: Vec::new(),
    };
    for j in 0..opts.max_steps {
        let h = history.final_hamiltonian();
        let size = match h.eps_measure(opts.step.norm_sigma, opts.step.nu, 0.0, 0.0) {
            Ok(v) => v,
            Err(e) => {
                return Err(PartialRun {
                    step: j,
                    history: Box::new(history),
                    source: e.into(),
                })
            }
        };
        if size <= opts.floor {
            break;
        }
        match kolmogorov_step(h, freq, j, &opts.step) {
            Ok((next, record)) => {
                history.hamiltonians.push(next);
                history.steps.push(record);
            }
            Err(source) => {
                return Err(PartialRun {
                    step: j,
                    history: Box::new(history),
                    source,
                })
            }
        }
    }
    Ok(history)
}
