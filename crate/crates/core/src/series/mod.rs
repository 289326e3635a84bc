//! Exact series algebra: exp-poly time coefficients, Fourier series in the
//! angles, polynomials of degree ≤ 2 in the actions, and the Lie derivative.

mod expoly;
mod fourier;
mod mode;
mod norm;
mod poly;

pub use expoly::{ExpPoly, Term, TermDoc, RATE_MERGE_TOL};
pub use fourier::{FourierSeries, ModeDoc, SeriesDoc, DEFAULT_DROP_TOL};
pub use mode::{modes_in_ball, shell_count, Mode};
pub use norm::{envelope_of, fourier_norm, fourier_norm_at, vector_norm, NormEnvelope, DEFAULT_NU};
pub use poly::{poisson_bracket, DegreePolicy, Monomial, PolySeries};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("term with Re β = {beta_re} grows in time")]
    GrowingTerm { beta_re: f64 },
    #[error("target rate {target} exceeds a term's decay rate {decay}")]
    RateTooSlow { target: f64, decay: f64 },
    #[error("ν = {0} outside (0, 1/2]")]
    BadNu(f64),
    #[error("mode with |k| = {l1} exceeds K_modes = {k_max}")]
    ModeOutOfRange { l1: u32, k_max: u32 },
    #[error("bracket produced a term of degree {0} in p")]
    DegreeOverflow(u32),
    #[error("η may only appear linearly with coefficient 1")]
    EtaCoefficient,
    #[error("malformed series document: {0}")]
    Json(#[from] serde_json::Error),
}
