//! Solving ∂_ξφ + ∂_ωφ = ψ on the golden frequency, mode by mode.

use aperiodic_kam::homological::{homological_residual, solve_homological, DiophantineFrequency};
use aperiodic_kam::series::{fourier_norm, ExpPoly, FourierSeries, Mode, DEFAULT_NU};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let omega = vec![1.0, (1.0 + 5f64.sqrt()) / 2.0];
    let freq = DiophantineFrequency::new(omega.clone(), 1.2, 40)?;
    println!("γ = {:.6} (checked up to |k| = {})", freq.gamma, freq.k_checked);

    let mut psi = FourierSeries::zero(2, 20);
    for (k, amp) in [(vec![1, 0], 1.0), (vec![1, -1], 0.5), (vec![3, -5], 0.2), (vec![0, 0], 0.1)] {
        let term = FourierSeries::cosine(Mode(k), amp, 0.0, 0.1, 20)?;
        psi = psi.add(&term)?;
    }
    let phi = solve_homological(&psi, &freq)?;
    let res = homological_residual(&phi, &psi, &omega)?;
    let scale = fourier_norm(&psi, 0.5, DEFAULT_NU)?;
    println!("relative residual {:.2e}", fourier_norm(&res, 0.5, DEFAULT_NU)?.k / scale.k);

    // each mode carries 1/(i⟨ω,k⟩ - a)
    for k in [Mode(vec![1, 0]), Mode(vec![3, -5]), Mode(vec![1, -1])] {
        let c = phi.coeff(&k).map(|c| c.eval(0.0)).unwrap_or_default();
        println!("φ_{:?}(0) = {:.6} {:+.6}i", k.0, c.re, c.im);
    }

    // single mode against the closed form 1/(i - 0.1)
    let one = DiophantineFrequency::new(vec![1.0], 1.0, 4)?;
    let psi1 = FourierSeries::single(Mode(vec![1]), ExpPoly::decaying(Complex64::new(1.0, 0.0), 0.1)?, 4);
    let got = solve_homological(&psi1, &one)?.coeff(&Mode(vec![1])).unwrap().eval(0.0);
    let want = Complex64::new(1.0, 0.0) / Complex64::new(-0.1, 1.0);
    println!("single mode error {:.2e}", (got - want).norm());
    Ok(())
}
