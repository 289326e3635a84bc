//! Exp-poly coefficients, Fourier products, and the Poisson bracket on
//! series that stay closed under every operation the scheme needs.

use aperiodic_kam::series::{poisson_bracket, ExpPoly, FourierSeries, Mode, Monomial, PolySeries};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k_max = 6;
    // cos(q1) e^{-0.1 ξ} and cos(q1 - q2 + 0.3) e^{-0.1 ξ}
    let a = FourierSeries::cosine(Mode(vec![1, 0]), 1.0, 0.0, 0.1, k_max)?;
    let b = FourierSeries::cosine(Mode(vec![1, -1]), 0.5, 0.3, 0.1, k_max)?;
    let ab = a.mul(&b)?;
    println!("a·b has {} modes, slowest decay {:?}", ab.len(), ab.min_decay());

    let (q, xi) = ([0.4, -1.3], 2.0);
    let direct = a.evaluate(&q, xi) * b.evaluate(&q, xi);
    println!("pointwise product error {:.2e}", (ab.evaluate(&q, xi) - direct).norm());

    // ξ e^{-0.2ξ}: derivative of an exp-poly stays in the class
    let t = ExpPoly::decaying(Complex64::new(1.0, 0.0), 0.2)?.mul(&ExpPoly::from_terms(vec![
        aperiodic_kam::series::Term::new(Complex64::new(1.0, 0.0), 1, Complex64::new(0.0, 0.0)),
    ])?);
    println!("d/dξ (ξ e^(-0.2ξ)) at ξ=1: {:.6}", t.derivative().eval(1.0).re);

    // {χ, p1·a}: the bracket of an angle-only generator with a linear term
    let chi = PolySeries::scalar(b.clone());
    let f = PolySeries::monomial(Monomial::p(2, 0), a.clone());
    let br = poisson_bracket(&chi, &f)?;
    println!("bracket degree {} in p, {} p-monomials", br.degree(), br.terms().count());

    let json = ab.to_json();
    let back = FourierSeries::from_json(&json)?;
    println!("json round trip exact: {}", back == ab);
    Ok(())
}
