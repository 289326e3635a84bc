//! Four Kolmogorov steps on the shipped golden config, printing the
//! quadratic collapse of the perturbation.

use aperiodic_kam::config::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/golden.json");
    let cfg = RunConfig::load(path.as_ref())?;
    let problem = cfg.build()?;
    let history = problem.normalize(cfg.steps)?;

    let mut prev: Option<f64> = None;
    for (j, h) in history.hamiltonians.iter().enumerate() {
        let size = h.eps_measure(cfg.sigma, cfg.nu, 0.0, 0.0)?;
        let ratio = prev.map(|p| size.log10() / p.log10());
        match ratio {
            Some(r) => println!("H_{j}: {size:.3e}   log ratio {r:.3}"),
            None => println!("H_{j}: {size:.3e}"),
        }
        prev = Some(size);
    }
    for s in &history.steps {
        let d = &s.diagnostics;
        println!(
            "step {}: Lie terms {}, residual φ {:.1e}, Y {:.1e}, C asymmetry {:.1e}",
            d.step, d.lie_terms_used, d.residual_phi, d.residual_y, d.c_asymmetry
        );
    }
    let a1 = &history.hamiltonians[1].a;
    println!("slowest rate in A^(1): {:?} (2a = {})", a1.min_decay(), 2.0 * problem.decay());
    Ok(())
}
