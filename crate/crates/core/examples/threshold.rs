//! ε_a for the golden instance and how it scales with the decay rate.

use aperiodic_kam::config::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/golden.json");
    let mut cfg = RunConfig::load(path.as_ref())?;
    let p = cfg.build()?;
    for (name, v) in p.consts.table() {
        println!("{name:<3} {v:.6e}");
    }
    println!("coefficient {:.3e}", p.threshold.coefficient);
    println!("M_f {:.4}   ε_a {:.3e}   ε̃ {:.3e}", p.m_f, p.threshold.eps_a, p.threshold.eps_tilde);

    // M_f carries the strip factor e^{aζ₀}, so the whole-config ratio is only
    // close to a³; the formula itself is cubic at fixed M_f
    println!("\n   a        M_f       ε_a       ratio to a=0.1");
    let base = p.threshold.eps_a;
    for a in [0.2, 0.1, 0.05, 0.025, 0.0125] {
        cfg.perturbation.decay = a;
        let q = cfg.build()?;
        let t = q.threshold;
        println!("{a:7.4}  {:.6}  {:.4e}  {:.6}", q.m_f, t.eps_a, t.eps_a / base);
    }
    Ok(())
}
