//! Follow the image of the normalized torus under the true flow and pull it
//! back: after j steps the action stays near zero and the angles advance
//! at ω.

use aperiodic_kam::cli::initial_phases;
use aperiodic_kam::config::RunConfig;
use aperiodic_kam::dynamics::{step_maps, torus_error};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/golden_slow.json");
    let cfg = RunConfig::load(path.as_ref())?;
    let p = cfg.build()?;
    let history = p.normalize(cfg.steps)?;
    let maps = step_maps(&history.generators(), &cfg.lie_options())?;
    let phases = initial_phases(&cfg, 1);

    println!("a = {}, ε = {}, t_end = {}", p.decay(), cfg.eps, cfg.flow.t_end);
    for j in 0..=maps.len() {
        let (mut sup_p, mut drift) = (0.0f64, 0.0f64);
        for q0 in &phases {
            let r = torus_error(&p.h0, &maps[..j], &p.freq.omega, q0, cfg.flow.t_end, cfg.flow.samples, &cfg.integrator_options())?;
            sup_p = sup_p.max(r.sup_p_norm);
            drift = drift.max(r.freq_drift);
        }
        println!("j = {j}: sup|p| {sup_p:.3e}   drift {drift:.3e} rad");
    }
    Ok(())
}
