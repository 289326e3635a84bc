//! JᵀΩJ − Ω for the composed one-step map, by central differences.

use aperiodic_kam::config::RunConfig;
use aperiodic_kam::dynamics::{canonicity_check, step_maps, Direction, ExtendedPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/golden.json");
    let cfg = RunConfig::load(path.as_ref())?;
    let p = cfg.build()?;
    let history = p.normalize(1)?;
    let maps = step_maps(&history.generators(), &cfg.lie_options())?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<ExtendedPoint> = (0..20)
        .map(|_| {
            let q = (0..2).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            let pp = (0..2).map(|_| rng.gen_range(-0.05..0.05)).collect();
            ExtendedPoint::new(q, pp, rng.gen_range(0.0..5.0))
        })
        .collect();
    for h in [1e-3, 1e-4, 1e-5] {
        let fwd = canonicity_check(&maps, &points, h, Direction::ToOriginal);
        let inv = canonicity_check(&maps, &points, h, Direction::ToNormalized);
        println!("h = {h:.0e}: to original {fwd:.2e}, to normalized {inv:.2e}");
    }
    Ok(())
}
