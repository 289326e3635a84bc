//! Measured norms against the step-lemma bounds: an admissible run, where
//! every bound applies, and the ε = 1e-3 demo, where the hypotheses fail.

use aperiodic_kam::config::RunConfig;
use aperiodic_kam::estimates::RowKind;

fn report(name: &str) -> Result<(), Box<dyn std::error::Error>> {
    let path = format!("{}/configs/{name}.json", env!("CARGO_MANIFEST_DIR"));
    let cfg = RunConfig::load(path.as_ref())?;
    let p = cfg.build()?;
    let history = p.normalize(cfg.steps)?;
    let (sched, audit) = p.audit(&history)?;
    println!(
        "{name}: ε = {:.1e} (ε/ε_a = {:.1e}), schedule admissible: {}",
        cfg.eps,
        cfg.eps / p.threshold.eps_a,
        sched.is_admissible()
    );
    println!(
        "  {} applicable bound rows, {} failures, {} unmet hypotheses",
        audit.applicable_bounds(),
        audit.failures().len(),
        audit.unmet_hypotheses().len()
    );
    for r in audit.rows.iter().filter(|r| r.step == 0 && r.kind == RowKind::Bound) {
        println!(
            "  {:<16} {:>11.3e} ≤ {:<11.3e} ratio {:.1e}{}",
            r.name,
            r.measured,
            r.bound,
            r.ratio,
            if r.applicable { "" } else { "  (not applicable)" }
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    report("golden_admissible")?;
    println!();
    report("golden")
}
