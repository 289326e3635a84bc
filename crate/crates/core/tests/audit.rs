use std::path::Path;

use aperiodic_kam::cli::attach_bound_checks;
use aperiodic_kam::config::RunConfig;
use aperiodic_kam::estimates::RowKind;
use aperiodic_kam::normalizer::NormalizeHistory;

fn load(name: &str) -> RunConfig {
    RunConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))).unwrap()
}

#[test]
fn admissible_corpus_passes_with_every_row_applicable() {
    for name in ["golden_admissible", "golden_admissible_slow"] {
        let cfg = load(name);
        let p = cfg.build().unwrap();
        assert!(cfg.eps < 1e-4 * p.threshold.eps_a);
        let h = p.normalize(cfg.steps).unwrap();
        assert_eq!(h.steps.len(), cfg.steps);
        let (sched, report) = p.audit(&h).unwrap();
        assert!(sched.is_admissible());
        assert!(report.unmet_hypotheses().is_empty(), "{name}: {:?}", report.unmet_hypotheses());
        let bounds: Vec<_> = report.rows.iter().filter(|r| r.kind == RowKind::Bound).collect();
        assert!(bounds.iter().all(|r| r.applicable));
        assert!(report.failures().is_empty(), "{name}: {:?}", report.failures());
        // every quantity named by the step lemma is audited at every step
        for j in 0..cfg.steps {
            for q in ["phi", "Y", "A_hat", "B_hat", "A_next", "B_next", "C_increment", "eps_next", "disp_q", "disp_p", "disp_eta", "disp_q_T", "disp_p_T"] {
                assert!(bounds.iter().any(|r| r.step == j && r.name == q), "{name}: step {j} lacks {q}");
            }
        }
    }
}

#[test]
fn zero_run_audits_trivially() {
    let cfg = load("zero");
    let p = cfg.build().unwrap();
    let h = p.normalize(cfg.steps).unwrap();
    assert!(h.steps.is_empty());
    let (_, report) = p.audit(&h).unwrap();
    assert!(report.failures().is_empty());
    assert!(report.rows.iter().all(|r| r.measured == 0.0 || r.kind == RowKind::Hypothesis));
}

#[test]
fn large_eps_marks_rows_not_applicable() {
    // ε = 1e-3 is 32 orders above ε_a: the lemma does not apply, and only
    // rows whose bound does not shrink with ε exceed it
    let cfg = load("golden");
    let p = cfg.build().unwrap();
    let h = p.normalize(2).unwrap();
    let (sched, report) = p.audit(&h).unwrap();
    assert!(!sched.is_admissible());
    assert!(report.failures().is_empty());
    let exceeded: Vec<&str> = report.rows.iter().filter(|r| r.kind == RowKind::Bound && !r.pass).map(|r| r.name.as_str()).collect();
    assert!(!exceeded.is_empty());
    assert!(exceeded.iter().all(|n| n.ends_with("_T")), "{exceeded:?}");
    assert!(report.rows.iter().filter(|r| !r.applicable).all(|r| !r.unmet.is_empty()));
}

#[test]
fn history_round_trips_and_reaudits_identically() {
    let cfg = load("golden_admissible");
    let p = cfg.build().unwrap();
    let mut h = p.normalize(cfg.steps).unwrap();
    let (_, report) = p.audit(&h).unwrap();
    attach_bound_checks(&mut h, &report);
    assert!(h.steps.iter().all(|s| !s.diagnostics.bound_check.is_empty() && s.diagnostics.bound_check.iter().all(|b| b.pass)));
    let back = NormalizeHistory::from_json(&h.to_json()).unwrap();
    assert_eq!(back, h);
    let (_, again) = p.audit(&back).unwrap();
    assert_eq!(again.to_csv(), report.to_csv());
}
