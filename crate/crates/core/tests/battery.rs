use pqbundle::battery::{run_battery, BatteryConfig, RowKind};
use pqbundle::oracle::Variant;

#[test]
fn default_battery_passes_and_selects_corrected_forms() {
    let report = run_battery(&BatteryConfig::default()).unwrap();
    let failing: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.kind == RowKind::Check && !r.report.passed)
        .map(|r| format!("{} {:?} {} dev={:.3e}", r.preset, r.pq.map(|p| (p.p, p.q)), r.report.quantity, r.report.max_deviation))
        .collect();
    assert!(report.passed(), "{} failing rows: {failing:?}", report.failures);
    for q in ["curvature_HHH", "curvature_HHV", "curvature_VVH", "sectional_HV_denominator", "dphi_beta_sign", "phi_mixed_sign", "phi_alpha1", "eqabc"] {
        assert_eq!(report.verdict(q), Some(format!("selected:{}", Variant::Corrected.label()).as_str()), "{q}");
    }
    assert!(report.verdict("eqabc_self_test").unwrap().contains("degenerate"));
}

fn small() -> BatteryConfig {
    let mut cfg = BatteryConfig::default();
    cfg.samples.count = 3;
    cfg
}

#[test]
fn perturbed_connection_is_caught() {
    let mut cfg = small();
    cfg.perturb = Some(pqbundle::battery::Perturbation {
        quantity: "connection".into(),
        factor: 1.0 + 1e-3,
    });
    let report = run_battery(&cfg).unwrap();
    assert!(!report.passed());
    assert!(report
        .rows
        .iter()
        .filter(|r| r.kind == RowKind::Check && !r.report.passed)
        .all(|r| r.report.quantity == "connection"));
}

#[test]
fn battery_is_deterministic() {
    let a = run_battery(&small()).unwrap();
    let b = run_battery(&small()).unwrap();
    assert_eq!(a, b);
}
