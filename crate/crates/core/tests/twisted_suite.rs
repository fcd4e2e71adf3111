use epsilon_core::twisted::{default_field, twisted_suite, FiniteGroup, SuiteOptions};

#[test]
fn full_suite_passes_on_every_small_group() {
    let groups = FiniteGroup::small_groups();
    let report = twisted_suite(&groups, default_field(), &SuiteOptions::default()).unwrap();
    for g in &report.groups {
        assert!(g.pass, "{}: {:?}", g.group, g);
        if g.order > 12 {
            assert!(!g.exhaustive);
            assert!(g.chain_cases >= 100);
        } else {
            assert!(g.exhaustive);
        }
    }
    assert!(report.pass);
}

#[test]
fn suite_report_is_seed_deterministic() {
    let groups: Vec<FiniteGroup> = FiniteGroup::small_groups().into_iter().filter(|g| g.order() <= 10).collect();
    let opts = SuiteOptions { seed: 42, exhaustive_order: 8, random_cases: 10, cochain_cases: 2 };
    let a = serde_json::to_string(&twisted_suite(&groups, default_field(), &opts).unwrap()).unwrap();
    let b = serde_json::to_string(&twisted_suite(&groups, default_field(), &opts).unwrap()).unwrap();
    assert_eq!(a, b);
}
