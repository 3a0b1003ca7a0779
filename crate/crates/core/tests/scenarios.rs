//! End-to-end behavior on the frozen synthetic scenarios: the baseline
//! tracker must lose identities on the crossing scenario and the relaxed
//! matching stage must recover them.

use covtrack::motmetrics::clear_mot;
use covtrack::synth::{crossing_suite, generate, scenario_low_overlap_crossing};
use covtrack::tracker::{run_sequence, TrackerConfig};

fn switches(cfg: &TrackerConfig, spec: &covtrack::ScenarioSpec) -> u64 {
    let (gt, dets) = generate(spec).unwrap();
    let results = run_sequence(&dets, cfg).unwrap();
    let (_, tally) = clear_mot(&gt, &results, 0.5).unwrap();
    tally.switches
}

fn relax_only() -> TrackerConfig {
    TrackerConfig {
        enable_relax: true,
        ..TrackerConfig::baseline()
    }
}

#[test]
fn baseline_switches_identity_on_crossing() {
    let spec = scenario_low_overlap_crossing();
    let baseline = switches(&TrackerConfig::baseline(), &spec);
    assert!(baseline >= 1, "baseline produced {baseline} switches");
}

#[test]
fn relaxation_recovers_identities_on_crossing() {
    let spec = scenario_low_overlap_crossing();
    let baseline = switches(&TrackerConfig::baseline(), &spec);
    let relaxed = switches(&relax_only(), &spec);
    assert!(
        relaxed < baseline,
        "relax-enabled {relaxed} vs baseline {baseline}"
    );
}

#[test]
fn full_config_dominates_single_extensions_on_suite() {
    let full = TrackerConfig::default();
    let singles = [
        ("kfcov", TrackerConfig { enable_kfcov: true, ..TrackerConfig::baseline() }),
        ("ellipse", TrackerConfig { enable_ellipse: true, ..TrackerConfig::baseline() }),
        ("relax", relax_only()),
        ("greedy", TrackerConfig { enable_greedy: true, ..TrackerConfig::baseline() }),
    ];
    let suite = crossing_suite();
    let full_total: u64 = suite.iter().map(|s| switches(&full, s)).sum();
    for (name, cfg) in singles {
        let single_total: u64 = suite.iter().map(|s| switches(&cfg, s)).sum();
        assert!(
            full_total <= single_total,
            "full config {full_total} switches vs {name}-only {single_total}"
        );
    }
}

#[test]
fn suite_baseline_strictly_worse_than_full() {
    let suite = crossing_suite();
    let baseline_total: u64 =
        suite.iter().map(|s| switches(&TrackerConfig::baseline(), s)).sum();
    let full_total: u64 = suite.iter().map(|s| switches(&TrackerConfig::default(), s)).sum();
    assert!(
        full_total < baseline_total,
        "full {full_total} vs baseline {baseline_total}"
    );
}
