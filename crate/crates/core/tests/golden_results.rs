//! Frozen end-to-end fixture: the baseline tracker on the crossing scenario
//! must reproduce the checked-in results file byte-for-byte. Catches format
//! drift and any numeric change in the pipeline.

use covtrack::io::write_results;
use covtrack::synth::{generate, scenario_low_overlap_crossing};
use covtrack::tracker::{run_sequence, TrackerConfig};

const GOLDEN: &str = include_str!("golden/crossing_baseline_results.csv");

#[test]
fn crossing_baseline_matches_golden_file() {
    let (_, dets) = generate(&scenario_low_overlap_crossing()).unwrap();
    let results = run_sequence(&dets, &TrackerConfig::baseline()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    write_results(&path, &results).unwrap();
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, GOLDEN, "tracker output drifted from the golden fixture");
}
