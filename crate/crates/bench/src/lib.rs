//! Benchmark-only package; see `benches/tracking.rs`.
//!
//! Shared fixture builders live here so the benches stay terse.

use covtrack::synth::{ObjectSpec, ScenarioSpec};

/// A busy scene: `n` objects weaving across a 1280x720 image with noise,
/// dropout and clutter.
pub fn busy_scenario(n: usize, frames: u32) -> ScenarioSpec {
    ScenarioSpec {
        name: format!("busy-{n}x{frames}"),
        image_w: 1280.0,
        image_h: 720.0,
        frame_count: frames,
        noise_sigma: 1.5,
        dropout: 0.05,
        clutter_rate: 0.4,
        seed: 7,
        objects: (0..n)
            .map(|i| ObjectSpec {
                x: 40.0 + (i as f64 * 83.0) % 1100.0,
                y: 40.0 + (i as f64 * 57.0) % 600.0,
                w: 36.0 + (i % 4) as f64 * 12.0,
                h: 44.0 + (i % 3) as f64 * 10.0,
                vx: if i % 2 == 0 { 2.5 } else { -2.5 },
                vy: if i % 3 == 0 { 1.0 } else { -0.5 },
                label: (i % 3) as u32,
                turns: Vec::new(),
                dropouts: Vec::new(),
            })
            .collect(),
        ..ScenarioSpec::default()
    }
}
