//! Shared fixtures for the criterion benchmarks.

use lowtrack_core::io::{decimate, DecimationSpec, Sequence};
use lowtrack_core::synth::{generate_scenario, presets};

/// Standard benchmark scenario decimated to ~5 fps.
pub fn benchmark_sequence(seed: u64, stride: usize) -> Sequence {
    let scenario = generate_scenario(&presets::benchmark(seed));
    decimate(&scenario.sequence, DecimationSpec::new(stride, 0))
}
