//! Cross-module pipeline checks: generator -> tracker -> metrics.

use lowtrack_core::io::{decimate, DecimationSpec};
use lowtrack_core::metrics::{evaluate_entries, EvalOptions, MetricReport};
use lowtrack_core::synth::{generate_scenario, presets, ScenarioConfig};
use lowtrack_core::tracker::{rows_to_entries, run_sequence, TrackerConfig, Variant};

fn run_embed(cfg: &ScenarioConfig, stride: usize) -> MetricReport {
    let scenario = generate_scenario(cfg);
    let seq = decimate(&scenario.sequence, DecimationSpec::new(stride, 0));
    let gt = seq.ground_truth.clone().unwrap();
    let tc = TrackerConfig { variant: Variant::Embed, dt: stride as u32, ..Default::default() };
    let rows = rows_to_entries(&run_sequence(&seq, &tc).unwrap());
    evaluate_entries(&gt, &rows, &EvalOptions::default()).unwrap()
}

/// Two vehicles sharing an identity vector are only separable through the
/// position-dependent scene-context term: with it the tracker keeps them
/// apart, without it the twins get confused.
#[test]
fn context_term_separates_visual_twins() {
    for seed in [8u64, 9, 10] {
        let with_ctx = run_embed(&presets::twins(seed), 6);
        assert!(
            with_ctx.idf1 > 0.9,
            "seed {seed}: twins with context IDF1 {}",
            with_ctx.idf1
        );
        assert_eq!(with_ctx.idsw, 0, "seed {seed}");

        let mut no_ctx = presets::twins(seed);
        no_ctx.context_weight = 0.0;
        let without = run_embed(&no_ctx, 6);
        assert!(
            without.idf1 < with_ctx.idf1 - 0.15,
            "seed {seed}: context should matter, {} vs {}",
            with_ctx.idf1,
            without.idf1
        );
    }
}

/// Appearance association survives decimation: going from 30 fps to 5 fps
/// costs the embedding tracker only a few points on the noisy benchmark.
#[test]
fn embed_tracker_survives_decimation() {
    let cfg = presets::benchmark(51);
    let full = run_embed(&cfg, 1);
    let low = run_embed(&cfg, 6);
    assert!(full.idsw == 0 && low.idsw <= 1, "{} / {}", full.idsw, low.idsw);
    assert!(
        full.idf1 - low.idf1 < 0.1,
        "IDF1 dropped too hard: {} -> {}",
        full.idf1,
        low.idf1
    );
}
