//! Acceptance suite: one test per gate criterion, each printing a PASS line
//! with its measured numbers. Brute-force reference evaluators live in
//! `oracles` and stay independent of the library's optimization paths.

mod oracles;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lowtrack_core::assoc::{hungarian_assign, SimilarityMatrix};
use lowtrack_core::io::{
    decimate, parse_detections, parse_ground_truth, parse_results, parse_sidecar,
    write_detections, write_results, write_sidecar, DecimationSpec, Sidecar, SidecarRow,
};
use lowtrack_core::kalman::{min_eigenvalue, KalmanFilter};
use lowtrack_core::learning::{
    batch_seed, eval_retrieval, instance_frames_from_scenario, loss_gradient, make_view_pair,
    project_sequence, train_head, AugmentParams, HeadGradient, InstanceFrame, InstanceSample,
    ProjectionHead, TrainConfig, ViewPair,
};
use lowtrack_core::metrics::{evaluate_entries, EvalOptions};
use lowtrack_core::synth::{
    apply_resolution_scale, generate_scenario, max_iou_across_jumps, presets,
    ResolutionScaleOpts,
};
use lowtrack_core::tracker::{rows_to_entries, run_sequence, TrackerConfig, Variant};
use lowtrack_core::types::{BoundingBox, GroundTruthEntry, TrackId, VehicleClass};

fn gt_as_results(gt: &[GroundTruthEntry]) -> Vec<GroundTruthEntry> {
    gt.to_vec()
}

/// 1. Hungarian equals exhaustive permutation search on 1,000 random
///    matrices up to 7x7 (exact total-score equality), in under 10 s.
#[test]
fn acceptance_01_assignment_optimality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA55);
    for case in 0..1000 {
        let rows = rng.random_range(1..=7);
        let cols = rng.random_range(1..=7);
        let min_score = if rng.random_range(0..2) == 0 { 0.0 } else { rng.random_range(0.0..0.5) };
        let mut sim = SimilarityMatrix::new(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                sim.set(i, j, rng.random_range(0.0..1.0));
                if rng.random_range(0.0..1.0) < 0.15 {
                    sim.forbid(i, j);
                }
            }
        }
        let assignment = hungarian_assign(&sim, min_score);
        let got = assignment.total_score(&sim);
        let best = oracles::exhaustive_assignment_total(rows, cols, &|i, j| {
            (sim.is_allowed(i, j) && sim.get(i, j) >= min_score).then(|| sim.get(i, j))
        });
        assert_eq!(got, best, "case {case}: hungarian {got} vs exhaustive {best}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("ACCEPTANCE 01 assignment-optimality: PASS (1000 matrices, {elapsed:?})");
}

/// Random toy instance: <=3 gt tracks, <=3 pred tracks, <=6 frames.
/// Predictions are perturbed ground truth with identity relabeling, drops,
/// and clutter, so all error modes occur.
fn toy_instance(rng: &mut ChaCha8Rng) -> (Vec<GroundTruthEntry>, Vec<GroundTruthEntry>) {
    let n_tracks = rng.random_range(1..=3usize);
    let n_frames = rng.random_range(2..=6usize);
    let entry = |frame: usize, id: u64, x: f64, y: f64, w: f64, h: f64| GroundTruthEntry {
        frame_index: frame,
        track_id: TrackId(id),
        bbox: BoundingBox::from_ltwh(x, y, w, h),
        class_id: VehicleClass::Truck,
        confidence: 1.0,
        visibility: 1.0,
    };

    let mut gt = Vec::new();
    let mut pred = Vec::new();
    let mut next_pred_id = 10u64;
    for t in 0..n_tracks {
        let id = t as u64 + 1;
        let mut x = rng.random_range(0.0..200.0);
        let mut y = rng.random_range(0.0..200.0);
        let w = rng.random_range(15.0..30.0);
        let h = rng.random_range(15.0..30.0);
        let mut pred_id = next_pred_id;
        next_pred_id += 1;
        for f in 0..n_frames {
            x += rng.random_range(-5.0..5.0);
            y += rng.random_range(-5.0..5.0);
            if rng.random_range(0.0..1.0) < 0.85 {
                gt.push(entry(f, id, x, y, w, h));
            }
            // identity switch mid-track
            if rng.random_range(0.0..1.0) < 0.2 {
                pred_id = next_pred_id;
                next_pred_id += 1;
            }
            if rng.random_range(0.0..1.0) < 0.8 {
                let dx = rng.random_range(-3.0..3.0);
                let dy = rng.random_range(-3.0..3.0);
                pred.push(entry(f, pred_id, x + dx, y + dy, w, h));
            }
        }
    }
    // clutter predictions
    for _ in 0..rng.random_range(0..=2usize) {
        let id = next_pred_id;
        next_pred_id += 1;
        for f in 0..n_frames {
            if rng.random_range(0.0..1.0) < 0.5 {
                pred.push(entry(
                    f,
                    id,
                    rng.random_range(300.0..500.0),
                    rng.random_range(300.0..500.0),
                    20.0,
                    20.0,
                ));
            }
        }
    }
    gt.sort_by_key(|e| (e.frame_index, e.track_id));
    pred.sort_by_key(|e| (e.frame_index, e.track_id));
    (gt, pred)
}

/// 2. MOTA/IDSW/IDF1 exactly equal, HOTA within 1e-9 of, the brute-force
///    evaluators on 200 random toy instances, in under 60 s.
#[test]
fn acceptance_02_metric_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0E2C);
    let mut evaluated = 0;
    while evaluated < 200 {
        let (gt, pred) = toy_instance(&mut rng);
        if gt.is_empty() {
            continue;
        }
        evaluated += 1;

        let report = evaluate_entries(&gt, &pred, &EvalOptions::default()).unwrap();

        let clear = oracles::oracle_clear(&gt, &pred, 0.5);
        assert_eq!(report.num_gt, clear.num_gt, "num_gt mismatch on instance {evaluated}");
        assert_eq!(report.idsw, clear.idsw, "IDSW mismatch on instance {evaluated}");
        assert_eq!(report.fp, clear.fp, "FP mismatch on instance {evaluated}");
        assert_eq!(report.fn_, clear.fn_, "FN mismatch on instance {evaluated}");
        assert_eq!(report.mota, clear.mota, "MOTA mismatch on instance {evaluated}");

        let id = oracles::oracle_idf1(&gt, &pred, 0.5);
        assert_eq!(report.idtp, id.idtp, "IDTP mismatch on instance {evaluated}");
        assert_eq!(report.idfp, id.idfp, "IDFP mismatch on instance {evaluated}");
        assert_eq!(report.idfn, id.idfn, "IDFN mismatch on instance {evaluated}");
        assert_eq!(report.idf1, id.idf1, "IDF1 mismatch on instance {evaluated}");

        let hota = oracles::oracle_hota(&gt, &pred);
        for (got, want) in report.alphas.iter().zip(&hota) {
            assert!(
                (got.hota - want.hota).abs() < 1e-9
                    && (got.deta - want.deta).abs() < 1e-9
                    && (got.assa - want.assa).abs() < 1e-9,
                "HOTA mismatch on instance {evaluated} at alpha {}: {} vs {}",
                want.alpha,
                got.hota,
                want.hota
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("ACCEPTANCE 02 metric-oracle-equivalence: PASS (200 instances, {elapsed:?})");
}

/// 3. evaluate(GT, GT) is exactly perfect on every seed-suite scenario,
///    both at full rate and decimated.
#[test]
fn acceptance_03_self_evaluation_identity() {
    for (name, cfg) in presets::seed_suite() {
        let scenario = generate_scenario(&cfg);
        for stride in [1usize, 6] {
            let seq = decimate(&scenario.sequence, DecimationSpec::new(stride, 0));
            let gt = seq.ground_truth.as_ref().unwrap();
            let report =
                evaluate_entries(gt, &gt_as_results(gt), &EvalOptions::default()).unwrap();
            assert_eq!(report.hota, 1.0, "{name} stride {stride}");
            assert_eq!(report.mota, 1.0, "{name} stride {stride}");
            assert_eq!(report.idf1, 1.0, "{name} stride {stride}");
            assert_eq!(report.idsw, 0, "{name} stride {stride}");
        }
    }
    println!("ACCEPTANCE 03 self-evaluation-identity: PASS (9 scenarios x 2 strides)");
}

#[allow(clippy::needless_range_loop)] // k indexes both the perturbed copy and the slot
fn numeric_gradient(
    head: &ProjectionHead,
    pair: &ViewPair,
    tau: f64,
    lambda: f64,
    h: f64,
) -> HeadGradient {
    let eval = |head: &ProjectionHead| loss_gradient(head, pair, tau, lambda).unwrap().0;
    let mut gw = vec![0.0; head.weight.len()];
    let mut gb = vec![0.0; head.bias.len()];
    for k in 0..head.weight.len() {
        let mut plus = head.clone();
        plus.weight[k] += h;
        let mut minus = head.clone();
        minus.weight[k] -= h;
        gw[k] = (eval(&plus) - eval(&minus)) / (2.0 * h);
    }
    for k in 0..head.bias.len() {
        let mut plus = head.clone();
        plus.bias[k] += h;
        let mut minus = head.clone();
        minus.bias[k] -= h;
        gb[k] = (eval(&plus) - eval(&minus)) / (2.0 * h);
    }
    HeadGradient { weight: gw, bias: gb }
}

/// 4. Analytic gradients match central finite differences (h = 1e-5) with
///    max relative error < 1e-4 on >= 10 random batches for d in
///    {256, 64, 32}.
#[test]
fn acceptance_04_gradient_correctness() {
    let start = Instant::now();
    let input_dim = 12;
    let mut worst: f64 = 0.0;
    for &dim in &[256usize, 64, 32] {
        for batch in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(dim as u64 * 1000 + batch);
            let frame = InstanceFrame {
                frame_id: 0,
                instances: (0..3)
                    .map(|i| InstanceSample {
                        instance_id: i,
                        features: (0..input_dim)
                            .map(|_| rng.random_range(-1.0..1.0))
                            .collect(),
                    })
                    .collect(),
            };
            let aug = AugmentParams {
                feature_jitter: 0.1,
                context_scale_jitter: 0.2,
                context_dim: 4,
            };
            let pair = make_view_pair(&frame, &aug, batch_seed(batch, 0, dim)).unwrap();
            let head = ProjectionHead::new_random(input_dim, dim, batch * 7 + dim as u64);
            let (_, analytic) = loss_gradient(&head, &pair, 0.07, 0.25).unwrap();
            let numeric = numeric_gradient(&head, &pair, 0.07, 0.25, 1e-5);
            let rel = |a: &[f64], n: &[f64]| {
                a.iter()
                    .zip(n)
                    .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-5))
                    .fold(0.0, f64::max)
            };
            let err = rel(&analytic.weight, &numeric.weight).max(rel(&analytic.bias, &numeric.bias));
            worst = worst.max(err);
            assert!(err < 1e-4, "dim {dim} batch {batch}: max relative error {err}");
        }
    }
    println!(
        "ACCEPTANCE 04 gradient-correctness: PASS (30 batches, worst rel err {worst:.2e}, {:?})",
        start.elapsed()
    );
}

/// 5. Jump-cut scenarios at stride 6: the embedding tracker keeps
///    IDF1 >= 0.9 while the motion baseline drops to <= 0.6 and switches
///    identities more, with brute-force-verified zero IoU across jumps.
#[test]
fn acceptance_05_low_fps_robustness() {
    let start = Instant::now();
    for seed in [11u64, 22, 33] {
        let scenario = generate_scenario(&presets::jumpcut(seed));
        assert!(!scenario.jump_frames.is_empty());
        let worst_iou = max_iou_across_jumps(&scenario, 6);
        assert_eq!(worst_iou, 0.0, "seed {seed}: jump gap IoU must be zero");

        let seq = decimate(&scenario.sequence, DecimationSpec::new(6, 0));
        assert!((seq.fps - 5.0).abs() < 1e-12, "30 fps source at stride 6 is 5 fps");
        let gt = seq.ground_truth.clone().unwrap();

        let embed_cfg = TrackerConfig { variant: Variant::Embed, dt: 6, ..Default::default() };
        let sort_cfg = TrackerConfig { variant: Variant::Sort, dt: 6, ..Default::default() };
        let embed = rows_to_entries(&run_sequence(&seq, &embed_cfg).unwrap());
        let sort = rows_to_entries(&run_sequence(&seq, &sort_cfg).unwrap());
        let embed_report = evaluate_entries(&gt, &embed, &EvalOptions::default()).unwrap();
        let sort_report = evaluate_entries(&gt, &sort, &EvalOptions::default()).unwrap();

        assert!(
            embed_report.idf1 >= 0.9,
            "seed {seed}: embed IDF1 {} below 0.9",
            embed_report.idf1
        );
        assert!(
            sort_report.idf1 <= 0.6,
            "seed {seed}: sort IDF1 {} above 0.6",
            sort_report.idf1
        );
        assert!(
            sort_report.idsw > embed_report.idsw,
            "seed {seed}: sort IDSW {} not above embed IDSW {}",
            sort_report.idsw,
            embed_report.idsw
        );
        println!(
            "  jumpcut-v1/{seed}: embed IDF1 {:.3} IDSW {}, sort IDF1 {:.3} IDSW {}",
            embed_report.idf1, embed_report.idsw, sort_report.idf1, sort_report.idsw
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("ACCEPTANCE 05 low-fps-robustness: PASS ({elapsed:?})");
}

/// 6. Trained d=32 head stays within 2 retrieval points and 3 HOTA points
///    of d=256 on the synthetic benchmark, in under 5 minutes.
#[test]
fn acceptance_06_dimensionality_resilience() {
    let start = Instant::now();
    let train_scenario = generate_scenario(&presets::benchmark(1001));
    let eval_scenario = generate_scenario(&presets::benchmark(2002));
    let train_frames = instance_frames_from_scenario(&train_scenario);
    let eval_frames = instance_frames_from_scenario(&eval_scenario);
    let input_dim = 64 + 32;
    let aug = AugmentParams { feature_jitter: 0.1, context_scale_jitter: 0.3, context_dim: 32 };

    let mut results = Vec::new();
    for dim in [256usize, 32] {
        let cfg = TrainConfig { dim, epochs: 100, seed: 7, aug, ..TrainConfig::default() };
        let (head, curve) = train_head(&train_frames, input_dim, &cfg).unwrap();
        assert!(
            curve.last().unwrap() <= curve.first().unwrap(),
            "dim {dim}: training must descend"
        );
        let acc = eval_retrieval(&head, &eval_frames, &aug, 0xD15C).unwrap();

        let projected =
            project_sequence(&eval_scenario.sequence, &eval_scenario.features, &head).unwrap();
        let seq = decimate(&projected, DecimationSpec::new(6, 0));
        let gt = seq.ground_truth.clone().unwrap();
        let cfg = TrackerConfig { variant: Variant::Embed, dt: 6, ..Default::default() };
        let rows = rows_to_entries(&run_sequence(&seq, &cfg).unwrap());
        let report = evaluate_entries(&gt, &rows, &EvalOptions::default()).unwrap();
        println!("  dim {dim}: retrieval {acc:.4}, HOTA {:.4}", report.hota);
        results.push((dim, acc, report.hota));
    }
    let (_, acc256, hota256) = results[0];
    let (_, acc32, hota32) = results[1];
    assert!(
        acc256 - acc32 <= 0.02,
        "retrieval gap {} exceeds 2 points",
        acc256 - acc32
    );
    assert!(hota256 - hota32 <= 0.03, "HOTA gap {} exceeds 3 points", hota256 - hota32);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!("ACCEPTANCE 06 dimensionality-resilience: PASS ({elapsed:?})");
}

/// 7. Downscaling to 1/2 and 1/4 moves embedding-tracker HOTA by less than
///    2 points; 1/8 may drop further.
#[test]
fn acceptance_07_resolution_resilience() {
    let scenario = generate_scenario(&presets::benchmark(404));
    let mut hotas = Vec::new();
    for &factor in &[1.0, 0.5, 0.25, 0.125] {
        let scaled = apply_resolution_scale(
            &scenario.sequence,
            factor,
            ResolutionScaleOpts { noise_per_octave: 0.06, seed: 404 },
        );
        let seq = decimate(&scaled, DecimationSpec::new(6, 0));
        let gt = seq.ground_truth.clone().unwrap();
        let cfg = TrackerConfig { variant: Variant::Embed, dt: 6, ..Default::default() };
        let rows = rows_to_entries(&run_sequence(&seq, &cfg).unwrap());
        let report = evaluate_entries(&gt, &rows, &EvalOptions::default()).unwrap();
        println!("  factor {factor}: HOTA {:.4}", report.hota);
        hotas.push(report.hota);
    }
    let drop_half = hotas[0] - hotas[1];
    let drop_quarter = hotas[0] - hotas[2];
    assert!(drop_half < 0.02, "HOTA drop at 1/2 is {drop_half}");
    assert!(drop_quarter < 0.02, "HOTA drop at 1/4 is {drop_quarter}");
    println!(
        "ACCEPTANCE 07 resolution-resilience: PASS (drops: 1/2 {:.4}, 1/4 {:.4}, 1/8 {:.4})",
        drop_half,
        drop_quarter,
        hotas[0] - hotas[3]
    );
}

/// 8. Kalman sanity: noiseless constant-velocity track reaches one-step
///    prediction error < 0.5 px after 10 cycles with a PSD covariance
///    throughout (smallest eigenvalue >= -1e-9).
#[test]
fn acceptance_08_kalman_sanity() {
    let kf = KalmanFilter::default();
    let truth =
        |t: f64| BoundingBox::from_center(100.0 + 4.0 * t, 200.0 - 2.0 * t, 24.0, 32.0);
    let mut state = kf.initiate(&truth(0.0));
    assert!(min_eigenvalue(&state) >= -1e-9);
    for t in 1..=10 {
        state = kf.predict(&state, 1);
        assert!(min_eigenvalue(&state) >= -1e-9, "predict at t={t}");
        state = kf.update(&state, &truth(f64::from(t)));
        assert!(min_eigenvalue(&state) >= -1e-9, "update at t={t}");
    }
    let predicted = kf.predict(&state, 1);
    let (px, py) = predicted.bbox().center();
    let (tx, ty) = truth(11.0).center();
    let err = ((px - tx).powi(2) + (py - ty).powi(2)).sqrt();
    assert!(err < 0.5, "one-step prediction error {err} px");
    println!("ACCEPTANCE 08 kalman-sanity: PASS (one-step error {err:.4} px)");
}

fn lowtrack() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lowtrack"))
}

fn run_ok(cmd: &mut Command) {
    let out = cmd.output().expect("spawn lowtrack");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    entries.sort();
    entries
}

/// 9. Every CLI command with a fixed seed produces byte-identical outputs
///    across two runs.
#[test]
fn acceptance_09_cli_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();

    // synth
    for run in ["a", "b"] {
        run_ok(lowtrack().args([
            "synth",
            "--preset",
            "benchmark-v1",
            "--seed",
            "900",
            "--stride",
            "6",
            "--out",
        ]).arg(root.join(format!("seq-{run}"))));
    }
    assert_eq!(dir_bytes(&root.join("seq-a")), dir_bytes(&root.join("seq-b")), "synth differs");

    // track (embed and sort)
    for variant in ["embed", "sort"] {
        for run in ["a", "b"] {
            run_ok(lowtrack()
                .args(["track", "--variant", variant, "--seq"])
                .arg(root.join("seq-a"))
                .arg("--out")
                .arg(root.join(format!("res-{variant}-{run}.txt"))));
        }
        assert_eq!(
            std::fs::read(root.join(format!("res-{variant}-a.txt"))).unwrap(),
            std::fs::read(root.join(format!("res-{variant}-b.txt"))).unwrap(),
            "track {variant} differs"
        );
    }

    // eval
    for run in ["a", "b"] {
        run_ok(lowtrack()
            .args(["eval", "--gt"])
            .arg(root.join("seq-a/gt.txt"))
            .arg("--results")
            .arg(root.join("res-embed-a.txt"))
            .arg("--out")
            .arg(root.join(format!("report-{run}.txt"))));
    }
    assert_eq!(
        std::fs::read(root.join("report-a.txt")).unwrap(),
        std::fs::read(root.join("report-b.txt")).unwrap(),
        "eval differs"
    );

    // train (small config)
    let train_cfg = root.join("train.cfg");
    std::fs::write(&train_cfg, "preset=benchmark-v1\nscenario_seed=900\ndim=16\nepochs=6\n")
        .unwrap();
    for run in ["a", "b"] {
        run_ok(lowtrack()
            .args(["train", "--seed", "901", "--config"])
            .arg(&train_cfg)
            .arg("--out")
            .arg(root.join(format!("head-{run}.txt")))
            .arg("--curve")
            .arg(root.join(format!("curve-{run}.csv"))));
    }
    assert_eq!(
        std::fs::read(root.join("head-a.txt")).unwrap(),
        std::fs::read(root.join("head-b.txt")).unwrap(),
        "train head differs"
    );
    assert_eq!(
        std::fs::read(root.join("curve-a.csv")).unwrap(),
        std::fs::read(root.join("curve-b.csv")).unwrap(),
        "train curve differs"
    );

    // experiment (small stride sweep)
    let exp_cfg = root.join("exp.cfg");
    std::fs::write(&exp_cfg, "sweep=stride\npreset=noiseless-v1\nstrides=1,6\nvariants=embed,sort\n")
        .unwrap();
    for run in ["a", "b"] {
        run_ok(lowtrack()
            .args(["experiment", "--seed", "902", "--config"])
            .arg(&exp_cfg)
            .arg("--out")
            .arg(root.join(format!("exp-{run}"))));
    }
    assert_eq!(
        dir_bytes(&root.join("exp-a")),
        dir_bytes(&root.join("exp-b")),
        "experiment differs"
    );

    println!("ACCEPTANCE 09 cli-determinism: PASS (synth, track, eval, train, experiment)");
}

/// 10. write∘parse is the identity for ground truth, detections, embedding
///     sidecars, and results on 1,000 randomized rows each (files written
///     from parsed data are byte-stable).
#[test]
fn acceptance_10_format_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x107);

    // identity rows (ground truth and results share the schema)
    let mut entries = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    while entries.len() < 1000 {
        let frame = rng.random_range(0..200usize);
        let id = rng.random_range(1..40u64);
        if !seen.insert((frame, id)) {
            continue;
        }
        entries.push(GroundTruthEntry {
            frame_index: frame,
            track_id: TrackId(id),
            bbox: BoundingBox::from_ltwh(
                rng.random_range(0.0..1000.0),
                rng.random_range(0.0..700.0),
                rng.random_range(1.0..120.0),
                rng.random_range(1.0..120.0),
            ),
            class_id: VehicleClass::from_code(rng.random_range(1..=3)).unwrap(),
            confidence: rng.random_range(0.01..1.0),
            visibility: rng.random_range(0.1..1.0),
        });
    }
    entries.sort_by_key(|e| (e.frame_index, e.track_id));
    for name in ["gt.txt", "results.txt"] {
        let path = tmp.path().join(name);
        write_results(&path, &entries).unwrap();
        let first = std::fs::read(&path).unwrap();
        let parsed = if name == "gt.txt" {
            parse_ground_truth(&path).unwrap()
        } else {
            parse_results(&path).unwrap()
        };
        assert_eq!(parsed.len(), 1000);
        write_results(&path, &parsed).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap(), "{name} not byte-stable");
    }

    // detections + embedding sidecar
    let mut detections = Vec::new();
    let mut sidecar_rows = Vec::new();
    let mut per_frame = std::collections::BTreeMap::new();
    for _ in 0..1000 {
        let frame = rng.random_range(0..150usize);
        let row = per_frame.entry(frame).or_insert(0usize);
        let mut v: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().all(|x| x.abs() < 1e-9) {
            v[0] = 1.0;
        }
        let embedding = lowtrack_core::types::l2_normalize(&v).unwrap();
        sidecar_rows.push(SidecarRow {
            frame,
            row_in_frame: *row,
            values: embedding.values().to_vec(),
        });
        *row += 1;
        detections.push(lowtrack_core::types::Detection {
            frame_index: frame,
            bbox: BoundingBox::from_ltwh(
                rng.random_range(0.0..1000.0),
                rng.random_range(0.0..700.0),
                rng.random_range(1.0..120.0),
                rng.random_range(1.0..120.0),
            ),
            class_id: VehicleClass::Unknown,
            confidence: rng.random_range(0.01..1.0),
            embedding: Some(embedding),
        });
    }
    detections.sort_by_key(|d| d.frame_index);
    sidecar_rows.sort_by_key(|r| (r.frame, r.row_in_frame));

    let det_path = tmp.path().join("det.txt");
    let emb_path = tmp.path().join("emb.txt");
    write_detections(&det_path, &detections).unwrap();
    write_sidecar(&emb_path, &Sidecar { dim: 8, rows: sidecar_rows }).unwrap();
    let det_first = std::fs::read(&det_path).unwrap();
    let emb_first = std::fs::read(&emb_path).unwrap();

    let parsed = parse_detections(&det_path, Some(&emb_path)).unwrap();
    assert_eq!(parsed.len(), 1000);
    assert!(parsed.iter().all(|d| d.embedding.is_some()));
    write_detections(&det_path, &parsed).unwrap();
    let sidecar = lowtrack_core::io::sidecar_from_detections(&parsed).unwrap();
    write_sidecar(&emb_path, &sidecar).unwrap();
    assert_eq!(det_first, std::fs::read(&det_path).unwrap(), "detections not byte-stable");
    assert_eq!(emb_first, std::fs::read(&emb_path).unwrap(), "sidecar not byte-stable");

    let re_sidecar = parse_sidecar(&emb_path).unwrap();
    assert_eq!(re_sidecar.dim, 8);
    assert_eq!(re_sidecar.rows.len(), 1000);

    println!("ACCEPTANCE 10 format-round-trip: PASS (1000 rows per format)");
}
