//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::Path;

use lowtrack_core::io::{
    self, decimate, load_sequence, write_results, write_sequence_dir, DecimationSpec, Sequence,
    Sidecar, SidecarRow,
};
use lowtrack_core::learning::{
    eval_retrieval, instance_frames_from_scenario, project_sequence, train_head, ProjectionHead,
};
use lowtrack_core::metrics::{evaluate, evaluate_entries, EvalOptions, MetricReport};
use lowtrack_core::synth::{generate_scenario, Scenario, ScenarioConfig};
use lowtrack_core::tracker::{rows_to_entries, run_sequence, TrackerConfig, Variant};
use lowtrack_core::types::VehicleClass;

use crate::config::{
    experiment_from_kv, scenario_from_kv, tracker_from_kv, train_from_kv, ExperimentSpec,
    KvConfig, Sweep,
};
use crate::CliError;

fn data_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn load_kv(path: Option<&Path>) -> Result<KvConfig, CliError> {
    match path {
        Some(p) => KvConfig::load(p),
        None => Ok(KvConfig::empty()),
    }
}

/// Features sidecar rows for the (possibly decimated) frames of a scenario.
fn features_sidecar(features: &[Vec<Vec<f64>>]) -> Option<Sidecar> {
    let dim = features.iter().flat_map(|f| f.iter()).map(Vec::len).next()?;
    let mut rows = Vec::new();
    for (frame, frame_features) in features.iter().enumerate() {
        for (row_in_frame, values) in frame_features.iter().enumerate() {
            rows.push(SidecarRow { frame, row_in_frame, values: values.clone() });
        }
    }
    Some(Sidecar { dim, rows })
}

fn decimated_scenario(
    scenario: &Scenario,
    stride: usize,
) -> (Sequence, Vec<Vec<Vec<f64>>>) {
    let seq = decimate(&scenario.sequence, DecimationSpec::new(stride, 0));
    let features = scenario.features.iter().step_by(stride).cloned().collect();
    (seq, features)
}

pub fn synth(
    out: &Path,
    config: Option<&Path>,
    preset: Option<&str>,
    seed: Option<u64>,
    stride: Option<usize>,
) -> Result<(), CliError> {
    let kv = load_kv(config)?;
    let cfg = scenario_from_kv(&kv, preset, seed)?;
    let scenario = generate_scenario(&cfg);
    let stride = stride.unwrap_or(1);
    if stride < 1 {
        return Err(CliError::Usage("stride must be >= 1".into()));
    }
    let (seq, features) = decimated_scenario(&scenario, stride);

    write_sequence_dir(out, &seq).map_err(data_err)?;
    if stride > 1 {
        // record provenance next to the decimated rate
        let seqinfo = out.join("seqinfo.txt");
        let mut text = std::fs::read_to_string(&seqinfo).map_err(data_err)?;
        writeln!(text, "source_fps={}", scenario.sequence.fps).expect("string write");
        writeln!(text, "stride={stride}").expect("string write");
        std::fs::write(&seqinfo, text).map_err(data_err)?;
    }
    if let Some(sidecar) = features_sidecar(&features) {
        io::write_sidecar(&out.join(io::FEATURES_FILE), &sidecar).map_err(data_err)?;
    }
    eprintln!(
        "synth: {} frames, {} gt rows, {} detections -> {}",
        seq.n_frames(),
        seq.ground_truth.as_ref().map_or(0, Vec::len),
        seq.all_detections().count(),
        out.display()
    );
    Ok(())
}

/// Rebuilds per-frame feature rows from a sidecar, aligned with detections.
fn features_from_sidecar(seq: &Sequence, sidecar: &Sidecar) -> Result<Vec<Vec<Vec<f64>>>, CliError> {
    let mut features: Vec<Vec<Vec<f64>>> =
        seq.frames.iter().map(|f| vec![Vec::new(); f.detections.len()]).collect();
    for row in &sidecar.rows {
        let slot = features
            .get_mut(row.frame)
            .and_then(|f| f.get_mut(row.row_in_frame))
            .ok_or_else(|| {
                CliError::Data(format!(
                    "feature row (frame {}, row {}) has no matching detection",
                    row.frame + 1,
                    row.row_in_frame
                ))
            })?;
        *slot = row.values.clone();
    }
    for (f, frame) in features.iter().enumerate() {
        for (r, values) in frame.iter().enumerate() {
            if values.is_empty() {
                return Err(CliError::Data(format!(
                    "missing feature row for frame {}, detection {r}",
                    f + 1
                )));
            }
        }
    }
    Ok(features)
}

/// Stride recorded in the sequence metadata by a decimating `synth` run.
fn recorded_stride(seq_dir: &Path) -> Option<u32> {
    let pairs = io::read_key_values(&seq_dir.join("seqinfo.txt")).ok()?;
    pairs.iter().find(|(k, _)| k == "stride").and_then(|(_, v)| v.parse().ok())
}

pub fn track(
    seq_dir: &Path,
    out: &Path,
    config: Option<&Path>,
    variant: Option<Variant>,
    stride: Option<usize>,
    head: Option<&Path>,
) -> Result<(), CliError> {
    let kv = load_kv(config)?;
    // dt precedence: --stride flag (compounded with any stride already
    // recorded in the sequence metadata), explicit config dt, recorded
    // stride, 1
    let recorded = recorded_stride(seq_dir);
    let dt_override = match stride {
        Some(s) => Some(s as u32 * recorded.unwrap_or(1)),
        None if kv.raw("dt").is_none() => recorded,
        None => None,
    };
    let cfg = tracker_from_kv(&kv, variant, dt_override)?;
    let mut seq = load_sequence(seq_dir).map_err(data_err)?;

    if let Some(head_path) = head {
        let text = std::fs::read_to_string(head_path).map_err(data_err)?;
        let head = ProjectionHead::from_text(&text).map_err(data_err)?;
        let sidecar_path = seq_dir.join(io::FEATURES_FILE);
        if !sidecar_path.exists() {
            return Err(CliError::Data(format!(
                "--head needs a {} sidecar in {}",
                io::FEATURES_FILE,
                seq_dir.display()
            )));
        }
        let sidecar = io::parse_sidecar(&sidecar_path).map_err(data_err)?;
        let features = features_from_sidecar(&seq, &sidecar)?;
        seq = project_sequence(&seq, &features, &head).map_err(data_err)?;
    }

    if let Some(s) = stride {
        if s < 1 {
            return Err(CliError::Usage("stride must be >= 1".into()));
        }
        seq = decimate(&seq, DecimationSpec::new(s, 0));
    }

    if cfg.variant == Variant::Embed && !seq.all_detections().any(|d| d.embedding.is_some()) {
        return Err(CliError::Data(format!(
            "embed variant needs detection embeddings: no sidecar in {} (or pass --head)",
            seq_dir.display()
        )));
    }

    let rows = run_sequence(&seq, &cfg).map_err(data_err)?;
    write_results(out, &rows_to_entries(&rows)).map_err(data_err)?;
    eprintln!("track: {} result rows ({} variant) -> {}", rows.len(), cfg.variant, out.display());
    Ok(())
}

fn eval_options(class_filter: Option<i32>, iou_min: Option<f64>) -> Result<EvalOptions, CliError> {
    let class_filter = class_filter
        .map(|code| {
            VehicleClass::from_code(code)
                .filter(|c| *c != VehicleClass::Unknown)
                .ok_or_else(|| CliError::Usage(format!("class filter must be 1|2|3, got {code}")))
        })
        .transpose()?;
    let mut opts = EvalOptions { class_filter, ..EvalOptions::default() };
    if let Some(v) = iou_min {
        opts.iou_min = v;
    }
    Ok(opts)
}

pub fn eval(
    gt: &Path,
    results: &Path,
    out: Option<&Path>,
    class_filter: Option<i32>,
    iou_min: Option<f64>,
) -> Result<(), CliError> {
    let opts = eval_options(class_filter, iou_min)?;
    let report = evaluate(gt, results, &opts).map_err(data_err)?;
    print!("{}", report.table());
    if let Some(path) = out {
        std::fs::write(path, report.to_key_values()).map_err(data_err)?;
    }
    Ok(())
}

pub fn train(
    out: &Path,
    config: Option<&Path>,
    curve_path: Option<&Path>,
    seed: Option<u64>,
    dim: Option<usize>,
) -> Result<(), CliError> {
    let kv = load_kv(config)?;
    let base_dir = config.and_then(Path::parent).unwrap_or(Path::new("."));
    let spec = train_from_kv(&kv, base_dir, seed, dim)?;
    let scenario = generate_scenario(&spec.scenario);
    let frames = instance_frames_from_scenario(&scenario);
    let input_dim = spec.scenario.feature_local_dim + spec.scenario.feature_context_dim;
    let (head, curve) = train_head(&frames, input_dim, &spec.train).map_err(data_err)?;
    std::fs::write(out, head.to_text()).map_err(data_err)?;
    if let Some(path) = curve_path {
        let mut csv = String::from("epoch,loss\n");
        for (epoch, loss) in curve.iter().enumerate() {
            writeln!(csv, "{epoch},{loss}").expect("string write");
        }
        std::fs::write(path, csv).map_err(data_err)?;
    }
    eprintln!(
        "train: dim {} head, {} epochs, final loss {:.6} -> {}",
        spec.train.dim,
        curve.len(),
        curve.last().copied().unwrap_or(f64::NAN),
        out.display()
    );
    Ok(())
}

fn sanitize(cell: &str) -> String {
    cell.replace('/', "_")
}

pub fn experiment(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let kv = KvConfig::load(config)?;
    let base_dir = config.parent().unwrap_or(Path::new("."));
    let ExperimentSpec { scenario: scenario_cfg, sweep } =
        experiment_from_kv(&kv, base_dir, seed)?;
    std::fs::create_dir_all(out).map_err(data_err)?;
    let scenario = generate_scenario(&scenario_cfg);

    let mut cells: Vec<(String, MetricReport)> = Vec::new();
    match sweep {
        Sweep::Stride { strides, variants } => {
            for &stride in &strides {
                let (seq, _) = decimated_scenario(&scenario, stride);
                let gt = seq.ground_truth.clone().unwrap_or_default();
                for &variant in &variants {
                    let cfg =
                        TrackerConfig { variant, dt: stride as u32, ..TrackerConfig::default() };
                    let rows = run_sequence(&seq, &cfg).map_err(data_err)?;
                    let entries = rows_to_entries(&rows);
                    let cell = format!("stride{stride}/{variant}");
                    write_results(&out.join(format!("results_{}.txt", sanitize(&cell))), &entries)
                        .map_err(data_err)?;
                    let report =
                        evaluate_entries(&gt, &entries, &EvalOptions::default()).map_err(data_err)?;
                    std::fs::write(
                        out.join(format!("report_{}.txt", sanitize(&cell))),
                        report.to_key_values(),
                    )
                    .map_err(data_err)?;
                    eprintln!("experiment: {cell} done");
                    cells.push((cell, report));
                }
            }
        }
        Sweep::Dim { dims, stride, train_seed, epochs } => {
            let train_scenario_cfg = ScenarioConfig { seed: train_seed, ..scenario_cfg.clone() };
            let train_scenario = generate_scenario(&train_scenario_cfg);
            let train_frames = instance_frames_from_scenario(&train_scenario);
            let eval_frames = instance_frames_from_scenario(&scenario);
            let input_dim = scenario_cfg.feature_local_dim + scenario_cfg.feature_context_dim;
            for &dim in &dims {
                let train_cfg = lowtrack_core::learning::TrainConfig {
                    dim,
                    epochs,
                    seed: train_seed,
                    aug: lowtrack_core::learning::AugmentParams {
                        context_dim: scenario_cfg.feature_context_dim,
                        ..Default::default()
                    },
                    ..Default::default()
                };
                let (head, _) =
                    train_head(&train_frames, input_dim, &train_cfg).map_err(data_err)?;
                let acc = eval_retrieval(&head, &eval_frames, &train_cfg.aug, train_seed ^ 0xE7A1)
                    .map_err(data_err)?;
                let projected = project_sequence(&scenario.sequence, &scenario.features, &head)
                    .map_err(data_err)?;
                let seq = decimate(&projected, DecimationSpec::new(stride, 0));
                let gt = seq.ground_truth.clone().unwrap_or_default();
                let cfg = TrackerConfig { dt: stride as u32, ..TrackerConfig::default() };
                let rows = run_sequence(&seq, &cfg).map_err(data_err)?;
                let entries = rows_to_entries(&rows);
                let cell = format!("dim{dim}/embed");
                write_results(&out.join(format!("results_{}.txt", sanitize(&cell))), &entries)
                    .map_err(data_err)?;
                let report =
                    evaluate_entries(&gt, &entries, &EvalOptions::default()).map_err(data_err)?;
                std::fs::write(
                    out.join(format!("report_{}.txt", sanitize(&cell))),
                    report.to_key_values(),
                )
                .map_err(data_err)?;
                eprintln!("experiment: {cell} done (retrieval {acc:.4})");
                cells.push((cell, report));
            }
        }
    }

    cells.sort_by(|a, b| a.0.cmp(&b.0));
    let mut table = format!(
        "{:<20} {:>7} {:>7} {:>7} {:>7} {:>7}\n",
        "cell", "HOTA", "MOTA", "IDF1", "AssA", "IDSW"
    );
    for (cell, r) in &cells {
        writeln!(
            table,
            "{:<20} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>7}",
            cell,
            r.hota * 100.0,
            r.mota * 100.0,
            r.idf1 * 100.0,
            r.assa * 100.0,
            r.idsw
        )
        .expect("string write");
    }
    std::fs::write(out.join("table.txt"), &table).map_err(data_err)?;
    print!("{table}");
    Ok(())
}
