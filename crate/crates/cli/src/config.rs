//! Key-value config files (`key=value` per line, `#` comments) for
//! scenarios, trackers, training, and experiments. Unknown keys are
//! rejected so typos surface instead of silently using defaults.

use std::collections::BTreeMap;
use std::path::Path;

use lowtrack_core::io::read_key_values;
use lowtrack_core::learning::{AugmentParams, TrainConfig};
use lowtrack_core::synth::{presets, ScenarioConfig};
use lowtrack_core::tracker::{TrackerConfig, Variant};

use crate::CliError;

pub struct KvConfig {
    map: BTreeMap<String, String>,
    path: String,
}

impl KvConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let pairs = read_key_values(path).map_err(|e| CliError::Data(e.to_string()))?;
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            if map.insert(k.clone(), v).is_some() {
                return Err(CliError::Data(format!(
                    "{}: duplicate key {k:?}",
                    path.display()
                )));
            }
        }
        Ok(Self { map, path: path.display().to_string() })
    }

    pub fn empty() -> Self {
        Self { map: BTreeMap::new(), path: "<defaults>".into() }
    }

    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<(), CliError> {
        for key in self.map.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Data(format!("{}: unknown key {key:?}", self.path)));
            }
        }
        Ok(())
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                CliError::Data(format!("{}: bad value for {key}: {v:?}", self.path))
            }),
        }
    }

    pub fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }
}

const SCENARIO_KEYS: &[&str] = &[
    "preset",
    "seed",
    "n_objects",
    "n_frames",
    "fps",
    "width",
    "height",
    "pan_vx",
    "pan_vy",
    "jump_prob",
    "jump_every",
    "jump_scale",
    "zoom_drift",
    "det_miss_prob",
    "fp_rate",
    "box_jitter_std",
    "embed_dim",
    "embed_noise_std",
    "context_weight",
    "pan_follow",
    "object_speed",
    "twin_pairs",
    "conf_true_lo",
    "conf_true_hi",
    "conf_fp_lo",
    "conf_fp_hi",
    "context_drift",
    "context_pos_scale",
    "feature_local_dim",
    "feature_context_dim",
    "feature_local_noise",
    "feature_context_noise",
];

/// Scenario config: optional `preset=` baseline (a preset flag wins over
/// the file), individual keys override.
pub fn scenario_from_kv(
    kv: &KvConfig,
    preset_override: Option<&str>,
    seed_override: Option<u64>,
) -> Result<ScenarioConfig, CliError> {
    kv.reject_unknown(SCENARIO_KEYS)?;
    let seed = seed_override.or(kv.get("seed")?).unwrap_or(1);
    let mut cfg = match preset_override.or_else(|| kv.raw("preset")) {
        Some(name) => presets::by_name(name, seed)
            .ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))?,
        None => ScenarioConfig { seed, ..ScenarioConfig::default() },
    };
    cfg.seed = seed;
    cfg.n_objects = kv.get_or("n_objects", cfg.n_objects)?;
    cfg.n_frames = kv.get_or("n_frames", cfg.n_frames)?;
    cfg.fps = kv.get_or("fps", cfg.fps)?;
    cfg.width = kv.get_or("width", cfg.width)?;
    cfg.height = kv.get_or("height", cfg.height)?;
    cfg.camera.pan[0] = kv.get_or("pan_vx", cfg.camera.pan[0])?;
    cfg.camera.pan[1] = kv.get_or("pan_vy", cfg.camera.pan[1])?;
    cfg.camera.jump_prob = kv.get_or("jump_prob", cfg.camera.jump_prob)?;
    cfg.camera.jump_every = kv.get_or("jump_every", cfg.camera.jump_every)?;
    cfg.camera.jump_scale = kv.get_or("jump_scale", cfg.camera.jump_scale)?;
    cfg.camera.zoom_drift = kv.get_or("zoom_drift", cfg.camera.zoom_drift)?;
    cfg.det_miss_prob = kv.get_or("det_miss_prob", cfg.det_miss_prob)?;
    cfg.fp_rate = kv.get_or("fp_rate", cfg.fp_rate)?;
    cfg.box_jitter_std = kv.get_or("box_jitter_std", cfg.box_jitter_std)?;
    cfg.embed_dim = kv.get_or("embed_dim", cfg.embed_dim)?;
    cfg.embed_noise_std = kv.get_or("embed_noise_std", cfg.embed_noise_std)?;
    cfg.context_weight = kv.get_or("context_weight", cfg.context_weight)?;
    cfg.pan_follow = kv.get_or("pan_follow", cfg.pan_follow)?;
    cfg.object_speed = kv.get_or("object_speed", cfg.object_speed)?;
    cfg.twin_pairs = kv.get_or("twin_pairs", cfg.twin_pairs)?;
    cfg.conf_true.0 = kv.get_or("conf_true_lo", cfg.conf_true.0)?;
    cfg.conf_true.1 = kv.get_or("conf_true_hi", cfg.conf_true.1)?;
    cfg.conf_fp.0 = kv.get_or("conf_fp_lo", cfg.conf_fp.0)?;
    cfg.conf_fp.1 = kv.get_or("conf_fp_hi", cfg.conf_fp.1)?;
    cfg.context_drift = kv.get_or("context_drift", cfg.context_drift)?;
    cfg.context_pos_scale = kv.get_or("context_pos_scale", cfg.context_pos_scale)?;
    cfg.feature_local_dim = kv.get_or("feature_local_dim", cfg.feature_local_dim)?;
    cfg.feature_context_dim = kv.get_or("feature_context_dim", cfg.feature_context_dim)?;
    cfg.feature_local_noise = kv.get_or("feature_local_noise", cfg.feature_local_noise)?;
    cfg.feature_context_noise = kv.get_or("feature_context_noise", cfg.feature_context_noise)?;
    Ok(cfg)
}

const TRACKER_KEYS: &[&str] = &[
    "variant",
    "n_init",
    "max_age",
    "min_confidence",
    "byte_low_confidence",
    "min_iou",
    "min_embed_score",
    "embed_min_cosine",
    "temperature",
    "ema_rate",
    "dt",
];

pub fn tracker_from_kv(
    kv: &KvConfig,
    variant_override: Option<Variant>,
    dt_override: Option<u32>,
) -> Result<TrackerConfig, CliError> {
    kv.reject_unknown(TRACKER_KEYS)?;
    let mut cfg = TrackerConfig::default();
    if let Some(v) = kv.raw("variant") {
        cfg.variant = v.parse().map_err(CliError::Data)?;
    }
    cfg.n_init = kv.get_or("n_init", cfg.n_init)?;
    cfg.max_age = kv.get_or("max_age", cfg.max_age)?;
    cfg.min_confidence = kv.get_or("min_confidence", cfg.min_confidence)?;
    cfg.byte_low_confidence = kv.get_or("byte_low_confidence", cfg.byte_low_confidence)?;
    cfg.min_iou = kv.get_or("min_iou", cfg.min_iou)?;
    cfg.min_embed_score = kv.get_or("min_embed_score", cfg.min_embed_score)?;
    cfg.embed_min_cosine = kv.get_or("embed_min_cosine", cfg.embed_min_cosine)?;
    cfg.temperature = kv.get_or("temperature", cfg.temperature)?;
    cfg.ema_rate = kv.get_or("ema_rate", cfg.ema_rate)?;
    cfg.dt = kv.get_or("dt", cfg.dt)?;
    if let Some(v) = variant_override {
        cfg.variant = v;
    }
    if let Some(dt) = dt_override {
        cfg.dt = dt;
    }
    Ok(cfg)
}

const TRAIN_KEYS: &[&str] = &[
    "preset",
    "scenario_config",
    "seed",
    "scenario_seed",
    "dim",
    "lr",
    "epochs",
    "tau",
    "lambda_aux",
    "feature_jitter",
    "context_scale_jitter",
];

pub struct TrainSpec {
    pub scenario: ScenarioConfig,
    pub train: TrainConfig,
}

/// Training spec: the dataset comes from a scenario's single-frame instance
/// features; `seed` drives training, `scenario_seed` the data.
pub fn train_from_kv(
    kv: &KvConfig,
    base_dir: &Path,
    seed_override: Option<u64>,
    dim_override: Option<usize>,
) -> Result<TrainSpec, CliError> {
    kv.reject_unknown(TRAIN_KEYS)?;
    let seed = seed_override.or(kv.get("seed")?).unwrap_or(1);
    let scenario_seed = kv.get_or("scenario_seed", seed)?;
    let scenario = match (kv.raw("preset"), kv.raw("scenario_config")) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage("give preset or scenario_config, not both".into()))
        }
        (Some(name), None) => presets::by_name(name, scenario_seed)
            .ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))?,
        (None, Some(rel)) => {
            let nested = KvConfig::load(&base_dir.join(rel))?;
            scenario_from_kv(&nested, None, Some(scenario_seed))?
        }
        (None, None) => presets::by_name("benchmark-v1", scenario_seed).expect("known preset"),
    };
    if scenario.feature_local_dim == 0 || scenario.feature_context_dim == 0 {
        return Err(CliError::Data(
            "training needs a scenario with raw features (feature_*_dim > 0)".into(),
        ));
    }
    let mut train = TrainConfig {
        seed,
        aug: AugmentParams {
            feature_jitter: 0.1,
            context_scale_jitter: 0.3,
            context_dim: scenario.feature_context_dim,
        },
        ..TrainConfig::default()
    };
    train.dim = dim_override.or(kv.get("dim")?).unwrap_or(train.dim);
    train.lr = kv.get_or("lr", train.lr)?;
    train.epochs = kv.get_or("epochs", train.epochs)?;
    train.tau = kv.get_or("tau", train.tau)?;
    train.lambda_aux = kv.get_or("lambda_aux", train.lambda_aux)?;
    train.aug.feature_jitter = kv.get_or("feature_jitter", train.aug.feature_jitter)?;
    train.aug.context_scale_jitter =
        kv.get_or("context_scale_jitter", train.aug.context_scale_jitter)?;
    Ok(TrainSpec { scenario, train })
}

const EXPERIMENT_KEYS: &[&str] = &[
    "sweep",
    "preset",
    "scenario_config",
    "seed",
    "strides",
    "variants",
    "dims",
    "stride",
    "train_seed",
    "epochs",
];

pub enum Sweep {
    /// strides × variants on direct synthetic embeddings
    Stride { strides: Vec<usize>, variants: Vec<Variant> },
    /// head dimensionality sweep with the embedding tracker
    Dim { dims: Vec<usize>, stride: usize, train_seed: u64, epochs: usize },
}

pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub sweep: Sweep,
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| CliError::Data(format!("bad {what} entry {v:?}")))
        })
        .collect()
}

pub fn experiment_from_kv(
    kv: &KvConfig,
    base_dir: &Path,
    seed_override: Option<u64>,
) -> Result<ExperimentSpec, CliError> {
    kv.reject_unknown(EXPERIMENT_KEYS)?;
    let seed = seed_override.or(kv.get("seed")?).unwrap_or(1);
    let scenario = match (kv.raw("preset"), kv.raw("scenario_config")) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage("give preset or scenario_config, not both".into()))
        }
        (Some(name), None) => presets::by_name(name, seed)
            .ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))?,
        (None, Some(rel)) => {
            let nested = KvConfig::load(&base_dir.join(rel))?;
            scenario_from_kv(&nested, None, Some(seed))?
        }
        (None, None) => presets::by_name("benchmark-v1", seed).expect("known preset"),
    };
    let sweep = match kv.raw("sweep").unwrap_or("stride") {
        "stride" => {
            let strides = match kv.raw("strides") {
                Some(raw) => parse_list(raw, "stride")?,
                None => vec![1, 2, 6],
            };
            let variants = match kv.raw("variants") {
                Some(raw) => raw
                    .split(',')
                    .map(|v| v.trim().parse().map_err(CliError::Data))
                    .collect::<Result<Vec<Variant>, _>>()?,
                None => vec![Variant::Embed, Variant::Sort, Variant::Byte],
            };
            Sweep::Stride { strides, variants }
        }
        "dim" => {
            let dims = match kv.raw("dims") {
                Some(raw) => parse_list(raw, "dim")?,
                None => vec![256, 64, 32],
            };
            Sweep::Dim {
                dims,
                stride: kv.get_or("stride", 6)?,
                train_seed: kv.get_or("train_seed", seed ^ 0x5eed)?,
                epochs: kv.get_or("epochs", 120)?,
            }
        }
        other => return Err(CliError::Data(format!("unknown sweep kind {other:?}"))),
    };
    Ok(ExperimentSpec { scenario, sweep })
}
