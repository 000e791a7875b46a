//! Desk-scale self-supervised contrastive learning of a linear embedding
//! projection head from single-frame annotations.
//!
//! The backbone is the synthetic featurizer (identity + context + noise);
//! only the projection `D -> d` is trained, which is exactly where the
//! dimensionality sweep {256, 64, 32} lives. Supervision comes from
//! two-view augmentation of one frame: the same instance across views is
//! the positive, every other instance in the opposite view is a negative.
//! Gradients are derived by hand and checked against central finite
//! differences.
//!
//! Loss per anchor v with positives k+ and negatives k-:
//! `L = ln(1 + sum_{k+} sum_{k-} exp((v.k- - v.k+)/tau))`
//! plus an auxiliary cosine regression pulling same-instance pairs to 1 and
//! different-instance pairs to 0.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::io::Sequence;
use crate::types::{l2_normalize, Embedding, VectorError};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("frame has no instances")]
    EmptyFrame,
    #[error("contrastive loss needs at least one positive")]
    MissingPositive,
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },
    #[error("dataset needs at least two instances, got {0}")]
    TooFewInstances(usize),
    #[error("feature dimension mismatch: head expects {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("bad head file: {0}")]
    HeadFormat(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// One annotated instance: raw feature vector (local descriptor ++ global
/// context descriptor) and its identity within the source frame.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSample {
    pub instance_id: usize,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFrame {
    pub frame_id: usize,
    pub instances: Vec<InstanceSample>,
}

/// Augmentation knobs for the two-view construction. `context_dim` marks the
/// trailing block that random scaling applies to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    /// Expected norm of the gaussian feature jitter.
    pub feature_jitter: f64,
    /// Context block scaled by U[1-r, 1+r].
    pub context_scale_jitter: f64,
    pub context_dim: usize,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self { feature_jitter: 0.1, context_scale_jitter: 0.3, context_dim: 0 }
    }
}

/// Two augmented copies of one frame's instance set. Instances are aligned:
/// `view_a[i]` and `view_b[i]` carry the same `instance_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewPair {
    pub view_a: Vec<InstanceSample>,
    pub view_b: Vec<InstanceSample>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Stream seed for batch (epoch, frame) derived from a base seed.
pub fn batch_seed(base: u64, epoch: usize, frame: usize) -> u64 {
    splitmix64(base ^ splitmix64(((epoch as u64) << 32) | frame as u64))
}

fn noise_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let s = scale / (dim as f64).sqrt();
    (0..dim).map(|_| normal.sample(rng) * s).collect()
}

fn augment_instance(
    rng: &mut ChaCha8Rng,
    sample: &InstanceSample,
    aug: &AugmentParams,
) -> InstanceSample {
    let dim = sample.features.len();
    let mut features = sample.features.clone();
    if aug.feature_jitter > 0.0 {
        let noise = noise_vec(rng, dim, aug.feature_jitter);
        for (f, n) in features.iter_mut().zip(&noise) {
            *f += n;
        }
    }
    if aug.context_scale_jitter > 0.0 && aug.context_dim > 0 && aug.context_dim <= dim {
        let r = aug.context_scale_jitter;
        let scale = rng.random_range((1.0 - r).max(0.0)..=1.0 + r);
        for f in features.iter_mut().skip(dim - aug.context_dim) {
            *f *= scale;
        }
    }
    InstanceSample { instance_id: sample.instance_id, features }
}

/// Builds the two augmented views of one frame. Deterministic per seed;
/// zero augmentation strength reproduces the raw features in both views.
pub fn make_view_pair(
    frame: &InstanceFrame,
    aug: &AugmentParams,
    seed: u64,
) -> Result<ViewPair, LearnError> {
    if frame.instances.is_empty() {
        return Err(LearnError::EmptyFrame);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let view_a = frame.instances.iter().map(|s| augment_instance(&mut rng, s, aug)).collect();
    let view_b = frame.instances.iter().map(|s| augment_instance(&mut rng, s, aug)).collect();
    Ok(ViewPair { view_a, view_b })
}

/// Multi-positive contrastive loss
/// `ln(1 + sum_{k+} sum_{k-} exp((v.k- - v.k+)/tau))`.
pub fn contrastive_loss(
    anchor: &Embedding,
    positives: &[Embedding],
    negatives: &[Embedding],
    tau: f64,
) -> Result<f64, LearnError> {
    assert!(tau > 0.0);
    if positives.is_empty() {
        return Err(LearnError::MissingPositive);
    }
    let mut acc = 0.0;
    for pos in positives {
        let sp = crate::types::dot(anchor.values(), pos.values())?;
        for neg in negatives {
            let sn = crate::types::dot(anchor.values(), neg.values())?;
            acc += ((sn - sp) / tau).exp();
        }
    }
    Ok(acc.ln_1p())
}

/// Linear projection head `z = normalize(W^T x + b)`, W stored row-major
/// `input_dim x output_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionHead {
    pub input_dim: usize,
    pub output_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ProjectionHead {
    pub fn new_random(input_dim: usize, output_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let scale = (input_dim as f64).sqrt().recip();
        let weight =
            (0..input_dim * output_dim).map(|_| normal.sample(&mut rng) * scale).collect();
        let bias = vec![0.0; output_dim];
        Self { input_dim, output_dim, weight, bias }
    }

    pub fn project_raw(&self, x: &[f64]) -> Result<Vec<f64>, LearnError> {
        if x.len() != self.input_dim {
            return Err(LearnError::Dimension { expected: self.input_dim, got: x.len() });
        }
        let mut z = self.bias.clone();
        for (p, xv) in x.iter().enumerate() {
            let row = &self.weight[p * self.output_dim..(p + 1) * self.output_dim];
            for (q, w) in row.iter().enumerate() {
                z[q] += w * xv;
            }
        }
        Ok(z)
    }

    /// Projects and L2-normalizes into embedding space.
    pub fn project(&self, x: &[f64]) -> Result<Embedding, LearnError> {
        Ok(l2_normalize(&self.project_raw(x)?)?)
    }

    /// Text form: header `D d`, one weight row per input dimension, then the
    /// bias row. Full-precision values.
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = format!("{} {}\n", self.input_dim, self.output_dim);
        for p in 0..self.input_dim {
            let row = &self.weight[p * self.output_dim..(p + 1) * self.output_dim];
            let mut line = String::new();
            for (q, w) in row.iter().enumerate() {
                if q > 0 {
                    line.push(' ');
                }
                write!(line, "{w}").expect("string write");
            }
            out.push_str(&line);
            out.push('\n');
        }
        let mut line = String::new();
        for (q, b) in self.bias.iter().enumerate() {
            if q > 0 {
                line.push(' ');
            }
            write!(line, "{b}").expect("string write");
        }
        out.push_str(&line);
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LearnError> {
        let bad = |msg: &str| LearnError::HeadFormat(msg.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("missing header"))?;
        let mut parts = header.split_whitespace();
        let input_dim: usize =
            parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad header"))?;
        let output_dim: usize =
            parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad header"))?;
        let mut weight = Vec::with_capacity(input_dim * output_dim);
        for _ in 0..input_dim {
            let line = lines.next().ok_or_else(|| bad("missing weight row"))?;
            for v in line.split_whitespace() {
                weight.push(v.parse().map_err(|_| bad("bad weight"))?);
            }
        }
        if weight.len() != input_dim * output_dim {
            return Err(LearnError::Dimension {
                expected: input_dim * output_dim,
                got: weight.len(),
            });
        }
        let bias_line = lines.next().ok_or_else(|| bad("missing bias row"))?;
        let bias: Vec<f64> = bias_line
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| bad("bad bias")))
            .collect::<Result<_, _>>()?;
        if bias.len() != output_dim {
            return Err(LearnError::Dimension { expected: output_dim, got: bias.len() });
        }
        Ok(Self { input_dim, output_dim, weight, bias })
    }
}

/// Parameter gradient of the total loss over one view pair.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradient {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Total loss (mean contrastive over view-A anchors + lambda_aux * cosine
/// regression over all cross-view pairs) and its analytic gradient.
pub fn loss_gradient(
    head: &ProjectionHead,
    pair: &ViewPair,
    tau: f64,
    lambda_aux: f64,
) -> Result<(f64, HeadGradient), LearnError> {
    assert!(tau > 0.0);
    let na = pair.view_a.len();
    let nb = pair.view_b.len();
    if na == 0 || nb == 0 {
        return Err(LearnError::EmptyFrame);
    }

    struct Projected {
        x: Vec<f64>,
        norm: f64,
        z: Vec<f64>,
    }
    let project = |head: &ProjectionHead, s: &InstanceSample| -> Result<Projected, LearnError> {
        let raw = head.project_raw(&s.features)?;
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(LearnError::Vector(VectorError::DegenerateVector));
        }
        let z = raw.iter().map(|v| v / norm).collect();
        Ok(Projected { x: s.features.clone(), norm, z })
    };
    let a: Vec<Projected> =
        pair.view_a.iter().map(|s| project(head, s)).collect::<Result<_, _>>()?;
    let b: Vec<Projected> =
        pair.view_b.iter().map(|s| project(head, s)).collect::<Result<_, _>>()?;

    // cross-view dot products
    let d = head.output_dim;
    let mut s = vec![0.0; na * nb];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            s[i * nb + j] = ai.z.iter().zip(&bj.z).map(|(u, v)| u * v).sum();
        }
    }
    let same = |i: usize, j: usize| pair.view_a[i].instance_id == pair.view_b[j].instance_id;

    // dL/ds matrix
    let mut g = vec![0.0; na * nb];
    let mut loss = 0.0;

    // contrastive over view-A anchors (positive = aligned instance in B)
    for i in 0..na {
        let pos: Vec<usize> = (0..nb).filter(|&j| same(i, j)).collect();
        let negs: Vec<usize> = (0..nb).filter(|&j| !same(i, j)).collect();
        if pos.is_empty() {
            return Err(LearnError::MissingPositive);
        }
        let mut acc = 0.0;
        let mut terms = Vec::with_capacity(pos.len() * negs.len());
        for &jp in &pos {
            for &jn in &negs {
                let e = ((s[i * nb + jn] - s[i * nb + jp]) / tau).exp();
                terms.push((jp, jn, e));
                acc += e;
            }
        }
        loss += acc.ln_1p() / na as f64;
        let denom = (1.0 + acc) * tau * na as f64;
        for (jp, jn, e) in terms {
            g[i * nb + jn] += e / denom;
            g[i * nb + jp] -= e / denom;
        }
    }

    // auxiliary cosine regression
    if lambda_aux > 0.0 {
        let count = (na * nb) as f64;
        for i in 0..na {
            for j in 0..nb {
                let target = if same(i, j) { 1.0 } else { 0.0 };
                let diff = s[i * nb + j] - target;
                loss += lambda_aux * diff * diff / count;
                g[i * nb + j] += lambda_aux * 2.0 * diff / count;
            }
        }
    }

    // backprop: s_ij = a_i . b_j, then through normalization and the linear map
    let mut gw = vec![0.0; head.weight.len()];
    let mut gb = vec![0.0; d];
    let backprop = |p: &Projected, gz: &[f64], gw: &mut [f64], gb: &mut [f64]| {
        let dot_gz_z: f64 = gz.iter().zip(&p.z).map(|(u, v)| u * v).sum();
        let graw: Vec<f64> =
            gz.iter().zip(&p.z).map(|(u, z)| (u - dot_gz_z * z) / p.norm).collect();
        for (pi, xv) in p.x.iter().enumerate() {
            let row = &mut gw[pi * d..(pi + 1) * d];
            for (q, gr) in graw.iter().enumerate() {
                row[q] += xv * gr;
            }
        }
        for (q, gr) in graw.iter().enumerate() {
            gb[q] += gr;
        }
    };

    for (i, ai) in a.iter().enumerate() {
        let mut gz = vec![0.0; d];
        for (j, bj) in b.iter().enumerate() {
            let gij = g[i * nb + j];
            if gij != 0.0 {
                for (q, bv) in bj.z.iter().enumerate() {
                    gz[q] += gij * bv;
                }
            }
        }
        backprop(ai, &gz, &mut gw, &mut gb);
    }
    for (j, bj) in b.iter().enumerate() {
        let mut gz = vec![0.0; d];
        for (i, ai) in a.iter().enumerate() {
            let gij = g[i * nb + j];
            if gij != 0.0 {
                for (q, av) in ai.z.iter().enumerate() {
                    gz[q] += gij * av;
                }
            }
        }
        backprop(bj, &gz, &mut gw, &mut gb);
    }

    Ok((loss, HeadGradient { weight: gw, bias: gb }))
}

/// Training configuration for the projection head.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub lr: f64,
    pub epochs: usize,
    pub tau: f64,
    pub lambda_aux: f64,
    pub aug: AugmentParams,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            lr: 0.1,
            epochs: 200,
            tau: 0.07,
            lambda_aux: 0.25,
            aug: AugmentParams::default(),
            seed: 1,
        }
    }
}

/// Plain per-frame gradient descent (no adaptive optimizer, fixed learning
/// rate). Returns the trained head and the per-epoch mean loss curve;
/// deterministic per seed.
pub fn train_head(
    frames: &[InstanceFrame],
    input_dim: usize,
    cfg: &TrainConfig,
) -> Result<(ProjectionHead, Vec<f64>), LearnError> {
    let total: usize = frames.iter().map(|f| f.instances.len()).sum();
    if total < 2 {
        return Err(LearnError::TooFewInstances(total));
    }
    let mut head = ProjectionHead::new_random(input_dim, cfg.dim, splitmix64(cfg.seed));
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (fi, frame) in frames.iter().enumerate() {
            if frame.instances.is_empty() {
                continue;
            }
            let pair = make_view_pair(frame, &cfg.aug, batch_seed(cfg.seed, epoch, fi))?;
            let (loss, grad) = loss_gradient(&head, &pair, cfg.tau, cfg.lambda_aux)?;
            if !loss.is_finite() {
                return Err(LearnError::TrainingDiverged { epoch, loss });
            }
            for (w, g) in head.weight.iter_mut().zip(&grad.weight) {
                *w -= cfg.lr * g;
            }
            for (b, g) in head.bias.iter_mut().zip(&grad.bias) {
                *b -= cfg.lr * g;
            }
            epoch_loss += loss;
            batches += 1;
        }
        curve.push(epoch_loss / batches.max(1) as f64);
    }
    Ok((head, curve))
}

/// Fraction of view-A instances whose nearest neighbor (cosine) in view B is
/// their true counterpart, over freshly augmented pairs of the given frames.
/// Use a seed disjoint from training.
pub fn eval_retrieval(
    head: &ProjectionHead,
    frames: &[InstanceFrame],
    aug: &AugmentParams,
    seed: u64,
) -> Result<f64, LearnError> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for (fi, frame) in frames.iter().enumerate() {
        if frame.instances.is_empty() {
            continue;
        }
        let pair = make_view_pair(frame, aug, batch_seed(seed, 0, fi))?;
        let b: Vec<Embedding> = pair
            .view_b
            .iter()
            .map(|s| head.project(&s.features))
            .collect::<Result<_, _>>()?;
        for sa in &pair.view_a {
            let za = head.project(&sa.features)?;
            let mut best = 0usize;
            let mut best_score = f64::NEG_INFINITY;
            for (j, zb) in b.iter().enumerate() {
                let score: f64 = za.values().iter().zip(zb.values()).map(|(u, v)| u * v).sum();
                if score > best_score {
                    best_score = score;
                    best = j;
                }
            }
            if pair.view_b[best].instance_id == sa.instance_id {
                hits += 1;
            }
            total += 1;
        }
    }
    Ok(hits as f64 / total.max(1) as f64)
}

/// Synthetic instance dataset for standalone training experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDatasetConfig {
    pub seed: u64,
    pub n_identities: usize,
    pub n_frames: usize,
    pub instances_per_frame: (usize, usize),
    pub local_dim: usize,
    pub context_dim: usize,
    pub local_noise: f64,
    pub context_noise: f64,
    /// 0 produces pure-noise features (chance-level retrieval).
    pub identity_weight: f64,
    pub context_drift: f64,
}

impl Default for InstanceDatasetConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_identities: 24,
            n_frames: 80,
            instances_per_frame: (4, 8),
            local_dim: 64,
            context_dim: 32,
            local_noise: 0.15,
            context_noise: 0.3,
            identity_weight: 1.0,
            context_drift: 0.02,
        }
    }
}

/// Frames of instances with features `identity_weight * id + noise` in the
/// local block and a drifting shared context vector plus noise in the
/// context block.
pub fn generate_instance_dataset(cfg: &InstanceDatasetConfig) -> Vec<InstanceFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let identities: Vec<Vec<f64>> = (0..cfg.n_identities)
        .map(|_| {
            let v: Vec<f64> =
                (0..cfg.local_dim).map(|_| normal.sample(&mut rng)).collect();
            l2_normalize(&v).expect("gaussian identity").into_values()
        })
        .collect();
    let mut ctx: Vec<f64> = {
        let v: Vec<f64> = (0..cfg.context_dim).map(|_| normal.sample(&mut rng)).collect();
        l2_normalize(&v).expect("gaussian context").into_values()
    };

    let mut frames = Vec::with_capacity(cfg.n_frames);
    for frame_id in 0..cfg.n_frames {
        let k = rng.random_range(cfg.instances_per_frame.0..=cfg.instances_per_frame.1);
        let k = k.min(cfg.n_identities);
        // partial shuffle for k distinct identities
        let mut pool: Vec<usize> = (0..cfg.n_identities).collect();
        for i in 0..k {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        let mut instances = Vec::with_capacity(k);
        for &id in &pool[..k] {
            let mut features = Vec::with_capacity(cfg.local_dim + cfg.context_dim);
            let ln = noise_vec(&mut rng, cfg.local_dim, cfg.local_noise);
            features.extend(
                identities[id].iter().zip(&ln).map(|(v, n)| cfg.identity_weight * v + n),
            );
            let cn = noise_vec(&mut rng, cfg.context_dim, cfg.context_noise);
            features.extend(ctx.iter().zip(&cn).map(|(v, n)| v + n));
            instances.push(InstanceSample { instance_id: id, features });
        }
        frames.push(InstanceFrame { frame_id, instances });

        let step = noise_vec(&mut rng, cfg.context_dim, cfg.context_drift);
        let next: Vec<f64> = ctx.iter().zip(&step).map(|(c, s)| c + s).collect();
        ctx = l2_normalize(&next).expect("context drift").into_values();
    }
    frames
}

/// Converts a generated scenario into single-frame instance supervision:
/// true detections keep their object identity, false positives get fresh
/// unique ids (they still form valid positive pairs across views).
pub fn instance_frames_from_scenario(scenario: &crate::synth::Scenario) -> Vec<InstanceFrame> {
    let mut fp_counter = 100_000usize;
    scenario
        .features
        .iter()
        .zip(&scenario.detection_objects)
        .enumerate()
        .map(|(frame_id, (feats, objects))| {
            let instances = feats
                .iter()
                .zip(objects)
                .map(|(features, obj)| {
                    let instance_id = match obj {
                        Some(i) => *i,
                        None => {
                            fp_counter += 1;
                            fp_counter
                        }
                    };
                    InstanceSample { instance_id, features: features.clone() }
                })
                .collect();
            InstanceFrame { frame_id, instances }
        })
        .collect()
}

/// Replaces every detection embedding with the head's projection of the
/// aligned raw feature.
pub fn project_sequence(
    seq: &Sequence,
    features: &[Vec<Vec<f64>>],
    head: &ProjectionHead,
) -> Result<Sequence, LearnError> {
    let mut out = seq.clone();
    for (frame, feats) in out.frames.iter_mut().zip(features) {
        if frame.detections.len() != feats.len() {
            return Err(LearnError::Dimension {
                expected: frame.detections.len(),
                got: feats.len(),
            });
        }
        for (det, f) in frame.detections.iter_mut().zip(feats) {
            det.embedding = Some(head.project(f)?);
        }
    }
    Ok(out)
}
