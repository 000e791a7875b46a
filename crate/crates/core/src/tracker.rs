//! Track lifecycle state machine and the three tracker variants:
//! embedding association (`Embed`), IoU + Kalman (`Sort`), and the
//! two-stage confidence cascade (`Byte`).
//!
//! Lifecycle: `Tentative → {Active, Removed}`, `Active → {Active, Lost}`,
//! `Lost → {Active (reactivated), Removed}`. Only `Active` tracks emit
//! result rows. Lost tracks stay matchable — by appearance for `Embed`
//! (that is the point: appearance survives disappearance), by predicted-box
//! IoU for the motion variants — until `max_age` missed frames pass.

use thiserror::Error;

use crate::assoc::{
    bisoftmax_similarity, cascade_match_byte, hungarian_assign, iou_similarity, SimilarityMatrix,
};
use crate::io::Sequence;
use crate::kalman::{KalmanFilter, KalmanState};
use crate::types::{
    cosine_similarity, l2_normalize, BoundingBox, Detection, Embedding, GroundTruthEntry,
    TrackId, VehicleClass,
};

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("out-of-order frame {got} after {last}")]
    FrameOrder { last: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackState {
    Tentative,
    Active,
    Lost,
    Removed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Embed,
    Sort,
    Byte,
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embed" => Ok(Variant::Embed),
            "sort" => Ok(Variant::Sort),
            "byte" => Ok(Variant::Byte),
            other => Err(format!("unknown variant {other:?} (expected embed|sort|byte)")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Embed => write!(f, "embed"),
            Variant::Sort => write!(f, "sort"),
            Variant::Byte => write!(f, "byte"),
        }
    }
}

/// Tracker parameters. `dt` is the decimation stride: the Kalman transition
/// advances that many source frames per processed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub variant: Variant,
    /// Hits needed to confirm a Tentative track.
    pub n_init: u32,
    /// Missed (decimated) frames before a Lost track is removed.
    pub max_age: u32,
    /// Spawn threshold; also the high-confidence cut for `Byte`.
    pub min_confidence: f64,
    /// Lower confidence bound for the `Byte` second stage.
    pub byte_low_confidence: f64,
    /// IoU gate for the motion variants.
    pub min_iou: f64,
    /// Bi-softmax acceptance threshold for `Embed`.
    pub min_embed_score: f64,
    /// Raw cosine gate for `Embed`; keeps the degenerate single-candidate
    /// softmax (score 1 for any pair) from matching arbitrary embeddings.
    pub embed_min_cosine: f64,
    /// Bi-softmax temperature.
    pub temperature: f64,
    /// β for the exponential-moving-average appearance memory.
    pub ema_rate: f64,
    pub dt: u32,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Embed,
            n_init: 2,
            max_age: 30,
            min_confidence: 0.5,
            byte_low_confidence: 0.1,
            min_iou: 0.1,
            min_embed_score: 0.5,
            embed_min_cosine: 0.2,
            temperature: 0.07,
            ema_rate: 0.1,
            dt: 1,
        }
    }
}

/// EMA update of the appearance memory: `l2_normalize((1-β)·memory + β·det)`.
/// Antipodal inputs at β = 0.5 would cancel; the update then falls back to
/// the detection embedding.
pub fn update_memory(memory: &Embedding, det: &Embedding, beta: f64) -> Embedding {
    assert!((0.0..=1.0).contains(&beta));
    let mixed: Vec<f64> = memory
        .values()
        .iter()
        .zip(det.values())
        .map(|(m, d)| (1.0 - beta) * m + beta * d)
        .collect();
    l2_normalize(&mixed).unwrap_or_else(|_| det.clone())
}

/// Persistent identity with motion state and appearance memory.
#[derive(Debug, Clone)]
pub struct TrackRecord {
    pub id: TrackId,
    pub state: TrackState,
    /// Matched frames, total.
    pub hits: u32,
    /// Consecutive unmatched frames, reset on match.
    pub misses: u32,
    pub kalman: Option<KalmanState>,
    /// EMA appearance memory, unit norm.
    pub memory: Option<Embedding>,
    pub last_box: BoundingBox,
    pub last_frame: usize,
    pub last_confidence: f64,
    class_votes: [u32; 3],
}

impl TrackRecord {
    /// Majority class over matched detections; `Unknown` when nothing voted.
    pub fn class_id(&self) -> VehicleClass {
        let best = (0..3).max_by_key(|&i| self.class_votes[i]).unwrap();
        if self.class_votes[best] == 0 {
            VehicleClass::Unknown
        } else {
            match best {
                0 => VehicleClass::HeavilyArmored,
                1 => VehicleClass::LightlyArmored,
                _ => VehicleClass::Truck,
            }
        }
    }

    fn vote(&mut self, class: VehicleClass) {
        match class {
            VehicleClass::HeavilyArmored => self.class_votes[0] += 1,
            VehicleClass::LightlyArmored => self.class_votes[1] += 1,
            VehicleClass::Truck => self.class_votes[2] += 1,
            VehicleClass::Unknown => {}
        }
    }

    pub fn is_alive(&self) -> bool {
        self.state != TrackState::Removed
    }
}

/// Per-frame output row for a confirmed track.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub frame_index: usize,
    pub id: TrackId,
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub class_id: VehicleClass,
}

impl ResultRow {
    pub fn to_entry(&self) -> GroundTruthEntry {
        GroundTruthEntry {
            frame_index: self.frame_index,
            track_id: self.id,
            bbox: self.bbox,
            class_id: self.class_id,
            confidence: self.confidence,
            visibility: 1.0,
        }
    }
}

/// Outcome of one tracker step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    /// (track index before the step, detection index) pairs.
    pub matches: Vec<(usize, usize)>,
    pub rows: Vec<ResultRow>,
}

pub struct Tracker {
    cfg: TrackerConfig,
    kf: KalmanFilter,
    tracks: Vec<TrackRecord>,
    next_id: u64,
    last_frame: Option<usize>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        Self { cfg, kf: KalmanFilter::default(), tracks: Vec::new(), next_id: 1, last_frame: None }
    }

    pub fn tracks(&self) -> &[TrackRecord] {
        &self.tracks
    }

    /// Processes the detections of the next frame. Frames must arrive in
    /// strictly increasing order.
    pub fn step(
        &mut self,
        frame_index: usize,
        detections: &[Detection],
    ) -> Result<StepOutput, TrackError> {
        if let Some(last) = self.last_frame {
            if frame_index <= last {
                return Err(TrackError::FrameOrder { last, got: frame_index });
            }
        }
        let gap = self.last_frame.map_or(1, |last| (frame_index - last) as u32);
        self.last_frame = Some(frame_index);

        // motion prediction for every live track
        for track in &mut self.tracks {
            if let Some(state) = &track.kalman {
                track.kalman = Some(self.kf.predict(state, self.cfg.dt * gap));
            }
        }

        let (matches, spawnable) = self.associate(detections);

        let mut matched_tracks = vec![false; self.tracks.len()];
        let mut rows = Vec::new();
        for &(ti, dj) in &matches {
            matched_tracks[ti] = true;
            let det = &detections[dj];
            let track = &mut self.tracks[ti];
            track.hits += 1;
            track.misses = 0;
            track.last_box = det.bbox;
            track.last_frame = frame_index;
            track.last_confidence = det.confidence;
            track.vote(det.class_id);
            if let Some(state) = &track.kalman {
                track.kalman = Some(self.kf.update(state, &det.bbox));
            }
            if let Some(e) = &det.embedding {
                track.memory = Some(match &track.memory {
                    Some(m) => update_memory(m, e, self.cfg.ema_rate),
                    None => e.clone(),
                });
            }
            track.state = match track.state {
                TrackState::Tentative if track.hits >= self.cfg.n_init => TrackState::Active,
                TrackState::Tentative => TrackState::Tentative,
                // reactivation: a Lost track resumes its original identity
                TrackState::Lost | TrackState::Active => TrackState::Active,
                TrackState::Removed => unreachable!("removed tracks are not matched"),
            };
            if track.state == TrackState::Active {
                rows.push(ResultRow {
                    frame_index,
                    id: track.id,
                    bbox: det.bbox,
                    confidence: det.confidence,
                    class_id: track.class_id(),
                });
            }
        }

        for (ti, track) in self.tracks.iter_mut().enumerate() {
            if matched_tracks[ti] {
                continue;
            }
            track.misses += 1;
            track.state = match track.state {
                TrackState::Tentative => TrackState::Removed,
                TrackState::Active => TrackState::Lost,
                TrackState::Lost if track.misses > self.cfg.max_age => TrackState::Removed,
                other => other,
            };
        }

        for dj in spawnable {
            let det = &detections[dj];
            self.spawn(frame_index, det, &mut rows);
        }

        self.tracks.retain(|t| t.is_alive());
        Ok(StepOutput { matches, rows })
    }

    fn spawn(&mut self, frame_index: usize, det: &Detection, rows: &mut Vec<ResultRow>) {
        let state = if self.cfg.n_init <= 1 { TrackState::Active } else { TrackState::Tentative };
        let mut track = TrackRecord {
            id: TrackId(self.next_id),
            state,
            hits: 1,
            misses: 0,
            kalman: Some(self.kf.initiate(&det.bbox)),
            memory: det.embedding.clone(),
            last_box: det.bbox,
            last_frame: frame_index,
            last_confidence: det.confidence,
            class_votes: [0; 3],
        };
        track.vote(det.class_id);
        self.next_id += 1;
        if track.state == TrackState::Active {
            rows.push(ResultRow {
                frame_index,
                id: track.id,
                bbox: det.bbox,
                confidence: det.confidence,
                class_id: track.class_id(),
            });
        }
        self.tracks.push(track);
    }

    /// Variant-specific association. Returns matches (track idx, det idx)
    /// and the detections allowed to spawn new tracks.
    fn associate(&self, detections: &[Detection]) -> (Vec<(usize, usize)>, Vec<usize>) {
        match self.cfg.variant {
            Variant::Sort => self.associate_sort(detections),
            Variant::Byte => self.associate_byte(detections),
            Variant::Embed => self.associate_embed(detections),
        }
    }

    fn predicted_boxes(&self, track_idx: &[usize]) -> Vec<BoundingBox> {
        track_idx
            .iter()
            .map(|&i| {
                let t = &self.tracks[i];
                t.kalman.as_ref().map_or(t.last_box, |s| s.bbox())
            })
            .collect()
    }

    fn associate_sort(&self, detections: &[Detection]) -> (Vec<(usize, usize)>, Vec<usize>) {
        let eligible: Vec<usize> = (0..detections.len())
            .filter(|&j| detections[j].confidence >= self.cfg.min_confidence)
            .collect();
        let track_idx: Vec<usize> = (0..self.tracks.len()).collect();
        let pred = self.predicted_boxes(&track_idx);
        let boxes: Vec<BoundingBox> = eligible.iter().map(|&j| detections[j].bbox).collect();
        let sim = iou_similarity(&pred, &boxes, self.cfg.min_iou);
        let assignment = hungarian_assign(&sim, self.cfg.min_iou);
        let matches = assignment.matches.iter().map(|&(ti, ej)| (ti, eligible[ej])).collect();
        let spawnable = assignment.unmatched_detections.iter().map(|&ej| eligible[ej]).collect();
        (matches, spawnable)
    }

    fn associate_byte(&self, detections: &[Detection]) -> (Vec<(usize, usize)>, Vec<usize>) {
        let mut high = Vec::new();
        let mut low = Vec::new();
        for (j, d) in detections.iter().enumerate() {
            if d.confidence >= self.cfg.min_confidence {
                high.push(j);
            } else if d.confidence >= self.cfg.byte_low_confidence {
                low.push(j);
            }
        }
        let similarity = |track_subset: &[usize], det_subset: &[usize]| -> SimilarityMatrix {
            let pred = self.predicted_boxes(track_subset);
            let boxes: Vec<BoundingBox> = det_subset.iter().map(|&j| detections[j].bbox).collect();
            iou_similarity(&pred, &boxes, self.cfg.min_iou)
        };
        let cascade =
            cascade_match_byte(self.tracks.len(), &high, &low, similarity, self.cfg.min_iou);
        // low-confidence leftovers never start tracks
        (cascade.matches, cascade.unmatched_high)
    }

    fn associate_embed(&self, detections: &[Detection]) -> (Vec<(usize, usize)>, Vec<usize>) {
        // detections without embeddings are invisible to this variant
        let eligible: Vec<usize> = (0..detections.len())
            .filter(|&j| {
                detections[j].confidence >= self.cfg.min_confidence
                    && detections[j].embedding.is_some()
            })
            .collect();
        let with_memory: Vec<usize> =
            (0..self.tracks.len()).filter(|&i| self.tracks[i].memory.is_some()).collect();

        let memories: Vec<Embedding> =
            with_memory.iter().map(|&i| self.tracks[i].memory.clone().expect("filtered")).collect();
        let embeddings: Vec<Embedding> = eligible
            .iter()
            .map(|&j| detections[j].embedding.clone().expect("filtered"))
            .collect();

        let mut sim = bisoftmax_similarity(&memories, &embeddings, self.cfg.temperature)
            .expect("embedding dimensions are uniform within a sequence");
        for (i, m) in memories.iter().enumerate() {
            for (j, e) in embeddings.iter().enumerate() {
                let cos = cosine_similarity(m, e).expect("uniform dimensions");
                if cos < self.cfg.embed_min_cosine {
                    sim.forbid(i, j);
                }
            }
        }
        let assignment = hungarian_assign(&sim, self.cfg.min_embed_score);
        let matches =
            assignment.matches.iter().map(|&(mi, ej)| (with_memory[mi], eligible[ej])).collect();
        let spawnable = assignment.unmatched_detections.iter().map(|&ej| eligible[ej]).collect();
        (matches, spawnable)
    }
}

/// Folds the tracker over a sequence. Deterministic for fixed inputs and
/// config.
pub fn run_sequence(seq: &Sequence, cfg: &TrackerConfig) -> Result<Vec<ResultRow>, TrackError> {
    let mut tracker = Tracker::new(cfg.clone());
    let mut rows = Vec::new();
    for frame in &seq.frames {
        rows.extend(tracker.step(frame.index, &frame.detections)?.rows);
    }
    Ok(rows)
}

/// Result rows in the interchange row form used by the writers.
pub fn rows_to_entries(rows: &[ResultRow]) -> Vec<GroundTruthEntry> {
    rows.iter().map(ResultRow::to_entry).collect()
}
