//! Similarity matrices, assignment solvers, and gating shared by all
//! trackers and by the evaluation engine.

use crate::types::{dot, iou, BoundingBox, Embedding, VectorError};

/// Track-by-detection similarity matrix with a validity mask. Masked entries
/// are never selected by the solvers.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl SimilarityMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, values: vec![0.0; rows * cols], mask: vec![true; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(value.is_finite());
        self.values[i * self.cols + j] = value;
    }

    pub fn is_allowed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.cols + j]
    }

    pub fn forbid(&mut self, i: usize, j: usize) {
        self.mask[i * self.cols + j] = false;
    }
}

/// One-to-one matching outcome. `matches` carries (track, detection) index
/// pairs; the unmatched lists complete the partition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

impl Assignment {
    pub fn total_score(&self, sim: &SimilarityMatrix) -> f64 {
        self.matches.iter().map(|&(i, j)| sim.get(i, j)).sum()
    }
}

/// IoU of predicted track boxes against detection boxes; entries below
/// `gate_min_iou` are masked.
pub fn iou_similarity(
    track_boxes: &[BoundingBox],
    det_boxes: &[BoundingBox],
    gate_min_iou: f64,
) -> SimilarityMatrix {
    let mut sim = SimilarityMatrix::new(track_boxes.len(), det_boxes.len());
    for (i, t) in track_boxes.iter().enumerate() {
        for (j, d) in det_boxes.iter().enumerate() {
            let v = iou(t, d);
            sim.set(i, j, v);
            if v < gate_min_iou {
                sim.forbid(i, j);
            }
        }
    }
    sim
}

/// Bi-directional softmax score over embedding dot products.
///
/// With logits `L(i,j) = (tᵢ·dⱼ)/τ`, the entry is the average of the
/// detection-direction softmax (over tracks, per column) and the
/// track-direction softmax (over detections, per row). A single candidate
/// pair therefore scores 1 regardless of similarity.
pub fn bisoftmax_similarity(
    track_embeddings: &[Embedding],
    det_embeddings: &[Embedding],
    temperature: f64,
) -> Result<SimilarityMatrix, VectorError> {
    assert!(temperature > 0.0);
    let (nt, nd) = (track_embeddings.len(), det_embeddings.len());
    let mut logits = vec![0.0; nt * nd];
    for (i, t) in track_embeddings.iter().enumerate() {
        for (j, d) in det_embeddings.iter().enumerate() {
            logits[i * nd + j] = dot(t.values(), d.values())? / temperature;
        }
    }

    let mut sim = SimilarityMatrix::new(nt, nd);
    for i in 0..nt {
        for j in 0..nd {
            let l = logits[i * nd + j];
            // softmax over tracks for column j, stabilized by the column max
            let cmax =
                (0..nt).map(|k| logits[k * nd + j]).fold(f64::NEG_INFINITY, f64::max);
            let csum: f64 = (0..nt).map(|k| (logits[k * nd + j] - cmax).exp()).sum();
            let col_term = (l - cmax).exp() / csum;
            // softmax over detections for row i
            let rmax =
                (0..nd).map(|k| logits[i * nd + k]).fold(f64::NEG_INFINITY, f64::max);
            let rsum: f64 = (0..nd).map(|k| (logits[i * nd + k] - rmax).exp()).sum();
            let row_term = (l - rmax).exp() / rsum;
            sim.set(i, j, 0.5 * col_term + 0.5 * row_term);
        }
    }
    Ok(sim)
}

/// Globally optimal one-to-one assignment maximizing total similarity over
/// unmasked entries with value ≥ `min_score`.
///
/// Rectangular matrices are padded to square internally; pairs that are
/// masked or below threshold contribute weight zero and are dropped from the
/// result, so leaving a row/column unmatched is always available to the
/// optimizer.
pub fn hungarian_assign(sim: &SimilarityMatrix, min_score: f64) -> Assignment {
    let (rows, cols) = (sim.rows(), sim.cols());
    let n = rows.max(cols);
    if n == 0 {
        return Assignment::default();
    }
    let allowed = |i: usize, j: usize| {
        i < rows && j < cols && sim.is_allowed(i, j) && sim.get(i, j) >= min_score
    };
    // minimize negated weight on the padded square matrix
    let cost = |i: usize, j: usize| if allowed(i, j) { -sim.get(i, j) } else { 0.0 };

    // Row-potential shortest-augmenting-path assignment, O(n^3).
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // column -> row (1-based, 0 = free)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut matches = Vec::new();
    for (j, &i) in matched_row.iter().enumerate().skip(1) {
        if i != 0 && allowed(i - 1, j - 1) {
            matches.push((i - 1, j - 1));
        }
    }
    matches.sort_unstable();
    complete_assignment(matches, rows, cols)
}

/// Greedy matching: repeatedly take the global maximum unmasked entry that
/// clears `min_score`, ties broken by (lower track index, lower detection
/// index). Sub-optimal by construction; kept as an ablation baseline.
pub fn greedy_assign(sim: &SimilarityMatrix, min_score: f64) -> Assignment {
    let (rows, cols) = (sim.rows(), sim.cols());
    let mut row_free = vec![true; rows];
    let mut col_free = vec![true; cols];
    let mut matches = Vec::new();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, _) in row_free.iter().enumerate().filter(|(_, &free)| free) {
            for (j, _) in col_free.iter().enumerate().filter(|(_, &free)| free) {
                if !sim.is_allowed(i, j) {
                    continue;
                }
                let v = sim.get(i, j);
                if v >= min_score && best.is_none_or(|(_, _, b)| v > b) {
                    best = Some((i, j, v));
                }
            }
        }
        match best {
            Some((i, j, _)) => {
                row_free[i] = false;
                col_free[j] = false;
                matches.push((i, j));
            }
            None => break,
        }
    }
    matches.sort_unstable();
    complete_assignment(matches, rows, cols)
}

fn complete_assignment(matches: Vec<(usize, usize)>, rows: usize, cols: usize) -> Assignment {
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    for &(i, j) in &matches {
        row_used[i] = true;
        col_used[j] = true;
    }
    Assignment {
        matches,
        unmatched_tracks: (0..rows).filter(|&i| !row_used[i]).collect(),
        unmatched_detections: (0..cols).filter(|&j| !col_used[j]).collect(),
    }
}

/// Outcome of the two-stage confidence cascade. Detection indices refer to
/// the caller's original detection list.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResult {
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    /// High-confidence detections left unmatched; these may start new tracks.
    pub unmatched_high: Vec<usize>,
    /// Low-confidence detections left unmatched; these never start tracks.
    pub unmatched_low: Vec<usize>,
}

/// Two-stage cascade: stage 1 matches all tracks against high-confidence
/// detections, stage 2 offers the low-confidence leftovers only to tracks
/// that stage 1 left unmatched.
///
/// `similarity(track_indices, det_indices)` builds the score matrix for a
/// subset (rows/cols in the given order); `high`/`low` are detection indices
/// already partitioned by the caller's confidence thresholds.
pub fn cascade_match_byte<F>(
    num_tracks: usize,
    high: &[usize],
    low: &[usize],
    mut similarity: F,
    min_score: f64,
) -> CascadeResult
where
    F: FnMut(&[usize], &[usize]) -> SimilarityMatrix,
{
    let all_tracks: Vec<usize> = (0..num_tracks).collect();
    let stage1 = hungarian_assign(&similarity(&all_tracks, high), min_score);

    let mut matches: Vec<(usize, usize)> =
        stage1.matches.iter().map(|&(ti, dj)| (ti, high[dj])).collect();
    let unmatched_high: Vec<usize> =
        stage1.unmatched_detections.iter().map(|&dj| high[dj]).collect();

    let remaining: Vec<usize> = stage1.unmatched_tracks;
    let stage2 = hungarian_assign(&similarity(&remaining, low), min_score);
    matches.extend(stage2.matches.iter().map(|&(ri, dj)| (remaining[ri], low[dj])));
    let unmatched_tracks: Vec<usize> =
        stage2.unmatched_tracks.iter().map(|&ri| remaining[ri]).collect();
    let unmatched_low: Vec<usize> =
        stage2.unmatched_detections.iter().map(|&dj| low[dj]).collect();

    matches.sort_unstable();
    CascadeResult { matches, unmatched_tracks, unmatched_high, unmatched_low }
}
