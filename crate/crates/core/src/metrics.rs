//! Evaluation engine: CLEAR MOT (MOTA, IDSW), IDF1, and HOTA with its
//! DetA/AssA decomposition — the columns of the benchmark tables.
//!
//! Matching conventions, pinned for oracle equivalence:
//! * CLEAR keeps previous-frame pairs that still overlap (match
//!   persistence) before running Hungarian on the rest; IDSW counts a
//!   ground-truth object whose matched identity differs from its last known
//!   one. TP threshold is IoU >= 0.5 (configurable).
//! * IDF1 uses global trajectory matching maximizing identity-consistent
//!   frame matches (per-frame IoU >= 0.5).
//! * HOTA sweeps alpha over {0.05, ..., 0.95}. Per alpha, frames are
//!   matched by Hungarian over pairs gated at IoU >= alpha, maximizing the
//!   pair's global alignment score with IoU as tie-break (weight =
//!   alignment*1024 + IoU; 1024 is an exact power of two, so the combined
//!   weight is deterministic).
//!
//! Ground-truth rows with a zero consider flag (`conf` column 0) are
//! ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::assoc::{hungarian_assign, SimilarityMatrix};
use crate::io::IoFormatError;
use crate::types::{iou, BoundingBox, GroundTruthEntry, VehicleClass};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error(transparent)]
    Format(#[from] IoFormatError),
}

/// The 19-point alpha grid used by HOTA.
pub fn alpha_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// Per-alpha HOTA breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct HotaAlpha {
    pub alpha: f64,
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
}

/// Full evaluation report. Rates live in [0, 1]; the text table prints them
/// x100 in the usual benchmark convention.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub mota: f64,
    pub idf1: f64,
    pub idsw: u64,
    pub fp: u64,
    pub fn_: u64,
    pub num_gt: u64,
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
    pub alphas: Vec<HotaAlpha>,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// IoU threshold for CLEAR/IDF1 true positives.
    pub iou_min: f64,
    /// Restrict evaluation to one class (both sides); None = class-agnostic.
    pub class_filter: Option<VehicleClass>,
    /// Drop ground-truth tracks shorter than this many frames (after any
    /// decimation). 1 keeps everything.
    pub min_gt_track_len: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { iou_min: 0.5, class_filter: None, min_gt_track_len: 1 }
    }
}

/// Per-frame boxes of one side, keyed and ordered for determinism.
struct TrackSet {
    /// frame -> (id, box) sorted by id
    frames: BTreeMap<usize, Vec<(u64, BoundingBox)>>,
    /// id -> number of frames present
    id_counts: BTreeMap<u64, u64>,
    total_boxes: u64,
}

impl TrackSet {
    fn build(entries: &[GroundTruthEntry]) -> Self {
        let mut frames: BTreeMap<usize, Vec<(u64, BoundingBox)>> = BTreeMap::new();
        let mut id_counts = BTreeMap::new();
        let mut total_boxes = 0;
        for e in entries {
            frames.entry(e.frame_index).or_default().push((e.track_id.0, e.bbox));
            *id_counts.entry(e.track_id.0).or_insert(0) += 1;
            total_boxes += 1;
        }
        for boxes in frames.values_mut() {
            boxes.sort_by_key(|(id, _)| *id);
        }
        Self { frames, id_counts, total_boxes }
    }

    fn present(&self, frame: usize) -> &[(u64, BoundingBox)] {
        self.frames.get(&frame).map_or(&[], Vec::as_slice)
    }
}

fn filter_entries(
    entries: &[GroundTruthEntry],
    opts: &EvalOptions,
    is_gt: bool,
) -> Vec<GroundTruthEntry> {
    let mut kept: Vec<GroundTruthEntry> = entries
        .iter()
        .filter(|e| !(is_gt && e.confidence == 0.0))
        .filter(|e| opts.class_filter.is_none_or(|c| e.class_id == c))
        .cloned()
        .collect();
    if is_gt && opts.min_gt_track_len > 1 {
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for e in &kept {
            *counts.entry(e.track_id.0).or_insert(0) += 1;
        }
        kept.retain(|e| counts[&e.track_id.0] >= opts.min_gt_track_len);
    }
    kept
}

/// CLEAR counts for MOTA.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClearCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub idsw: u64,
    pub num_gt: u64,
}

/// One-frame CLEAR matching: carryover pairs that still overlap are kept
/// first, the rest is matched by Hungarian on IoU at the same gate.
pub fn clear_match_frame(
    gt: &[(u64, BoundingBox)],
    pred: &[(u64, BoundingBox)],
    carryover: &BTreeMap<u64, u64>,
    iou_min: f64,
) -> Vec<(u64, u64)> {
    let mut matches = Vec::new();
    let mut used_g = BTreeSet::new();
    let mut used_p = BTreeSet::new();
    for (gid, gbox) in gt {
        if let Some(pid) = carryover.get(gid) {
            if let Some((_, pbox)) = pred.iter().find(|(p, _)| p == pid) {
                if iou(gbox, pbox) >= iou_min {
                    matches.push((*gid, *pid));
                    used_g.insert(*gid);
                    used_p.insert(*pid);
                }
            }
        }
    }
    let rest_g: Vec<&(u64, BoundingBox)> =
        gt.iter().filter(|(g, _)| !used_g.contains(g)).collect();
    let rest_p: Vec<&(u64, BoundingBox)> =
        pred.iter().filter(|(p, _)| !used_p.contains(p)).collect();
    let mut sim = SimilarityMatrix::new(rest_g.len(), rest_p.len());
    for (i, (_, gbox)) in rest_g.iter().enumerate() {
        for (j, (_, pbox)) in rest_p.iter().enumerate() {
            let v = iou(gbox, pbox);
            sim.set(i, j, v);
            if v < iou_min {
                sim.forbid(i, j);
            }
        }
    }
    for (i, j) in hungarian_assign(&sim, iou_min).matches {
        matches.push((rest_g[i].0, rest_p[j].0));
    }
    matches.sort_unstable();
    matches
}

fn clear_metrics(gt: &TrackSet, pred: &TrackSet, iou_min: f64) -> ClearCounts {
    let frames: BTreeSet<usize> = gt.frames.keys().chain(pred.frames.keys()).copied().collect();
    let mut carryover: BTreeMap<u64, u64> = BTreeMap::new();
    let mut last_match: BTreeMap<u64, u64> = BTreeMap::new();
    let mut counts = ClearCounts { tp: 0, fp: 0, fn_: 0, idsw: 0, num_gt: gt.total_boxes };
    for &f in &frames {
        let g = gt.present(f);
        let p = pred.present(f);
        let matches = clear_match_frame(g, p, &carryover, iou_min);
        counts.tp += matches.len() as u64;
        counts.fn_ += (g.len() - matches.len()) as u64;
        counts.fp += (p.len() - matches.len()) as u64;
        for &(gid, pid) in &matches {
            if let Some(&prev) = last_match.get(&gid) {
                if prev != pid {
                    counts.idsw += 1;
                }
            }
            last_match.insert(gid, pid);
        }
        carryover = matches.into_iter().collect();
    }
    counts
}

/// MOTA = 1 - (FN + FP + IDSW) / num_gt. The numerator is summed exactly in
/// integers before the single final division; negative values are legal.
pub fn compute_mota(counts: &ClearCounts) -> Result<f64, MetricError> {
    if counts.num_gt == 0 {
        return Err(MetricError::UndefinedMetric(
            "MOTA needs at least one ground-truth box".into(),
        ));
    }
    let errors = counts.fn_ + counts.fp + counts.idsw;
    Ok(1.0 - errors as f64 / counts.num_gt as f64)
}

/// Identity metrics: global trajectory matching maximizing the number of
/// identity-consistent frame matches (IoU >= iou_min).
pub fn compute_idf1(
    gt_entries: &[GroundTruthEntry],
    pred_entries: &[GroundTruthEntry],
    iou_min: f64,
) -> (f64, u64, u64, u64) {
    let gt = TrackSet::build(gt_entries);
    let pred = TrackSet::build(pred_entries);
    id_metrics(&gt, &pred, iou_min)
}

fn id_metrics(gt: &TrackSet, pred: &TrackSet, iou_min: f64) -> (f64, u64, u64, u64) {
    let gt_ids: Vec<u64> = gt.id_counts.keys().copied().collect();
    let pred_ids: Vec<u64> = pred.id_counts.keys().copied().collect();
    let gindex: BTreeMap<u64, usize> = gt_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let pindex: BTreeMap<u64, usize> =
        pred_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut overlap = vec![0u64; gt_ids.len() * pred_ids.len()];
    let frames: BTreeSet<usize> = gt.frames.keys().chain(pred.frames.keys()).copied().collect();
    for &f in &frames {
        for (gid, gbox) in gt.present(f) {
            for (pid, pbox) in pred.present(f) {
                if iou(gbox, pbox) >= iou_min {
                    overlap[gindex[gid] * pred_ids.len() + pindex[pid]] += 1;
                }
            }
        }
    }
    let mut sim = SimilarityMatrix::new(gt_ids.len(), pred_ids.len());
    for i in 0..gt_ids.len() {
        for j in 0..pred_ids.len() {
            let v = overlap[i * pred_ids.len() + j];
            sim.set(i, j, v as f64);
            if v == 0 {
                sim.forbid(i, j);
            }
        }
    }
    let assignment = hungarian_assign(&sim, 0.5);
    let idtp: u64 =
        assignment.matches.iter().map(|&(i, j)| overlap[i * pred_ids.len() + j]).sum();
    let idfn = gt.total_boxes - idtp;
    let idfp = pred.total_boxes - idtp;
    let denom = 2 * idtp + idfp + idfn;
    let idf1 = if denom == 0 { 0.0 } else { 2.0 * idtp as f64 / denom as f64 };
    (idf1, idtp, idfp, idfn)
}

/// HOTA over the 19-alpha grid.
pub fn compute_hota(
    gt_entries: &[GroundTruthEntry],
    pred_entries: &[GroundTruthEntry],
) -> Vec<HotaAlpha> {
    let gt = TrackSet::build(gt_entries);
    let pred = TrackSet::build(pred_entries);
    hota_metrics(&gt, &pred)
}

fn hota_metrics(gt: &TrackSet, pred: &TrackSet) -> Vec<HotaAlpha> {
    let gt_ids: Vec<u64> = gt.id_counts.keys().copied().collect();
    let pred_ids: Vec<u64> = pred.id_counts.keys().copied().collect();
    let gindex: BTreeMap<u64, usize> = gt_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let pindex: BTreeMap<u64, usize> =
        pred_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let (ng, np) = (gt_ids.len(), pred_ids.len());

    // cache per-frame IoU tables once across the alpha sweep
    struct FrameIous<'a> {
        g: &'a [(u64, BoundingBox)],
        p: &'a [(u64, BoundingBox)],
        ious: Vec<f64>,
    }
    let frames: Vec<usize> = gt
        .frames
        .keys()
        .chain(pred.frames.keys())
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let tables: Vec<FrameIous> = frames
        .iter()
        .map(|&f| {
            let g = gt.present(f);
            let p = pred.present(f);
            let mut ious = vec![0.0; g.len() * p.len()];
            for (i, (_, gbox)) in g.iter().enumerate() {
                for (j, (_, pbox)) in p.iter().enumerate() {
                    ious[i * p.len() + j] = iou(gbox, pbox);
                }
            }
            FrameIous { g, p, ious }
        })
        .collect();

    alpha_grid()
        .into_iter()
        .map(|alpha| {
            // potential matches per identity pair at this gate
            let mut pmc = vec![0u64; ng * np];
            for t in &tables {
                for (i, (gid, _)) in t.g.iter().enumerate() {
                    for (j, (pid, _)) in t.p.iter().enumerate() {
                        if t.ious[i * t.p.len() + j] >= alpha {
                            pmc[gindex[gid] * np + pindex[pid]] += 1;
                        }
                    }
                }
            }

            let mut tp = 0u64;
            let mut fn_ = 0u64;
            let mut fp = 0u64;
            let mut matched = vec![0u64; ng * np];
            for t in &tables {
                let mut sim = SimilarityMatrix::new(t.g.len(), t.p.len());
                for (i, (gid, _)) in t.g.iter().enumerate() {
                    for (j, (pid, _)) in t.p.iter().enumerate() {
                        let v = t.ious[i * t.p.len() + j];
                        if v >= alpha {
                            let (g, p) = (gindex[gid], pindex[pid]);
                            let m = pmc[g * np + p] as f64;
                            let union =
                                (gt.id_counts[gid] + pred.id_counts[pid]) as f64 - m;
                            sim.set(i, j, m / union * 1024.0 + v);
                        } else {
                            sim.forbid(i, j);
                        }
                    }
                }
                let assignment = hungarian_assign(&sim, 0.0);
                tp += assignment.matches.len() as u64;
                fn_ += (t.g.len() - assignment.matches.len()) as u64;
                fp += (t.p.len() - assignment.matches.len()) as u64;
                for &(i, j) in &assignment.matches {
                    matched[gindex[&t.g[i].0] * np + pindex[&t.p[j].0]] += 1;
                }
            }

            let det_denom = tp + fn_ + fp;
            let deta = if det_denom == 0 { 0.0 } else { tp as f64 / det_denom as f64 };
            let assa = if tp == 0 {
                0.0
            } else {
                let mut acc = 0.0;
                for g in 0..ng {
                    for p in 0..np {
                        let m = matched[g * np + p];
                        if m > 0 {
                            let union =
                                gt.id_counts[&gt_ids[g]] + pred.id_counts[&pred_ids[p]] - m;
                            acc += m as f64 * (m as f64 / union as f64);
                        }
                    }
                }
                acc / tp as f64
            };
            HotaAlpha { alpha, hota: (deta * assa).sqrt(), deta, assa, tp, fn_, fp }
        })
        .collect()
}

/// Evaluates predictions against ground truth (parsed entry form).
pub fn evaluate_entries(
    gt_entries: &[GroundTruthEntry],
    pred_entries: &[GroundTruthEntry],
    opts: &EvalOptions,
) -> Result<MetricReport, MetricError> {
    let gt_kept = filter_entries(gt_entries, opts, true);
    let pred_kept = filter_entries(pred_entries, opts, false);
    let gt = TrackSet::build(&gt_kept);
    let pred = TrackSet::build(&pred_kept);

    let clear = clear_metrics(&gt, &pred, opts.iou_min);
    let mota = compute_mota(&clear)?;
    let (idf1, idtp, idfp, idfn) = id_metrics(&gt, &pred, opts.iou_min);
    let alphas = hota_metrics(&gt, &pred);
    let n = alphas.len() as f64;
    let hota = alphas.iter().map(|a| a.hota).sum::<f64>() / n;
    let deta = alphas.iter().map(|a| a.deta).sum::<f64>() / n;
    let assa = alphas.iter().map(|a| a.assa).sum::<f64>() / n;

    Ok(MetricReport {
        hota,
        deta,
        assa,
        mota,
        idf1,
        idsw: clear.idsw,
        fp: clear.fp,
        fn_: clear.fn_,
        num_gt: clear.num_gt,
        idtp,
        idfp,
        idfn,
        alphas,
    })
}

/// File-level entry point: parses both sides and evaluates.
pub fn evaluate(
    gt_path: &Path,
    results_path: &Path,
    opts: &EvalOptions,
) -> Result<MetricReport, MetricError> {
    let gt = crate::io::parse_ground_truth(gt_path)?;
    let pred = crate::io::parse_results(results_path)?;
    evaluate_entries(&gt, &pred, opts)
}

/// Pools reports across sequences: CLEAR and identity counts add up; per-
/// alpha DetA is recomputed from pooled counts and AssA is the TP-weighted
/// mean, following the convention of the public evaluation kits.
pub fn combine_reports(reports: &[MetricReport]) -> Result<MetricReport, MetricError> {
    if reports.is_empty() {
        return Err(MetricError::UndefinedMetric("no reports to combine".into()));
    }
    let n_alpha = reports[0].alphas.len();
    let mut alphas = Vec::with_capacity(n_alpha);
    for k in 0..n_alpha {
        let alpha = reports[0].alphas[k].alpha;
        let tp: u64 = reports.iter().map(|r| r.alphas[k].tp).sum();
        let fn_: u64 = reports.iter().map(|r| r.alphas[k].fn_).sum();
        let fp: u64 = reports.iter().map(|r| r.alphas[k].fp).sum();
        let det_denom = tp + fn_ + fp;
        let deta = if det_denom == 0 { 0.0 } else { tp as f64 / det_denom as f64 };
        let assa = if tp == 0 {
            0.0
        } else {
            reports.iter().map(|r| r.alphas[k].assa * r.alphas[k].tp as f64).sum::<f64>()
                / tp as f64
        };
        alphas.push(HotaAlpha { alpha, hota: (deta * assa).sqrt(), deta, assa, tp, fn_, fp });
    }
    let idsw = reports.iter().map(|r| r.idsw).sum();
    let fp = reports.iter().map(|r| r.fp).sum();
    let fn_ = reports.iter().map(|r| r.fn_).sum();
    let num_gt: u64 = reports.iter().map(|r| r.num_gt).sum();
    let idtp: u64 = reports.iter().map(|r| r.idtp).sum();
    let idfp: u64 = reports.iter().map(|r| r.idfp).sum();
    let idfn: u64 = reports.iter().map(|r| r.idfn).sum();
    let clear = ClearCounts { tp: 0, fp, fn_, idsw, num_gt };
    let mota = compute_mota(&clear)?;
    let id_denom = 2 * idtp + idfp + idfn;
    let idf1 = if id_denom == 0 { 0.0 } else { 2.0 * idtp as f64 / id_denom as f64 };
    let n = alphas.len() as f64;
    let hota = alphas.iter().map(|a| a.hota).sum::<f64>() / n;
    let deta = alphas.iter().map(|a| a.deta).sum::<f64>() / n;
    let assa = alphas.iter().map(|a| a.assa).sum::<f64>() / n;
    Ok(MetricReport {
        hota,
        deta,
        assa,
        mota,
        idf1,
        idsw,
        fp,
        fn_,
        num_gt,
        idtp,
        idfp,
        idfn,
        alphas,
    })
}

impl MetricReport {
    /// Aligned text table in the benchmark column order.
    pub fn table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:>7} {:>7} {:>7} {:>7} {:>7}", "HOTA", "MOTA", "IDF1", "AssA", "IDSW")
            .expect("string write");
        writeln!(
            out,
            "{:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>7}",
            self.hota * 100.0,
            self.mota * 100.0,
            self.idf1 * 100.0,
            self.assa * 100.0,
            self.idsw
        )
        .expect("string write");
        out
    }

    /// Machine-readable key-value form; re-parses to identical values.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        writeln!(out, "hota={}", self.hota).expect("string write");
        writeln!(out, "deta={}", self.deta).expect("string write");
        writeln!(out, "assa={}", self.assa).expect("string write");
        writeln!(out, "mota={}", self.mota).expect("string write");
        writeln!(out, "idf1={}", self.idf1).expect("string write");
        writeln!(out, "idsw={}", self.idsw).expect("string write");
        writeln!(out, "fp={}", self.fp).expect("string write");
        writeln!(out, "fn={}", self.fn_).expect("string write");
        writeln!(out, "num_gt={}", self.num_gt).expect("string write");
        writeln!(out, "idtp={}", self.idtp).expect("string write");
        writeln!(out, "idfp={}", self.idfp).expect("string write");
        writeln!(out, "idfn={}", self.idfn).expect("string write");
        for a in &self.alphas {
            let pct = (a.alpha * 100.0).round() as u32;
            writeln!(out, "alpha_{pct:02}_hota={}", a.hota).expect("string write");
            writeln!(out, "alpha_{pct:02}_deta={}", a.deta).expect("string write");
            writeln!(out, "alpha_{pct:02}_assa={}", a.assa).expect("string write");
            writeln!(out, "alpha_{pct:02}_tp={}", a.tp).expect("string write");
            writeln!(out, "alpha_{pct:02}_fn={}", a.fn_).expect("string write");
            writeln!(out, "alpha_{pct:02}_fp={}", a.fp).expect("string write");
        }
        out
    }

    pub fn parse_key_values(text: &str) -> Result<MetricReport, MetricError> {
        let mut map = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| MetricError::UndefinedMetric(format!("bad report line {line:?}")))?;
            map.insert(k.to_string(), v.to_string());
        }
        let get_f = |k: &str| -> Result<f64, MetricError> {
            map.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| MetricError::UndefinedMetric(format!("missing field {k}")))
        };
        let get_u = |k: &str| -> Result<u64, MetricError> {
            map.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| MetricError::UndefinedMetric(format!("missing field {k}")))
        };
        let mut alphas = Vec::new();
        for alpha in alpha_grid() {
            let pct = (alpha * 100.0).round() as u32;
            alphas.push(HotaAlpha {
                alpha,
                hota: get_f(&format!("alpha_{pct:02}_hota"))?,
                deta: get_f(&format!("alpha_{pct:02}_deta"))?,
                assa: get_f(&format!("alpha_{pct:02}_assa"))?,
                tp: get_u(&format!("alpha_{pct:02}_tp"))?,
                fn_: get_u(&format!("alpha_{pct:02}_fn"))?,
                fp: get_u(&format!("alpha_{pct:02}_fp"))?,
            });
        }
        Ok(MetricReport {
            hota: get_f("hota")?,
            deta: get_f("deta")?,
            assa: get_f("assa")?,
            mota: get_f("mota")?,
            idf1: get_f("idf1")?,
            idsw: get_u("idsw")?,
            fp: get_u("fp")?,
            fn_: get_u("fn")?,
            num_gt: get_u("num_gt")?,
            idtp: get_u("idtp")?,
            idfp: get_u("idfp")?,
            idfn: get_u("idfn")?,
            alphas,
        })
    }
}
