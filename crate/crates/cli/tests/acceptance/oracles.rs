//! Brute-force reference evaluators, independent of the library's matching
//! and counting code paths. Everything here enumerates instead of
//! optimizing: permutations for assignments, all partial matchings for the
//! per-frame metric matchings.

use std::collections::BTreeMap;

use lowtrack_core::types::{iou, BoundingBox, GroundTruthEntry};

/// Max total weight over all one-to-one partial matchings of `rows x cols`,
/// where forbidden pairs carry weight zero and may simply be skipped.
/// Enumerates column permutations of the padded square matrix.
pub fn exhaustive_assignment_total(
    rows: usize,
    cols: usize,
    weight: &dyn Fn(usize, usize) -> Option<f64>,
) -> f64 {
    let n = rows.max(cols);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::NEG_INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let mut total = 0.0;
        for (i, &j) in p.iter().enumerate().take(rows) {
            if j < cols {
                if let Some(w) = weight(i, j) {
                    total += w;
                }
            }
        }
        if total > best {
            best = total;
        }
    });
    best
}

fn permute(values: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == values.len() {
        visit(values);
        return;
    }
    for i in k..values.len() {
        values.swap(k, i);
        permute(values, k + 1, visit);
        values.swap(k, i);
    }
}

/// All one-to-one partial matchings between `0..n_left` and `0..n_right`
/// over the allowed pairs, reported to `visit` as (left, right) pair lists.
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
pub fn for_each_partial_matching(
    n_left: usize,
    n_right: usize,
    allowed: &dyn Fn(usize, usize) -> bool,
    visit: &mut dyn FnMut(&[(usize, usize)]),
) {
    let mut used_right = vec![false; n_right];
    let mut current = Vec::new();
    fn recurse(
        i: usize,
        n_left: usize,
        n_right: usize,
        allowed: &dyn Fn(usize, usize) -> bool,
        used_right: &mut Vec<bool>,
        current: &mut Vec<(usize, usize)>,
        visit: &mut dyn FnMut(&[(usize, usize)]),
    ) {
        if i == n_left {
            visit(current);
            return;
        }
        // leave left i unmatched
        recurse(i + 1, n_left, n_right, allowed, used_right, current, visit);
        for j in 0..n_right {
            if !used_right[j] && allowed(i, j) {
                used_right[j] = true;
                current.push((i, j));
                recurse(i + 1, n_left, n_right, allowed, used_right, current, visit);
                current.pop();
                used_right[j] = false;
            }
        }
    }
    recurse(0, n_left, n_right, allowed, &mut used_right, &mut current, visit);
}

/// Frame-indexed view of entries: frame -> (id, box), ordered by id.
pub fn frames_of(entries: &[GroundTruthEntry]) -> BTreeMap<usize, Vec<(u64, BoundingBox)>> {
    let mut map: BTreeMap<usize, Vec<(u64, BoundingBox)>> = BTreeMap::new();
    for e in entries {
        map.entry(e.frame_index).or_default().push((e.track_id.0, e.bbox));
    }
    for v in map.values_mut() {
        v.sort_by_key(|(id, _)| *id);
    }
    map
}

pub struct OracleClear {
    pub fp: u64,
    pub fn_: u64,
    pub idsw: u64,
    pub num_gt: u64,
    pub mota: f64,
}

/// CLEAR by enumeration: persistence first, then the partial matching of
/// the rest maximizing total IoU over pairs gated at `iou_min`.
pub fn oracle_clear(
    gt: &[GroundTruthEntry],
    pred: &[GroundTruthEntry],
    iou_min: f64,
) -> OracleClear {
    let gt_frames = frames_of(gt);
    let pred_frames = frames_of(pred);
    let all_frames: Vec<usize> =
        gt_frames.keys().chain(pred_frames.keys()).copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();

    let empty = Vec::new();
    let mut carryover: BTreeMap<u64, u64> = BTreeMap::new();
    let mut last_match: BTreeMap<u64, u64> = BTreeMap::new();
    let (mut fp, mut fn_, mut idsw) = (0u64, 0u64, 0u64);
    for f in all_frames {
        let g = gt_frames.get(&f).unwrap_or(&empty);
        let p = pred_frames.get(&f).unwrap_or(&empty);

        let mut kept: Vec<(u64, u64)> = Vec::new();
        let mut free_g: Vec<(u64, BoundingBox)> = Vec::new();
        for (gid, gbox) in g {
            let persisted = carryover.get(gid).and_then(|pid| {
                p.iter().find(|(q, _)| q == pid).map(|(q, pbox)| (*q, *pbox))
            });
            match persisted {
                Some((pid, pbox)) if iou(gbox, &pbox) >= iou_min => kept.push((*gid, pid)),
                _ => free_g.push((*gid, *gbox)),
            }
        }
        let free_p: Vec<(u64, BoundingBox)> = p
            .iter()
            .filter(|(pid, _)| !kept.iter().any(|(_, q)| q == pid))
            .copied()
            .collect();

        let allowed =
            |i: usize, j: usize| iou(&free_g[i].1, &free_p[j].1) >= iou_min;
        let mut best_total = f64::NEG_INFINITY;
        let mut best: Vec<(usize, usize)> = Vec::new();
        for_each_partial_matching(free_g.len(), free_p.len(), &allowed, &mut |pairs| {
            let total: f64 =
                pairs.iter().map(|&(i, j)| iou(&free_g[i].1, &free_p[j].1)).sum();
            if total > best_total {
                best_total = total;
                best = pairs.to_vec();
            }
        });

        let mut matches = kept;
        matches.extend(best.iter().map(|&(i, j)| (free_g[i].0, free_p[j].0)));
        fn_ += (g.len() - matches.len()) as u64;
        fp += (p.len() - matches.len()) as u64;
        for &(gid, pid) in &matches {
            if let Some(&prev) = last_match.get(&gid) {
                if prev != pid {
                    idsw += 1;
                }
            }
            last_match.insert(gid, pid);
        }
        carryover = matches.into_iter().collect();
    }
    let num_gt = gt.len() as u64;
    let mota = 1.0 - (fp + fn_ + idsw) as f64 / num_gt as f64;
    OracleClear { fp, fn_, idsw, num_gt, mota }
}

pub struct OracleId {
    pub idf1: f64,
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
}

/// IDF1 by enumerating injective trajectory maps.
pub fn oracle_idf1(gt: &[GroundTruthEntry], pred: &[GroundTruthEntry], iou_min: f64) -> OracleId {
    let gt_frames = frames_of(gt);
    let pred_frames = frames_of(pred);
    let gt_ids: Vec<u64> = {
        let mut ids: Vec<u64> = gt.iter().map(|e| e.track_id.0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    };
    let pred_ids: Vec<u64> = {
        let mut ids: Vec<u64> = pred.iter().map(|e| e.track_id.0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    };
    // overlap counts by direct frame scanning
    let mut overlap = vec![0u64; gt_ids.len() * pred_ids.len()];
    for (f, g_list) in &gt_frames {
        if let Some(p_list) = pred_frames.get(f) {
            for (gid, gbox) in g_list {
                for (pid, pbox) in p_list {
                    if iou(gbox, pbox) >= iou_min {
                        let gi = gt_ids.iter().position(|x| x == gid).unwrap();
                        let pj = pred_ids.iter().position(|x| x == pid).unwrap();
                        overlap[gi * pred_ids.len() + pj] += 1;
                    }
                }
            }
        }
    }
    let mut best = 0u64;
    for_each_partial_matching(gt_ids.len(), pred_ids.len(), &|_, _| true, &mut |pairs| {
        let total: u64 = pairs.iter().map(|&(i, j)| overlap[i * pred_ids.len() + j]).sum();
        if total > best {
            best = total;
        }
    });
    let idtp = best;
    let idfn = gt.len() as u64 - idtp;
    let idfp = pred.len() as u64 - idtp;
    let denom = 2 * idtp + idfp + idfn;
    let idf1 = if denom == 0 { 0.0 } else { 2.0 * idtp as f64 / denom as f64 };
    OracleId { idf1, idtp, idfp, idfn }
}

pub struct OracleHotaAlpha {
    pub alpha: f64,
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
}

/// HOTA by enumeration: per alpha, per frame, the partial matching over
/// gated pairs maximizing `alignment * 1024 + IoU` (same pinned rule as the
/// engine, optimized here by exhaustive search).
pub fn oracle_hota(gt: &[GroundTruthEntry], pred: &[GroundTruthEntry]) -> Vec<OracleHotaAlpha> {
    let gt_frames = frames_of(gt);
    let pred_frames = frames_of(pred);
    let all_frames: Vec<usize> =
        gt_frames.keys().chain(pred_frames.keys()).copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let mut gt_ids: Vec<u64> = gt.iter().map(|e| e.track_id.0).collect();
    gt_ids.sort_unstable();
    gt_ids.dedup();
    let mut pred_ids: Vec<u64> = pred.iter().map(|e| e.track_id.0).collect();
    pred_ids.sort_unstable();
    pred_ids.dedup();
    let gt_count = |gid: u64| gt.iter().filter(|e| e.track_id.0 == gid).count() as u64;
    let pred_count = |pid: u64| pred.iter().filter(|e| e.track_id.0 == pid).count() as u64;
    let empty = Vec::new();

    (1..=19)
        .map(|k| {
            let alpha = k as f64 * 0.05;
            // potential matches per (gt id, pred id)
            let mut pmc: BTreeMap<(u64, u64), u64> = BTreeMap::new();
            for f in &all_frames {
                let g = gt_frames.get(f).unwrap_or(&empty);
                let p = pred_frames.get(f).unwrap_or(&empty);
                for (gid, gbox) in g {
                    for (pid, pbox) in p {
                        if iou(gbox, pbox) >= alpha {
                            *pmc.entry((*gid, *pid)).or_insert(0) += 1;
                        }
                    }
                }
            }
            let alignment = |gid: u64, pid: u64| -> f64 {
                let m = pmc.get(&(gid, pid)).copied().unwrap_or(0) as f64;
                if m == 0.0 {
                    return 0.0;
                }
                m / ((gt_count(gid) + pred_count(pid)) as f64 - m)
            };

            let (mut tp, mut fn_, mut fp) = (0u64, 0u64, 0u64);
            let mut matched: BTreeMap<(u64, u64), u64> = BTreeMap::new();
            for f in &all_frames {
                let g = gt_frames.get(f).unwrap_or(&empty);
                let p = pred_frames.get(f).unwrap_or(&empty);
                let allowed = |i: usize, j: usize| iou(&g[i].1, &p[j].1) >= alpha;
                let weight = |i: usize, j: usize| {
                    alignment(g[i].0, p[j].0) * 1024.0 + iou(&g[i].1, &p[j].1)
                };
                let mut best_total = f64::NEG_INFINITY;
                let mut best: Vec<(usize, usize)> = Vec::new();
                for_each_partial_matching(g.len(), p.len(), &allowed, &mut |pairs| {
                    let total: f64 = pairs.iter().map(|&(i, j)| weight(i, j)).sum();
                    if total > best_total {
                        best_total = total;
                        best = pairs.to_vec();
                    }
                });
                tp += best.len() as u64;
                fn_ += (g.len() - best.len()) as u64;
                fp += (p.len() - best.len()) as u64;
                for &(i, j) in &best {
                    *matched.entry((g[i].0, p[j].0)).or_insert(0) += 1;
                }
            }

            let det_denom = tp + fn_ + fp;
            let deta = if det_denom == 0 { 0.0 } else { tp as f64 / det_denom as f64 };
            let assa = if tp == 0 {
                0.0
            } else {
                let mut acc = 0.0;
                for (&(gid, pid), &m) in &matched {
                    let union = gt_count(gid) + pred_count(pid) - m;
                    acc += m as f64 * (m as f64 / union as f64);
                }
                acc / tp as f64
            };
            OracleHotaAlpha { alpha, hota: (deta * assa).sqrt(), deta, assa }
        })
        .collect()
}
