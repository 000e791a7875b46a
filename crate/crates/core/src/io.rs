//! Line-oriented interchange formats and frame decimation.
//!
//! Row layout (ground truth, detections, results):
//! `frame,id,bb_left,bb_top,bb_width,bb_height,conf,class,visibility`
//! with 1-based frame numbers, `id = -1` for detections, and class codes
//! 1/2/3 (or -1 for unknown). In memory frames are 0-based; the shift and
//! the (left,top,width,height) ↔ corner conversion happen here.
//!
//! Embedding sidecar: one header line `dim=d`, then
//! `frame,det_row_in_frame,v1,…,vd` with full-precision values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::types::{l2_normalize, BoundingBox, Detection, GroundTruthEntry, TrackId, VehicleClass};

#[derive(Debug, Error)]
pub enum IoFormatError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("duplicate entry for frame {frame}, id {id}")]
    DuplicateEntry { frame: usize, id: u64 },
    #[error("embedding join failed: {0}")]
    EmbeddingJoin(String),
    #[error("inconsistent vector dimension: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Keep-every-k-th-frame plan. Output fps = input fps / stride.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecimationSpec {
    stride: usize,
    phase: usize,
}

impl DecimationSpec {
    pub fn new(stride: usize, phase: usize) -> Self {
        assert!(stride >= 1, "stride must be >= 1");
        assert!(phase < stride, "phase must be in [0, stride)");
        Self { stride, phase }
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn phase(&self) -> usize {
        self.phase
    }
}

/// One frame of detections. `original_index` survives decimation so outputs
/// can be traced back to source frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub original_index: usize,
    pub detections: Vec<Detection>,
}

/// Ordered frames plus optional ground truth and capture metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub name: String,
    pub fps: f64,
    pub width: f64,
    pub height: f64,
    pub frames: Vec<Frame>,
    pub ground_truth: Option<Vec<GroundTruthEntry>>,
}

impl Sequence {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn all_detections(&self) -> impl Iterator<Item = &Detection> {
        self.frames.iter().flat_map(|f| f.detections.iter())
    }
}

/// Keeps frames whose index ≡ phase (mod stride), renumbering consecutively
/// from 0. Ground truth is decimated identically; retained boxes and
/// identities are untouched; fps is divided by the stride.
pub fn decimate(seq: &Sequence, spec: DecimationSpec) -> Sequence {
    let (stride, phase) = (spec.stride(), spec.phase());
    let mut frames = Vec::new();
    for frame in &seq.frames {
        if frame.index % stride != phase {
            continue;
        }
        let new_index = (frame.index - phase) / stride;
        let detections = frame
            .detections
            .iter()
            .map(|d| Detection { frame_index: new_index, ..d.clone() })
            .collect();
        frames.push(Frame { index: new_index, original_index: frame.original_index, detections });
    }
    let ground_truth = seq.ground_truth.as_ref().map(|entries| {
        entries
            .iter()
            .filter(|e| e.frame_index % stride == phase)
            .map(|e| GroundTruthEntry {
                frame_index: (e.frame_index - phase) / stride,
                ..e.clone()
            })
            .collect()
    });
    Sequence {
        name: seq.name.clone(),
        fps: seq.fps / stride as f64,
        width: seq.width,
        height: seq.height,
        frames,
        ground_truth,
    }
}

fn parse_field<T: std::str::FromStr>(
    path: &str,
    line_no: usize,
    field: &str,
    what: &str,
) -> Result<T, IoFormatError> {
    field.trim().parse().map_err(|_| IoFormatError::Parse {
        path: path.to_string(),
        line: line_no,
        message: format!("bad {what}: {field:?}"),
    })
}

struct Row {
    frame: usize, // 0-based
    id: i64,
    bbox: BoundingBox,
    confidence: f64,
    class_id: VehicleClass,
    visibility: f64,
}

fn parse_row(path: &str, line_no: usize, line: &str) -> Result<Row, IoFormatError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 9 {
        return Err(IoFormatError::Parse {
            path: path.to_string(),
            line: line_no,
            message: format!("expected 9 comma-separated fields, got {}", fields.len()),
        });
    }
    let frame_1based: usize = parse_field(path, line_no, fields[0], "frame")?;
    if frame_1based < 1 {
        return Err(IoFormatError::Parse {
            path: path.to_string(),
            line: line_no,
            message: "frame numbers are 1-based".into(),
        });
    }
    let id: i64 = parse_field(path, line_no, fields[1], "id")?;
    let left: f64 = parse_field(path, line_no, fields[2], "bb_left")?;
    let top: f64 = parse_field(path, line_no, fields[3], "bb_top")?;
    let width: f64 = parse_field(path, line_no, fields[4], "bb_width")?;
    let height: f64 = parse_field(path, line_no, fields[5], "bb_height")?;
    if width <= 0.0 || height <= 0.0 {
        return Err(IoFormatError::Parse {
            path: path.to_string(),
            line: line_no,
            message: format!("non-positive box size {width}x{height}"),
        });
    }
    let confidence: f64 = parse_field(path, line_no, fields[6], "conf")?;
    let class_code: i32 = parse_field(path, line_no, fields[7], "class")?;
    let class_id = VehicleClass::from_code(class_code).ok_or_else(|| IoFormatError::Parse {
        path: path.to_string(),
        line: line_no,
        message: format!("unknown class code {class_code}"),
    })?;
    let visibility: f64 = parse_field(path, line_no, fields[8], "visibility")?;
    Ok(Row {
        frame: frame_1based - 1,
        id,
        bbox: BoundingBox::from_ltwh(left, top, width, height),
        confidence,
        class_id,
        visibility,
    })
}

fn format_row(
    out: &mut String,
    frame: usize,
    id: i64,
    bbox: &BoundingBox,
    confidence: f64,
    class_id: VehicleClass,
    visibility: f64,
) {
    writeln!(
        out,
        "{},{},{:.2},{:.2},{:.2},{:.2},{:.6},{},{:.6}",
        frame + 1,
        id,
        bbox.x1,
        bbox.y1,
        bbox.width(),
        bbox.height(),
        confidence,
        class_id.to_code(),
        visibility,
    )
    .expect("string write");
}

fn non_empty_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let t = l.trim();
        (!t.is_empty()).then_some((i + 1, t))
    })
}

/// Parses identity rows (ground truth or tracking results). Entries come
/// back sorted by (frame, id); duplicate (frame, id) pairs are rejected.
pub fn parse_ground_truth(path: &Path) -> Result<Vec<GroundTruthEntry>, IoFormatError> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut entries = Vec::new();
    for (line_no, line) in non_empty_lines(&text) {
        let row = parse_row(&path_str, line_no, line)?;
        if row.id < 0 {
            return Err(IoFormatError::Parse {
                path: path_str.clone(),
                line: line_no,
                message: format!("identity rows need a non-negative id, got {}", row.id),
            });
        }
        entries.push(GroundTruthEntry {
            frame_index: row.frame,
            track_id: TrackId(row.id as u64),
            bbox: row.bbox,
            class_id: row.class_id,
            confidence: row.confidence,
            visibility: row.visibility,
        });
    }
    entries.sort_by_key(|e| (e.frame_index, e.track_id));
    for pair in entries.windows(2) {
        if pair[0].frame_index == pair[1].frame_index && pair[0].track_id == pair[1].track_id {
            return Err(IoFormatError::DuplicateEntry {
                frame: pair[0].frame_index + 1,
                id: pair[0].track_id.0,
            });
        }
    }
    Ok(entries)
}

/// Alias for [`parse_ground_truth`]; results use the same row schema.
pub fn parse_results(path: &Path) -> Result<Vec<GroundTruthEntry>, IoFormatError> {
    parse_ground_truth(path)
}

pub fn write_entries(path: &Path, entries: &[GroundTruthEntry]) -> Result<(), IoFormatError> {
    let mut out = String::new();
    for e in entries {
        format_row(
            &mut out,
            e.frame_index,
            e.track_id.0 as i64,
            &e.bbox,
            e.confidence,
            e.class_id,
            e.visibility,
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes tracking results; every row must carry a confirmed track id.
pub fn write_results(path: &Path, entries: &[GroundTruthEntry]) -> Result<(), IoFormatError> {
    write_entries(path, entries)
}

/// Parses a detection file and, when given, joins the embedding sidecar by
/// (frame, row-within-frame) order. Embeddings are L2-normalized on load.
pub fn parse_detections(
    path: &Path,
    embeddings_path: Option<&Path>,
) -> Result<Vec<Detection>, IoFormatError> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut detections = Vec::new();
    for (line_no, line) in non_empty_lines(&text) {
        let row = parse_row(&path_str, line_no, line)?;
        detections.push(Detection {
            frame_index: row.frame,
            bbox: row.bbox,
            class_id: row.class_id,
            confidence: row.confidence,
            embedding: None,
        });
    }
    detections.sort_by_key(|d| d.frame_index);

    if let Some(sidecar_path) = embeddings_path {
        let sidecar = parse_sidecar(sidecar_path)?;
        if sidecar.rows.len() != detections.len() {
            return Err(IoFormatError::EmbeddingJoin(format!(
                "{} detection rows but {} sidecar rows",
                detections.len(),
                sidecar.rows.len()
            )));
        }
        // per-frame cursor over detections, in file order
        let mut by_frame: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, d) in detections.iter().enumerate() {
            by_frame.entry(d.frame_index).or_default().push(i);
        }
        for row in &sidecar.rows {
            let slot = by_frame
                .get(&row.frame)
                .and_then(|v| v.get(row.row_in_frame))
                .copied()
                .ok_or_else(|| {
                    IoFormatError::EmbeddingJoin(format!(
                        "sidecar row (frame {}, row {}) has no matching detection",
                        row.frame + 1,
                        row.row_in_frame
                    ))
                })?;
            if detections[slot].embedding.is_some() {
                return Err(IoFormatError::EmbeddingJoin(format!(
                    "duplicate sidecar row for frame {}, row {}",
                    row.frame + 1,
                    row.row_in_frame
                )));
            }
            let embedding = l2_normalize(&row.values).map_err(|_| {
                IoFormatError::EmbeddingJoin(format!(
                    "zero-norm embedding at frame {}, row {}",
                    row.frame + 1,
                    row.row_in_frame
                ))
            })?;
            detections[slot].embedding = Some(embedding);
        }
    }
    Ok(detections)
}

pub fn write_detections(path: &Path, detections: &[Detection]) -> Result<(), IoFormatError> {
    let mut out = String::new();
    for d in detections {
        format_row(&mut out, d.frame_index, -1, &d.bbox, d.confidence, d.class_id, 1.0);
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One sidecar row: a vector attached to the `row_in_frame`-th detection of
/// `frame` (both 0-based in memory).
#[derive(Debug, Clone, PartialEq)]
pub struct SidecarRow {
    pub frame: usize,
    pub row_in_frame: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    pub dim: usize,
    pub rows: Vec<SidecarRow>,
}

pub fn parse_sidecar(path: &Path) -> Result<Sidecar, IoFormatError> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut lines = non_empty_lines(&text);
    let (line_no, header) = lines.next().ok_or_else(|| IoFormatError::Parse {
        path: path_str.clone(),
        line: 1,
        message: "missing dim=<d> header".into(),
    })?;
    let dim: usize = header
        .strip_prefix("dim=")
        .ok_or_else(|| IoFormatError::Parse {
            path: path_str.clone(),
            line: line_no,
            message: format!("expected dim=<d> header, got {header:?}"),
        })?
        .trim()
        .parse()
        .map_err(|_| IoFormatError::Parse {
            path: path_str.clone(),
            line: line_no,
            message: format!("bad dimension in header {header:?}"),
        })?;

    let mut rows = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(IoFormatError::Parse {
                path: path_str.clone(),
                line: line_no,
                message: "expected frame,det_row_in_frame,v1,...".into(),
            });
        }
        if fields.len() - 2 != dim {
            return Err(IoFormatError::Dimension { expected: dim, got: fields.len() - 2 });
        }
        let frame_1based: usize = parse_field(&path_str, line_no, fields[0], "frame")?;
        if frame_1based < 1 {
            return Err(IoFormatError::Parse {
                path: path_str.clone(),
                line: line_no,
                message: "frame numbers are 1-based".into(),
            });
        }
        let row_in_frame: usize = parse_field(&path_str, line_no, fields[1], "row index")?;
        let mut values = Vec::with_capacity(dim);
        for f in &fields[2..] {
            values.push(parse_field(&path_str, line_no, f, "value")?);
        }
        rows.push(SidecarRow { frame: frame_1based - 1, row_in_frame, values });
    }
    Ok(Sidecar { dim, rows })
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<(), IoFormatError> {
    let mut out = format!("dim={}\n", sidecar.dim);
    for row in &sidecar.rows {
        if row.values.len() != sidecar.dim {
            return Err(IoFormatError::Dimension {
                expected: sidecar.dim,
                got: row.values.len(),
            });
        }
        write!(out, "{},{}", row.frame + 1, row.row_in_frame).expect("string write");
        for v in &row.values {
            write!(out, ",{v}").expect("string write");
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Builds the embedding sidecar for all detections that carry one.
pub fn sidecar_from_detections(detections: &[Detection]) -> Result<Sidecar, IoFormatError> {
    let mut rows = Vec::new();
    let mut dim = None;
    let mut per_frame: BTreeMap<usize, usize> = BTreeMap::new();
    for d in detections {
        let row_in_frame = per_frame.entry(d.frame_index).or_insert(0);
        if let Some(e) = &d.embedding {
            match dim {
                None => dim = Some(e.dim()),
                Some(expected) if expected != e.dim() => {
                    return Err(IoFormatError::Dimension { expected, got: e.dim() })
                }
                _ => {}
            }
            rows.push(SidecarRow {
                frame: d.frame_index,
                row_in_frame: *row_in_frame,
                values: e.values().to_vec(),
            });
        }
        *row_in_frame += 1;
    }
    Ok(Sidecar { dim: dim.unwrap_or(0), rows })
}

const SEQINFO_FILE: &str = "seqinfo.txt";
const GT_FILE: &str = "gt.txt";
const DET_FILE: &str = "det.txt";
const EMBED_FILE: &str = "det_embeddings.txt";
/// Raw pre-projection features, same sidecar format as the embeddings.
pub const FEATURES_FILE: &str = "features.txt";

/// Key-value text reader (`key=value` per line, `#` comments allowed).
pub fn read_key_values(path: &Path) -> Result<Vec<(String, String)>, IoFormatError> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut pairs = Vec::new();
    for (line_no, line) in non_empty_lines(&text) {
        if line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| IoFormatError::Parse {
            path: path_str.clone(),
            line: line_no,
            message: format!("expected key=value, got {line:?}"),
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Loads a sequence directory: `seqinfo.txt`, optional `gt.txt`, optional
/// `det.txt` + `det_embeddings.txt`. Boxes are clamped to image bounds,
/// never rejected (annotation jitter routinely pokes outside the frame).
pub fn load_sequence(dir: &Path) -> Result<Sequence, IoFormatError> {
    let info = read_key_values(&dir.join(SEQINFO_FILE))?;
    let get = |key: &str| info.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let bad = |key: &str, v: &str| IoFormatError::Parse {
        path: dir.join(SEQINFO_FILE).display().to_string(),
        line: 0,
        message: format!("bad {key}: {v:?}"),
    };
    let name = get("name").unwrap_or("unnamed").to_string();
    let fps: f64 = match get("fps") {
        Some(v) => v.parse().map_err(|_| bad("fps", v))?,
        None => 30.0,
    };
    let width: f64 = match get("width") {
        Some(v) => v.parse().map_err(|_| bad("width", v))?,
        None => 1920.0,
    };
    let height: f64 = match get("height") {
        Some(v) => v.parse().map_err(|_| bad("height", v))?,
        None => 1080.0,
    };
    let declared_frames: Option<usize> = match get("frames") {
        Some(v) => Some(v.parse().map_err(|_| bad("frames", v))?),
        None => None,
    };

    let gt_path = dir.join(GT_FILE);
    let mut ground_truth = if gt_path.exists() {
        let mut entries = parse_ground_truth(&gt_path)?;
        for e in &mut entries {
            e.bbox = e.bbox.clamp_into(width, height);
        }
        Some(entries)
    } else {
        None
    };

    let det_path = dir.join(DET_FILE);
    let mut detections = if det_path.exists() {
        let embed_path = dir.join(EMBED_FILE);
        let embed = embed_path.exists().then_some(embed_path);
        parse_detections(&det_path, embed.as_deref())?
    } else {
        Vec::new()
    };
    for d in &mut detections {
        d.bbox = d.bbox.clamp_into(width, height);
    }

    let max_seen = detections
        .iter()
        .map(|d| d.frame_index + 1)
        .chain(ground_truth.iter().flatten().map(|e| e.frame_index + 1))
        .max()
        .unwrap_or(0);
    let n_frames = declared_frames.unwrap_or(max_seen).max(max_seen);

    let mut frames: Vec<Frame> = (0..n_frames)
        .map(|i| Frame { index: i, original_index: i, detections: Vec::new() })
        .collect();
    for d in detections {
        let idx = d.frame_index;
        frames[idx].detections.push(d);
    }
    if let Some(entries) = &mut ground_truth {
        entries.sort_by_key(|e| (e.frame_index, e.track_id));
    }

    Ok(Sequence { name, fps, width, height, frames, ground_truth })
}

/// Writes a sequence directory in the layout [`load_sequence`] reads.
pub fn write_sequence_dir(dir: &Path, seq: &Sequence) -> Result<(), IoFormatError> {
    std::fs::create_dir_all(dir)?;
    let mut info = String::new();
    writeln!(info, "name={}", seq.name).expect("string write");
    writeln!(info, "fps={}", seq.fps).expect("string write");
    writeln!(info, "width={}", seq.width).expect("string write");
    writeln!(info, "height={}", seq.height).expect("string write");
    writeln!(info, "frames={}", seq.frames.len()).expect("string write");
    std::fs::write(dir.join(SEQINFO_FILE), info)?;

    if let Some(gt) = &seq.ground_truth {
        write_entries(&dir.join(GT_FILE), gt)?;
    }
    let detections: Vec<Detection> = seq.all_detections().cloned().collect();
    write_detections(&dir.join(DET_FILE), &detections)?;
    let sidecar = sidecar_from_detections(&detections)?;
    if !sidecar.rows.is_empty() {
        write_sidecar(&dir.join(EMBED_FILE), &sidecar)?;
    }
    Ok(())
}
