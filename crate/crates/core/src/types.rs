//! Shared domain types and the elementary geometric/vector operations used
//! by every other module. All similarity math is 64-bit.

use thiserror::Error;

/// Errors from embedding/vector operations.
#[derive(Debug, Error, PartialEq)]
pub enum VectorError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("degenerate (zero-norm) vector")]
    DegenerateVector,
}

/// Axis-aligned box in pixel coordinates, stored as corners.
///
/// MOT file formats use `(left, top, width, height)`; conversion happens at
/// the I/O boundary so the in-memory form keeps IoU branch-free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BoundingBox {
    /// New box from corners. Callers must uphold `x2 > x1`, `y2 > y1`.
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        debug_assert!(x2 > x1 && y2 > y1, "degenerate box {x1},{y1},{x2},{y2}");
        Self { x1, y1, x2, y2 }
    }

    pub fn from_ltwh(left: f64, top: f64, width: f64, height: f64) -> Self {
        Self::new(left, top, left + width, top + height)
    }

    pub fn from_center(cx: f64, cy: f64, width: f64, height: f64) -> Self {
        Self::new(cx - width / 2.0, cy - height / 2.0, cx + width / 2.0, cy + height / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn is_valid(&self) -> bool {
        self.x2 > self.x1 && self.y2 > self.y1
    }

    /// Intersection with the image rectangle `[0,w]×[0,h]`, or `None` when
    /// the clamped box has no positive area.
    pub fn clamped(&self, width: f64, height: f64) -> Option<BoundingBox> {
        let x1 = self.x1.max(0.0);
        let y1 = self.y1.max(0.0);
        let x2 = self.x2.min(width);
        let y2 = self.y2.min(height);
        (x2 > x1 && y2 > y1).then_some(BoundingBox { x1, y1, x2, y2 })
    }

    /// Total version of [`Self::clamped`]: a box with no image overlap is
    /// pinned to a minimum-size sliver at the nearest edge, so the result is
    /// always a valid in-bounds box.
    pub fn clamp_into(&self, width: f64, height: f64) -> BoundingBox {
        const MIN_SIDE: f64 = 1e-3;
        let clamp_axis = |lo: f64, hi: f64, limit: f64| -> (f64, f64) {
            let mut a = lo.clamp(0.0, limit);
            let mut b = hi.clamp(0.0, limit);
            if b - a < MIN_SIDE {
                if a >= limit - MIN_SIDE {
                    a = limit - MIN_SIDE;
                    b = limit;
                } else {
                    b = a + MIN_SIDE;
                }
            }
            (a, b)
        };
        let (x1, x2) = clamp_axis(self.x1, self.x2, width);
        let (y1, y2) = clamp_axis(self.y1, self.y2, height);
        BoundingBox { x1, y1, x2, y2 }
    }

    pub fn scaled(&self, factor: f64) -> BoundingBox {
        BoundingBox {
            x1: self.x1 * factor,
            y1: self.y1 * factor,
            x2: self.x2 * factor,
            y2: self.y2 * factor,
        }
    }
}

/// Intersection-over-union of two valid boxes. Symmetric, 0 when disjoint,
/// 1 on identical boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let iy = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = ix * iy;
    if inter == 0.0 {
        return 0.0;
    }
    inter / (a.area() + b.area() - inter)
}

/// Vehicle classes of the benchmark plus `Unknown` for unlabeled detections
/// (the deployed detector is binary and carries no class).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VehicleClass {
    HeavilyArmored,
    LightlyArmored,
    Truck,
    Unknown,
}

impl VehicleClass {
    /// MOT file encoding: 1/2/3, with -1 for unknown.
    pub fn to_code(self) -> i32 {
        match self {
            VehicleClass::HeavilyArmored => 1,
            VehicleClass::LightlyArmored => 2,
            VehicleClass::Truck => 3,
            VehicleClass::Unknown => -1,
        }
    }

    pub fn from_code(code: i32) -> Option<Self> {
        match code {
            1 => Some(VehicleClass::HeavilyArmored),
            2 => Some(VehicleClass::LightlyArmored),
            3 => Some(VehicleClass::Truck),
            -1 => Some(VehicleClass::Unknown),
            _ => None,
        }
    }
}

/// Unit-norm appearance vector. Construct through [`Embedding::new`] (exact
/// values, caller guarantees the norm) or [`l2_normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Wraps a vector that is already unit-norm within 1e-6.
    pub fn new(values: Vec<f64>) -> Result<Self, VectorError> {
        let norm = norm2(&values);
        if norm == 0.0 {
            return Err(VectorError::DegenerateVector);
        }
        debug_assert!((norm - 1.0).abs() <= 1e-6, "embedding norm {norm} not unit");
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dot product with a dimension check.
pub fn dot(u: &[f64], v: &[f64]) -> Result<f64, VectorError> {
    if u.len() != v.len() {
        return Err(VectorError::DimensionMismatch { left: u.len(), right: v.len() });
    }
    Ok(u.iter().zip(v).map(|(a, b)| a * b).sum())
}

/// Cosine similarity `dot(u,v)/(‖u‖‖v‖)`; equals the dot product for unit
/// vectors.
pub fn cosine_similarity(u: &Embedding, v: &Embedding) -> Result<f64, VectorError> {
    let d = dot(u.values(), v.values())?;
    let nu = norm2(u.values());
    let nv = norm2(v.values());
    if nu == 0.0 || nv == 0.0 {
        return Err(VectorError::DegenerateVector);
    }
    Ok(d / (nu * nv))
}

/// Scales `v` to unit L2 norm, preserving direction.
///
/// Vectors already unit within 1e-12 are returned bit-identical, which makes
/// the operation idempotent.
pub fn l2_normalize(v: &[f64]) -> Result<Embedding, VectorError> {
    let norm = norm2(v);
    if norm == 0.0 {
        return Err(VectorError::DegenerateVector);
    }
    if (norm - 1.0).abs() <= 1e-12 {
        return Ok(Embedding(v.to_vec()));
    }
    Ok(Embedding(v.iter().map(|x| x / norm).collect()))
}

/// Monotonically issued track identity, unique within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrackId(pub u64);

impl std::fmt::Display for TrackId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// One frame-level observation from the detector.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// 0-based frame index within the sequence.
    pub frame_index: usize,
    pub bbox: BoundingBox,
    pub class_id: VehicleClass,
    /// Detector confidence in `[0,1]`.
    pub confidence: f64,
    pub embedding: Option<Embedding>,
}

/// One ground-truth (or result) row: a box with a persistent identity.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthEntry {
    /// 0-based frame index; files store it 1-based.
    pub frame_index: usize,
    pub track_id: TrackId,
    pub bbox: BoundingBox,
    pub class_id: VehicleClass,
    /// Consider flag: rows with 0 are ignored by the evaluator.
    pub confidence: f64,
    pub visibility: f64,
}
