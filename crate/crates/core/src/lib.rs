//! Low-frame-rate multi-object tracking engine and evaluation toolkit.
//!
//! The crate is organized around a tracking-by-detection pipeline for footage
//! sampled at large temporal gaps (~5 fps), where box overlap and linear
//! motion assumptions break down:
//!
//! * [`types`] — shared domain types (boxes, detections, embeddings) and the
//!   elementary geometry/vector operations built on them.
//! * [`io`] — MOTChallenge-style line formats for ground truth, detections,
//!   embedding sidecars and tracking results, plus frame decimation.
//! * [`synth`] — deterministic generator of UAV-like scenarios: camera pan
//!   and jump cuts, detector noise, and identity embeddings with a
//!   position-dependent scene-context component.
//! * [`kalman`] — constant-velocity Kalman filter used by the motion
//!   baselines, with stride-aware prediction.
//! * [`assoc`] — similarity matrices, Hungarian/greedy assignment, and the
//!   two-stage confidence cascade.
//! * [`tracker`] — track lifecycle state machine and the three tracker
//!   variants (embedding, IoU+Kalman, confidence cascade).
//! * [`metrics`] — CLEAR MOT (MOTA/IDSW), IDF1 and HOTA evaluation.
//! * [`learning`] — desk-scale contrastive training of a linear embedding
//!   projection head from single-frame annotations.

pub mod assoc;
pub mod io;
pub mod kalman;
pub mod learning;
pub mod metrics;
pub mod synth;
pub mod tracker;
pub mod types;

pub use types::{
    BoundingBox, Detection, Embedding, GroundTruthEntry, TrackId, VehicleClass, VectorError,
};
