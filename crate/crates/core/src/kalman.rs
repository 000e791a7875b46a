//! Constant-velocity Kalman filter over box state (cx, cy, aspect, height)
//! for the SORT-style motion baselines.
//!
//! Prediction is stride-aware: decimated footage advances the transition and
//! process noise by `dt` source frames at once instead of stepping frame by
//! frame.

use nalgebra::{SMatrix, SVector};

use crate::types::BoundingBox;

type Mat8 = SMatrix<f64, 8, 8>;
type Vec8 = SVector<f64, 8>;
type Mat4x8 = SMatrix<f64, 4, 8>;
type Mat4 = SMatrix<f64, 4, 4>;
type Vec4 = SVector<f64, 4>;

const MIN_HEIGHT: f64 = 1e-3;
const MIN_ASPECT: f64 = 1e-3;

/// Gaussian state: mean (cx, cy, a, h, vcx, vcy, va, vh) and 8×8 covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: Vec8,
    pub covariance: Mat8,
}

impl KalmanState {
    /// Box implied by the current mean.
    pub fn bbox(&self) -> BoundingBox {
        let (cx, cy) = (self.mean[0], self.mean[1]);
        let h = self.mean[3].max(MIN_HEIGHT);
        let w = (self.mean[2].max(MIN_ASPECT) * h).max(MIN_HEIGHT);
        BoundingBox::from_center(cx, cy, w, h)
    }
}

/// Filter parameters. Noise scales with box height using the DeepSORT
/// heuristics (position std h/20 per frame, velocity std h/160).
#[derive(Debug, Clone, Copy)]
pub struct KalmanFilter {
    pub std_weight_position: f64,
    pub std_weight_velocity: f64,
}

impl Default for KalmanFilter {
    fn default() -> Self {
        Self { std_weight_position: 1.0 / 20.0, std_weight_velocity: 1.0 / 160.0 }
    }
}

impl KalmanFilter {
    /// State for a first observation: positions from the box, zero
    /// velocities, diagonal covariance with large velocity uncertainty.
    pub fn initiate(&self, bbox: &BoundingBox) -> KalmanState {
        let (cx, cy) = bbox.center();
        let (a, h) = (bbox.width() / bbox.height(), bbox.height());
        let mean = Vec8::from_column_slice(&[cx, cy, a, h, 0.0, 0.0, 0.0, 0.0]);

        let wp = self.std_weight_position;
        let wv = self.std_weight_velocity;
        let std = [
            2.0 * wp * h,
            2.0 * wp * h,
            1e-2,
            2.0 * wp * h,
            10.0 * wv * h,
            10.0 * wv * h,
            1e-5,
            10.0 * wv * h,
        ];
        let mut covariance = Mat8::zeros();
        for (i, s) in std.iter().enumerate() {
            covariance[(i, i)] = s * s;
        }
        KalmanState { mean, covariance }
    }

    /// Advances the state by `dt` source frames: constant-velocity
    /// transition, process noise scaled linearly with `dt`.
    pub fn predict(&self, state: &KalmanState, dt: u32) -> KalmanState {
        debug_assert!(dt >= 1);
        let dt_f = f64::from(dt);
        let mut f = Mat8::identity();
        for i in 0..4 {
            f[(i, i + 4)] = dt_f;
        }

        let h = state.mean[3].max(MIN_HEIGHT);
        let wp = self.std_weight_position;
        let wv = self.std_weight_velocity;
        let std = [wp * h, wp * h, 1e-2, wp * h, wv * h, wv * h, 1e-5, wv * h];
        let mut q = Mat8::zeros();
        for (i, s) in std.iter().enumerate() {
            q[(i, i)] = s * s * dt_f;
        }

        let mean = f * state.mean;
        let covariance = symmetrize(f * state.covariance * f.transpose() + q);
        KalmanState { mean, covariance }
    }

    /// Measurement update against an observed box, with the default
    /// height-scaled measurement noise.
    pub fn update(&self, state: &KalmanState, bbox: &BoundingBox) -> KalmanState {
        let wp = self.std_weight_position;
        let h = state.mean[3].max(MIN_HEIGHT);
        let std = [wp * h, wp * h, 1e-1, wp * h];
        self.update_with_noise(state, bbox, &std.map(|s| s * s))
    }

    /// Measurement update with explicit diagonal measurement noise
    /// (variances for cx, cy, a, h). Joseph-form covariance update keeps the
    /// posterior PSD under finite precision.
    pub fn update_with_noise(
        &self,
        state: &KalmanState,
        bbox: &BoundingBox,
        r_diag: &[f64; 4],
    ) -> KalmanState {
        let mut measure = Mat4x8::zeros();
        for i in 0..4 {
            measure[(i, i)] = 1.0;
        }
        let mut r = Mat4::zeros();
        for i in 0..4 {
            r[(i, i)] = r_diag[i];
        }

        let (cx, cy) = bbox.center();
        let z = Vec4::from_column_slice(&[cx, cy, bbox.width() / bbox.height(), bbox.height()]);

        let s = measure * state.covariance * measure.transpose() + r;
        let s_inv = s.try_inverse().expect("innovation covariance not invertible");
        let gain = state.covariance * measure.transpose() * s_inv;

        let innovation = z - measure * state.mean;
        let mut mean = state.mean + gain * innovation;
        mean[2] = mean[2].max(MIN_ASPECT);
        mean[3] = mean[3].max(MIN_HEIGHT);

        let ikh = Mat8::identity() - gain * measure;
        let covariance =
            symmetrize(ikh * state.covariance * ikh.transpose() + gain * r * gain.transpose());
        KalmanState { mean, covariance }
    }
}

fn symmetrize(m: Mat8) -> Mat8 {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of the covariance; PSD within tolerance means this is
/// ≥ -1e-9.
pub fn min_eigenvalue(state: &KalmanState) -> f64 {
    state
        .covariance
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
