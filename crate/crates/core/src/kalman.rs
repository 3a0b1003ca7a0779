//! Constant-velocity Kalman filter over the 8-dim state
//! `[cx, cy, a, h, vcx, vcy, va, vh]` with optional per-detection
//! measurement covariance.

use nalgebra::{Matrix4, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::geometry::BoxCah;
use crate::linalg::EPS_REG;

pub type StateVector = SVector<f64, 8>;
pub type StateCov = SMatrix<f64, 8, 8>;

/// Noise heuristic coefficients for the deterministic-fallback mode.
///
/// Position and velocity standard deviations scale with the box height; the
/// aspect-ratio entries use fixed small constants. Defaults follow the common
/// public convention of SORT-family trackers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KfParams {
    pub std_weight_pos: f64,
    pub std_weight_vel: f64,
    pub init_std_aspect: f64,
    pub init_std_aspect_vel: f64,
    pub q_std_aspect: f64,
    pub q_std_aspect_vel: f64,
    pub meas_std_aspect: f64,
}

impl Default for KfParams {
    fn default() -> Self {
        Self {
            std_weight_pos: 1.0 / 20.0,
            std_weight_vel: 1.0 / 160.0,
            init_std_aspect: 1e-2,
            init_std_aspect_vel: 1e-5,
            q_std_aspect: 1e-2,
            q_std_aspect_vel: 1e-5,
            meas_std_aspect: 1e-1,
        }
    }
}

/// Filter state: mean vector and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct KfState {
    pub x: StateVector,
    pub p: StateCov,
}

fn transition_matrix() -> StateCov {
    let mut f = StateCov::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

fn diag_squared(stds: [f64; 8]) -> StateCov {
    StateCov::from_diagonal(&SVector::<f64, 8>::from(stds.map(|s| s * s)))
}

fn baseline_measurement_noise(h: f64, params: &KfParams) -> Matrix4<f64> {
    let s = params.std_weight_pos * h.abs();
    Matrix4::from_diagonal(&nalgebra::Vector4::new(
        s * s,
        s * s,
        params.meas_std_aspect * params.meas_std_aspect,
        s * s,
    ))
}

/// Initialize a track state from a measurement; velocities start at zero.
///
/// The baseline covariance heuristic is scaled by the measured height. When a
/// measurement covariance is supplied it is added to the position block.
pub fn kf_init(z: &BoxCah, r: Option<&Matrix4<f64>>, params: &KfParams) -> KfState {
    let x = StateVector::from([z.cx, z.cy, z.a, z.h, 0.0, 0.0, 0.0, 0.0]);
    let wp = 2.0 * params.std_weight_pos * z.h;
    let wv = 10.0 * params.std_weight_vel * z.h;
    let mut p = diag_squared([
        wp,
        wp,
        params.init_std_aspect,
        wp,
        wv,
        wv,
        params.init_std_aspect_vel,
        wv,
    ]);
    if let Some(r) = r {
        for i in 0..4 {
            for j in 0..4 {
                p[(i, j)] += r[(i, j)];
            }
        }
    }
    KfState { x, p }
}

/// Constant-velocity prediction with process noise scaled by the current height.
pub fn kf_predict(s: &KfState, params: &KfParams) -> KfState {
    let h = s.x[3].abs();
    let qp = params.std_weight_pos * h;
    let qv = params.std_weight_vel * h;
    let q = diag_squared([
        qp,
        qp,
        params.q_std_aspect,
        qp,
        qv,
        qv,
        params.q_std_aspect_vel,
        qv,
    ]);
    let f = transition_matrix();
    let x = f * s.x;
    let p = f * s.p * f.transpose() + q;
    KfState {
        x,
        p: (p + p.transpose()) * 0.5,
    }
}

/// Measurement update.
///
/// `r` is the measurement covariance in cah coordinates (uncertainty-aware
/// mode); when absent the baseline heuristic built from the predicted height
/// is used. A non-invertible innovation covariance is regularized.
pub fn kf_update(s: &KfState, z: &BoxCah, r: Option<&Matrix4<f64>>, params: &KfParams) -> KfState {
    let r = match r {
        Some(r) => *r,
        None => baseline_measurement_noise(s.x[3], params),
    };

    // H selects the position block, so HP is the top 4 rows and PH^T the
    // left 4 columns of P.
    let ph_t = s.p.fixed_view::<8, 4>(0, 0).into_owned();
    let hp = s.p.fixed_view::<4, 8>(0, 0).into_owned();
    let mut innovation_cov = s.p.fixed_view::<4, 4>(0, 0).into_owned() + r;
    let s_inv = loop {
        if let Some(chol) = nalgebra::Cholesky::new(innovation_cov) {
            break chol.inverse();
        }
        innovation_cov += Matrix4::identity() * EPS_REG;
    };
    let gain = ph_t * s_inv;

    let measured = nalgebra::Vector4::new(z.cx, z.cy, z.a, z.h);
    let residual = measured - s.x.fixed_rows::<4>(0);
    let x = s.x + gain * residual;
    let p = s.p - gain * hp;
    KfState {
        x,
        p: (p + p.transpose()) * 0.5,
    }
}

/// Project the state onto measurement space: position block mean and covariance.
pub fn kf_project(s: &KfState) -> (BoxCah, Matrix4<f64>) {
    (
        BoxCah {
            cx: s.x[0],
            cy: s.x[1],
            a: s.x[2],
            h: s.x[3],
        },
        s.p.fixed_view::<4, 4>(0, 0).into_owned(),
    )
}
