//! Constant-velocity filter over arc length along the walk.

use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanParams {
    pub q_process: f64,
    pub r_meas: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        KalmanParams {
            q_process: 0.05,
            r_meas: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanEtaState {
    /// Arc-length position, m.
    pub s: f64,
    /// Velocity, m/s.
    pub v: f64,
    /// Covariance of (s, v).
    pub p: [[f64; 2]; 2],
    pub last_update_s: f64,
}

impl KalmanEtaState {
    pub fn new(s: f64, v: f64, var_s: f64, var_v: f64, t: f64) -> Self {
        KalmanEtaState {
            s,
            v,
            p: [[var_s, 0.0], [0.0, var_v]],
            last_update_s: t,
        }
    }

    fn is_finite(&self) -> bool {
        self.s.is_finite() && self.v.is_finite() && self.p.iter().flatten().all(|x| x.is_finite())
    }
}

/// Predict `dt` ahead, then fold in `measurement` if given.
pub fn kalman_step(
    state: &KalmanEtaState,
    dt: f64,
    measurement: Option<f64>,
    params: &KalmanParams,
) -> Result<KalmanEtaState, SimError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SimError::NonFinite("dt must be positive and finite"));
    }
    if !state.is_finite() || measurement.is_some_and(|z| !z.is_finite()) {
        return Err(SimError::NonFinite("filter input"));
    }
    let predicted = predict(state, dt, params.q_process);
    Ok(match measurement {
        Some(z) => update(&predicted, z, params.r_meas),
        None => predicted,
    })
}

fn predict(x: &KalmanEtaState, dt: f64, q: f64) -> KalmanEtaState {
    let [[p00, p01], [_, p11]] = x.p;
    let n00 = p00 + 2.0 * dt * p01 + dt * dt * p11;
    let n01 = p01 + dt * p11;
    let n11 = p11 + q * dt;
    KalmanEtaState {
        s: x.s + x.v * dt,
        v: x.v,
        p: [[n00, n01], [n01, n11]],
        last_update_s: x.last_update_s + dt,
    }
}

/// Position measurement update in Joseph form.
pub(crate) fn update(x: &KalmanEtaState, z: f64, r: f64) -> KalmanEtaState {
    let p = x.p;
    let innov_var = p[0][0] + r;
    let (k0, k1) = if innov_var > 0.0 {
        (p[0][0] / innov_var, p[1][0] / innov_var)
    } else {
        (0.0, 0.0)
    };
    let y = z - x.s;
    // A = I - K H with H = [1, 0]
    let a = [[1.0 - k0, 0.0], [-k1, 1.0]];
    let mut ap = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            ap[i][j] = a[i][0] * p[0][j] + a[i][1] * p[1][j];
        }
    }
    let k = [k0, k1];
    let mut np = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            np[i][j] = ap[i][0] * a[j][0] + ap[i][1] * a[j][1] + k[i] * r * k[j];
        }
    }
    let off = 0.5 * (np[0][1] + np[1][0]);
    KalmanEtaState {
        s: x.s + k0 * y,
        v: x.v + k1 * y,
        p: [[np[0][0], off], [off, np[1][1]]],
        last_update_s: x.last_update_s,
    }
}

/// Velocities at or below this make the arrival time unknowable.
pub const V_MIN_MPS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eta {
    pub mean_s: f64,
    pub std_s: f64,
}

impl Eta {
    pub const UNKNOWN: Eta = Eta {
        mean_s: f64::INFINITY,
        std_s: f64::INFINITY,
    };

    pub fn is_known(&self) -> bool {
        self.std_s.is_finite()
    }
}

/// Time until the estimate reaches `arc_target`, with a first-order
/// standard deviation from the state covariance.
pub fn eta(state: &KalmanEtaState, arc_target: f64) -> Eta {
    if !(state.v > V_MIN_MPS) {
        return Eta::UNKNOWN;
    }
    let d = arc_target - state.s;
    if d <= 0.0 {
        return Eta {
            mean_s: 0.0,
            std_s: 0.0,
        };
    }
    let v = state.v;
    let g = [-1.0 / v, -d / (v * v)];
    let p = state.p;
    let var = g[0] * g[0] * p[0][0] + 2.0 * g[0] * g[1] * p[0][1] + g[1] * g[1] * p[1][1];
    Eta {
        mean_s: d / v,
        std_s: var.max(0.0).sqrt(),
    }
}
