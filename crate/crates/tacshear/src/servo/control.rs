//! Discrete-time PI controller over the predicted contact pose.

use crate::posenet::PosePrediction;
use crate::servo::ServoError;

/// Per-axis proportional and integral gains; translation in mm, rotation in
/// degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub kp_trans: f64,
    pub ki_trans: f64,
    pub kp_rot: f64,
    pub ki_rot: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Gains { kp_trans: 0.5, ki_trans: 0.3, kp_rot: 0.5, ki_rot: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub gains: Gains,
    pub step_length_mm: f64,
    /// Accumulated error, translation then rotation.
    pub error_integral: [f64; 2],
}

impl Default for ControllerState {
    fn default() -> Self {
        ControllerState { gains: Gains::default(), step_length_mm: 0.5, error_integral: [0.0; 2] }
    }
}

impl ControllerState {
    pub fn reset(&mut self) {
        self.error_integral = [0.0; 2];
    }
}

/// Error between a prediction and the centered, edge-normal reference pose
/// (0 mm, 0 deg): translation component first, rotation second.
pub fn compute_error(prediction: &PosePrediction) -> [f64; 2] {
    [prediction.tau_x_mm - 0.0, prediction.yaw_deg - 0.0]
}

/// One controller update: dp = K_p e + K_i * (integral including current e).
pub fn pi_step(state: &mut ControllerState, e: [f64; 2]) -> Result<[f64; 2], ServoError> {
    for (name, v) in [("translation", e[0]), ("rotation", e[1])] {
        if !v.is_finite() {
            return Err(ServoError::NonFiniteError { component: name, value: v });
        }
    }
    state.error_integral[0] += e[0];
    state.error_integral[1] += e[1];
    let g = state.gains;
    Ok([
        g.kp_trans * e[0] + g.ki_trans * state.error_integral[0],
        g.kp_rot * e[1] + g.ki_rot * state.error_integral[1],
    ])
}
