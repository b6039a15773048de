//! Closed-loop contour following in the simulator: sense a sheared frame,
//! unshear it, predict the contact pose, and take a PI-controlled step
//! tangentially along the edge, logging the trajectory and capturing local
//! surface patches for fusion.

mod control;
mod explore;

pub use control::{compute_error, pi_step, ControllerState, Gains};
pub use explore::{
    explore, ExploreConfig, ExploreOutcome, IdentityUnshearer, NetPredictor, NetUnshearer,
    OraclePredictor, OracleUnshearer, PosePredictor, StepRow, TrajectoryLog, Unshearer,
};

#[derive(Debug)]
pub enum ServoError {
    NonFiniteError { component: &'static str, value: f64 },
    Sim(crate::sim::SimError),
    Nn(crate::nn::NnError),
    Geom(crate::geometry::GeomError),
    BadStart(String),
}

impl std::fmt::Display for ServoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ServoError::NonFiniteError { component, value } => {
                write!(f, "non-finite controller error {component} = {value}")
            }
            ServoError::Sim(e) => write!(f, "simulation failed: {e}"),
            ServoError::Nn(e) => write!(f, "model inference failed: {e}"),
            ServoError::Geom(e) => write!(f, "surface capture failed: {e}"),
            ServoError::BadStart(s) => write!(f, "bad start pose: {s}"),
        }
    }
}

impl std::error::Error for ServoError {}

impl From<crate::sim::SimError> for ServoError {
    fn from(e: crate::sim::SimError) -> Self {
        ServoError::Sim(e)
    }
}

impl From<crate::nn::NnError> for ServoError {
    fn from(e: crate::nn::NnError) -> Self {
        ServoError::Nn(e)
    }
}

impl From<crate::geometry::GeomError> for ServoError {
    fn from(e: crate::geometry::GeomError) -> Self {
        ServoError::Geom(e)
    }
}
