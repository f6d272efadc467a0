//! Composite-tube Cosserat rod mechanics for a three-tube concentric tube
//! robot: tube/robot parameters, the snap-free actuation box, the piecewise
//! segment layout, and the 15-state ODE right-hand side.

mod layout;
mod rhs;
mod spec;
mod state;

pub use layout::{Segment, SegmentLayout, TubeSegmentProps};
pub use rhs::{composite_curvature_xy, ode_rhs, ode_rhs_at, section_properties, SectionProperties};
pub use spec::{Actuation, RobotSpec, TubeSpec, BETA1_SPAN, BETA2_SPAN, BETA3_MIN};
pub use state::{group, RodState, STATE_DIM};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RodError {
    #[error("tube {tube}: field `{field}`: {message}")]
    InvalidTube { tube: usize, field: &'static str, message: String },
    #[error("robot: {0}")]
    InvalidRobot(String),
    #[error("actuation outside the snap-free box: {0}")]
    ActuationOutOfBox(String),
    #[error("arc-length {s} outside [0, {max}]")]
    ArcLengthOutOfRange { s: f64, max: f64 },
    #[error("robot config: {0}")]
    Config(String),
}
