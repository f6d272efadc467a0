//! The physics-informed network: actuation-domain sampling, input/output
//! normalization, and the ODE / boundary / observation loss terms with
//! gradients with respect to the network weights.

mod domain;
mod loss;
mod sample;

pub use domain::ActuationDomain;
pub use loss::{loss_bc, loss_obs, loss_ode, ode_loss_from_values, GroupWeights, LossWeights};
pub use sample::{
    sample_boundary, sample_collocation, BoundarySet, CollocationSet, ObservationPoint,
    ObservationSet,
};

use crate::mlp::{InputMap, Network, NetworkMeta, INPUT_DIM};
use crate::optim::xavier_layers;
use crate::rod::{RobotSpec, STATE_DIM};

/// Default architecture: six hidden layers of 100 tanh units.
pub const DEFAULT_HIDDEN: [usize; 6] = [100; 6];

/// Input normalization over `[0, l1_max] x B` and per-group output scaling
/// chosen so each state group is O(1) for the network.
pub fn normalization_maps(
    robot: &RobotSpec,
    domain: &ActuationDomain,
) -> (InputMap, [f64; STATE_DIM]) {
    let l1_max = robot.max_backbone_length();
    let (beta_lo, beta_hi) = domain.beta_bounds();
    let mut center = [0.0; INPUT_DIM];
    let mut half = [0.0; INPUT_DIM];
    center[0] = 0.5 * l1_max;
    half[0] = 0.5 * l1_max;
    for i in 0..3 {
        center[1 + i] = 0.5 * (beta_lo[i] + beta_hi[i]);
        half[1 + i] = 0.5 * (beta_hi[i] - beta_lo[i]);
    }
    for i in 0..3 {
        center[4 + i] = 0.0;
        half[4 + i] = domain.alpha_limit;
    }

    // Characteristic scales: moment by sum(EI kappa), torsion by max kappa,
    // twist, quaternion, and position unscaled (the position output already
    // carries a factor of arc length from the hard base constraint, so its
    // raw network value is an O(1) direction).
    let m_scale: f64 = robot
        .tubes
        .iter()
        .map(|t| crate::rod::section_properties(t).ei * t.precurvature)
        .sum();
    let u_scale = robot
        .tubes
        .iter()
        .map(|t| t.precurvature)
        .fold(0.0f64, f64::max);
    let mut scale = [1.0; STATE_DIM];
    // The moment output carries a factor of (l1 - s) from the hard distal
    // constraint, so its raw scale is per unit length.
    scale[0] = m_scale / l1_max;
    scale[1] = m_scale / l1_max;
    for i in 2..5 {
        scale[i] = u_scale;
    }
    (InputMap { center, half }, scale)
}

/// Fresh Xavier-initialized network bound to a robot and actuation domain.
pub fn build_network(
    robot: &RobotSpec,
    domain: &ActuationDomain,
    hidden: &[usize],
    seed: u64,
) -> Network {
    let mut widths = vec![INPUT_DIM];
    widths.extend_from_slice(hidden);
    widths.push(STATE_DIM);
    let (input_map, output_scale) = normalization_maps(robot, domain);
    Network::new(
        xavier_layers(&widths, seed),
        input_map,
        output_scale,
        NetworkMeta {
            robot_hash: robot.hash(),
            seed,
            stage: "untrained".into(),
            note: String::new(),
        },
    )
}
