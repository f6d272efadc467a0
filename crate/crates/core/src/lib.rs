//! Forward kinematics of a three-tube concentric tube robot, two ways:
//! a segmented Cosserat-rod boundary-value solver (the physics oracle) and a
//! physics-informed network trained from rod ODE residuals, boundary
//! conditions, and few-shot tip observations, with the data, training,
//! evaluation, and runtime-benchmark machinery around them.

pub mod autodiff;
pub mod bvp;
pub mod data;
pub mod eval;
pub mod math;
pub mod mlp;
pub mod optim;
pub mod pinn;
pub mod rod;
pub mod train;
