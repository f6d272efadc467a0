//! Training of the physics-informed network: the composite objective over
//! the three sample sets, checkpointing, and the append-only tabular log.

use std::cell::Cell;
use std::path::Path;

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mlp::Network;
use crate::optim::{minimize, LbfgsConfig, MinimizeResult};
use crate::pinn::{
    loss_bc, loss_obs, loss_ode, sample_boundary, sample_collocation, ActuationDomain,
    BoundarySet, CollocationSet, LossWeights, ObservationSet,
};
use crate::rod::{RobotSpec, RodError};

pub const LOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training log io: {0}")]
    Io(String),
    #[error("training log format: {0}")]
    Format(String),
    #[error("loss became non-finite at iteration {0}; last checkpoint retained")]
    NonFiniteLoss(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub weights: LossWeights,
    pub n_collocation: usize,
    pub n_boundary: usize,
    /// Seed for the collocation/boundary samplers.
    pub seed: u64,
    pub lbfgs: LbfgsConfig,
    /// Save a checkpoint every this many accepted iterations (0 disables).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            n_collocation: 5000,
            n_boundary: 500,
            seed: 0,
            lbfgs: LbfgsConfig { max_iters: 20_000, ..LbfgsConfig::default() },
            checkpoint_every: 250,
        }
    }
}

/// One accepted iteration with the per-term loss decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub iter: usize,
    pub total: f64,
    pub ode: f64,
    pub bc: f64,
    pub obs: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub wall_time_s: f64,
}

/// Sample the collocation and boundary sets for a training run.
pub fn build_sets(
    robot: &RobotSpec,
    domain: &ActuationDomain,
    cfg: &TrainConfig,
) -> Result<(CollocationSet, BoundarySet), RodError> {
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let coll = sample_collocation(cfg.n_collocation, &mut rng, robot, domain)?;
    let bc = sample_boundary(cfg.n_boundary, &mut rng, robot, domain)?;
    Ok((coll, bc))
}

/// Minimize the composite loss in place. `on_iter` observes every accepted
/// iteration; checkpoints go to `checkpoint_path` per the config cadence
/// (and once at the end).
pub fn train(
    net: &mut Network,
    coll: &CollocationSet,
    bc: &BoundarySet,
    obs: &ObservationSet,
    cfg: &TrainConfig,
    checkpoint_path: Option<&Path>,
    mut on_iter: impl FnMut(&TrainRecord, &Network),
) -> Result<MinimizeResult, TrainError> {
    let w = cfg.weights;
    let n_params = net.param_count();
    let mut scratch = net.clone();
    let terms = Cell::new((0.0f64, 0.0f64, 0.0f64));
    let nonfinite_at = Cell::new(None::<usize>);
    let evals = Cell::new(0usize);

    let objective = |p: &[f64]| {
        evals.set(evals.get() + 1);
        scratch.set_params_from_vec(p);
        let (lo, go) = loss_ode(&scratch, coll, &w);
        let (lb, gb) = loss_bc(&scratch, bc, &w);
        let (lob, gob) = loss_obs(&scratch, obs, &w);
        let total = lo + lb + lob;
        if !total.is_finite() {
            if nonfinite_at.get().is_none() {
                nonfinite_at.set(Some(evals.get()));
            }
            // An infinite value makes the line search reject the point.
            return (f64::INFINITY, vec![0.0; n_params]);
        }
        terms.set((lo, lb, lob));
        let mut g = go;
        g.add_assign(&gb);
        g.add_assign(&gob);
        (total, g.to_vec())
    };

    let template = net.clone();
    let mut checkpoint = net.clone();
    let callback = |rec: &crate::optim::IterRecord, params: &[f64]| {
        let (ode, bcl, obsl) = terms.get();
        let record = TrainRecord {
            iter: rec.iter,
            total: rec.loss,
            ode,
            bc: bcl,
            obs: obsl,
            grad_norm: rec.grad_norm,
            step: rec.step,
            wall_time_s: rec.wall_time_s,
        };
        checkpoint.set_params_from_vec(params);
        if let Some(path) = checkpoint_path {
            if cfg.checkpoint_every > 0 && (rec.iter + 1) % cfg.checkpoint_every == 0 {
                let _ = checkpoint.save(path);
            }
        }
        on_iter(&record, &checkpoint);
    };

    let result = minimize(objective, &cfg.lbfgs, net.params_to_vec(), callback);
    drop(template);
    if let Some(at) = nonfinite_at.get() {
        // Keep the last accepted weights rather than the diverged point.
        if !result.loss.is_finite() {
            return Err(TrainError::NonFiniteLoss(at));
        }
    }
    net.set_params_from_vec(&result.weights);
    if let Some(path) = checkpoint_path {
        net.save(path).map_err(|e| TrainError::Io(e.to_string()))?;
    }
    Ok(result)
}

/// Append records to a log file, writing the header if the file is new.
pub fn append_log(path: &Path, records: &[TrainRecord]) -> Result<(), TrainError> {
    use std::io::Write;
    let fresh = !path.exists() || std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| TrainError::Io(format!("{}: {e}", path.display())))?;
    let mut out = String::new();
    if fresh {
        out.push_str(&format!("# ctr training log v{LOG_FORMAT_VERSION}\n"));
        out.push_str("# columns: iter total ode bc obs grad_norm step wall_time_s\n");
    }
    for r in records {
        out.push_str(&format!(
            "{} {} {} {} {} {} {} {}\n",
            r.iter, r.total, r.ode, r.bc, r.obs, r.grad_norm, r.step, r.wall_time_s
        ));
    }
    file.write_all(out.as_bytes())
        .map_err(|e| TrainError::Io(format!("{}: {e}", path.display())))
}

pub fn read_log(path: &Path) -> Result<Vec<TrainRecord>, TrainError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TrainError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 8 {
            return Err(TrainError::Format(format!("line {}: expected 8 fields", i + 1)));
        }
        let num = |j: usize| -> Result<f64, TrainError> {
            f[j].parse()
                .map_err(|_| TrainError::Format(format!("line {}: bad number `{}`", i + 1, f[j])))
        };
        out.push(TrainRecord {
            iter: f[0]
                .parse()
                .map_err(|_| TrainError::Format(format!("line {}: bad iter", i + 1)))?,
            total: num(1)?,
            ode: num(2)?,
            bc: num(3)?,
            obs: num(4)?,
            grad_norm: num(5)?,
            step: num(6)?,
            wall_time_s: num(7)?,
        });
    }
    Ok(out)
}
