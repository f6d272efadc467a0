//! Accuracy metrics against the rod solver and the runtime benchmark.
//!
//! Backbone errors are Euclidean distances normalized by arc-length on a
//! common grid of stations `s / l1 in [0.02, 1]`; `s = 0` is excluded to
//! avoid the normalization singularity. Oracle shapes are interpolated to
//! the stations with piecewise-cubic interpolation of `p(s)`.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvp::{solve, BackboneSolution, SolveOptions};
use crate::data::Dataset;
use crate::math::{quat_geodesic, quat_normalize, CubicInterp};
use crate::mlp::Network;
use crate::pinn::ActuationDomain;
use crate::rod::{Actuation, RobotSpec, STATE_DIM};

/// First normalized station; `s = 0` is excluded from normalized errors.
pub const FIRST_STATION: f64 = 0.02;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("solver: {0}")]
    Solver(String),
    #[error("evaluation: {0}")]
    Invalid(String),
}

/// Normalized backbone errors for one actuation over the station grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActuationErrors {
    pub act: Actuation,
    /// `|p_hat(s) - p_oracle(s)| / s` per station.
    pub errors: Vec<f64>,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeErrorReport {
    /// Normalized stations `s / l1`.
    pub stations: Vec<f64>,
    pub per_actuation: Vec<ActuationErrors>,
    pub station_mean: Vec<f64>,
    pub station_std: Vec<f64>,
    pub station_min: Vec<f64>,
    pub station_max: Vec<f64>,
    /// Grand mean / max over all actuations and stations.
    pub mean: f64,
    pub max: f64,
    /// Actuations dropped because the solver did not converge.
    pub excluded: Vec<Actuation>,
}

/// Piecewise-cubic interpolants of the oracle position over the solve grid.
fn position_interps(sol: &BackboneSolution) -> [CubicInterp; 3] {
    std::array::from_fn(|k| {
        let ys: Vec<f64> = sol.states.iter().map(|x| x.p[k]).collect();
        CubicInterp::new(&sol.grid, &ys)
    })
}

fn station_grid(grid_n: usize) -> Vec<f64> {
    assert!(grid_n >= 2);
    (0..grid_n)
        .map(|k| FIRST_STATION + (1.0 - FIRST_STATION) * k as f64 / (grid_n - 1) as f64)
        .collect()
}

/// Backbone comparison against an arbitrary position predictor; the
/// predictor receives the actuation and the physical arc-lengths to
/// evaluate. Exposed so oracle-substitution checks can reuse the metric.
pub fn backbone_error_with(
    predict: impl Fn(&Actuation, &[f64]) -> Vec<[f64; 3]>,
    robot: &RobotSpec,
    acts: &[Actuation],
    grid_n: usize,
    opts: &SolveOptions,
) -> Result<ShapeErrorReport, EvalError> {
    let stations = station_grid(grid_n);
    let mut per_actuation = Vec::new();
    let mut excluded = Vec::new();
    for act in acts {
        let sol = solve(robot, act, opts).map_err(|e| EvalError::Solver(e.to_string()))?;
        if !sol.converged {
            excluded.push(*act);
            continue;
        }
        let l1 = act.tube_ends(robot)[0];
        let svals: Vec<f64> = stations.iter().map(|t| t * l1).collect();
        let interp = position_interps(&sol);
        let preds = predict(act, &svals);
        let errors: Vec<f64> = svals
            .iter()
            .zip(&preds)
            .map(|(&s, p)| {
                let d: f64 = (0..3)
                    .map(|k| (p[k] - interp[k].eval(s)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                d / s
            })
            .collect();
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let max = errors.iter().fold(0.0f64, |a, &b| a.max(b));
        per_actuation.push(ActuationErrors { act: *act, errors, mean, max });
    }
    if per_actuation.is_empty() {
        return Err(EvalError::Invalid("no actuation converged".into()));
    }

    let n_st = stations.len();
    let n_act = per_actuation.len() as f64;
    let mut station_mean = vec![0.0; n_st];
    let mut station_std = vec![0.0; n_st];
    let mut station_min = vec![f64::INFINITY; n_st];
    let mut station_max = vec![0.0f64; n_st];
    for a in &per_actuation {
        for (k, &e) in a.errors.iter().enumerate() {
            station_mean[k] += e / n_act;
            station_min[k] = station_min[k].min(e);
            station_max[k] = station_max[k].max(e);
        }
    }
    for a in &per_actuation {
        for (k, &e) in a.errors.iter().enumerate() {
            station_std[k] += (e - station_mean[k]).powi(2) / n_act;
        }
    }
    for v in &mut station_std {
        *v = v.sqrt();
    }
    let mean = per_actuation.iter().map(|a| a.mean).sum::<f64>() / n_act;
    let max = per_actuation.iter().fold(0.0f64, |m, a| m.max(a.max));
    Ok(ShapeErrorReport {
        stations,
        per_actuation,
        station_mean,
        station_std,
        station_min,
        station_max,
        mean,
        max,
        excluded,
    })
}

/// Normalized backbone error of the network against the solver.
pub fn backbone_error(
    net: &Network,
    robot: &RobotSpec,
    acts: &[Actuation],
    grid_n: usize,
    opts: &SolveOptions,
) -> Result<ShapeErrorReport, EvalError> {
    backbone_error_with(
        |act, svals| {
            let rows: Vec<(f64, Actuation)> = svals.iter().map(|&s| (s, *act)).collect();
            let cache = net.forward_cached(&Network::pack_inputs(&rows), false);
            (0..svals.len())
                .map(|i| [cache.y[[i, 8]], cache.y[[i, 9]], cache.y[[i, 10]]])
                .collect()
        },
        robot,
        acts,
        grid_n,
        opts,
    )
}

/// Tip-error distributions per tube against a set of observations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TubeTipErrors {
    pub tube_id: u8,
    /// Absolute errors [m], one per record.
    pub abs: Vec<f64>,
    /// Arc-length-normalized errors, one per record.
    pub norm: Vec<f64>,
    pub mean_abs: f64,
    pub max_abs: f64,
    pub mean_norm: f64,
    pub max_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TipErrorReport {
    pub per_tube: Vec<TubeTipErrors>,
    pub mean_norm: f64,
    pub max_norm: f64,
}

/// Tip errors of an arbitrary position predictor `(act, s) -> p`.
pub fn tip_error_with(
    predict: impl Fn(&Actuation, f64) -> [f64; 3],
    ds: &Dataset,
) -> Result<TipErrorReport, EvalError> {
    if ds.records.is_empty() {
        return Err(EvalError::Invalid("empty observation set".into()));
    }
    let mut per_tube: Vec<TubeTipErrors> = (1..=3)
        .map(|tube_id| TubeTipErrors {
            tube_id,
            abs: Vec::new(),
            norm: Vec::new(),
            mean_abs: 0.0,
            max_abs: 0.0,
            mean_norm: 0.0,
            max_norm: 0.0,
        })
        .collect();
    for r in &ds.records {
        let p = predict(&r.act, r.s);
        let d: f64 = (0..3).map(|k| (p[k] - r.p[k]).powi(2)).sum::<f64>().sqrt();
        let t = &mut per_tube[r.tube_id as usize - 1];
        t.abs.push(d);
        t.norm.push(d / r.s);
    }
    for t in &mut per_tube {
        if t.abs.is_empty() {
            continue;
        }
        let n = t.abs.len() as f64;
        t.mean_abs = t.abs.iter().sum::<f64>() / n;
        t.max_abs = t.abs.iter().fold(0.0f64, |a, &b| a.max(b));
        t.mean_norm = t.norm.iter().sum::<f64>() / n;
        t.max_norm = t.norm.iter().fold(0.0f64, |a, &b| a.max(b));
    }
    let all: Vec<f64> = per_tube.iter().flat_map(|t| t.norm.iter().copied()).collect();
    let mean_norm = all.iter().sum::<f64>() / all.len() as f64;
    let max_norm = all.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(TipErrorReport { per_tube, mean_norm, max_norm })
}

pub fn tip_error(net: &Network, ds: &Dataset) -> Result<TipErrorReport, EvalError> {
    tip_error_with(|act, s| net.forward_one(s, act).p, ds)
}

/// Aligned network/oracle state curves for one actuation, plus per-group
/// RMS deviations. Orientation is compared by geodesic distance after
/// renormalization and sign alignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateRecovery {
    pub act: Actuation,
    pub s: Vec<f64>,
    pub net_states: Vec<[f64; STATE_DIM]>,
    pub oracle_states: Vec<[f64; STATE_DIM]>,
    pub rms_m: f64,
    pub rms_u: f64,
    pub rms_theta: f64,
    pub rms_p: f64,
    /// RMS geodesic orientation deviation [rad].
    pub rms_orientation: f64,
    /// Largest `theta_1` magnitude predicted by the network (expected 0).
    pub max_theta1: f64,
}

impl StateRecovery {
    /// Plot-ready table: `s`, the 15 network states, the 15 oracle states.
    pub fn to_table_string(&self) -> String {
        let mut out = String::from("# columns: s net[mx my u1z u2z u3z th1 th2 th3 px py pz hw hx hy hz] oracle[...]\n");
        for (i, &s) in self.s.iter().enumerate() {
            out.push_str(&format!("{s}"));
            for v in self.net_states[i].iter().chain(self.oracle_states[i].iter()) {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn state_recovery(
    net: &Network,
    robot: &RobotSpec,
    act: &Actuation,
    grid_n: usize,
    opts: &SolveOptions,
) -> Result<StateRecovery, EvalError> {
    let sol = solve(robot, act, opts).map_err(|e| EvalError::Solver(e.to_string()))?;
    if !sol.converged {
        return Err(EvalError::Solver("solver did not converge".into()));
    }
    let l1 = act.tube_ends(robot)[0];
    let svals: Vec<f64> = (0..grid_n).map(|k| l1 * k as f64 / (grid_n - 1) as f64).collect();
    let interps: Vec<CubicInterp> = (0..STATE_DIM)
        .map(|j| {
            let ys: Vec<f64> = sol.states.iter().map(|x| x.to_array()[j]).collect();
            CubicInterp::new(&sol.grid, &ys)
        })
        .collect();

    let rows: Vec<(f64, Actuation)> = svals.iter().map(|&s| (s, *act)).collect();
    let cache = net.forward_cached(&Network::pack_inputs(&rows), false);

    let mut net_states = Vec::with_capacity(grid_n);
    let mut oracle_states = Vec::with_capacity(grid_n);
    let mut sq = [0.0f64; 4]; // m, u, theta, p
    let mut cnt = [0usize; 4];
    let mut sq_orient = 0.0;
    let mut max_theta1 = 0.0f64;
    for i in 0..grid_n {
        let mut nx = [0.0; STATE_DIM];
        let mut ox = [0.0; STATE_DIM];
        for j in 0..STATE_DIM {
            nx[j] = cache.y[[i, j]];
            ox[j] = interps[j].eval(svals[i]);
        }
        for j in 0..STATE_DIM {
            let d2 = (nx[j] - ox[j]).powi(2);
            match j {
                0..=1 => { sq[0] += d2; cnt[0] += 1; }
                2..=4 => { sq[1] += d2; cnt[1] += 1; }
                5..=7 => { sq[2] += d2; cnt[2] += 1; }
                8..=10 => { sq[3] += d2; cnt[3] += 1; }
                _ => {}
            }
        }
        let hq = quat_normalize([nx[11], nx[12], nx[13], nx[14]]);
        let ho = quat_normalize([ox[11], ox[12], ox[13], ox[14]]);
        sq_orient += quat_geodesic(hq, ho).powi(2);
        max_theta1 = max_theta1.max(nx[5].abs());
        net_states.push(nx);
        oracle_states.push(ox);
    }
    let rms = |i: usize| (sq[i] / cnt[i] as f64).sqrt();
    Ok(StateRecovery {
        act: *act,
        s: svals,
        net_states,
        oracle_states,
        rms_m: rms(0),
        rms_u: rms(1),
        rms_theta: rms(2),
        rms_p: rms(3),
        rms_orientation: (sq_orient / grid_n as f64).sqrt(),
        max_theta1,
    })
}

/// Wall-clock samples of one method at one backbone discretization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub method: String,
    pub discretization: usize,
    /// Per-evaluation wall time [s]; warm-up excluded.
    pub samples: Vec<f64>,
    pub median: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
}

fn summarize(method: &str, discretization: usize, mut samples: Vec<f64>) -> RuntimeReport {
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let q = |t: f64| {
        let idx = t * (sorted.len() - 1) as f64;
        let lo = idx.floor() as usize;
        let hi = idx.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (idx - lo as f64)
    };
    let report = RuntimeReport {
        method: method.into(),
        discretization,
        median: q(0.5),
        iqr: q(0.75) - q(0.25),
        min: sorted[0],
        max: *sorted.last().unwrap(),
        samples: std::mem::take(&mut samples),
    };
    report
}

/// Time `n_acts` full-backbone evaluations of the network (one batched
/// forward pass over the discretization grid) and of the solver (one BVP
/// solve at matching grid resolution) per discretization. Strictly
/// single-threaded; `warmup` evaluations precede each timed series.
pub fn runtime_bench(
    net: &Network,
    robot: &RobotSpec,
    domain: &ActuationDomain,
    n_acts: usize,
    discretizations: &[usize],
    warmup: usize,
    seed: u64,
) -> Result<Vec<RuntimeReport>, EvalError> {
    let mut reports = Vec::new();
    for &disc in discretizations {
        let mut rng = StdRng::seed_from_u64(seed);
        let acts: Vec<Actuation> = (0..warmup + n_acts).map(|_| domain.sample(&mut rng)).collect();

        // Network: one forward batch over the grid is one evaluation.
        let mut samples = Vec::with_capacity(n_acts);
        for (i, act) in acts.iter().enumerate() {
            let l1 = act.tube_ends(robot)[0];
            let rows: Vec<(f64, Actuation)> =
                (0..disc).map(|k| (l1 * k as f64 / (disc - 1) as f64, *act)).collect();
            let inputs = Network::pack_inputs(&rows);
            let t0 = Instant::now();
            let cache = net.forward_cached(&inputs, false);
            let dt = t0.elapsed().as_secs_f64();
            std::hint::black_box(&cache.y);
            if i >= warmup {
                samples.push(dt);
            }
        }
        reports.push(summarize("pinn", disc, samples));

        // Solver at a matching integration resolution.
        let mut samples = Vec::with_capacity(n_acts);
        for (i, act) in acts.iter().enumerate() {
            let l1 = act.tube_ends(robot)[0];
            let opts = SolveOptions { step: Some(l1 / disc as f64), ..SolveOptions::default() };
            let t0 = Instant::now();
            let sol = solve(robot, act, &opts).map_err(|e| EvalError::Solver(e.to_string()))?;
            let dt = t0.elapsed().as_secs_f64();
            std::hint::black_box(&sol.residual);
            if i >= warmup {
                samples.push(dt);
            }
        }
        reports.push(summarize("bvp", disc, samples));
    }
    Ok(reports)
}

/// JSON summary of a mixed bag of reports, for the CLI emitters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSummary {
    pub robot_hash: String,
    pub shape: Option<ShapeErrorReport>,
    pub tip: Option<TipErrorReport>,
    pub runtime: Option<Vec<RuntimeReport>>,
}

/// Oracle position predictor backed by per-actuation solves; used by tests
/// and the self-comparison paths.
pub fn oracle_predictor<'a>(
    robot: &'a RobotSpec,
    opts: &SolveOptions,
) -> impl Fn(&Actuation, &[f64]) -> Vec<[f64; 3]> + 'a {
    let opts = *opts;
    move |act, svals| {
        let sol = solve(robot, act, &opts).expect("oracle solve");
        let interp = position_interps(&sol);
        svals
            .iter()
            .map(|&s| std::array::from_fn(|k| interp[k].eval(s)))
            .collect()
    }
}
