//! `ctr`: command-line front end for the concentric tube robot toolkit.
//!
//! Subcommands cover the full workflow: `solve` (rod boundary value
//! problem), `gen-data` (synthetic tip observations), `ingest`
//! (experimental measurement tables), `train` (two-stage network
//! training), `evaluate`, `benchmark`, and `export-shape`.
//!
//! Exit codes: 0 success, 2 input error, 3 convergence failure,
//! 4 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ctr_core::bvp::{export_backbone, solve, SolveOptions};
use ctr_core::data::{generate_synthetic, outlier_screen, ColumnMap, Dataset};
use ctr_core::eval::{backbone_error, runtime_bench, state_recovery, tip_error, EvalSummary};
use ctr_core::mlp::Network;
use ctr_core::optim::LbfgsConfig;
use ctr_core::pinn::{build_network, ActuationDomain, LossWeights, ObservationSet};
use ctr_core::rod::{Actuation, RobotSpec};
use ctr_core::train::{append_log, build_sets, train, TrainConfig, TrainRecord};

const EXIT_INPUT: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn input(msg: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, msg: msg.into() }
    }
    fn convergence(msg: impl Into<String>) -> Self {
        Self { code: EXIT_CONVERGENCE, msg: msg.into() }
    }
    fn numerical(msg: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, msg: msg.into() }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(name = "ctr", version, about = "Concentric tube robot kinematics: rod solver and physics-informed network")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct RobotArg {
    /// Robot configuration file (bench-sheet units); built-in bench robot
    /// when omitted.
    #[arg(long)]
    robot: Option<PathBuf>,
}

impl RobotArg {
    fn load(&self) -> Result<RobotSpec, CliError> {
        match &self.robot {
            Some(path) => RobotSpec::load(path).map_err(|e| CliError::input(e.to_string())),
            None => Ok(RobotSpec::reference()),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the rod boundary value problem for one actuation and export
    /// the backbone.
    Solve {
        #[command(flatten)]
        robot: RobotArg,
        /// Actuation "b1 b2 b3 a1 a2 a3" in meters and radians.
        #[arg(long)]
        tau: String,
        /// Output backbone table.
        #[arg(long)]
        out: PathBuf,
        /// Integration step [m]; l1/400 when omitted.
        #[arg(long)]
        step: Option<f64>,
        /// Shooting tolerance on the distal residual.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Generate synthetic tip observations with the rod solver.
    GenData {
        #[command(flatten)]
        robot: RobotArg,
        /// Number of actuations (3 records each).
        #[arg(long, default_value_t = 334)]
        n_acts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rotation limit [rad] of the sampled actuations.
        #[arg(long, default_value_t = std::f64::consts::PI)]
        alpha_limit: f64,
        /// Subsample to this many records (seeded) after generation.
        #[arg(long)]
        subsample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        subsample_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ingest an external tip-measurement table via a column map.
    Ingest {
        #[command(flatten)]
        robot: RobotArg,
        /// Measurement table (text).
        #[arg(long)]
        input: PathBuf,
        /// Column-map configuration (TOML).
        #[arg(long)]
        map: PathBuf,
        /// Rotation restriction [rad] applied as a filter.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        alpha_limit: f64,
        /// Subsample to this many records (seeded) after filtering.
        #[arg(long)]
        subsample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        subsample_seed: u64,
        /// Screen outliers against the solver at this threshold multiple
        /// of the median deviation.
        #[arg(long)]
        outlier_k: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Ingestion report (counts and per-line diagnostics).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Train the network (stage 1: synthetic; stage 2: experimental).
    Train {
        #[command(flatten)]
        robot: RobotArg,
        /// "synthetic" or "experimental".
        #[arg(long, default_value = "synthetic")]
        stage: String,
        /// Observation dataset files; may repeat, sets are merged.
        #[arg(long)]
        obs: Vec<PathBuf>,
        /// Pretrained weights to continue from (required for stage 2).
        #[arg(long)]
        weights_in: Option<PathBuf>,
        #[arg(long)]
        weights_out: PathBuf,
        /// Training log (appended; survives resume).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Checkpoint file; defaults next to the output weights.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 20_000)]
        iters: usize,
        #[arg(long, default_value_t = 5000)]
        n_collocation: usize,
        #[arg(long, default_value_t = 500)]
        n_boundary: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rotation limit [rad] of the training domain.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        alpha_limit: f64,
        /// Hidden layer widths, e.g. "100,100,100,100,100,100".
        #[arg(long, default_value = "100,100,100,100,100,100")]
        hidden: String,
        /// Loss-weight overrides (TOML with ode/bc group tables and obs).
        #[arg(long)]
        loss_weights: Option<PathBuf>,
        #[arg(long, default_value_t = 250)]
        checkpoint_every: usize,
        #[arg(long)]
        allow_hash_mismatch: bool,
    },
    /// Backbone accuracy of trained weights against the solver.
    Evaluate {
        #[command(flatten)]
        robot: RobotArg,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 100)]
        n_acts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        grid_n: usize,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        alpha_limit: f64,
        /// Observation dataset for tip-error distributions.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Actuation "b1 b2 b3 a1 a2 a3" for a state-recovery table.
        #[arg(long)]
        state_tau: Option<String>,
        /// Machine-readable summary (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Plot-ready per-station table.
        #[arg(long)]
        shape_out: Option<PathBuf>,
        /// State-recovery table (requires --state-tau).
        #[arg(long)]
        state_out: Option<PathBuf>,
        #[arg(long)]
        allow_hash_mismatch: bool,
    },
    /// Runtime comparison of network inference and the solver.
    Benchmark {
        #[command(flatten)]
        robot: RobotArg,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 5000)]
        n_acts: usize,
        /// Backbone discretizations, e.g. "50,100,200,400".
        #[arg(long, default_value = "50,100,200,400")]
        discretizations: String,
        #[arg(long, default_value_t = 100)]
        warmup: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        alpha_limit: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        allow_hash_mismatch: bool,
    },
    /// Evaluate the network backbone at one actuation and export a table.
    ExportShape {
        #[command(flatten)]
        robot: RobotArg,
        #[arg(long)]
        weights: PathBuf,
        /// Actuation "b1 b2 b3 a1 a2 a3" in meters and radians.
        #[arg(long)]
        tau: String,
        #[arg(long, default_value_t = 200)]
        grid_n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        allow_hash_mismatch: bool,
    },
}

fn parse_tau(text: &str) -> Result<Actuation, CliError> {
    let vals: Result<Vec<f64>, _> = text.split_whitespace().map(str::parse).collect();
    let vals = vals.map_err(|_| CliError::input(format!("tau must be 6 numbers, got `{text}`")))?;
    if vals.len() != 6 {
        return Err(CliError::input(format!("tau must be 6 numbers, got {}", vals.len())));
    }
    Ok(Actuation::from_vec6([vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]]))
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|t| t.trim().parse().map_err(|_| CliError::input(format!("bad list entry `{t}`"))))
        .collect()
}

fn check_hash(expected: &str, robot: &RobotSpec, allow: bool, what: &str) -> CliResult {
    if expected.is_empty() || expected == robot.hash() {
        return Ok(());
    }
    let msg = format!(
        "{what} was built for robot {}.. but the current robot hashes to {}..",
        &expected[..12.min(expected.len())],
        &robot.hash()[..12]
    );
    if allow {
        eprintln!("warning: {msg} (--allow-hash-mismatch given)");
        Ok(())
    } else {
        Err(CliError::input(format!("{msg}; pass --allow-hash-mismatch to override")))
    }
}

fn load_network(path: &Path, robot: &RobotSpec, allow: bool) -> Result<Network, CliError> {
    let net = Network::load(path).map_err(|e| CliError::input(e.to_string()))?;
    check_hash(&net.meta.robot_hash.clone(), robot, allow, "weight file")?;
    Ok(net)
}

/// Reproducibility metadata written next to every output file.
#[derive(Serialize)]
struct RunMeta<'a> {
    tool_version: &'a str,
    command: String,
    robot_hash: String,
}

fn write_meta(out: &Path, command: &str, robot: &RobotSpec) -> CliResult {
    let meta = RunMeta {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        robot_hash: robot.hash(),
    };
    let path = out.with_extension(match out.extension() {
        Some(e) => format!("{}.meta.json", e.to_string_lossy()),
        None => "meta.json".into(),
    });
    std::fs::write(&path, serde_json::to_string_pretty(&meta).unwrap())
        .map_err(|e| CliError::numerical(format!("{}: {e}", path.display())))
}

fn full_command_line() -> String {
    let args: Vec<String> = std::env::args().collect();
    args.join(" ")
}

fn cmd_solve(
    robot: &RobotArg,
    tau: &str,
    out: &Path,
    step: Option<f64>,
    tol: f64,
) -> CliResult {
    let robot = robot.load()?;
    let act = parse_tau(tau)?;
    act.validate().map_err(|e| CliError::input(e.to_string()))?;
    let opts = SolveOptions { step, tol, ..SolveOptions::default() };
    let sol = solve(&robot, &act, &opts).map_err(|e| CliError::numerical(e.to_string()))?;
    export_backbone(&sol, &act, tol, out).map_err(|e| CliError::numerical(e.to_string()))?;
    write_meta(out, &full_command_line(), &robot)?;
    if !sol.converged {
        return Err(CliError::convergence(format!(
            "shooting stalled after {} iterations (residual {:?}); backbone written anyway",
            sol.iterations, sol.residual
        )));
    }
    println!(
        "converged in {} iterations; tip at [{:.6}, {:.6}, {:.6}] m -> {}",
        sol.iterations,
        sol.tip().p[0],
        sol.tip().p[1],
        sol.tip().p[2],
        out.display()
    );
    Ok(())
}

fn cmd_gen_data(
    robot: &RobotArg,
    n_acts: usize,
    seed: u64,
    alpha_limit: f64,
    subsample: Option<usize>,
    subsample_seed: u64,
    out: &Path,
) -> CliResult {
    let robot = robot.load()?;
    let domain = ActuationDomain { alpha_limit };
    let (mut ds, summary) = generate_synthetic(n_acts, seed, &robot, &domain)
        .map_err(|e| CliError::numerical(e.to_string()))?;
    if let Some(n) = subsample {
        ds = ds.subsample(n, subsample_seed);
    }
    ds.save(out).map_err(|e| CliError::numerical(e.to_string()))?;
    write_meta(out, &full_command_line(), &robot)?;
    println!(
        "{} records from {}/{} converged actuations -> {}",
        ds.records.len(),
        summary.solved,
        summary.requested,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_ingest(
    robot: &RobotArg,
    input: &Path,
    map: &Path,
    alpha_limit: f64,
    subsample: Option<usize>,
    subsample_seed: u64,
    outlier_k: Option<f64>,
    out: &Path,
    report_path: Option<&Path>,
) -> CliResult {
    let robot = robot.load()?;
    let map = ColumnMap::load(map).map_err(|e| CliError::input(e.to_string()))?;
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::input(format!("{}: {e}", input.display())))?;
    let domain = ActuationDomain { alpha_limit };
    let (mut ds, report) = ctr_core::data::ingest_experimental(&text, &map, &robot, &domain)
        .map_err(|e| CliError::input(e.to_string()))?;
    if let Some(path) = report_path {
        std::fs::write(path, report.to_report_string())
            .map_err(|e| CliError::numerical(format!("{}: {e}", path.display())))?;
    }
    let mut flagged_count = 0;
    if let Some(k) = outlier_k {
        let (clean, flagged) =
            outlier_screen(&ds, &robot, k).map_err(|e| CliError::numerical(e.to_string()))?;
        flagged_count = flagged.records.len();
        ds = clean;
    }
    if let Some(n) = subsample {
        ds = ds.subsample(n, subsample_seed);
    }
    ds.save(out).map_err(|e| CliError::numerical(e.to_string()))?;
    write_meta(out, &full_command_line(), &robot)?;
    println!(
        "{} rows: kept {}, rejected {}, malformed {}, outliers {}; wrote {} records -> {}",
        report.total_rows,
        report.kept,
        report.rejected.len(),
        report.malformed.len(),
        flagged_count,
        ds.records.len(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    robot: &RobotArg,
    stage: &str,
    obs_paths: &[PathBuf],
    weights_in: Option<&Path>,
    weights_out: &Path,
    log: Option<&Path>,
    checkpoint: Option<&Path>,
    iters: usize,
    n_collocation: usize,
    n_boundary: usize,
    seed: u64,
    alpha_limit: f64,
    hidden: &str,
    loss_weights: Option<&Path>,
    checkpoint_every: usize,
    allow_hash_mismatch: bool,
) -> CliResult {
    if stage != "synthetic" && stage != "experimental" {
        return Err(CliError::input(format!("stage must be synthetic or experimental, got {stage}")));
    }
    if stage == "experimental" && weights_in.is_none() {
        return Err(CliError::input("stage experimental requires --weights-in (the stage-1 network)"));
    }
    let robot = robot.load()?;
    let domain = ActuationDomain { alpha_limit };

    let mut records = Vec::new();
    for path in obs_paths {
        let ds = Dataset::load(path).map_err(|e| CliError::input(e.to_string()))?;
        check_hash(&ds.robot_hash, &robot, allow_hash_mismatch, "dataset")?;
        records.extend(ds.to_observation_set().points);
    }
    if records.is_empty() && stage == "experimental" {
        return Err(CliError::input("stage experimental requires at least one --obs dataset"));
    }
    let obs = ObservationSet::new(records);

    let weights = match loss_weights {
        None => LossWeights::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::input(format!("loss weights: {e}")))?
        }
    };

    let hidden: Vec<usize> = parse_usize_list(hidden)?;
    let mut net = match weights_in {
        Some(path) => load_network(path, &robot, allow_hash_mismatch)?,
        None => build_network(&robot, &domain, &hidden, seed),
    };

    let cfg = TrainConfig {
        weights,
        n_collocation,
        n_boundary,
        seed,
        lbfgs: LbfgsConfig { max_iters: iters, ..LbfgsConfig::default() },
        checkpoint_every,
    };
    let (coll, bc) = build_sets(&robot, &domain, &cfg).map_err(|e| CliError::input(e.to_string()))?;
    println!(
        "training stage {stage}: {} collocation / {} boundary / {} observation samples, {} parameters",
        coll.len(),
        bc.len(),
        obs.len(),
        net.param_count()
    );

    let default_ckpt = weights_out.with_extension("ckpt.json");
    let ckpt = checkpoint.unwrap_or(&default_ckpt);
    let mut pending: Vec<TrainRecord> = Vec::new();
    let flush = |pending: &mut Vec<TrainRecord>| -> CliResult {
        if let Some(path) = log {
            if !pending.is_empty() {
                append_log(path, pending).map_err(|e| CliError::numerical(e.to_string()))?;
            }
        }
        pending.clear();
        Ok(())
    };
    let mut io_err: Option<CliError> = None;
    let result = train(&mut net, &coll, &bc, &obs, &cfg, Some(ckpt), |rec, _| {
        pending.push(*rec);
        if pending.len() >= 10 {
            if let Err(e) = flush(&mut pending) {
                io_err.get_or_insert(e);
            }
        }
        if rec.iter % 100 == 0 {
            println!(
                "iter {:>6}  loss {:.6e}  (ode {:.3e} bc {:.3e} obs {:.3e})  |g| {:.3e}  {:.1}s",
                rec.iter, rec.total, rec.ode, rec.bc, rec.obs, rec.grad_norm, rec.wall_time_s
            );
        }
    })
    .map_err(|e| CliError::numerical(e.to_string()))?;
    flush(&mut pending)?;
    if let Some(e) = io_err {
        return Err(e);
    }

    net.meta.stage = stage.to_string();
    net.meta.robot_hash = robot.hash();
    net.save(weights_out).map_err(|e| CliError::numerical(e.to_string()))?;
    write_meta(weights_out, &full_command_line(), &robot)?;
    println!(
        "finished: loss {:.6e} after {} iterations ({:?}) -> {}",
        result.loss,
        result.history.len(),
        result.termination,
        weights_out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    robot: &RobotArg,
    weights: &Path,
    n_acts: usize,
    seed: u64,
    grid_n: usize,
    alpha_limit: f64,
    dataset: Option<&Path>,
    state_tau: Option<&str>,
    out: &Path,
    shape_out: Option<&Path>,
    state_out: Option<&Path>,
    allow_hash_mismatch: bool,
) -> CliResult {
    use rand::SeedableRng;
    let robot = robot.load()?;
    let net = load_network(weights, &robot, allow_hash_mismatch)?;
    let domain = ActuationDomain { alpha_limit };
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let acts: Vec<Actuation> = (0..n_acts).map(|_| domain.sample(&mut rng)).collect();
    let opts = SolveOptions::default();

    let shape = backbone_error(&net, &robot, &acts, grid_n, &opts)
        .map_err(|e| CliError::numerical(e.to_string()))?;
    println!(
        "backbone error over {} actuations: mean {:.4}%, max {:.4}% ({} excluded)",
        shape.per_actuation.len(),
        100.0 * shape.mean,
        100.0 * shape.max,
        shape.excluded.len()
    );
    if let Some(path) = shape_out {
        let mut table = String::from("# columns: station mean std min max\n");
        for k in 0..shape.stations.len() {
            table.push_str(&format!(
                "{} {} {} {} {}\n",
                shape.stations[k],
                shape.station_mean[k],
                shape.station_std[k],
                shape.station_min[k],
                shape.station_max[k]
            ));
        }
        std::fs::write(path, table)
            .map_err(|e| CliError::numerical(format!("{}: {e}", path.display())))?;
    }

    let tip = match dataset {
        None => None,
        Some(path) => {
            let ds = Dataset::load(path).map_err(|e| CliError::input(e.to_string()))?;
            check_hash(&ds.robot_hash, &robot, allow_hash_mismatch, "dataset")?;
            let report = tip_error(&net, &ds).map_err(|e| CliError::numerical(e.to_string()))?;
            println!(
                "tip error over {} records: mean {:.4}%, max {:.4}%",
                ds.records.len(),
                100.0 * report.mean_norm,
                100.0 * report.max_norm
            );
            Some(report)
        }
    };

    if let Some(tau) = state_tau {
        let act = parse_tau(tau)?;
        act.validate().map_err(|e| CliError::input(e.to_string()))?;
        let rec = state_recovery(&net, &robot, &act, grid_n, &opts)
            .map_err(|e| CliError::numerical(e.to_string()))?;
        println!(
            "state recovery: rms m {:.3e} N*m, u {:.3e} 1/m, theta {:.3e} rad, p {:.3e} m, orientation {:.3e} rad",
            rec.rms_m, rec.rms_u, rec.rms_theta, rec.rms_p, rec.rms_orientation
        );
        if let Some(path) = state_out {
            std::fs::write(path, rec.to_table_string())
                .map_err(|e| CliError::numerical(format!("{}: {e}", path.display())))?;
        }
    }

    let summary = EvalSummary { robot_hash: robot.hash(), shape: Some(shape), tip, runtime: None };
    std::fs::write(out, serde_json::to_string_pretty(&summary).unwrap())
        .map_err(|e| CliError::numerical(format!("{}: {e}", out.display())))?;
    write_meta(out, &full_command_line(), &robot)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_benchmark(
    robot: &RobotArg,
    weights: &Path,
    n_acts: usize,
    discretizations: &str,
    warmup: usize,
    seed: u64,
    alpha_limit: f64,
    out: &Path,
    allow_hash_mismatch: bool,
) -> CliResult {
    let robot = robot.load()?;
    let net = load_network(weights, &robot, allow_hash_mismatch)?;
    let domain = ActuationDomain { alpha_limit };
    let discs = parse_usize_list(discretizations)?;
    let reports = runtime_bench(&net, &robot, &domain, n_acts, &discs, warmup, seed)
        .map_err(|e| CliError::numerical(e.to_string()))?;
    for r in &reports {
        println!(
            "{:>5} @ {:>4} points: median {:.3e} s, iqr {:.3e} s, min {:.3e}, max {:.3e}",
            r.method, r.discretization, r.median, r.iqr, r.min, r.max
        );
    }
    let summary =
        EvalSummary { robot_hash: robot.hash(), shape: None, tip: None, runtime: Some(reports) };
    std::fs::write(out, serde_json::to_string_pretty(&summary).unwrap())
        .map_err(|e| CliError::numerical(format!("{}: {e}", out.display())))?;
    write_meta(out, &full_command_line(), &robot)?;
    Ok(())
}

fn cmd_export_shape(
    robot: &RobotArg,
    weights: &Path,
    tau: &str,
    grid_n: usize,
    out: &Path,
    allow_hash_mismatch: bool,
) -> CliResult {
    let robot = robot.load()?;
    let net = load_network(weights, &robot, allow_hash_mismatch)?;
    let act = parse_tau(tau)?;
    act.validate().map_err(|e| CliError::input(e.to_string()))?;
    let l1 = act.tube_ends(&robot)[0];
    let mut table = String::new();
    table.push_str(&format!("# actuation_beta_m = {:?}\n", act.beta));
    table.push_str(&format!("# actuation_alpha_rad = {:?}\n", act.alpha));
    table.push_str("# columns: s p_x p_y p_z h_w h_x h_y h_z theta_1 theta_2 theta_3 u_1z u_2z u_3z m_x m_y\n");
    for k in 0..grid_n {
        let s = l1 * k as f64 / (grid_n - 1) as f64;
        let x = net.forward_one(s, &act);
        table.push_str(&format!(
            "{s:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e}\n",
            x.p[0], x.p[1], x.p[2],
            x.h[0], x.h[1], x.h[2], x.h[3],
            x.theta[0], x.theta[1], x.theta[2],
            x.u_z[0], x.u_z[1], x.u_z[2],
            x.m_xy[0], x.m_xy[1],
        ));
    }
    std::fs::write(out, table).map_err(|e| CliError::numerical(format!("{}: {e}", out.display())))?;
    write_meta(out, &full_command_line(), &robot)?;
    println!("{grid_n} stations -> {}", out.display());
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match &cli.cmd {
        Cmd::Solve { robot, tau, out, step, tol } => cmd_solve(robot, tau, out, *step, *tol),
        Cmd::GenData { robot, n_acts, seed, alpha_limit, subsample, subsample_seed, out } => {
            cmd_gen_data(robot, *n_acts, *seed, *alpha_limit, *subsample, *subsample_seed, out)
        }
        Cmd::Ingest {
            robot,
            input,
            map,
            alpha_limit,
            subsample,
            subsample_seed,
            outlier_k,
            out,
            report,
        } => cmd_ingest(
            robot,
            input,
            map,
            *alpha_limit,
            *subsample,
            *subsample_seed,
            *outlier_k,
            out,
            report.as_deref(),
        ),
        Cmd::Train {
            robot,
            stage,
            obs,
            weights_in,
            weights_out,
            log,
            checkpoint,
            iters,
            n_collocation,
            n_boundary,
            seed,
            alpha_limit,
            hidden,
            loss_weights,
            checkpoint_every,
            allow_hash_mismatch,
        } => cmd_train(
            robot,
            stage,
            obs,
            weights_in.as_deref(),
            weights_out,
            log.as_deref(),
            checkpoint.as_deref(),
            *iters,
            *n_collocation,
            *n_boundary,
            *seed,
            *alpha_limit,
            hidden,
            loss_weights.as_deref(),
            *checkpoint_every,
            *allow_hash_mismatch,
        ),
        Cmd::Evaluate {
            robot,
            weights,
            n_acts,
            seed,
            grid_n,
            alpha_limit,
            dataset,
            state_tau,
            out,
            shape_out,
            state_out,
            allow_hash_mismatch,
        } => cmd_evaluate(
            robot,
            weights,
            *n_acts,
            *seed,
            *grid_n,
            *alpha_limit,
            dataset.as_deref(),
            state_tau.as_deref(),
            out,
            shape_out.as_deref(),
            state_out.as_deref(),
            *allow_hash_mismatch,
        ),
        Cmd::Benchmark {
            robot,
            weights,
            n_acts,
            discretizations,
            warmup,
            seed,
            alpha_limit,
            out,
            allow_hash_mismatch,
        } => cmd_benchmark(
            robot,
            weights,
            *n_acts,
            discretizations,
            *warmup,
            *seed,
            *alpha_limit,
            out,
            *allow_hash_mismatch,
        ),
        Cmd::ExportShape { robot, weights, tau, grid_n, out, allow_hash_mismatch } => {
            cmd_export_shape(robot, weights, tau, *grid_n, out, *allow_hash_mismatch)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
