//! Observation datasets: synthetic generation through the rod solver,
//! ingestion of external tip-measurement files via an explicit column map,
//! outlier screening, and the self-describing tabular dataset format.

use std::path::Path;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvp::{solve, BackboneSolution, SolveOptions};
use crate::pinn::{ActuationDomain, ObservationPoint, ObservationSet};
use crate::rod::{Actuation, RobotSpec};

pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset io: {0}")]
    Io(String),
    #[error("dataset format: {0}")]
    Format(String),
    #[error("{failed} of {total} solves failed to converge (> 1% tolerated); check solver configuration")]
    TooManyFailures { failed: usize, total: usize },
    #[error("{malformed} of {total} rows malformed (> 10% tolerated); first: line {line}: {reason}")]
    TooManyMalformed { malformed: usize, total: usize, line: usize, reason: String },
    #[error("solver: {0}")]
    Solver(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Synthetic,
    Experimental,
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Source::Synthetic => "synthetic",
            Source::Experimental => "experimental",
        })
    }
}

/// One tip observation: the distal end of `tube_id` at actuation `act`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub act: Actuation,
    pub tube_id: u8,
    pub s: f64,
    pub p: [f64; 3],
    pub source: Source,
}

/// A set of observation records bound to one robot, with the provenance
/// needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<ObservationRecord>,
    pub robot_hash: String,
    pub seed: u64,
}

impl Dataset {
    pub fn to_observation_set(&self) -> ObservationSet {
        ObservationSet::new(
            self.records
                .iter()
                .map(|r| ObservationPoint { s: r.s, act: r.act, p: r.p })
                .collect(),
        )
    }

    /// Seeded draw without replacement; `n >= len` keeps everything.
    pub fn subsample(&self, n: usize, seed: u64) -> Dataset {
        if n >= self.records.len() {
            return self.clone();
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..self.records.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(n);
        idx.sort_unstable();
        Dataset {
            records: idx.iter().map(|&i| self.records[i]).collect(),
            robot_hash: self.robot_hash.clone(),
            seed,
        }
    }

    pub fn to_table_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# ctr observation dataset v{DATASET_FORMAT_VERSION}\n"));
        out.push_str(&format!("# robot_hash = {}\n", self.robot_hash));
        out.push_str(&format!("# seed = {}\n", self.seed));
        out.push_str("# units: beta [m], alpha [rad], s [m], p [m]\n");
        out.push_str("# columns: beta1 beta2 beta3 alpha1 alpha2 alpha3 tube_id s px py pz source\n");
        for r in &self.records {
            let v = r.act.to_vec6();
            out.push_str(&format!(
                "{} {} {} {} {} {} {} {} {} {} {} {}\n",
                v[0], v[1], v[2], v[3], v[4], v[5], r.tube_id, r.s, r.p[0], r.p[1], r.p[2], r.source
            ));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_table_string())
            .map_err(|e| DataError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut robot_hash = String::new();
        let mut seed = 0u64;
        let mut records = Vec::new();
        let mut version_seen = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("ctr observation dataset v") {
                    let v: u32 = v
                        .trim()
                        .parse()
                        .map_err(|_| DataError::Format(format!("bad version line: {rest}")))?;
                    if v != DATASET_FORMAT_VERSION {
                        return Err(DataError::Format(format!("unsupported dataset version {v}")));
                    }
                    version_seen = true;
                } else if let Some(h) = rest.strip_prefix("robot_hash =") {
                    robot_hash = h.trim().to_string();
                } else if let Some(s) = rest.strip_prefix("seed =") {
                    seed = s
                        .trim()
                        .parse()
                        .map_err(|_| DataError::Format(format!("bad seed line: {rest}")))?;
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 12 {
                return Err(DataError::Format(format!(
                    "line {}: expected 12 fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let num = |i: usize| -> Result<f64, DataError> {
                fields[i]
                    .parse()
                    .map_err(|_| DataError::Format(format!("line {}: bad number `{}`", lineno + 1, fields[i])))
            };
            let act = Actuation::from_vec6([num(0)?, num(1)?, num(2)?, num(3)?, num(4)?, num(5)?]);
            let tube_id: u8 = fields[6]
                .parse()
                .map_err(|_| DataError::Format(format!("line {}: bad tube id `{}`", lineno + 1, fields[6])))?;
            let source = match fields[11] {
                "synthetic" => Source::Synthetic,
                "experimental" => Source::Experimental,
                other => {
                    return Err(DataError::Format(format!("line {}: bad source `{other}`", lineno + 1)))
                }
            };
            records.push(ObservationRecord {
                act,
                tube_id,
                s: num(7)?,
                p: [num(8)?, num(9)?, num(10)?],
                source,
            });
        }
        if !version_seen {
            return Err(DataError::Format("missing dataset version header".into()));
        }
        Ok(Dataset { records, robot_hash, seed })
    }
}

#[derive(Debug, Clone, Default)]
pub struct GenerationSummary {
    pub requested: usize,
    pub solved: usize,
    pub skipped: Vec<Actuation>,
}

/// Position at arc-length `s` from a solved backbone, interpolating linearly
/// between grid nodes when `s` is not itself a node.
pub fn solution_position(sol: &BackboneSolution, s: f64) -> [f64; 3] {
    if let Some(x) = sol.state_at_grid(s) {
        return x.p;
    }
    let k = sol.grid.partition_point(|&g| g < s).clamp(1, sol.grid.len() - 1);
    let (g0, g1) = (sol.grid[k - 1], sol.grid[k]);
    let t = (s - g0) / (g1 - g0);
    let (a, b) = (&sol.states[k - 1].p, &sol.states[k].p);
    std::array::from_fn(|i| a[i] + t * (b[i] - a[i]))
}

/// Solve `n_acts` uniform actuations and emit one tip record per tube
/// (`s = l1, l2, l3`). Unconverged solves are skipped and reported; more
/// than 1% of them aborts the run.
pub fn generate_synthetic(
    n_acts: usize,
    seed: u64,
    robot: &RobotSpec,
    domain: &ActuationDomain,
) -> Result<(Dataset, GenerationSummary), DataError> {
    assert!(n_acts > 0);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(3 * n_acts);
    let mut summary = GenerationSummary { requested: n_acts, ..Default::default() };
    let opts = SolveOptions::default();
    for _ in 0..n_acts {
        let act = domain.sample(&mut rng);
        let sol = match solve(robot, &act, &opts) {
            Ok(sol) if sol.converged => sol,
            Ok(_) => {
                summary.skipped.push(act);
                continue;
            }
            Err(e) => return Err(DataError::Solver(e.to_string())),
        };
        summary.solved += 1;
        let ells = act.tube_ends(robot);
        for (j, &s) in ells.iter().enumerate() {
            records.push(ObservationRecord {
                act,
                tube_id: (j + 1) as u8,
                s,
                p: solution_position(&sol, s),
                source: Source::Synthetic,
            });
        }
    }
    let failed = summary.skipped.len();
    if failed * 100 > n_acts {
        return Err(DataError::TooManyFailures { failed, total: n_acts });
    }
    Ok((Dataset { records, robot_hash: robot.hash(), seed }, summary))
}

/// Column assignment and units of an external tip-measurement table.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    /// "whitespace" or "comma".
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    /// "m" or "mm", applied to beta, s, and p columns.
    pub length_unit: String,
    /// "rad" or "deg", applied to alpha columns.
    pub angle_unit: String,
    #[serde(default)]
    pub skip_header_rows: usize,
    pub columns: Columns,
}

fn default_delimiter() -> String {
    "whitespace".into()
}

/// Zero-based column indices. `s` may be omitted, in which case the
/// arc-length is the tube's distal end computed from the robot.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Columns {
    pub beta1: usize,
    pub beta2: usize,
    pub beta3: usize,
    pub alpha1: usize,
    pub alpha2: usize,
    pub alpha3: usize,
    pub tube_id: usize,
    pub px: usize,
    pub py: usize,
    pub pz: usize,
    pub s: Option<usize>,
}

impl ColumnMap {
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let map: ColumnMap = toml::from_str(text).map_err(|e| DataError::Format(e.to_string()))?;
        match map.length_unit.as_str() {
            "m" | "mm" => {}
            other => return Err(DataError::Format(format!("length_unit must be m or mm, got {other}"))),
        }
        match map.angle_unit.as_str() {
            "rad" | "deg" => {}
            other => return Err(DataError::Format(format!("angle_unit must be rad or deg, got {other}"))),
        }
        match map.delimiter.as_str() {
            "whitespace" | "comma" => {}
            other => {
                return Err(DataError::Format(format!(
                    "delimiter must be whitespace or comma, got {other}"
                )))
            }
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn length_scale(&self) -> f64 {
        if self.length_unit == "mm" { 1e-3 } else { 1.0 }
    }

    fn angle_scale(&self) -> f64 {
        if self.angle_unit == "deg" { std::f64::consts::PI / 180.0 } else { 1.0 }
    }
}

/// Outcome counts and per-line diagnostics of an ingestion pass.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub total_rows: usize,
    pub kept: usize,
    /// Rows violating the actuation box or the declared alpha restriction:
    /// `(1-based line, reason)`.
    pub rejected: Vec<(usize, String)>,
    /// Rows that failed to parse: `(1-based line, reason)`.
    pub malformed: Vec<(usize, String)>,
}

impl IngestReport {
    pub fn to_report_string(&self) -> String {
        let mut out = format!(
            "# ingestion report: {} rows, {} kept, {} rejected, {} malformed\n",
            self.total_rows,
            self.kept,
            self.rejected.len(),
            self.malformed.len()
        );
        for (line, reason) in &self.rejected {
            out.push_str(&format!("rejected line {line}: {reason}\n"));
        }
        for (line, reason) in &self.malformed {
            out.push_str(&format!("malformed line {line}: {reason}\n"));
        }
        out
    }
}

/// Parse an external measurement table, convert to SI, and keep only rows
/// inside the actuation domain. More than 10% malformed rows aborts.
pub fn ingest_experimental(
    text: &str,
    map: &ColumnMap,
    robot: &RobotSpec,
    domain: &ActuationDomain,
) -> Result<(Dataset, IngestReport), DataError> {
    let mut report = IngestReport::default();
    let mut records = Vec::new();
    let ls = map.length_scale();
    let as_ = map.angle_scale();
    let cols = &map.columns;
    let max_col = [
        cols.beta1, cols.beta2, cols.beta3, cols.alpha1, cols.alpha2, cols.alpha3,
        cols.tube_id, cols.px, cols.py, cols.pz,
    ]
    .into_iter()
    .chain(cols.s)
    .max()
    .unwrap();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if i < map.skip_header_rows || line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        report.total_rows += 1;
        let fields: Vec<&str> = if map.delimiter == "comma" {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        if fields.len() <= max_col {
            report
                .malformed
                .push((lineno, format!("expected at least {} fields, got {}", max_col + 1, fields.len())));
            continue;
        }
        let parsed: Result<ObservationRecord, String> = (|| {
            let num = |c: usize| -> Result<f64, String> {
                fields[c].parse().map_err(|_| format!("bad number `{}` in column {c}", fields[c]))
            };
            let act = Actuation::new(
                [num(cols.beta1)? * ls, num(cols.beta2)? * ls, num(cols.beta3)? * ls],
                [num(cols.alpha1)? * as_, num(cols.alpha2)? * as_, num(cols.alpha3)? * as_],
            );
            let tube_id: u8 = fields[cols.tube_id]
                .parse()
                .map_err(|_| format!("bad tube id `{}`", fields[cols.tube_id]))?;
            if !(1..=3).contains(&tube_id) {
                return Err(format!("tube id {tube_id} outside 1..=3"));
            }
            let p = [num(cols.px)? * ls, num(cols.py)? * ls, num(cols.pz)? * ls];
            if !p.iter().all(|v| v.is_finite()) {
                return Err("non-finite position".into());
            }
            let s = match cols.s {
                Some(c) => num(c)? * ls,
                None => act.tube_ends(robot)[tube_id as usize - 1],
            };
            Ok(ObservationRecord { act, tube_id, s, p, source: Source::Experimental })
        })();
        match parsed {
            Err(reason) => report.malformed.push((lineno, reason)),
            Ok(rec) => {
                if let Err(e) = rec.act.validate() {
                    report.rejected.push((lineno, e.to_string()));
                } else if !domain.contains(&rec.act) {
                    report.rejected.push((
                        lineno,
                        format!("alpha outside +-{:.4} rad restriction", domain.alpha_limit),
                    ));
                } else {
                    report.kept += 1;
                    records.push(rec);
                }
            }
        }
    }

    if report.malformed.len() * 10 > report.total_rows {
        let (line, reason) = report.malformed[0].clone();
        return Err(DataError::TooManyMalformed {
            malformed: report.malformed.len(),
            total: report.total_rows,
            line,
            reason,
        });
    }
    Ok((Dataset { records, robot_hash: robot.hash(), seed: 0 }, report))
}

/// Split records into (clean, flagged) by deviation from the solver's tip
/// position: flagged when the deviation exceeds `k` times the set's median.
pub fn outlier_screen(
    ds: &Dataset,
    robot: &RobotSpec,
    k: f64,
) -> Result<(Dataset, Dataset), DataError> {
    let opts = SolveOptions::default();
    let mut deviations = Vec::with_capacity(ds.records.len());
    let mut last: Option<(Actuation, BackboneSolution)> = None;
    for r in &ds.records {
        // Consecutive records typically share an actuation (3 tubes each).
        let reuse = matches!(&last, Some((a, _)) if *a == r.act);
        if !reuse {
            let sol = solve(robot, &r.act, &opts).map_err(|e| DataError::Solver(e.to_string()))?;
            if !sol.converged {
                return Err(DataError::Solver(format!("solver did not converge at {:?}", r.act)));
            }
            last = Some((r.act, sol));
        }
        let sol = &last.as_ref().unwrap().1;
        let oracle = solution_position(sol, r.s);
        let d: f64 = (0..3).map(|i| (r.p[i] - oracle[i]).powi(2)).sum::<f64>().sqrt();
        deviations.push(d);
    }
    let mut sorted = deviations.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    let threshold = k * median;

    let mut clean = Dataset { records: Vec::new(), robot_hash: ds.robot_hash.clone(), seed: ds.seed };
    let mut flagged = clean.clone();
    for (r, &d) in ds.records.iter().zip(&deviations) {
        if d > threshold {
            flagged.records.push(*r);
        } else {
            clean.records.push(*r);
        }
    }
    Ok((clean, flagged))
}
