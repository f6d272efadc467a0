//! End-to-end tests of the `ctr` binary: every subcommand runs against a
//! temporary directory and the exit-code contract is checked.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ctr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctr")).args(args).output().expect("spawn ctr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn solve_exports_a_converged_backbone() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("backbone.txt");
    let r = ctr(&[
        "solve",
        "--tau",
        "0 0 0 0.5 -0.3 0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let text = read(&out);
    assert!(text.contains("# converged = true"));
    // First data row is the base at s = 0, p = 0.
    let first = text.lines().find(|l| !l.starts_with('#') && !l.starts_with('s')).unwrap();
    assert!(first.starts_with("0.000000000e0 0.000000000e0"));
    // Reproducibility metadata sits next to the table.
    assert!(out.with_extension("txt.meta.json").exists());
}

#[test]
fn solve_rejects_an_out_of_box_actuation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("backbone.txt");
    // beta3 > 0 violates the retraction box.
    let r = ctr(&["solve", "--tau", "0 0 0.005 0 0 0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 2, "{}", stderr(&r));
    assert!(!out.exists());
}

#[test]
fn solve_rejects_malformed_tau() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("backbone.txt");
    let r = ctr(&["solve", "--tau", "0 0 0 0 0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 2);
    let r = ctr(&["solve", "--tau", "0 0 0 0 0 abc", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&r), 2);
}

#[test]
fn gen_data_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    let c = dir.path().join("c.txt");
    for (path, seed) in [(&a, "9"), (&b, "9"), (&c, "10")] {
        let r = ctr(&[
            "gen-data",
            "--n-acts",
            "4",
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&r), 0, "{}", stderr(&r));
    }
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    // Three tube-tip records per converged actuation.
    let rows = read(&a).lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 12);
}

#[test]
fn ingest_maps_units_and_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bench.csv");
    let map = dir.path().join("map.toml");
    let out = dir.path().join("obs.txt");
    let report = dir.path().join("report.txt");
    // Tip positions in millimeters / rotations in degrees, with one junk row.
    std::fs::write(
        &input,
        "b1,b2,b3,a1,a2,a3,tube,x,y,z\n\
         -3,-2,-1,10,0,0,1,1.0,0.5,150.0\n\
         -4,-3,-2,0,15,0,1,0.8,0.2,148.0\n\
         -4,-3,-2,0,15,junk,1,0.8,0.2,148.0\n\
         -5,-4,-3,0,0,20,1,0.5,0.1,145.0\n\
         -5,-4,-3,5,5,5,1,0.4,0.1,144.0\n\
         -6,-5,-4,2,2,2,2,0.3,0.1,143.0\n\
         -6,-5,-4,1,1,1,1,0.3,0.1,143.0\n\
         -7,-6,-5,3,3,3,1,0.2,0.1,142.0\n\
         -7,-6,-5,4,4,4,3,0.2,0.1,142.0\n\
         -8,-7,-6,6,6,6,1,0.1,0.1,141.0\n\
         -8,-7,-6,7,7,7,1,0.1,0.1,141.0\n",
    )
    .unwrap();
    std::fs::write(
        &map,
        "delimiter = \"comma\"\nlength_unit = \"mm\"\nangle_unit = \"deg\"\nskip_header_rows = 1\n\n\
         [columns]\nbeta1 = 0\nbeta2 = 1\nbeta3 = 2\nalpha1 = 3\nalpha2 = 4\nalpha3 = 5\n\
         tube_id = 6\npx = 7\npy = 8\npz = 9\n",
    )
    .unwrap();
    let r = ctr(&[
        "ingest",
        "--input",
        input.to_str().unwrap(),
        "--map",
        map.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let ds = read(&out);
    // Millimeters became meters and degrees radians.
    assert!(ds.contains("# units: beta [m], alpha [rad], s [m], p [m]"));
    assert!(ds.lines().any(|l| l.ends_with("experimental")));
    assert!(read(&report).contains("malformed"));
}

/// Trains a deliberately tiny network end to end and reuses the artifacts
/// for evaluate / benchmark / export-shape / hash-mismatch checks.
#[test]
fn train_evaluate_benchmark_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.txt");
    let weights = dir.path().join("net.json");
    let log = dir.path().join("train.log");

    let r = ctr(&["gen-data", "--n-acts", "3", "--seed", "1", "--out", obs.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));

    let r = ctr(&[
        "train",
        "--obs",
        obs.to_str().unwrap(),
        "--weights-out",
        weights.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
        "--iters",
        "6",
        "--n-collocation",
        "12",
        "--n-boundary",
        "3",
        "--hidden",
        "8,8",
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert!(weights.exists());
    assert!(weights.with_extension("ckpt.json").exists());

    // The log is monotone in the total loss.
    let totals: Vec<f64> = read(&log)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(!totals.is_empty());
    for w in totals.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "loss increased: {} -> {}", w[0], w[1]);
    }

    // Evaluate against the solver; a barely-trained net is inaccurate but
    // the report must be well formed.
    let summary = dir.path().join("eval.json");
    let shape = dir.path().join("stations.txt");
    let r = ctr(&[
        "evaluate",
        "--weights",
        weights.to_str().unwrap(),
        "--n-acts",
        "3",
        "--grid-n",
        "10",
        "--dataset",
        obs.to_str().unwrap(),
        "--state-tau",
        "0 0 0 0.1 0.2 0.3",
        "--out",
        summary.to_str().unwrap(),
        "--shape-out",
        shape.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let json: serde_json::Value = serde_json::from_str(&read(&summary)).unwrap();
    assert!(json["shape"]["mean"].as_f64().unwrap().is_finite());
    assert!(json["tip"]["mean_norm"].as_f64().unwrap().is_finite());
    assert_eq!(read(&shape).lines().filter(|l| !l.starts_with('#')).count(), 10);

    let bench = dir.path().join("bench.json");
    let r = ctr(&[
        "benchmark",
        "--weights",
        weights.to_str().unwrap(),
        "--n-acts",
        "3",
        "--discretizations",
        "10",
        "--warmup",
        "1",
        "--out",
        bench.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let json: serde_json::Value = serde_json::from_str(&read(&bench)).unwrap();
    assert_eq!(json["runtime"].as_array().unwrap().len(), 2);

    let shape_tab = dir.path().join("net_shape.txt");
    let r = ctr(&[
        "export-shape",
        "--weights",
        weights.to_str().unwrap(),
        "--tau",
        "0 0 0 0 0 0",
        "--grid-n",
        "25",
        "--out",
        shape_tab.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert_eq!(read(&shape_tab).lines().filter(|l| !l.starts_with('#')).count(), 25);

    // A different robot geometry must be refused unless overridden.
    let other = write_modified_robot(dir.path());
    let r = ctr(&[
        "evaluate",
        "--weights",
        weights.to_str().unwrap(),
        "--robot",
        other.to_str().unwrap(),
        "--n-acts",
        "1",
        "--out",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("hash"));
    let r = ctr(&[
        "evaluate",
        "--weights",
        weights.to_str().unwrap(),
        "--robot",
        other.to_str().unwrap(),
        "--allow-hash-mismatch",
        "--n-acts",
        "1",
        "--grid-n",
        "5",
        "--out",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
}

#[test]
fn experimental_stage_requires_a_pretrained_network() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("net.json");
    let r = ctr(&[
        "train",
        "--stage",
        "experimental",
        "--weights-out",
        weights.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("weights-in"));
}

/// The bench robot with tube 1 precurvature nudged: same schema, new hash.
fn write_modified_robot(dir: &Path) -> PathBuf {
    let text = "\
[[tube]]\ninner_diameter_mm = 0.4\nouter_diameter_mm = 0.5\nstraight_length_mm = 169\n\
curved_length_mm = 41\ncurvature_per_m = 29.5\nyoungs_modulus_gpa = 50\nshear_modulus_gpa = 19.23\n\n\
[[tube]]\ninner_diameter_mm = 0.7\nouter_diameter_mm = 0.9\nstraight_length_mm = 65\n\
curved_length_mm = 100\ncurvature_per_m = 12.4\nyoungs_modulus_gpa = 50\nshear_modulus_gpa = 19.23\n\n\
[[tube]]\ninner_diameter_mm = 1.2\nouter_diameter_mm = 1.5\nstraight_length_mm = 10\n\
curved_length_mm = 100\ncurvature_per_m = 4.37\nyoungs_modulus_gpa = 50\nshear_modulus_gpa = 19.23\n";
    let path = dir.join("robot.toml");
    std::fs::write(&path, text).unwrap();
    path
}
