use std::path::Path;
use std::process::{Command, Output};

fn dppc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dppc"))
        .args(args)
        .env_remove("DPPC_THREADS")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    std::fs::write(
        &path,
        "# tiny sweep\n\
         dataset = gaussian\n\
         n = 200\n\
         methods = uniform_iid, mdpp\n\
         m = 10, 20\n\
         trials = 6\n\
         theta_draws = 4\n\
         seed = 5\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn datagen_then_sample() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("points.csv");
    let data = data.to_str().unwrap();
    let out = dppc(&["datagen", "gaussian", "-n", "150", "--seed", "3", "-o", data]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(std::fs::read_to_string(data).unwrap().lines().count(), 150);

    let out = dppc(&["sample", "--input", data, "-m", "12", "--seed", "1"]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,weight,pi"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    for row in &rows {
        assert!((row[1] * row[2] - 1.0).abs() < 1e-9);
    }
}

#[test]
fn sample_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("points.csv");
    let data = data.to_str().unwrap();
    assert!(dppc(&["datagen", "gaussian", "-n", "100", "-o", data]).status.success());
    let a = stdout(&dppc(&["sample", "--input", data, "--process", "dpp", "--seed", "4"]));
    let b = stdout(&dppc(&["sample", "--input", data, "--process", "dpp", "--seed", "4"]));
    assert_eq!(a, b);
}

#[test]
fn experiment_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_dppc"))
            .args(["experiment", "-c", &config, "--no-timing"])
            .env("DPPC_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{out:?}");
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("3"));
    let text = String::from_utf8(one).unwrap();
    assert!(text.starts_with("method,m,s,r,seed,epsilon,estimator,success_rate,ari,wall_ms\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dppc(&["experiment", "-c", &config, "-m", "15", "--set", "methods=uniform_iid", "--no-timing"]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("uniform_iid,15,"), "{}", rows[0]);
}

#[test]
fn exit_codes_follow_error_class() {
    let missing = dppc(&["sample", "--input", "/nonexistent/points.csv"]);
    assert_eq!(missing.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let bad = dppc(&["experiment", "--methods", "d2", "--estimator", "importance"]);
    assert_eq!(bad.status.code(), Some(2));

    let unknown = dppc(&["experiment", "--set", "no_such_key=1"]);
    assert_eq!(unknown.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("points.csv");
    let data = data.to_str().unwrap();
    assert!(dppc(&["datagen", "gaussian", "-n", "60", "-o", data]).status.success());
    let short = dppc(&["sample", "--input", data, "-m", "30", "-r", "5"]);
    assert_eq!(short.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&short.stderr).contains("rank"));
}

#[test]
fn bounds_prints_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("points.csv");
    let data = data.to_str().unwrap();
    assert!(dppc(&["datagen", "gaussian", "-n", "120", "-o", data]).status.success());
    let out = dppc(&["bounds", "--input", data, "-m", "10", "-k", "2"]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert!(text.starts_with("quantity,value\n"));
    for key in ["min_sensitivity_condition", "corollary_satisfied", "corollary_admissible"] {
        assert!(text.lines().any(|l| l.starts_with(key)), "{key} missing:\n{text}");
    }
}

#[test]
fn validate_passes() {
    let out = dppc(&["validate", "--draws", "40000"]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("pass")).count(), 6);
}
