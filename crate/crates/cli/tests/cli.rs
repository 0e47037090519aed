use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ricciwarp")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON object")
}

#[test]
fn passing_scenario_exits_zero_and_prints_json() {
    let out = run(&[scenario("triangle.toml").to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["command"], "triangle");
    assert_eq!(report["passed"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 12);
}

#[test]
fn out_dir_holds_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[scenario("spline_demo.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("report.json").exists());
    let csv = std::fs::read_to_string(dir.path().join("spline.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("s,input,input_d1,input_d2,smooth,smooth_d1,smooth_d2"));
    assert_eq!(csv.lines().count(), 202);
}

#[test]
fn missing_field_is_a_parse_error_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "command = \"concordance\"\nnu = 0.05\n[path]\nkind = \"round\"\nn = 3\n");
    let out = run(&[&path]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "parse");
    assert_eq!(err["path"], "path");
    assert!(err["message"].as_str().unwrap().contains("radius"));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "command = \"triangle\"\nr = [0.3]\nradius = 1.0\n");
    let out = run(&[&path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("radius"));
}

#[test]
fn nested_type_errors_report_the_nested_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "command = \"isotopy\"\n[params]\nm = \"three\"\n");
    let out = run(&[&path]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["path"], "params.m");
}

#[test]
fn violated_precondition_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "command = \"triangle\"\nr = [1.0]\n");
    let out = run(&[&path]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "precondition");

    let path = write(dir.path(), "command = \"concordance\"\nnu = 1.5\n[path]\nkind = \"round\"\nn = 3\n[[path.radius.pieces]]\nstart = 0.0\nend = 1.0\nexpr = { kind = \"const\", value = 1.0 }\n");
    assert_eq!(run(&[&path]).status.code(), Some(3));
}

#[test]
fn failed_certificate_exits_one() {
    // `h'' = h` makes every `(∂s, φ)` plane curve at -1.
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "command = \"curvature\"\nm = 2\nn = 2\n\
         [[k.pieces]]\nstart = 0.0\nend = 1.0\nexpr = { kind = \"const\", value = 1.0 }\n\
         [[h.pieces]]\nstart = 0.0\nend = 1.0\nexpr = { kind = \"exp\", a = 1.0, b = 1.0 }\n",
    );
    let out = run(&[&path, "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], false);
    assert_eq!(stderr_json(&out)["error"], "certificate_failed");
}

#[test]
fn grid_depth_override_reaches_the_certificate() {
    let out = run(&[scenario("curvature.toml").to_str().unwrap(), "--json", "--grid-depth", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["result"]["certificate"]["grid"]["depth"], 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = run(&[scenario("spline_demo.toml").to_str().unwrap(), "--json"]);
    let b = run(&[scenario("spline_demo.toml").to_str().unwrap(), "--json", "--threads", "4"]);
    assert_eq!(a.stdout, b.stdout);
}
