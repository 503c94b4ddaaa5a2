//! Pins for the CLI failure contract and output consistency: exit codes per
//! failure class, no partial grid files, parse positions in error JSON, and
//! bit-exact agreement between `solve` JSON and `grid` CSV numbers.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn teq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teq"))
        .args(args)
        .output()
        .expect("the teq binary runs")
}

fn problem_path(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn missing_problem_file_exits_1_with_io_error() {
    let out = teq(&["solve", "/no/such/problem.json", "--at", "-15,0"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["error"]["kind"], "io");
}

#[test]
fn malformed_expression_exits_2_with_a_byte_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    let mut f = std::fs::File::create(&path).unwrap();
    write!(
        f,
        r#"{{
  "order": 2,
  "expression": "exp(s + + z1)",
  "strip": {{ "half_height": 1.0 }},
  "domain": {{ "type": "disk", "center": [0.0, 0.0], "radius": 0.5, "anchor": [0.0, 0.0] }}
}}"#
    )
    .unwrap();
    drop(f);
    let out = teq(&["solve", path.to_str().unwrap(), "--at", "-15,0"]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["error"]["kind"], "parse");
    assert_eq!(v["error"]["position"], 8);
}

#[test]
fn grid_outside_the_strip_exits_4_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("never.csv");
    let path = problem_path("exp_sum_k2.json");
    let out = teq(&[
        "grid",
        &path,
        "--re",
        "-20:-18:1",
        "--im",
        "0:2:1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(!out_path.exists(), "a rejected grid must not leave a file behind");
    let v = stdout_json(&out);
    assert_eq!(v["error"]["kind"], "domain");
}

#[test]
fn point_outside_the_strip_exits_4() {
    let path = problem_path("exp_sum_k2.json");
    let out = teq(&["solve", &path, "--at", "-15,3"]);
    assert_eq!(out.status.code(), Some(4));
    let v = stdout_json(&out);
    assert_eq!(v["error"]["kind"], "outside_strip");
}

#[test]
fn one_point_grid_agrees_bit_for_bit_with_solve() {
    let path = problem_path("exp_sum_k2.json");
    let solved = teq(&["solve", &path, "--at", "-15,0"]);
    assert_eq!(solved.status.code(), Some(0));
    let v = stdout_json(&solved);
    let want_re = v["value"]["re"].as_f64().unwrap();
    let want_im = v["value"]["im"].as_f64().unwrap();

    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("one.csv");
    let out = teq(&[
        "grid",
        &path,
        "--re",
        "-15:-15:1",
        "--im",
        "0:0:1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let row = csv.lines().nth(1).expect("header plus one row");
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields.len(), 5);
    let got_re: f64 = fields[2].parse().unwrap();
    let got_im: f64 = fields[3].parse().unwrap();
    assert_eq!(got_re.to_bits(), want_re.to_bits(), "re_y differs from solve output");
    assert_eq!(got_im.to_bits(), want_im.to_bits(), "im_y differs from solve output");
}

#[test]
fn grid_rows_scan_re_fastest_within_each_im_line() {
    let path = problem_path("exp_sum_k2.json");
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("order.csv");
    let out = teq(&[
        "grid",
        &path,
        "--re",
        "-16:-15:1",
        "--im",
        "0:0.25:0.25",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let coords: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|row| {
            let f: Vec<&str> = row.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(coords, vec![(-16.0, 0.0), (-15.0, 0.0), (-16.0, 0.25), (-15.0, 0.25)]);
}

#[test]
fn unknown_problem_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("extra.json");
    std::fs::write(
        &path,
        r#"{
  "order": 2,
  "expression": "0.1",
  "strip": { "half_height": 1.0 },
  "domain": { "type": "disk", "center": [0.1, 0.0], "radius": 0.5, "anchor": [0.1, 0.0] },
  "surprise": true
}"#,
    )
    .unwrap();
    let out = teq(&["solve", path.to_str().unwrap(), "--at", "-15,0"]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["error"]["kind"], "parse");
}
