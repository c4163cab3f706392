use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value as Json;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_watermarket"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json_of(out: &Output) -> Json {
    serde_json::from_slice(&out.stdout).unwrap()
}

const PAIR: &str = r#"{"sellers":[{"id":"s","rank":2,"units":["1","2"]}],
  "buyers":[{"id":"b","rank":1,"units":["3","2"]}],"edges":[["s","b"]]}"#;

#[test]
fn generate_synthetic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("inst.json");
    let o = run(&["generate", "--n", "10", "--k", "5", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let doc: Json = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let agents = doc["sellers"].as_array().unwrap().len() + doc["buyers"].as_array().unwrap().len();
    assert_eq!(agents, 10);
    assert_eq!(doc["sellers"][0]["units"].as_array().unwrap().len(), 5);

    let o = run(&["generate", "--delta", "1"]);
    assert!(o.status.success());
    assert!(json_of(&o)["buyers"].as_array().unwrap().is_empty());
}

#[test]
fn generate_from_csv() {
    let csv = fixture("invented_water_rights.csv");
    let topo = fixture("y_topology.json");
    let o = run(&["generate", "--csv", csv.to_str().unwrap(), "--delta", "0.5", "--topology", topo.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json_of(&o);
    // r1 sells on the main stem, so it reaches every buyer
    assert_eq!(doc["sellers"][0]["id"], "r1");
    assert_eq!(doc["edges"].as_array().unwrap().len(), 4);
}

#[test]
fn bad_csv_row_reports_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "bad.csv",
        "right_id,priority_rank,stream_id,stream_pos,acreage,value_per_acre,demand_mm_per_acre\nr1,1,m,1,10,100,914.4\nr2,2,m,2,-3,100,914.4\n",
    );
    let o = run(&["generate", "--csv", &csv]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 2") && err.contains("acreage"), "{err}");
}

#[test]
fn solve_welfare() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.json", PAIR);
    let o = run(&["solve", &inst, "--mode", "welfare"]);
    assert!(o.status.success());
    let doc = json_of(&o);
    assert_eq!(doc["welfare"], "2");
    assert_eq!(doc["sigma0"], "3");
    assert_eq!(doc["pairs"], serde_json::json!([["s", 1, "b", 1]]));
}

#[test]
fn solve_fair_modes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.json", PAIR);
    let hard = write(dir.path(), "hard.json", r#"{"groups":[{"buyers":["b"],"r":3}]}"#);
    for mode in ["fair-singleton", "fair"] {
        let o = run(&["solve", &inst, "--mode", mode, "--spec", &hard]);
        assert_eq!(o.status.code(), Some(2), "{mode}");
        assert_eq!(json_of(&o)["status"], "infeasible");
    }
    let ok = write(dir.path(), "ok.json", r#"{"groups":[{"buyers":["b"],"r":2}]}"#);
    let o = run(&["solve", &inst, "--mode", "fair-singleton", "--spec", &ok]);
    assert!(o.status.success());
    let doc = json_of(&o);
    assert_eq!(doc["pairs"].as_array().unwrap().len(), 2);
    assert_eq!(doc["welfare"], "2");
    let o = run(&["solve", &inst, "--mode", "fair"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_leximin() {
    let dir = tempfile::tempdir().unwrap();
    // two units for x (demand 1) and y (demand 2); only unit 2 reaches y
    let inst = write(
        dir.path(),
        "l.json",
        r#"{"k":2,"buyers":[{"id":"x","gamma":1},{"id":"y","gamma":2}],"edges":[[1,"x"],[2,"x"],[2,"y"]]}"#,
    );
    let o = run(&["solve", &inst, "--mode", "leximin"]);
    assert!(o.status.success());
    assert_eq!(json_of(&o)["satisfaction"], serde_json::json!(["1/1", "1/2"]));
}

#[test]
fn sweep_extremes_have_no_welfare() {
    let o = run(&["sweep", "--delta", "0,1", "--lambda", "0,1", "--replicates", "3", "--seed", "1"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "welfare_mean").unwrap();
    for line in lines {
        assert_eq!(line.split(',').nth(col), Some("0.000000"));
    }
}

#[test]
fn sweep_fair_columns() {
    let o = run(&["sweep", "--n", "4", "--k", "2", "--delta", "0.5", "--lambda", "0", "--replicates", "2", "--fair-r", "0,1,3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("delta,lambda,beta_h,r,replicates,fair_ratio_mean"));
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().last().unwrap().ends_with("0.000000,0.000000,1.000000"));
}

#[test]
fn verify_suite_passes() {
    let o = run(&["verify", "--suite", "leximin", "--seed", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["solve"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--replicates", "0"]).status.code(), Some(1));
    let help = run(&["sweep", "--help"]);
    assert!(help.status.success());
    assert!(String::from_utf8_lossy(&help.stdout).contains("sigma_ratio_mean"));
}
