// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! End-to-end runs of the `qrouter` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qrouter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrouter"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn plan_table_shows_a_b_two() {
    let o = qrouter(&["plan", "5", "--format", "table"]);
    assert_eq!(o.status.code(), Some(0));
    let table = stdout(&o);
    assert_eq!(
        qrouter::cli::format::table_cell(&table, "A", "B").as_deref(),
        Some("2")
    );
}

#[test]
fn plan_dot_has_six_edges_for_four_ports() {
    let o = qrouter(&["plan", "4", "--format", "dot"]);
    assert_eq!(o.status.code(), Some(0));
    let dot = stdout(&o);
    assert_eq!(dot.matches(" -- ").count(), 6);
    assert_eq!(dot.matches("label=").count(), 6);
}

#[test]
fn plan_json_six_ports_five_colors() {
    let o = qrouter(&["plan", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["colors"], 5);
    assert_eq!(v["n"], 6);
}

#[test]
fn plan_bad_sizes_exit_one() {
    for args in [
        vec!["plan", "1"],
        vec!["plan", "0"],
        vec!["plan", "abc"],
        vec!["plan", "4201"],
        vec!["plan", "10", "--max-nodes", "8"],
        vec!["plan", "5", "--format", "svg"],
        vec!["frobnicate"],
    ] {
        let o = qrouter(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(!stderr(&o).is_empty());
    }
    let o = qrouter(&["plan", "4201"]);
    assert!(stderr(&o).contains("4200"));
}

#[test]
fn plan_at_limit_is_accepted() {
    let o = qrouter(&["plan", "4200", "--format", "dot"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn plan_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for n in 2..=64 {
        let plan = qrouter(&["plan", &n.to_string()]);
        let path = write(dir.path(), &format!("p{n}.json"), &stdout(&plan));
        let o = qrouter(&["verify", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "n={n}: {}", stdout(&o));
    }
}

#[test]
fn verify_hand_edited_duplicate() {
    let dir = tempfile::tempdir().unwrap();
    // A-B changed from 2 to 1, A's idle color: B now has 1 toward A and E.
    let path = write(
        dir.path(),
        "dup.json",
        r#"{"n":5,"colors":5,"table":[[1,3,4,5],[4,5,1],[1,2],[3]]}"#,
    );
    let o = qrouter(&["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 1, "{out}");
    assert!(lines[0].starts_with("duplicate-at-vertex [B,A,E]"), "{out}");
}

#[test]
fn verify_truncated_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "cut.json", r#"{"n":5,"colors":5,"table":[[2,3,4,5],[4,5"#);
    assert_eq!(qrouter(&["verify", path.to_str().unwrap()]).status.code(), Some(1));
    let missing = dir.path().join("nope.json");
    assert_eq!(qrouter(&["verify", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn export_dot_from_plan_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "p.json", &stdout(&qrouter(&["plan", "5"])));
    let o = qrouter(&["export-dot", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), stdout(&qrouter(&["plan", "5", "--format", "dot"])));
}

#[test]
fn budget_defaults_all_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", "{}");
    let o = qrouter(&["budget", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["summary"]["users"], 40);
    assert_eq!(v["summary"]["total_pairs"], 780);
    assert_eq!(v["summary"]["feasible_pairs"], 780);
    assert_eq!(v["summary"]["fiber_attenuation_db_per_km"], 0.2);
    assert_eq!(v["summary"]["reach"]["per_arm_km"], 25.0);
    assert_eq!(v["summary"]["reach"]["end_to_end_km"], 50.0);
}

#[test]
fn budget_long_arm_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "c.json",
        r#"{"network": {"users": [
            {"node": "A", "length_km": 10}, {"node": "B", "length_km": 10},
            {"node": "C", "length_km": 200}, {"node": "D", "length_km": 10}]}}"#,
    );
    let o = qrouter(&["budget", path.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(2));
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("u,v,wavelength,loss_db,crosstalk,feasible"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        let touches_c = cols[0] == "C" || cols[1] == "C";
        assert_eq!(cols[5], if touches_c { "false" } else { "true" }, "{row}");
    }
}

#[test]
fn budget_reports_worst_case_crosstalk() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", r#"{"network": {"users": {"count": 40, "length_km": 50}}}"#);
    let o = qrouter(&["budget", path.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let hits = v["links"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|l| (l["crosstalk_sum"].as_f64().unwrap() - 5.7e-4).abs() < 1e-7)
        .count();
    assert!(hits > 0);
}

#[test]
fn budget_config_errors_exit_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "c.json", "{\n  \"mux\": {\n    \"adjacent_crosstalk_db\": 4\n  }\n}\n");
    let o = qrouter(&["budget", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3: mux.adjacent_crosstalk_db"), "{}", stderr(&o));
    let path = write(dir.path(), "d.json", "{\n  \"mux\": {\n");
    let o = qrouter(&["budget", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn simulate_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "s.json", r#"{"sim": {"trials": 100000, "seed": 42}}"#);
    let p = path.to_str().unwrap();
    let a = qrouter(&["simulate", p]);
    let b = qrouter(&["simulate", p]);
    let c = qrouter(&["simulate", p, "--workers", "3"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["report"]["seed"], 42);
    assert!(v["report"]["generator"].as_str().unwrap().starts_with("chacha8"));
}

#[test]
fn simulate_wrong_analytic_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "s.json", r#"{"sim": {"trials": 100000}}"#);
    let o = qrouter(&["simulate", path.to_str().unwrap(), "--perturb-analytic", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mismatch: analog.delivered"));
}

#[test]
fn simulate_unphysical_spec_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "s.json",
        r#"{"mux": {"insertion_loss_db": 0, "adjacent_crosstalk_db": -1, "nonadjacent_crosstalk_db": -2}, "sim": {"trials": 10}}"#,
    );
    let o = qrouter(&["simulate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unphysical"));
}
