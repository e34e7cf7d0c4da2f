use std::path::Path;
use std::process::{Command, Output};

fn chrelax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chrelax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn gen(dir: &Path, buses: &str, extra: &[&str]) -> String {
    let path = dir.join(format!("feeder{buses}.json"));
    let p = path.to_str().unwrap().to_owned();
    let mut args = vec!["gen-instance", "--buses", buses, "--seed", "7", "--out", &p];
    args.extend_from_slice(extra);
    let o = chrelax(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    p
}

#[test]
fn validate_reports_radial() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "13", &["--snapshot"]);
    let o = chrelax(&["validate", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("radial: OK"));
}

#[test]
fn validate_rejects_meshed_feeder() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "5", &["--snapshot"]);
    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    // Close a loop between the last bus and the substation.
    let branches = json["branches"].as_array_mut().unwrap();
    let mut extra = branches[0].clone();
    extra["from"] = branches.last().unwrap()["to"].clone();
    extra["to"] = branches[0]["from"].clone();
    branches.push(extra);
    std::fs::write(&f, serde_json::to_string(&json).unwrap()).unwrap();

    let o = chrelax(&["validate", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("radial"), "{}", stderr(&o));
}

#[test]
fn missing_file_is_input_error() {
    let o = chrelax(&["solve", "/nonexistent/feeder.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_print_synopsis() {
    let o = chrelax(&["solve", "x.json", "--relax", "qp"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));

    let o = chrelax(&["hull-check", "--directions", "3"]);
    assert_eq!(o.status.code(), Some(1), "seed is mandatory");

    let o = chrelax(&["gen-instance", "--buses", "5"]);
    assert_eq!(o.status.code(), Some(1), "seed is mandatory");
}

#[test]
fn bad_tolerance_rejected_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "5", &["--snapshot"]);
    let o = chrelax(&["solve", &f, "--tol", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).is_empty());
}

#[test]
fn compare_emits_one_row_per_relaxation() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "13", &["--snapshot"]);
    let o = chrelax(&["compare", &f, "--objective", "f2", "--relax", "socp,ch", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("instance,seed,objective,relax,status,oov,me1,me2,exact"));
    assert!(lines[1].contains(",f2,socp,optimal,"));
    assert!(lines[2].contains(",f2,ch,optimal,"));
    // Loss minimisation is exact on both relaxations.
    for row in &lines[1..] {
        assert_eq!(row.split(',').nth(8), Some("true"), "{row}");
    }
}

#[test]
fn compare_json_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "5", &[]);
    let out = dir.path().join("table.json");
    let o = chrelax(&[
        "compare",
        &f,
        "--objective",
        "f1",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["relax"], "socp");
    assert_eq!(rows[1]["relax"], "ch");
    assert!(rows[1]["oov_order_ok"].is_boolean());
}

#[test]
fn solve_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "5", &[]);
    let plot = dir.path().join("plot.csv");
    let o = chrelax(&["solve", &f, "--plot-data", plot.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(plot).unwrap();
    assert!(text.starts_with("series,entity,period,value"));
    assert!(text.contains("\nenergy,"));
}

#[test]
fn infeasible_feeder_is_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "5", &["--snapshot"]);
    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    // A substation that cannot import and loads far above local supply.
    json["sub_rating"] = serde_json::json!(1e-6);
    std::fs::write(&f, serde_json::to_string(&json).unwrap()).unwrap();
    let o = chrelax(&["solve", &f, "--objective", "f2"]);
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn gen_instance_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = chrelax(&["gen-instance", "--buses", "9", "--seed", "7"]);
    let b = chrelax(&["gen-instance", "--buses", "9", "--seed", "7"]);
    let c = chrelax(&["gen-instance", "--buses", "9", "--seed", "8"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    // File output carries the same document as stdout.
    let f = gen(dir.path(), "9", &[]);
    assert_eq!(std::fs::read(f).unwrap(), a.stdout);
}

#[test]
fn hull_check_rows_and_sign() {
    let o = chrelax(&["hull-check", "--directions", "8", "--samples", "2000", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("d_p,d_q,d_l,d_v,hull_support,sample_support,gap"));
    let gaps: Vec<f64> = lines
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(gaps.len(), 8);
    assert!(gaps.iter().all(|&g| g <= 1e-9), "{gaps:?}");

    let again = chrelax(&["hull-check", "--directions", "8", "--samples", "2000", "--seed", "1"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn hull_check_rejects_inconsistent_bounds() {
    let o = chrelax(&["hull-check", "--seed", "1", "--v-min", "1.3"]);
    assert_eq!(o.status.code(), Some(1));
}
