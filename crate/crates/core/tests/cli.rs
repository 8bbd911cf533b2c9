use std::fs;
use std::path::Path;

use clap::Parser;
use handover_gcs::cli::{
    self, Cli, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, EXIT_VALIDATION_FAILED, METRICS_FILE, TRAJECTORY_FILE,
};
use handover_gcs::planner::{plan, PlanOptions};

fn run(args: &[&str]) -> (i32, String) {
    let mut argv = vec!["handover-gcs", "--log-level", "quiet"];
    argv.extend_from_slice(args);
    let cli = Cli::try_parse_from(argv).expect("arguments parse");
    let mut out = Vec::new();
    let code = cli::execute(&cli, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, seed: u64, num_bs: u32) -> std::path::PathBuf {
    let out = dir.join(name);
    let (code, text) = run(&["gen", "--seed", &seed.to_string(), "--num-bs", &num_bs.to_string(), "--out", p(&out)]);
    assert_eq!(code, EXIT_OK, "{text}");
    out
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = fs::read(gen(dir.path(), "a.json", 5, 4)).unwrap();
    let b = fs::read(gen(dir.path(), "b.json", 5, 4)).unwrap();
    let c = fs::read(gen(dir.path(), "c.json", 6, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn plan_then_validate_and_detect_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), "s.json", 1, 4);
    let out = dir.path().join("plan");
    let (code, text) = run(&["plan", "--scenario", p(&scenario), "--out-dir", p(&out), "--samples", "200"]);
    assert_eq!(code, EXIT_OK, "{text}");
    for f in [METRICS_FILE, TRAJECTORY_FILE, "segments.json", "handovers.csv", "timing.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    let (code, text) = run(&["validate", "--scenario", p(&scenario), "--plan-dir", p(&out), "--samples", "200"]);
    assert_eq!(code, EXIT_OK, "{text}");
    assert!(text.trim_end().ends_with("PASS"));

    // push one sampled speed well over the limit
    let csv_path = out.join(TRAJECTORY_FILE);
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines: Vec<String> = csv.lines().map(str::to_owned).collect();
    let mut fields: Vec<String> = lines[5].split(',').map(str::to_owned).collect();
    fields[6] = "999.000000".into();
    lines[5] = fields.join(",");
    fs::write(&csv_path, lines.join("\n") + "\n").unwrap();
    let (code, text) = run(&["validate", "--scenario", p(&scenario), "--plan-dir", p(&out), "--samples", "200"]);
    assert_eq!(code, EXIT_VALIDATION_FAILED, "{text}");
    assert!(text.contains("FAIL  csv_speed"), "{text}");
}

#[test]
fn metrics_match_library_plan() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), "s.json", 2, 3);
    let out = dir.path().join("plan");
    let (code, text) = run(&["plan", "--scenario", p(&scenario), "--out-dir", p(&out), "--samples", "100"]);
    assert_eq!(code, EXIT_OK, "{text}");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join(METRICS_FILE)).unwrap()).unwrap();

    let s = cli::read_scenario(&scenario).unwrap();
    let r = plan(
        &s,
        &PlanOptions {
            samples_per_segment: 100,
            ..PlanOptions::default()
        },
    )
    .unwrap();
    let close = |key: &str, want: f64| {
        let got = m[key].as_f64().unwrap();
        assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{key}: {got} vs {want}");
    };
    close("total_time_s", r.total_time_s);
    close("path_length_m", r.path_length_m);
    close("lower_bound", r.lower_bound);
    assert_eq!(m["handover_count"].as_u64().unwrap() as usize, r.handover_count);
    let total = m["cost"]["total"].as_f64().unwrap();
    assert!((total - r.cost.total).abs() <= 1e-9 * r.cost.total.abs());
}

#[test]
fn infeasible_scenario_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), "s.json", 0, 3);
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&scenario).unwrap()).unwrap();
    v["channel"]["tx_power_w"] = serde_json::json!(1e-15);
    fs::write(&scenario, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let out = dir.path().join("plan");
    let (code, text) = run(&["plan", "--scenario", p(&scenario), "--out-dir", p(&out)]);
    assert_eq!(code, EXIT_INFEASIBLE, "{text}");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join(METRICS_FILE)).unwrap()).unwrap();
    assert_eq!(m["status"], "infeasible");
}

#[test]
fn oracle_path_guard_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), "s.json", 0, 6);
    let (code, text) = run(&["oracle", "--scenario", p(&scenario), "--max-paths", "3"]);
    assert_eq!(code, EXIT_INPUT, "{text}");
    assert!(text.contains("--max-paths"));
}

#[test]
fn oracle_reports_plan_and_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), "s.json", 4, 3);
    let (code, text) = run(&["oracle", "--scenario", p(&scenario)]);
    assert_eq!(code, EXIT_OK, "{text}");
    let value = |label: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(label)).unwrap();
        line[label.len()..].trim().parse().unwrap()
    };
    let (plan_cost, best, bound) = (value("plan cost"), value("oracle best cost"), value("relaxation bound"));
    assert!(best <= plan_cost * (1.0 + 1e-9));
    assert!(bound <= best * (1.0 + 1e-6));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), "s.json", 3, 3);
    let out = dir.path().join("sweep.csv");
    let (code, text) = run(&[
        "sweep",
        "--scenario",
        p(&scenario),
        "--param",
        "lambda-ho",
        "--values",
        "0.1,10,1000",
        "--out",
        p(&out),
    ]);
    assert_eq!(code, EXIT_OK, "{text}");
    let mut r = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<_> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let n: Vec<usize> = rows.iter().map(|row| row[2].parse().unwrap()).collect();
    assert!(n.windows(2).all(|w| w[1] <= w[0]), "{n:?}");
}

#[test]
fn bad_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(&["plan", "--scenario", p(&dir.path().join("missing.json")), "--out-dir", p(dir.path())]);
    assert_eq!(code, EXIT_INPUT);
    let bogus = dir.path().join("bogus.json");
    fs::write(&bogus, "{\"area\": 1}").unwrap();
    let (code, _) = run(&["validate", "--scenario", p(&bogus), "--plan-dir", p(dir.path())]);
    assert_eq!(code, EXIT_INPUT);
}
