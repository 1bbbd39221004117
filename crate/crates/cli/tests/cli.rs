use std::path::Path;
use std::process::{Command, Output};

use ramp_merge::io::{CANDIDATE_COLUMNS, CURVATURE_COLUMNS, TRACE_COLUMNS, TRIAL_COLUMNS};

fn rampsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rampsim")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", out]);
    rampsim(&full)
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        let rel = entry.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        out.push((rel, std::fs::read(&entry).unwrap()));
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut found = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            found.extend(walk(&p));
        } else {
            found.push(p);
        }
    }
    found
}

#[test]
fn run_writes_every_output_with_its_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["run", "--trials", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p = tmp.path();
    assert_eq!(header(&p.join("trace.csv")), TRACE_COLUMNS.join(","));
    assert_eq!(header(&p.join("candidates.csv")), CANDIDATE_COLUMNS.join(","));
    assert_eq!(header(&p.join("trials.csv")), TRIAL_COLUMNS.join(","));
    let trials = std::fs::read_to_string(p.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 3);
    let summary = std::fs::read_to_string(p.join("summary.txt")).unwrap();
    assert!(summary.starts_with("[planner]\ntrials: 2\n"), "{summary}");
    let echo = std::fs::read_to_string(p.join("config.txt")).unwrap();
    assert!(ramp_merge::config::parse(&echo).is_ok());
}

#[test]
fn candidates_have_one_row_per_grid_cell() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_in(tmp.path(), &["run"]).status.success());
    let text = std::fs::read_to_string(tmp.path().join("candidates.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 42);
    assert_eq!(rows.iter().filter(|r| r.split(',').nth(9) == Some("1")).count(), 1);
    for r in &rows {
        assert_eq!(r.split(',').count(), CANDIDATE_COLUMNS.len());
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["sweep", "--from", "-3", "--to", "3", "--step", "3", "--trials", "2", "--seed", "11"];
    assert!(run_in(a.path(), &args).status.success());
    assert!(run_in(b.path(), &args).status.success());
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), 3 + 6 * 2);
    assert_eq!(fa, fb);
}

#[test]
fn seed_flag_changes_traffic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_in(a.path(), &["run", "--seed", "1"]).status.success());
    assert!(run_in(b.path(), &["run", "--seed", "2"]).status.success());
    let read = |d: &Path| std::fs::read(d.join("trace.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
    let echo = std::fs::read_to_string(b.path().join("config.txt")).unwrap();
    assert!(echo.contains("scenario.rng_seed = 2\n"));
}

#[test]
fn sweep_rows_carry_the_parameter() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["sweep", "--from", "-15", "--to", "-9", "--step", "6", "--trials", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(tmp.path().join("trials.csv")).unwrap();
    let values: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(values, ["-15", "-9"]);
}

#[test]
fn malformed_config_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "scenario.dt = 0.1\n\nplanner.weights.w_risk = heavy\n").unwrap();
    let o = run_in(&tmp.path().join("out"), &["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn infeasible_scenario_is_rejected_before_simulating() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("narrow.cfg");
    std::fs::write(&cfg, "scenario.lane_width = 1.5\n").unwrap();
    let out = tmp.path().join("out");
    let o = run_in(&out, &["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.join("trace.csv").exists());
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(rampsim(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(run_in(tmp.path(), &["sweep", "--param", "nope"]).status.code(), Some(1));
    assert_eq!(run_in(tmp.path(), &["run", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(rampsim(&["--help"]).status.code(), Some(0));
}

#[test]
fn collision_exit_code_is_opt_in() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("crash.cfg");
    // No repulsion and a front vehicle level with the AV: the APF steers into it.
    std::fs::write(&cfg, "apf.repulsive = 0\nscenario.initial_fv_relative_distance = 0\nscenario.fv_initial_v = 22\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let base = ["run", "--config", cfg, "--controller", "apf"];
    let plain = run_in(&tmp.path().join("a"), &base);
    assert_eq!(plain.status.code(), Some(0));
    let trials = std::fs::read_to_string(tmp.path().join("a/trials.csv")).unwrap();
    assert!(trials.contains(",collision,"));
    let mut strict = base.to_vec();
    strict.push("--fail-on-collision");
    assert_eq!(run_in(&tmp.path().join("b"), &strict).status.code(), Some(2));
    let safe = run_in(&tmp.path().join("c"), &["run", "--fail-on-collision"]);
    assert_eq!(safe.status.code(), Some(0));
}

#[test]
fn calibrate_reports_and_echoes_the_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["calibrate", "--trials", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(tmp.path().join("calibration.txt")).unwrap();
    let threshold: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("threshold: "))
        .unwrap()
        .parse()
        .unwrap();
    let echo = std::fs::read_to_string(tmp.path().join("config.txt")).unwrap();
    let cfg = ramp_merge::config::parse(&echo).unwrap();
    assert!((cfg.decision.threshold - threshold).abs() <= 1e-8 * threshold);
    assert_eq!(cfg.trial_count, 3);
}

#[test]
fn compare_baselines_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["compare-baselines", "--trials", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curv = std::fs::read_to_string(tmp.path().join("curvature.csv")).unwrap();
    let lines: Vec<&str> = curv.lines().collect();
    assert_eq!(lines[0], CURVATURE_COLUMNS.join(","));
    let kinds: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(kinds, ["quintic", "bezier", "bspline"]);
    let trials = std::fs::read_to_string(tmp.path().join("trials.csv")).unwrap();
    let controllers: Vec<&str> = trials.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(controllers, ["planner", "planner", "apf", "apf"]);
    let summary = std::fs::read_to_string(tmp.path().join("summary.txt")).unwrap();
    assert!(summary.contains("[velocity]\nrelative_gap: "));
}
