//! End-to-end checks of the command-line interface and its file formats.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use netecon::equilibrium::Outcome;
use netecon::runner::{run_simulation, RunSummary};
use netecon::scenario::ScenarioConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netecon"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn netecon");
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_config(dir: &Path, horizon: u32) -> String {
    let path = dir.join("config.json");
    fs::write(&path, format!(r#"{{"horizon": {horizon}}}"#)).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_outputs_are_byte_identical_on_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), 80);
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    run_ok(&[
        "run",
        "--s1",
        "78",
        "--s2",
        "178",
        "--config",
        &cfg,
        "--out",
        out_a.to_str().unwrap(),
    ]);
    run_ok(&[
        "run",
        "--s1",
        "78",
        "--s2",
        "178",
        "--config",
        &cfg,
        "--out",
        out_b.to_str().unwrap(),
    ]);
    for name in [
        "timeseries.csv",
        "prices.csv",
        "summary.json",
        "snapshots.json",
    ] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn summary_reports_a_taxonomy_label() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    run_ok(&[
        "run",
        "--s1",
        "78",
        "--s2",
        "178",
        "--out",
        out.to_str().unwrap(),
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let label = summary["outcome"].as_str().unwrap();
    assert!(
        [
            "Equilibrium",
            "Disequilibrium",
            "ConsumerWealthZero",
            "SingleProducerLeft"
        ]
        .contains(&label),
        "unexpected label {label}"
    );
    assert_eq!(summary["s1"], 78);
    assert!(summary["config_hash"].is_string());
}

#[test]
fn invalid_config_exits_nonzero_without_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"profit_reinvestment_ratio": 2.0}"#).unwrap();
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args([
            "run",
            "--s1",
            "1",
            "--s2",
            "1",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("profit_reinvestment_ratio"),
        "error should name the offending field"
    );
    assert!(!out_dir.exists(), "no partial outputs on config failure");
}

#[test]
fn csv_exports_round_trip_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = write_config(tmp.path(), 60);
    let out = tmp.path().join("run");
    run_ok(&[
        "run",
        "--s1",
        "5",
        "--s2",
        "9",
        "--config",
        &cfg_path,
        "--out",
        out.to_str().unwrap(),
    ]);

    let config = ScenarioConfig::from_json_str(r#"{"horizon": 60}"#).unwrap();
    let result = run_simulation(&config, 5, 9).unwrap();

    let timeseries = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let mut lines = timeseries.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("period,wage,wage_adjust"));
    let mut rows = 0;
    for (line, record) in lines.zip(&result.records) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0].parse::<u32>().unwrap(), record.period);
        assert_eq!(fields[1].parse::<f64>().unwrap(), record.wage);
        assert_eq!(fields[4].parse::<f64>().unwrap(), record.consumer_wealth);
        assert_eq!(fields[7].parse::<f64>().unwrap(), record.total_utility);
        assert_eq!(fields[10].parse::<u32>().unwrap(), record.live_producers);
        rows += 1;
    }
    assert_eq!(rows, result.records.len());

    let prices = fs::read_to_string(out.join("prices.csv")).unwrap();
    let expected_rows: usize = result.records.iter().map(|r| r.producers.len()).sum();
    assert_eq!(prices.lines().count() - 1, expected_rows);
    let first = prices.lines().nth(1).unwrap();
    let fields: Vec<&str> = first.split(',').collect();
    assert_eq!(fields[0].parse::<u32>().unwrap(), 1);
    assert_eq!(
        fields[2].parse::<f64>().unwrap(),
        result.records[0].producers[0].price
    );
}

#[test]
fn sweep_grid_is_deterministic_and_line_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), 40);
    let out_a = tmp.path().join("s1");
    let out_b = tmp.path().join("s8");
    run_ok(&[
        "sweep",
        "--s1-range",
        "0:2",
        "--s2-range",
        "0:2",
        "--jobs",
        "4",
        "--config",
        &cfg,
        "--out",
        out_a.to_str().unwrap(),
    ]);
    let a = fs::read_to_string(out_a.join("runs.jsonl")).unwrap();
    assert_eq!(a.lines().count(), 4);

    run_ok(&[
        "sweep",
        "--s1-range",
        "0:2",
        "--s2-range",
        "0:2",
        "--jobs",
        "1",
        "--config",
        &cfg,
        "--out",
        out_b.to_str().unwrap(),
    ]);
    let b = fs::read_to_string(out_b.join("runs.jsonl")).unwrap();
    assert_eq!(a, b, "runs.jsonl must not depend on --jobs");

    // Lines arrive sorted by seed pair.
    let seeds: Vec<(u64, u64)> = a
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            (v["s1"].as_u64().unwrap(), v["s2"].as_u64().unwrap())
        })
        .collect();
    assert_eq!(seeds, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
}

fn fixture_summary(s1: u64, outcome: Outcome, producer_wealth: f64, shut: u32) -> RunSummary {
    RunSummary {
        s1,
        s2: 1,
        outcome,
        periods: 1000,
        live_producers: 10 - shut,
        shut_firms: shut,
        producer_wealth,
        consumer_wealth: 1000.0,
        gini_producers: 0.5,
        gini_consumers: 0.25,
        gini_consumers_initial: 0.0,
        total_utility: 10.0,
        wage: 30.0,
        leisure_pct: 90.0,
        invariant_violations: 0,
    }
}

#[test]
fn summarize_means_match_hand_computation() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs.jsonl");
    let fixtures = [
        fixture_summary(1, Outcome::Disequilibrium, 10.0, 4),
        fixture_summary(2, Outcome::Disequilibrium, 20.0, 6),
        fixture_summary(3, Outcome::Equilibrium, 100.0, 8),
    ];
    let mut text = fixtures
        .iter()
        .map(|s| serde_json::to_string(s).unwrap())
        .collect::<Vec<_>>()
        .join("\n");
    text.push_str("\nthis line is not json\n");
    text.push_str("{\"s1\":9,\"s2\":9,\"error\":\"run panicked\"}\n");
    fs::write(&runs, text).unwrap();

    let out = run_ok(&["summarize", runs.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("1 malformed lines skipped"));
    assert!(stdout.contains("1 failed runs excluded"));
    assert!(stdout.contains("3 classified of 5 lines"));

    let table = fs::read_to_string(tmp.path().join("summary_table.csv")).unwrap();
    let diseq: Vec<&str> = table
        .lines()
        .find(|l| l.starts_with("Disequilibrium"))
        .unwrap()
        .split(',')
        .collect();
    assert_eq!(diseq[1], "2");
    assert_eq!(diseq[2].parse::<f64>().unwrap(), 15.0); // mean producer wealth
    assert_eq!(diseq[4].parse::<f64>().unwrap(), 5.0); // mean shut firms
    let eq: Vec<&str> = table
        .lines()
        .find(|l| l.starts_with("Equilibrium"))
        .unwrap()
        .split(',')
        .collect();
    assert_eq!(eq[1], "1");
    assert_eq!(eq[2].parse::<f64>().unwrap(), 100.0);
}

#[test]
fn summarize_handles_an_empty_file() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs.jsonl");
    fs::write(&runs, "").unwrap();
    let out = run_ok(&["summarize", runs.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 classified of 0 lines"));
}

#[test]
fn graph_export_matches_the_stored_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), 30);
    let out = tmp.path().join("run");
    run_ok(&[
        "run",
        "--s1",
        "4",
        "--s2",
        "7",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    run_ok(&[
        "export-graph",
        "--out",
        out.to_str().unwrap(),
        "--period",
        "0",
    ]);

    let dot = fs::read_to_string(out.join("graph_t0.dot")).unwrap();
    let producer_nodes = dot
        .lines()
        .filter(|l| l.contains("role=\"producer\""))
        .count();
    let consumer_nodes = dot
        .lines()
        .filter(|l| l.contains("role=\"consumer\""))
        .count();
    assert_eq!(producer_nodes, 10);
    assert_eq!(consumer_nodes, 80);

    // Every edge leaves a producer node.
    for line in dot.lines().filter(|l| l.contains("->")) {
        assert!(
            line.trim_start().starts_with('p'),
            "edge from non-producer: {line}"
        );
    }

    // Wealth annotations agree with the initial endowment.
    assert!(dot.contains("wealth=\"1000000\""));
    assert!(dot.contains("wealth=\"1000\""));

    // Missing snapshot periods exit nonzero.
    let missing = bin()
        .args([
            "export-graph",
            "--out",
            out.to_str().unwrap(),
            "--period",
            "17",
        ])
        .output()
        .unwrap();
    assert!(!missing.status.success());
}
