//! End-to-end tests for the `mass` binary: each subcommand is exercised
//! through real files in a temp directory, checking exit codes and outputs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mass_core::io::{self, Record};
use mass_core::GridWorld;
use tempfile::TempDir;

fn mass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mass"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Open 8x8 map plus a scenario with `n` sampled entries.
fn write_instance(dir: &Path, n: usize) -> (String, String) {
    let world = GridWorld::open(8, 8);
    let map = dir.join("empty-8-8.map");
    fs::write(&map, io::write_map(&world)).unwrap();
    let entries = io::sample_entries(&world, "empty-8-8.map", n, 3);
    let scen = dir.join("empty-8-8.scen");
    fs::write(&scen, io::write_scenario(&entries, &world)).unwrap();
    (map.to_string_lossy().into_owned(), scen.to_string_lossy().into_owned())
}

fn parse_out(path: &Path) -> Vec<Record> {
    io::parse_records(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_a_validating_result() {
    let dir = TempDir::new().unwrap();
    let (map, scen) = write_instance(dir.path(), 1);
    let out_file = dir.path().join("result.jsonl");

    let out = mass(&[
        "solve", "--map", &map, "--scen", &scen, "--agents", "1", "--sps", "bas", "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let records = parse_out(&out_file);
    let soc = records
        .iter()
        .find_map(|r| match r {
            Record::Result(r) => r.soc,
            _ => None,
        })
        .expect("result record with a cost");
    assert!(soc.is_finite() && soc > 0.0);

    let check = mass(&["validate", "--plans", out_file.to_str().unwrap(), "--map", &map]);
    assert_eq!(code(&check), 0, "stderr: {}", stderr(&check));
}

#[test]
fn solve_rejects_agent_counts_beyond_the_scenario() {
    let dir = TempDir::new().unwrap();
    let (map, scen) = write_instance(dir.path(), 2);
    let out = mass(&["solve", "--map", &map, "--scen", &scen, "--agents", "5"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("exceeds"), "stderr: {}", stderr(&out));
}

#[test]
fn solve_with_zero_cutoff_reports_failure() {
    let dir = TempDir::new().unwrap();
    let (map, scen) = write_instance(dir.path(), 1);
    let out = mass(&[
        "solve", "--map", &map, "--scen", &scen, "--agents", "1", "--cutoff", "0",
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn unknown_flags_are_usage_errors() {
    let out = mass(&["solve", "--nonsense"]);
    assert_eq!(code(&out), 1);
}

fn write_depot(dir: &Path) -> (String, String) {
    let (world, annotations) = io::depot_map();
    let map = dir.join("depot.map");
    fs::write(&map, io::write_map(&world)).unwrap();
    let annot = dir.join("depot.annot");
    fs::write(&annot, io::write_annotations(&annotations, &world)).unwrap();
    (map.to_string_lossy().into_owned(), annot.to_string_lossy().into_owned())
}

#[test]
fn lifelong_runs_are_reproducible_and_validate() {
    let dir = TempDir::new().unwrap();
    let (map, annot) = write_depot(dir.path());
    let args = |out: &str| {
        vec![
            "lifelong".into(),
            "--map".into(),
            map.clone(),
            "--annot".into(),
            annot.clone(),
            "--agents".into(),
            "2".into(),
            "--duration".into(),
            "60".into(),
            "--seed".into(),
            "5".into(),
            "--out".into(),
            out.to_string(),
        ]
    };
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let out = Command::new(env!("CARGO_BIN_EXE_mass"))
        .args(args(a.to_str().unwrap()))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let out = Command::new(env!("CARGO_BIN_EXE_mass"))
        .args(args(b.to_str().unwrap()))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let first = fs::read(&a).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, fs::read(&b).unwrap(), "same seed must reproduce the log byte for byte");

    let records = parse_out(&a);
    let throughput = records
        .iter()
        .find_map(|r| match r {
            Record::Summary(s) => Some(s.throughput),
            _ => None,
        })
        .expect("summary record");
    assert!(throughput >= 0.0);

    let check = mass(&["validate", "--plans", a.to_str().unwrap(), "--map", &map]);
    assert_eq!(code(&check), 0, "stderr: {}", stderr(&check));
}

#[test]
fn lifelong_rejects_window_shorter_than_period() {
    let dir = TempDir::new().unwrap();
    let (map, annot) = write_depot(dir.path());
    let out = mass(&[
        "lifelong", "--map", &map, "--annot", &annot, "--agents", "2", "--tw", "5", "--th", "10",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("--tw"), "stderr: {}", stderr(&out));
}

#[test]
fn validate_rejects_corrupted_plan_files() {
    let dir = TempDir::new().unwrap();
    let (map, _) = write_instance(dir.path(), 1);
    let plans = dir.path().join("broken.jsonl");
    fs::write(&plans, "{\"type\":\"result\",\"instance\":0,\"succ").unwrap();
    let out = mass(&["validate", "--plans", plans.to_str().unwrap(), "--map", &map]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bench_emits_per_row_results_and_one_aggregate() {
    let dir = TempDir::new().unwrap();
    let (map, scen) = write_instance(dir.path(), 4);
    let map_name = Path::new(&map).file_name().unwrap().to_str().unwrap();
    let scen_name = Path::new(&scen).file_name().unwrap().to_str().unwrap();
    let suite = dir.path().join("suite.toml");
    fs::write(
        &suite,
        format!(
            "[[run]]\nmap = \"{map_name}\"\nscen = \"{scen_name}\"\nagents = 2\n\n\
             [[run]]\nmap = \"{map_name}\"\nscen = \"{scen_name}\"\nagents = 4\n\
             [run.config]\nlevel1 = \"pp\"\nseed = 7\n"
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("results");

    let out = Command::new(env!("CARGO_BIN_EXE_mass"))
        .args([
            "bench", "--suite", suite.to_str().unwrap(), "--out", out_dir.to_str().unwrap(),
        ])
        .env("MASS_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let records = parse_out(&out_dir.join("results.jsonl"));
    let results = records.iter().filter(|r| matches!(r, Record::Result(_))).count();
    let aggregates: Vec<_> = records
        .iter()
        .filter_map(|r| match r {
            Record::Aggregate(a) => Some(a),
            _ => None,
        })
        .collect();
    assert_eq!(results, 2);
    assert_eq!(aggregates.len(), 1);
    assert_eq!(aggregates[0].runs, 2);
    assert_eq!(aggregates[0].solved, 2);
    assert!((aggregates[0].success_rate - 1.0).abs() < 1e-12);
}
