//! `mass` — command-line front end for the planner stack.
//!
//! Subcommands: `solve` (single-shot multi-agent planning), `lifelong`
//! (windowed episode simulation with task assignment), `validate` (replay a
//! results file against the kinodynamic and collision checkers), and `bench`
//! (run a manifest of instances and aggregate the outcomes).
//!
//! Exit codes: 0 success, 1 usage/file errors, 2 domain failure (no solution,
//! cutoff, or validation rejection). Output files contain only deterministic
//! records — rerunning with the same seed reproduces them byte for byte;
//! wall-clock measurements appear in bench timing records and on stderr.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use mass_core::io::{
    self, LifelongSection, MetaRecord, Record, ResultRecord, RunConfig, SummaryRecord,
    TimingRecord, RECORD_SCHEMA,
};
use mass_core::lifelong::{simulate, AgentStart, GoalSource, LifelongConfig};
use mass_core::mapf::{self, MapfAlgo, MapfFailureKind};
use mass_core::profile::SpsKind;
use mass_core::{
    makespan, sum_of_cost, validate, GridWorld, KinodynamicLimits, MapAnnotations, Orientation,
    ValidationReport,
};

#[derive(Parser)]
#[command(name = "mass", version, about = "Multi-agent kinodynamic planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one multi-agent instance from a map and scenario file.
    Solve(SolveArgs),
    /// Simulate continual task assignment with periodic windowed replanning.
    Lifelong(LifelongArgs),
    /// Re-check a results file against the dynamics and collision validators.
    Validate(ValidateArgs),
    /// Run a manifest of instances and write per-instance plus aggregate records.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Grid map file.
    #[arg(long)]
    map: PathBuf,
    /// Scenario file listing start/goal pairs.
    #[arg(long)]
    scen: PathBuf,
    /// Number of scenario entries to plan (taken from the top).
    #[arg(long)]
    agents: u32,
    /// Coordination strategy: priority orderings (pp) or priority search (pbs).
    #[arg(long, default_value = "pbs", value_parser = parse_level1)]
    level1: MapfAlgo,
    /// Speed-profile solver: closed-form shapes (bas) or spline search (bcs).
    #[arg(long, default_value = "bas", value_parser = parse_sps)]
    sps: SpsKind,
    /// Partial expansion: defer sibling segment solves until needed.
    #[arg(long, default_value = "on", value_parser = parse_toggle)]
    pe: bool,
    /// Wall-clock budget in seconds; exceeded budget exits 2.
    #[arg(long, default_value_t = 60.0)]
    cutoff: f64,
    /// Seed for tie-breaking and restart shuffles.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record file to write (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LifelongArgs {
    /// Grid map file.
    #[arg(long)]
    map: PathBuf,
    /// Shelf/station annotation file.
    #[arg(long)]
    annot: PathBuf,
    /// Number of agents to place.
    #[arg(long)]
    agents: u32,
    /// Planning window length in seconds (must be ≥ the replanning period).
    #[arg(long, default_value_t = 20.0)]
    tw: f64,
    /// Replanning period in seconds.
    #[arg(long, default_value_t = 10.0)]
    th: f64,
    /// Simulated horizon in seconds.
    #[arg(long, default_value_t = 300.0)]
    duration: f64,
    /// Speed-profile solver: closed-form shapes (bas) or spline search (bcs).
    #[arg(long, default_value = "bas", value_parser = parse_sps)]
    sps: SpsKind,
    /// Seed for task assignment and replanning order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record file to write (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Results file containing plan records.
    #[arg(long)]
    plans: PathBuf,
    /// Grid map file the plans were produced on.
    #[arg(long)]
    map: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite manifest (TOML): rows of map, scen, agents, and optional config.
    #[arg(long)]
    suite: PathBuf,
    /// Directory for results.jsonl (created if missing).
    #[arg(long)]
    out: PathBuf,
}

fn parse_level1(s: &str) -> Result<MapfAlgo, String> {
    match s {
        "pp" => Ok(MapfAlgo::Pp),
        "pbs" => Ok(MapfAlgo::Pbs),
        _ => Err(format!("unknown coordination strategy {s:?} (expected pp or pbs)")),
    }
}

fn parse_sps(s: &str) -> Result<SpsKind, String> {
    match s {
        "bas" => Ok(SpsKind::Bas),
        "bcs" => Ok(SpsKind::Bcs),
        "bezier" => Ok(SpsKind::Bezier),
        _ => Err(format!("unknown profile solver {s:?} (expected bas or bcs)")),
    }
}

fn parse_toggle(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(format!("expected on or off, got {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => run_solve(&args),
        Command::Lifelong(args) => run_lifelong(&args),
        Command::Validate(args) => run_validate(&args),
        Command::Bench(args) => run_bench(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_map(path: &Path) -> Result<GridWorld> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading map {}", path.display()))?;
    io::parse_map(&text).with_context(|| format!("parsing map {}", path.display()))
}

fn load_annotations(path: &Path, world: &GridWorld) -> Result<MapAnnotations> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading annotations {}", path.display()))?;
    io::parse_annotations(&text, world)
        .with_context(|| format!("parsing annotations {}", path.display()))
}

fn emit(out: Option<&Path>, records: &[Record]) -> Result<()> {
    let text = io::write_records(records);
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn run_solve(args: &SolveArgs) -> Result<ExitCode> {
    let world = load_map(&args.map)?;
    let scen_text = fs::read_to_string(&args.scen)
        .with_context(|| format!("reading scenario {}", args.scen.display()))?;
    let entries = io::parse_scenario(&scen_text, &world)
        .with_context(|| format!("parsing scenario {}", args.scen.display()))?;
    if args.agents == 0 {
        bail!("--agents must be at least 1");
    }
    if args.agents as usize > entries.len() {
        bail!(
            "--agents {} exceeds the {} scenario entries in {}",
            args.agents,
            entries.len(),
            args.scen.display()
        );
    }
    let config = RunConfig {
        level1: args.level1,
        sps: args.sps,
        partial_expansion: args.pe,
        cutoff_seconds: args.cutoff,
        seed: args.seed,
        ..RunConfig::default()
    };
    let agents = io::agents_from_entries(&entries, &world, args.agents as usize);
    let limits = config.limits.clone();

    let started = Instant::now();
    let outcome = mapf::solve(&world, &limits, &agents, &config.mapf());
    let total = started.elapsed().as_secs_f64();

    let meta = Record::Meta(MetaRecord {
        schema: RECORD_SCHEMA,
        command: "solve".into(),
        map: args.map.display().to_string(),
        agents: args.agents,
        config,
    });
    match outcome {
        Ok(sol) => {
            eprintln!(
                "solved {} agents in {total:.2} s (coordination {:.2} s, search {:.2} s, \
                 segments {:.2} s, {} segment solves)",
                agents.len(),
                sol.stats.level1_time,
                sol.stats.level2_time,
                sol.stats.level3_time,
                sol.stats.sps_calls
            );
            let result = Record::Result(ResultRecord {
                instance: 0,
                success: true,
                soc: Some(sol.cost),
                makespan: Some(makespan(&sol.plans)),
                plans: sol.plans,
            });
            emit(args.out.as_deref(), &[meta, result])?;
            Ok(ExitCode::SUCCESS)
        }
        Err(fail) => {
            eprintln!("no solution after {total:.2} s: {}", failure_label(&fail.kind));
            let result = Record::Result(ResultRecord {
                instance: 0,
                success: false,
                soc: None,
                makespan: None,
                plans: Vec::new(),
            });
            emit(args.out.as_deref(), &[meta, result])?;
            Ok(ExitCode::from(2))
        }
    }
}

fn failure_label(kind: &MapfFailureKind) -> String {
    match kind {
        MapfFailureKind::Stuck { agent } => format!("agent {agent} could not be routed"),
        MapfFailureKind::Exhausted => "priority search exhausted".into(),
        MapfFailureKind::Cutoff => "time budget exceeded".into(),
    }
}

// ---------------------------------------------------------------------------
// lifelong
// ---------------------------------------------------------------------------

fn run_lifelong(args: &LifelongArgs) -> Result<ExitCode> {
    if args.tw < args.th {
        bail!("--tw ({}) must be at least --th ({})", args.tw, args.th);
    }
    if args.th <= 0.0 || args.duration <= 0.0 {
        bail!("--th and --duration must be positive");
    }
    let world = load_map(&args.map)?;
    let annotations = load_annotations(&args.annot, &world)?;
    if annotations.shelves.is_empty() || annotations.stations.is_empty() {
        bail!("annotation file must define at least one shelf and one station");
    }
    let starts = place_agents(&world, &annotations, args.agents as usize)?;

    let config = RunConfig {
        sps: args.sps,
        seed: args.seed,
        lifelong: Some(LifelongSection {
            window: args.tw,
            period: args.th,
            duration: args.duration,
        }),
        ..RunConfig::default()
    };
    let sim = LifelongConfig {
        window: args.tw,
        period: args.th,
        horizon: args.duration,
        seed: args.seed,
        ssipp: config.ssipp(),
        ..LifelongConfig::default()
    };
    let limits = config.limits.clone();

    let started = Instant::now();
    let result = simulate(&world, &limits, &starts, GoalSource::Assigner(annotations), &sim);
    eprintln!(
        "{} goals in {} simulated seconds (throughput {:.4}/s) — {:.2} s wall clock",
        result.completions.len(),
        args.duration,
        result.throughput,
        started.elapsed().as_secs_f64()
    );

    let mut records = vec![
        Record::Meta(MetaRecord {
            schema: RECORD_SCHEMA,
            command: "lifelong".into(),
            map: args.map.display().to_string(),
            agents: args.agents,
            config,
        }),
        Record::Result(ResultRecord {
            instance: 0,
            success: true,
            soc: None,
            makespan: None,
            plans: result.executed.clone(),
        }),
    ];
    records.extend(result.episodes.iter().map(|e| Record::Episode(io::EpisodeLogRecord::from(e))));
    records.push(Record::Summary(SummaryRecord {
        horizon: args.duration,
        completed: result.completions.len(),
        throughput: result.throughput,
        completions: result
            .completions
            .iter()
            .map(|c| io::CompletionRecord::new(&world, c))
            .collect(),
    }));
    emit(args.out.as_deref(), &records)?;
    Ok(ExitCode::SUCCESS)
}

/// Deterministic placement: the first `n` free, unannotated cells in scan
/// order. Keeps identical invocations byte-identical without a scenario file.
fn place_agents(
    world: &GridWorld,
    annotations: &MapAnnotations,
    n: usize,
) -> Result<Vec<AgentStart>> {
    let mut taken = vec![false; world.vertex_count() as usize];
    for &v in annotations.shelves.iter().chain(&annotations.stations) {
        taken[v as usize] = true;
    }
    let mut starts = Vec::with_capacity(n);
    for y in 0..world.height() {
        for x in 0..world.width() {
            let v = world.vertex(x, y);
            if world.is_free(v) && !taken[v as usize] {
                starts.push(AgentStart { vertex: v, orientation: Orientation::East });
                if starts.len() == n {
                    return Ok(starts);
                }
            }
        }
    }
    bail!("map has only {} free unannotated cells, need {n}", starts.len())
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn run_validate(args: &ValidateArgs) -> Result<ExitCode> {
    let world = load_map(&args.map)?;
    let text = fs::read_to_string(&args.plans)
        .with_context(|| format!("reading {}", args.plans.display()))?;
    let records = io::parse_records(&text)
        .with_context(|| format!("parsing {}", args.plans.display()))?;

    let limits = records
        .iter()
        .find_map(|r| match r {
            Record::Meta(m) => Some(m.config.limits.clone()),
            _ => None,
        })
        .unwrap_or_else(KinodynamicLimits::default);

    let mut checked = 0usize;
    let mut all_ok = true;
    for record in &records {
        let Record::Result(result) = record else { continue };
        if !result.success {
            println!("instance {}: unsolved, nothing to check", result.instance);
            continue;
        }
        let report = validate(&result.plans, &world, &limits, 0.01);
        print_report(result, &report);
        checked += 1;
        all_ok &= report.ok;
    }
    if checked == 0 {
        bail!("{} contains no solved plan records", args.plans.display());
    }
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn print_report(result: &ResultRecord, report: &ValidationReport) {
    if report.ok {
        println!(
            "instance {}: ok ({} plans, soc {:.3}, makespan {:.3})",
            result.instance,
            result.plans.len(),
            sum_of_cost(&result.plans),
            makespan(&result.plans)
        );
    } else {
        println!(
            "instance {}: {} violations",
            result.instance,
            report.violations.len()
        );
        for v in &report.violations {
            println!("  {:?} agents {:?} at t={:.3}: {}", v.kind, v.agents, v.time, v.detail);
        }
    }
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct Suite {
    #[serde(default)]
    run: Vec<SuiteRow>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteRow {
    map: String,
    scen: String,
    agents: u32,
    #[serde(default)]
    config: RunConfig,
}

struct RowOutcome {
    result: ResultRecord,
    timing: TimingRecord,
    label: String,
    agents: u32,
}

fn run_bench(args: &BenchArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.suite)
        .with_context(|| format!("reading suite {}", args.suite.display()))?;
    let suite: Suite = toml::from_str(&text)
        .with_context(|| format!("parsing suite {}", args.suite.display()))?;
    if suite.run.is_empty() {
        bail!("suite {} has no [[run]] rows", args.suite.display());
    }
    let base = args.suite.parent().unwrap_or(Path::new("."));

    let workers = std::env::var("MASS_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(1)
        .clamp(1, suite.run.len());

    let next = AtomicUsize::new(0);
    let outcomes: Mutex<Vec<Option<Result<RowOutcome>>>> =
        Mutex::new((0..suite.run.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= suite.run.len() {
                    break;
                }
                let outcome = bench_row(base, i, &suite.run[i]);
                outcomes.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    let mut records = Vec::new();
    let mut lines = Vec::new();
    let mut solved = 0usize;
    let mut soc_sum = 0.0;
    let mut makespan_sum = 0.0;
    let mut seconds_sum = 0.0;
    let rows = suite.run.len();
    for outcome in outcomes.into_inner().unwrap() {
        let row = outcome.expect("every row visited")?;
        seconds_sum += row.timing.total_seconds;
        let status = if row.result.success {
            solved += 1;
            soc_sum += row.result.soc.unwrap_or(0.0);
            makespan_sum += row.result.makespan.unwrap_or(0.0);
            "solved"
        } else {
            "failed"
        };
        lines.push(format!(
            "{:>3}  {:<32} {:>6}  {:<7} {:>9}  {:>9}  {:>8.2}",
            row.result.instance,
            row.label,
            row.agents,
            status,
            row.result.soc.map_or("-".into(), |v| format!("{v:.2}")),
            row.result.makespan.map_or("-".into(), |v| format!("{v:.2}")),
            row.timing.total_seconds,
        ));
        records.push(Record::Result(row.result));
        records.push(Record::Timing(row.timing));
    }
    records.push(Record::Aggregate(io::AggregateRecord {
        runs: rows as u32,
        solved: solved as u32,
        success_rate: solved as f64 / rows as f64,
        mean_soc: (solved > 0).then(|| soc_sum / solved as f64),
        mean_makespan: (solved > 0).then(|| makespan_sum / solved as f64),
        mean_total_seconds: seconds_sum / rows as f64,
    }));

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join("results.jsonl");
    fs::write(&path, io::write_records(&records))
        .with_context(|| format!("writing {}", path.display()))?;

    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "{:>3}  {:<32} {:>6}  {:<7} {:>9}  {:>9}  {:>8}",
        "row", "map", "agents", "status", "soc", "makespan", "seconds"
    )?;
    for line in lines {
        writeln!(stdout, "{line}")?;
    }
    writeln!(
        stdout,
        "aggregate: {solved}/{rows} solved ({:.1}%), mean runtime {:.2} s, results in {}",
        100.0 * solved as f64 / rows as f64,
        seconds_sum / rows as f64,
        path.display()
    )?;
    Ok(ExitCode::SUCCESS)
}

fn bench_row(base: &Path, index: usize, row: &SuiteRow) -> Result<RowOutcome> {
    let map_path = base.join(&row.map);
    let world = load_map(&map_path)?;
    let scen_path = base.join(&row.scen);
    let scen_text = fs::read_to_string(&scen_path)
        .with_context(|| format!("reading scenario {}", scen_path.display()))?;
    let entries = io::parse_scenario(&scen_text, &world)
        .with_context(|| format!("parsing scenario {}", scen_path.display()))?;
    if row.agents as usize > entries.len() {
        bail!(
            "row {index}: agents {} exceeds the {} entries in {}",
            row.agents,
            entries.len(),
            scen_path.display()
        );
    }
    let agents = io::agents_from_entries(&entries, &world, row.agents as usize);

    let started = Instant::now();
    let outcome = mapf::solve(&world, &row.config.limits, &agents, &row.config.mapf());
    let total = started.elapsed().as_secs_f64();

    let (result, stats) = match outcome {
        Ok(sol) => (
            ResultRecord {
                instance: index as u32,
                success: true,
                soc: Some(sol.cost),
                makespan: Some(makespan(&sol.plans)),
                plans: sol.plans,
            },
            sol.stats,
        ),
        Err(fail) => (
            ResultRecord {
                instance: index as u32,
                success: false,
                soc: None,
                makespan: None,
                plans: Vec::new(),
            },
            fail.stats,
        ),
    };
    Ok(RowOutcome {
        result,
        timing: TimingRecord::from_stats(index as u32, total, &stats),
        label: row.map.clone(),
        agents: row.agents,
    })
}
