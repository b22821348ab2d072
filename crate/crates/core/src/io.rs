//! Benchmark ingestion and result persistence.
//!
//! Reads grid maps and scenario files in the de-facto benchmark text formats
//! (`.map` / `.scen` version 1), shelf/station annotation files, and a
//! versioned TOML run configuration. Run outcomes are written as
//! line-delimited JSON records with a stable schema; plans round-trip
//! bit-exactly so the validator can replay them without the planner.
//!
//! Wall-clock measurements live in their own record kind: everything else in
//! a record stream is a pure function of inputs and seed, so two runs with
//! the same configuration produce byte-identical result lines.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ActionKind, GridWorld, KinodynamicLimits, Orientation, Plan, TaskKind, Vertex};
use crate::lifelong::{Completion, EpisodeRecord, MapAnnotations};
use crate::mapf::{AgentSpec, MapfAlgo, MapfConfig, MapfStats};
use crate::profile::{SpeedProfile, SpsKind, SpsParams};
use crate::ssipp::SsippConfig;

// ---------------------------------------------------------------------------
// Grid maps
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum MapError {
    #[error("map header: expected `{expected}`, got `{got}`")]
    Header { expected: &'static str, got: String },
    #[error("map header: `{key}` is not a positive integer: `{got}`")]
    HeaderNumber { key: &'static str, got: String },
    #[error("map body has {got} rows, header promised {want}")]
    RowCount { want: u32, got: usize },
    #[error("map row {row} has {got} cells, header promised {want}")]
    RowLength { row: usize, want: u32, got: usize },
    #[error("unknown map character {c:?} at ({x}, {y})")]
    UnknownChar { c: char, x: u32, y: u32 },
}

fn header_number(line: Option<&str>, key: &'static str) -> Result<u32, MapError> {
    let line = line.unwrap_or("");
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(MapError::Header { expected: key, got: line.to_string() });
    }
    let value = parts.next().unwrap_or("");
    match value.parse::<u32>() {
        Ok(n) if n > 0 && parts.next().is_none() => Ok(n),
        _ => Err(MapError::HeaderNumber { key, got: line.to_string() }),
    }
}

/// Parses a benchmark grid map: a `type`/`height`/`width`/`map` header
/// followed by one character per cell. `.` and `G` are free; `@`, `O`, `T`
/// and `W` are blocked. Any other cell character is an error, as are row
/// count or length mismatches. Line endings may be LF or CRLF.
pub fn parse_map(text: &str) -> Result<GridWorld, MapError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));

    let type_line = lines.next().unwrap_or("");
    if type_line.split_whitespace().next() != Some("type") {
        return Err(MapError::Header { expected: "type", got: type_line.to_string() });
    }
    let height = header_number(lines.next(), "height")?;
    let width = header_number(lines.next(), "width")?;
    let map_line = lines.next().unwrap_or("");
    if map_line.trim() != "map" {
        return Err(MapError::Header { expected: "map", got: map_line.to_string() });
    }

    let mut blocked = Vec::with_capacity((width as usize) * (height as usize));
    let mut rows = 0usize;
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let y = rows as u32;
        rows += 1;
        if rows > height as usize {
            continue; // counted and reported below
        }
        let cells = line.chars().count();
        if cells != width as usize {
            return Err(MapError::RowLength { row: rows, want: width, got: cells });
        }
        for (x, c) in line.chars().enumerate() {
            match c {
                '.' | 'G' => blocked.push(false),
                '@' | 'O' | 'T' | 'W' => blocked.push(true),
                other => {
                    return Err(MapError::UnknownChar { c: other, x: x as u32, y });
                }
            }
        }
    }
    if rows != height as usize {
        return Err(MapError::RowCount { want: height, got: rows });
    }
    Ok(GridWorld::new(width, height, 1.0, blocked))
}

/// Writes a world back in the benchmark map format (`.` free, `@` blocked).
pub fn write_map(world: &GridWorld) -> String {
    let mut out = String::new();
    out.push_str("type octile\n");
    out.push_str(&format!("height {}\n", world.height()));
    out.push_str(&format!("width {}\n", world.width()));
    out.push_str("map\n");
    for y in 0..world.height() {
        for x in 0..world.width() {
            out.push(if world.is_blocked(world.vertex(x, y)) { '@' } else { '.' });
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// One start/goal pair from a benchmark scenario file. The first `M` entries
/// of a file define an `M`-agent instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub bucket: u32,
    pub map_name: String,
    pub start: (u32, u32),
    pub goal: (u32, u32),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario must start with `version 1`, got `{0}`")]
    Version(String),
    #[error("scenario line {line}: expected 9 fields, got {got}")]
    Fields { line: usize, got: usize },
    #[error("scenario line {line}: `{text}` is not a valid {field}")]
    Number { line: usize, field: &'static str, text: String },
    #[error("scenario line {line}: {which} ({x}, {y}) is outside the {w}x{h} map")]
    OutOfBounds { line: usize, which: &'static str, x: u32, y: u32, w: u32, h: u32 },
    #[error("scenario line {line}: {which} ({x}, {y}) is a blocked cell")]
    Blocked { line: usize, which: &'static str, x: u32, y: u32 },
}

fn scen_number(line: usize, field: &'static str, text: &str) -> Result<u32, ScenarioError> {
    text.parse::<u32>()
        .map_err(|_| ScenarioError::Number { line, field, text: text.to_string() })
}

fn scen_cell(
    world: &GridWorld,
    line: usize,
    which: &'static str,
    x: u32,
    y: u32,
) -> Result<(), ScenarioError> {
    if !world.in_bounds(x as i64, y as i64) {
        return Err(ScenarioError::OutOfBounds {
            line,
            which,
            x,
            y,
            w: world.width(),
            h: world.height(),
        });
    }
    if world.is_blocked(world.vertex(x, y)) {
        return Err(ScenarioError::Blocked { line, which, x, y });
    }
    Ok(())
}

/// Parses a version-1 scenario file against `world`: a `version 1` header,
/// then one whitespace-separated row per entry (bucket, map name, map width,
/// map height, start x/y, goal x/y, reference distance). Starts and goals
/// must be inside the map and unblocked. The width/height and distance
/// columns are not validated; published files disagree with their maps often
/// enough that rejecting them would refuse real benchmarks.
pub fn parse_scenario(text: &str, world: &GridWorld) -> Result<Vec<ScenarioEntry>, ScenarioError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r')).enumerate();
    let (_, header) = lines.next().unwrap_or((0, ""));
    let head: Vec<&str> = header.split_whitespace().collect();
    if head != ["version", "1"] {
        return Err(ScenarioError::Version(header.to_string()));
    }

    let mut entries = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1; // 1-based, matching editor displays
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 9 {
            return Err(ScenarioError::Fields { line: n, got: fields.len() });
        }
        let bucket = scen_number(n, "bucket", fields[0])?;
        let sx = scen_number(n, "start x", fields[4])?;
        let sy = scen_number(n, "start y", fields[5])?;
        let gx = scen_number(n, "goal x", fields[6])?;
        let gy = scen_number(n, "goal y", fields[7])?;
        scen_cell(world, n, "start", sx, sy)?;
        scen_cell(world, n, "goal", gx, gy)?;
        entries.push(ScenarioEntry {
            bucket,
            map_name: fields[1].to_string(),
            start: (sx, sy),
            goal: (gx, gy),
        });
    }
    Ok(entries)
}

/// Writes entries as a version-1 scenario file. The reference-distance
/// column is the straight-line octile distance; consumers here ignore it.
pub fn write_scenario(entries: &[ScenarioEntry], world: &GridWorld) -> String {
    let mut out = String::from("version 1\n");
    for e in entries {
        let dx = (e.goal.0 as f64 - e.start.0 as f64).abs();
        let dy = (e.goal.1 as f64 - e.start.1 as f64).abs();
        let octile = dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy);
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.8}\n",
            e.bucket,
            e.map_name,
            world.width(),
            world.height(),
            e.start.0,
            e.start.1,
            e.goal.0,
            e.goal.1,
            octile,
        ));
    }
    out
}

/// Builds the `n`-agent instance from the first `n` scenario entries. Agents
/// are numbered in file order and all face east initially (the scenario
/// format carries no heading).
pub fn agents_from_entries(entries: &[ScenarioEntry], world: &GridWorld, n: usize) -> Vec<AgentSpec> {
    entries[..n]
        .iter()
        .enumerate()
        .map(|(i, e)| AgentSpec {
            id: i as u32,
            start: world.vertex(e.start.0, e.start.1),
            orientation: Orientation::East,
            goal: world.vertex(e.goal.0, e.goal.1),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Shelf / station annotations
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("annotation line {line}: expected `shelf X Y` or `station X Y`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("annotation line {line}: ({x}, {y}) is outside the map")]
    OutOfBounds { line: usize, x: u32, y: u32 },
    #[error("annotation line {line}: ({x}, {y}) is blocked; annotated cells must be reachable")]
    Blocked { line: usize, x: u32, y: u32 },
}

/// Parses a shelf/station annotation file: one `shelf X Y` or `station X Y`
/// per line, `#` comments and blank lines ignored. Annotated cells are task
/// locations, so they must be free cells of the map.
pub fn parse_annotations(
    text: &str,
    world: &GridWorld,
) -> Result<MapAnnotations, AnnotationError> {
    let mut out = MapAnnotations { shelves: Vec::new(), stations: Vec::new() };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r').trim();
        let n = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let malformed = || AnnotationError::Malformed { line: n, text: line.to_string() };
        if fields.len() != 3 {
            return Err(malformed());
        }
        let x: u32 = fields[1].parse().map_err(|_| malformed())?;
        let y: u32 = fields[2].parse().map_err(|_| malformed())?;
        if !world.in_bounds(x as i64, y as i64) {
            return Err(AnnotationError::OutOfBounds { line: n, x, y });
        }
        let v = world.vertex(x, y);
        if world.is_blocked(v) {
            return Err(AnnotationError::Blocked { line: n, x, y });
        }
        match fields[0] {
            "shelf" => out.shelves.push(v),
            "station" => out.stations.push(v),
            _ => return Err(malformed()),
        }
    }
    Ok(out)
}

/// Writes annotations in the format [`parse_annotations`] reads.
pub fn write_annotations(annotations: &MapAnnotations, world: &GridWorld) -> String {
    let mut out = String::new();
    for &v in &annotations.shelves {
        out.push_str(&format!("shelf {} {}\n", world.x_of(v), world.y_of(v)));
    }
    for &v in &annotations.stations {
        out.push_str(&format!("station {} {}\n", world.x_of(v), world.y_of(v)));
    }
    out
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

pub const CONFIG_VERSION: u32 = 1;

/// Lifelong-simulation section of a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifelongSection {
    /// Planning window length in seconds (how far each committed plan looks).
    pub window: f64,
    /// Replanning period in seconds; must not exceed `window`.
    pub period: f64,
    /// Total simulated seconds.
    pub duration: f64,
}

/// Versioned run configuration, read from TOML. Every field has a default,
/// so a config file only states what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    /// Coordination algorithm: prioritized orders (`pp`) or the priority
    /// tree (`pbs`).
    pub level1: MapfAlgo,
    /// Segment solver: `bas` (closed-form, incomplete) or `bcs` (spline
    /// feasibility, complete).
    pub sps: SpsKind,
    pub partial_expansion: bool,
    pub limits: KinodynamicLimits,
    pub cutoff_seconds: f64,
    /// Optimality gap of the spline solver's duration search, seconds.
    pub bcs_epsilon: f64,
    /// Cap on spline pieces / curve control values.
    pub bcs_control_points: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lifelong: Option<LifelongSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sps = SpsParams::default();
        Self {
            version: CONFIG_VERSION,
            level1: MapfAlgo::Pbs,
            sps: SpsKind::Bas,
            partial_expansion: true,
            limits: KinodynamicLimits::default(),
            cutoff_seconds: 60.0,
            bcs_epsilon: sps.epsilon,
            bcs_control_points: sps.control_points,
            seed: 0,
            lifelong: None,
        }
    }
}

impl RunConfig {
    /// Search settings implied by this configuration.
    pub fn ssipp(&self) -> SsippConfig {
        SsippConfig {
            sps: self.sps,
            sps_params: SpsParams {
                epsilon: self.bcs_epsilon,
                control_points: self.bcs_control_points,
            },
            partial_expansion: self.partial_expansion,
            ..SsippConfig::default()
        }
    }

    /// Coordination settings implied by this configuration.
    pub fn mapf(&self) -> MapfConfig {
        MapfConfig {
            algo: self.level1,
            ssipp: self.ssipp(),
            seed: self.seed,
            time_limit: Some(self.cutoff_seconds),
            ..MapfConfig::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config version {got} is not supported; this build reads version {want}")]
    Version { want: u32, got: u32 },
    #[error("cutoff_seconds must be > 0, got {0}")]
    Cutoff(f64),
    #[error(
        "lifelong window must be at least the period and both must be positive \
         (window {window}, period {period})"
    )]
    Window { window: f64, period: f64 },
}

/// Parses and validates a TOML run configuration.
pub fn parse_run_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text)?;
    if config.version != CONFIG_VERSION {
        return Err(ConfigError::Version { want: CONFIG_VERSION, got: config.version });
    }
    if !(config.cutoff_seconds > 0.0) {
        return Err(ConfigError::Cutoff(config.cutoff_seconds));
    }
    if let Some(l) = config.lifelong {
        if !(l.period > 0.0) || l.window < l.period {
            return Err(ConfigError::Window { window: l.window, period: l.period });
        }
    }
    Ok(config)
}

/// Writes a configuration as TOML (the format [`parse_run_config`] reads).
pub fn write_run_config(config: &RunConfig) -> String {
    toml::to_string_pretty(config).expect("run config serializes")
}

// ---------------------------------------------------------------------------
// Run records
// ---------------------------------------------------------------------------

/// One line of a run log. Records are serialized as line-delimited JSON with
/// a `type` tag; every kind except [`Record::Timing`] is a pure function of
/// inputs and seed, so re-running a configuration reproduces those lines
/// byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Meta(MetaRecord),
    Result(ResultRecord),
    Timing(TimingRecord),
    Episode(EpisodeLogRecord),
    Summary(SummaryRecord),
    Aggregate(AggregateRecord),
}

/// Run header: what was solved and with which settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaRecord {
    pub schema: u32,
    pub command: String,
    pub map: String,
    pub agents: u32,
    pub config: RunConfig,
}

pub const RECORD_SCHEMA: u32 = 1;

/// Outcome of one instance. `soc` (sum of arrival times) and `makespan` are
/// omitted when unsolved; `plans` replay the solution exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub instance: u32,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub makespan: Option<f64>,
    pub plans: Vec<Plan>,
}

/// Wall-clock breakdown for one instance: coordination, single-agent search
/// (excluding segment solving), and segment solving. Kept separate from
/// [`ResultRecord`] so result lines stay reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub instance: u32,
    pub total_seconds: f64,
    pub coordination_seconds: f64,
    pub search_seconds: f64,
    pub segment_seconds: f64,
    pub segment_solves: usize,
    pub expanded: usize,
    pub generated: usize,
    /// Orders attempted (prioritized) or priority-tree nodes (tree search).
    pub attempts: usize,
}

impl TimingRecord {
    pub fn from_stats(instance: u32, total_seconds: f64, stats: &MapfStats) -> Self {
        Self {
            instance,
            total_seconds,
            coordination_seconds: stats.level1_time,
            search_seconds: stats.level2_time,
            segment_seconds: stats.level3_time,
            segment_solves: stats.sps_calls,
            expanded: stats.expanded,
            generated: stats.generated,
            attempts: stats.attempts,
        }
    }
}

/// One replanning episode of a lifelong run. Wall time is deliberately not
/// recorded here so that logs are identical across reruns of a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLogRecord {
    pub index: usize,
    pub clock: f64,
    pub replanned: Vec<u32>,
    pub reused: Vec<u32>,
    pub expanded: usize,
    pub segment_solves: usize,
}

impl From<&EpisodeRecord> for EpisodeLogRecord {
    fn from(e: &EpisodeRecord) -> Self {
        Self {
            index: e.index,
            clock: e.clock,
            replanned: e.replanned.clone(),
            reused: e.reused.clone(),
            expanded: e.expanded,
            segment_solves: e.sps_calls,
        }
    }
}

/// One served goal in a lifelong run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub time: f64,
    pub agent: u32,
    pub task: TaskKind,
    pub x: u32,
    pub y: u32,
}

impl CompletionRecord {
    pub fn new(world: &GridWorld, c: &Completion) -> Self {
        Self {
            time: c.time,
            agent: c.agent,
            task: c.task,
            x: world.x_of(c.vertex),
            y: world.y_of(c.vertex),
        }
    }
}

/// End-of-run summary of a lifelong simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub horizon: f64,
    pub completed: usize,
    /// Served goals per simulated second.
    pub throughput: f64,
    pub completions: Vec<CompletionRecord>,
}

/// Rollup of a benchmark suite: success rate plus means over solved runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub runs: u32,
    pub solved: u32,
    pub success_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_soc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_makespan: Option<f64>,
    pub mean_total_seconds: f64,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("record line {line}: {err}")]
    Json {
        line: usize,
        #[source]
        err: serde_json::Error,
    },
}

/// Serializes records as line-delimited JSON, one record per line.
pub fn write_records(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Parses a line-delimited record stream; blank lines are ignored. Plans in
/// result records come back ready to evaluate (derived profile tables are
/// rebuilt, since the wire format carries only the defining phases).
pub fn parse_records(text: &str) -> Result<Vec<Record>, RecordError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut record: Record =
            serde_json::from_str(line).map_err(|err| RecordError::Json { line: i + 1, err })?;
        if let Record::Result(r) = &mut record {
            for plan in &mut r.plans {
                for action in &mut plan.actions {
                    if let ActionKind::Move { profile: SpeedProfile::Piecewise(p), .. } =
                        &mut action.kind
                    {
                        p.ensure_knots();
                    }
                }
            }
        }
        out.push(record);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Synthetic benchmark fixtures
// ---------------------------------------------------------------------------
//
// The published benchmark archives are not bundled; these seeded generators
// produce maps with the same dimensions and obstacle character so the test
// and benchmark suites are self-contained. Any real `.map`/`.scen` file is a
// drop-in replacement through the parsers above.

/// Map with exactly `round(fill * cells)` blocked cells placed by seed.
pub fn random_obstacle_map(width: u32, height: u32, fill: f64, seed: u64) -> GridWorld {
    let cells = (width as usize) * (height as usize);
    let target = (fill * cells as f64).round() as usize;
    let mut order: Vec<usize> = (0..cells).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut blocked = vec![false; cells];
    for &i in order.iter().take(target.min(cells)) {
        blocked[i] = true;
    }
    GridWorld::new(width, height, 1.0, blocked)
}

/// Warehouse floor of shelf blocks: 161x63 cells, shelves 10 long and 2
/// deep in a regular grid, wide vertical aisles and 2-cell horizontal
/// aisles. Roughly 30% of the floor is shelving.
pub fn warehouse_map() -> GridWorld {
    let (width, height) = (161u32, 63u32);
    let mut blocked = vec![false; (width as usize) * (height as usize)];
    for col in 0..10u32 {
        for row in 0..15u32 {
            let x0 = 4 + 16 * col;
            let y0 = 2 + 4 * row;
            for dx in 0..10u32 {
                for dy in 0..2u32 {
                    let (x, y) = (x0 + dx, y0 + dy);
                    blocked[(y * width + x) as usize] = true;
                }
            }
        }
    }
    GridWorld::new(width, height, 1.0, blocked)
}

/// Desk-scale annotated depot: an open 20x12 floor with a column of
/// stations on the left and two columns of shelf cells on the right.
pub fn depot_map() -> (GridWorld, MapAnnotations) {
    let world = GridWorld::open(20, 12);
    let mut annotations = MapAnnotations { shelves: Vec::new(), stations: Vec::new() };
    for y in [2u32, 5, 8] {
        annotations.stations.push(world.vertex(2, y));
        annotations.shelves.push(world.vertex(15, y));
        annotations.shelves.push(world.vertex(17, y));
    }
    (world, annotations)
}

/// Free cells of the largest 4-connected component of `world`.
pub fn largest_component(world: &GridWorld) -> Vec<Vertex> {
    let n = world.vertex_count() as usize;
    let mut seen = vec![false; n];
    let mut best: Vec<Vertex> = Vec::new();
    for v in 0..world.vertex_count() {
        if seen[v as usize] || world.is_blocked(v) {
            continue;
        }
        let mut component = vec![v];
        seen[v as usize] = true;
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            for w in world.neighbors(u) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    component.push(w);
                    queue.push_back(w);
                }
            }
        }
        if component.len() > best.len() {
            best = component;
        }
    }
    best
}

/// Minimum pairwise Manhattan distance between sampled start cells.
///
/// Robots launch simultaneously, so a start can be overrun by a neighbor's
/// opening move before its owner has had time to pull away; with adjacent
/// starts two individually optimal routes can wedge each other into a
/// configuration no priority order resolves. Four cells of separation leaves
/// every robot time to vacate its cell before any other robot's body can
/// reach it, which is also how hand-curated scenario files spread starts.
const START_SPACING: i64 = 4;

/// Samples `count` start/goal entries by seed: all starts and goals are
/// pairwise distinct free cells of the largest connected component, and
/// starts keep [`START_SPACING`] cells of Manhattan separation, so the
/// resulting instances are well-posed for any number of agents up to
/// `count`. Panics if the component cannot host that many spaced starts.
pub fn sample_entries(
    world: &GridWorld,
    map_name: &str,
    count: usize,
    seed: u64,
) -> Vec<ScenarioEntry> {
    let mut component = largest_component(world);
    assert!(
        component.len() >= 2 * count,
        "component has {} cells, need {}",
        component.len(),
        2 * count
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    component.shuffle(&mut rng);

    let mut starts: Vec<Vertex> = Vec::with_capacity(count);
    let mut rest: Vec<Vertex> = Vec::with_capacity(component.len() - count);
    for &v in &component {
        if starts.len() < count {
            let (x, y) = (world.x_of(v) as i64, world.y_of(v) as i64);
            let spaced = starts.iter().all(|&s| {
                (world.x_of(s) as i64 - x).abs() + (world.y_of(s) as i64 - y).abs()
                    >= START_SPACING
            });
            if spaced {
                starts.push(v);
                continue;
            }
        }
        rest.push(v);
    }
    assert!(
        starts.len() == count,
        "could only place {} of {count} starts {START_SPACING} cells apart",
        starts.len()
    );

    starts
        .iter()
        .zip(&rest)
        .enumerate()
        .map(|(i, (&s, &g))| ScenarioEntry {
            bucket: i as u32,
            map_name: map_name.to_string(),
            start: (world.x_of(s), world.y_of(s)),
            goal: (world.x_of(g), world.y_of(g)),
        })
        .collect()
}
