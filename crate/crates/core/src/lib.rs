//! Core algorithms for multi-agent motion planning on grid maps with
//! differential-drive kinematics: safe-interval single-agent search, speed
//! profile optimization, priority-based multi-agent coordination, and the
//! windowed replanning loop for lifelong operation.

pub mod domain;
pub mod executor;
pub mod io;
pub mod lifelong;
pub mod mapf;
pub mod occupancy;
pub mod oracle;
pub mod profile;
pub mod ssipp;

pub use domain::{
    ActionKind, GridWorld, KinodynamicLimits, Orientation, Plan, TaskKind, TimedAction, Vertex,
    EPS_TIME,
};
pub use executor::{
    makespan, relative_soc, sum_of_cost, table_violations, throughput, validate,
    ValidationReport, Violation, ViolationKind,
};
pub use io::{
    agents_from_entries, depot_map, largest_component, parse_annotations, parse_map,
    parse_records, parse_run_config, parse_scenario, random_obstacle_map, sample_entries,
    warehouse_map, write_annotations, write_map, write_records, write_run_config,
    write_scenario, AggregateRecord, CompletionRecord, EpisodeLogRecord, LifelongSection,
    MetaRecord, Record, ResultRecord, RunConfig, ScenarioEntry, SummaryRecord, TimingRecord,
};
pub use lifelong::{
    commit_window, simulate, solve_windowed, AgentStart, Completion, EpisodeRecord, GoalSource,
    GoalSpec, HeuristicCache, LifelongConfig, MapAnnotations, SimulationResult, WindowedOutcome,
    WindowedProblem,
};
pub use mapf::{
    detect_first_collision, plans_collide, AgentSpec, Collision, MapfAlgo, MapfConfig,
    MapfFailure, MapfFailureKind, MapfSolution, MapfStats,
};
pub use occupancy::{plan_occupancy, OccupancySet, ParkAtEnd, SafeIntervalTable, TimeInterval};
pub use profile::{
    solve_sps, PiecewiseProfile, SegmentWindows, SpeedProfile, SpsKind, SpsParams, SpsSolution,
};
pub use ssipp::{GridHeuristic, SsippConfig, SsippOutcome, SsippProblem, SsippStats};
