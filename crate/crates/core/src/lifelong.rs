//! Receding-horizon simulation for agents that continuously receive service
//! goals (pick up, drop off, dwell) while they work.
//!
//! Every `period` seconds the coordinator replans all agents over a
//! `window`-second lookahead. The per-agent search is a windowed variant of
//! the route search in [`crate::ssipp`]: nodes carry a pointer into the
//! agent's goal queue, service actions are chained in place when they fit,
//! and the open list is ordered by `max(window_end, g) + h` so that progress
//! made before the window boundary is free — otherwise an agent whose goal
//! lies beyond the window would happily park at its start forever. Committed
//! plans keep any action that spans the window boundary whole (actions are
//! atomic) and end with an unbounded wait so that lower-priority agents treat
//! a parked robot as parked, not as vanished.

use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    ActionKind, GridWorld, KinodynamicLimits, Orientation, Plan, TaskKind, TimedAction, Vertex,
    EPS_TIME,
};
use crate::occupancy::{ParkAtEnd, SafeIntervalTable};
use crate::profile::{solve_sps, SpeedProfile};
use crate::ssipp::{move_candidates, GridHeuristic, HeapEntry, MoveCandidate, SsippConfig, SsippStats};

/// One queued goal: drive to `vertex`, then run the service action there for
/// `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub vertex: Vertex,
    pub task: TaskKind,
    pub duration: f64,
}

/// Cells with warehouse semantics; the base map format stays geometry-only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MapAnnotations {
    pub shelves: Vec<Vertex>,
    pub stations: Vec<Vertex>,
}

/// Where goals come from during a run.
#[derive(Debug, Clone)]
pub enum GoalSource {
    /// Seeded sampler that cycles pick-up → drop-off → return per agent.
    Assigner(MapAnnotations),
    /// Fixed per-agent queues, consumed once; for tests and replays.
    Scripted(Vec<Vec<GoalSpec>>),
}

#[derive(Debug, Clone)]
pub struct LifelongConfig {
    /// Planning lookahead per episode, seconds. Must be at least `period`.
    pub window: f64,
    /// Wall-clock advance between replans, seconds.
    pub period: f64,
    /// Total simulated time, seconds.
    pub horizon: f64,
    pub seed: u64,
    pub ssipp: SsippConfig,
    /// How many queued goals one windowed search may chain.
    pub lookahead: usize,
    /// Service time handed to the goal sampler, seconds.
    pub task_duration: f64,
    /// Append an unbounded wait to every committed plan so other agents see
    /// a parked robot. Disabling this reproduces the classic windowed-planning
    /// failure: plans "end", the robot stays, and someone drives through it.
    pub trailing_wait: bool,
    /// Order the windowed search by `max(window_end, g) + h` instead of
    /// `g + h`. Disabling reproduces the premature-stop failure where an
    /// agent with a far goal parks at its start every episode.
    pub windowed_priority: bool,
    /// Shuffle the replanning order each episode (seeded). Disable for tests
    /// that depend on a fixed priority order.
    pub randomize_order: bool,
    /// Wall-clock budget per episode; agents not replanned in time reuse
    /// their previous committed plan.
    pub episode_time_limit: Option<f64>,
}

impl Default for LifelongConfig {
    fn default() -> Self {
        Self {
            window: 20.0,
            period: 10.0,
            horizon: 300.0,
            seed: 0,
            ssipp: SsippConfig::default(),
            lookahead: 3,
            task_duration: 2.0,
            trailing_wait: true,
            windowed_priority: true,
            randomize_order: true,
            episode_time_limit: None,
        }
    }
}

/// Shared cache of per-goal distance tables, reused across agents and
/// episodes; goals repeat constantly in a lifelong run.
#[derive(Debug, Default)]
pub struct HeuristicCache {
    map: HashMap<Vertex, GridHeuristic>,
}

impl HeuristicCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn bound(
        &mut self,
        world: &GridWorld,
        limits: &KinodynamicLimits,
        goal: Vertex,
        from: Vertex,
    ) -> Option<f64> {
        self.map
            .entry(goal)
            .or_insert_with(|| GridHeuristic::new(world, limits, goal))
            .lower_bound(from)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WindowedProblem<'a> {
    pub world: &'a GridWorld,
    pub limits: &'a KinodynamicLimits,
    pub table: &'a SafeIntervalTable,
    pub agent: u32,
    pub start_vertex: Vertex,
    pub start_orientation: Orientation,
    /// Earliest decision time: when the agent's current action finishes.
    pub depart: f64,
    /// Goals to chain, in order; at most the configured lookahead.
    pub goals: &'a [GoalSpec],
    /// Absolute end of the planning window (episode clock + window).
    pub window_end: f64,
}

#[derive(Debug)]
pub struct WindowedOutcome {
    pub plan: Option<Plan>,
    /// Priority of the returned resting state; `INFINITY` when no plan.
    pub f_win: f64,
    pub stats: SsippStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WPrev {
    Start,
    Rotate,
    Move,
}

enum WEdge {
    Root,
    Rotate { from: Orientation, to: Orientation },
    Move { cells: u32, to: Vertex, profile: SpeedProfile },
    Task { task: TaskKind },
}

struct WNode {
    vertex: Vertex,
    orientation: Orientation,
    /// Earliest rest time in the node's safe interval.
    lb: f64,
    /// End of the safe interval.
    ub: f64,
    /// Index into the goal list of the next unserved goal.
    goal: usize,
    /// Resting priority of this node. Partial expansion re-queues a node at
    /// its next candidate's priority, so the popped key cannot double as the
    /// node's own worth when judging it as a place to stop.
    fw: f64,
    prev: WPrev,
    parent: Option<usize>,
    edge: WEdge,
    retired: bool,
    pending: Option<Vec<(f64, MoveCandidate)>>,
    cursor: usize,
}

struct WSearch<'a, 'p> {
    problem: &'a WindowedProblem<'p>,
    config: &'a SsippConfig,
    windowed: bool,
    cache: &'a mut HeuristicCache,
    /// `tail[l]` is a lower bound on the work left after goal `l` is served:
    /// the travel legs between consecutive queued goals plus their service
    /// times. An unreachable leg truncates the tail, since nothing past it
    /// can be served in order anyway.
    tail: Vec<f64>,
    arena: Vec<WNode>,
    open: BinaryHeap<HeapEntry>,
    seen: HashMap<(Vertex, u8, u64, usize), (usize, f64)>,
    seq: u64,
    stats: SsippStats,
}

impl<'a, 'p> WSearch<'a, 'p> {
    /// Remaining-work lower bound through the rest of the queue: travel to
    /// the current goal, its service time, then each later leg in order.
    /// The queue tail matters: scoring only the current goal would let a
    /// node parked at a goal with its task still pending outscore every
    /// continuation that actually serves it, and the incumbent rule would
    /// stop the search there. Zero once every listed goal is served;
    /// `None` if the current goal is unreachable from `v`.
    fn remaining(&mut self, goal: usize, v: Vertex) -> Option<f64> {
        match self.problem.goals.get(goal) {
            Some(g) => self
                .cache
                .bound(self.problem.world, self.problem.limits, g.vertex, v)
                .map(|t| t + g.duration + self.tail[goal]),
            None => Some(0.0),
        }
    }

    fn priority(&self, g: f64, h: f64) -> f64 {
        if self.windowed {
            self.problem.window_end.max(g) + h
        } else {
            g + h
        }
    }

    fn push_node(&mut self, node: WNode) {
        let Some(h) = self.remaining(node.goal, node.vertex) else {
            return;
        };
        let key = (node.vertex, node.orientation.index() as u8, node.ub.to_bits(), node.goal);
        if self.config.duplicate_detection {
            match self.seen.get(&key) {
                Some(&(_, lb)) if lb <= node.lb + EPS_TIME => {
                    self.stats.duplicate_hits += 1;
                    return;
                }
                Some(&(old, _)) => self.arena[old].retired = true,
                None => {}
            }
        }
        let f = self.priority(node.lb, h);
        let g = node.lb;
        let mut node = node;
        node.fw = f;
        self.arena.push(node);
        let idx = self.arena.len() - 1;
        if self.config.duplicate_detection {
            self.seen.insert(key, (idx, g));
        }
        self.seq += 1;
        self.open.push(HeapEntry { f, g, seq: self.seq, idx });
        self.stats.generated += 1;
    }

    fn expand(&mut self, idx: usize) {
        if self.arena[idx].pending.is_none() {
            let (v, o, lb, ub, l, prev) = {
                let n = &self.arena[idx];
                (n.vertex, n.orientation, n.lb, n.ub, n.goal, n.prev)
            };
            // Serve the pending goal in place when the dwell fits the
            // interval; afterwards both turning and moving are fresh options.
            if let Some(goal) = self.problem.goals.get(l).copied() {
                if v == goal.vertex && lb + goal.duration < ub - EPS_TIME {
                    self.push_node(WNode {
                        vertex: v,
                        orientation: o,
                        lb: lb + goal.duration,
                        ub,
                        goal: l + 1,
                        fw: 0.0,
                        prev: WPrev::Start,
                        parent: Some(idx),
                        edge: WEdge::Task { task: goal.task },
                        retired: false,
                        pending: None,
                        cursor: 0,
                    });
                }
            }
            if prev != WPrev::Rotate {
                for to in Orientation::ALL {
                    if to == o {
                        continue;
                    }
                    let t = self.problem.limits.rotation_time(o, to);
                    if lb + t >= ub - EPS_TIME {
                        continue;
                    }
                    self.push_node(WNode {
                        vertex: v,
                        orientation: to,
                        lb: lb + t,
                        ub,
                        goal: l,
                        fw: 0.0,
                        prev: WPrev::Rotate,
                        parent: Some(idx),
                        edge: WEdge::Rotate { from: o, to },
                        retired: false,
                        pending: None,
                        cursor: 0,
                    });
                }
            }
            let moves_allowed = prev != WPrev::Move || self.config.max_segment_cells.is_some();
            let mut pending: Vec<(f64, MoveCandidate)> = Vec::new();
            if moves_allowed {
                for cand in move_candidates(
                    self.problem.world,
                    self.problem.limits,
                    self.problem.table,
                    v,
                    o,
                    lb,
                    ub,
                    self.config.max_segment_cells,
                ) {
                    let Some(h) = self.remaining(l, cand.target) else {
                        continue;
                    };
                    // Entry bound is a lower bound on the child's rest time,
                    // so this maps it straight into the open-list ordering.
                    pending.push((self.priority(cand.entry_bound, h), cand));
                }
                pending.sort_by(|a, b| {
                    a.0.total_cmp(&b.0)
                        .then(a.1.cells.cmp(&b.1.cells))
                        .then(a.1.interval_idx.cmp(&b.1.interval_idx))
                });
            }
            self.arena[idx].pending = Some(pending);
        }

        let take = if self.config.partial_expansion { 1 } else { usize::MAX };
        for _ in 0..take {
            let cursor = self.arena[idx].cursor;
            let Some((_, cand)) = self.arena[idx]
                .pending
                .as_ref()
                .and_then(|p| p.get(cursor))
                .cloned()
            else {
                break;
            };
            self.arena[idx].cursor += 1;
            self.stats.sps_calls += 1;
            let sps_start = Instant::now();
            let sol = solve_sps(self.config.sps, &cand.windows, self.problem.limits, &self.config.sps_params);
            self.stats.sps_time += sps_start.elapsed().as_secs_f64();
            if let Some(sol) = sol {
                let arrival = self.arena[idx].lb + sol.duration;
                if arrival < cand.interval.ub - EPS_TIME {
                    let (o, l) = (self.arena[idx].orientation, self.arena[idx].goal);
                    self.push_node(WNode {
                        vertex: cand.target,
                        orientation: o,
                        lb: arrival,
                        ub: cand.interval.ub,
                        goal: l,
                        fw: 0.0,
                        prev: WPrev::Move,
                        parent: Some(idx),
                        edge: WEdge::Move {
                            cells: cand.cells as u32,
                            to: cand.target,
                            profile: sol.profile,
                        },
                        retired: false,
                        pending: None,
                        cursor: 0,
                    });
                }
            }
        }

        if self.config.partial_expansion {
            let n = &self.arena[idx];
            if let Some(p) = n.pending.as_ref().and_then(|pd| pd.get(n.cursor)).map(|c| c.0) {
                self.seq += 1;
                self.open.push(HeapEntry { f: p, g: n.lb, seq: self.seq, idx });
            }
        }
    }

    fn reconstruct(&self, goal_idx: usize) -> Plan {
        let mut chain = Vec::new();
        let mut at = Some(goal_idx);
        while let Some(i) = at {
            chain.push(i);
            at = self.arena[i].parent;
        }
        chain.reverse();
        let mut actions = Vec::with_capacity(chain.len().saturating_sub(1));
        for pair in chain.windows(2) {
            let (p, c) = (&self.arena[pair[0]], &self.arena[pair[1]]);
            let kind = match &c.edge {
                WEdge::Rotate { from, to } => ActionKind::Rotate { from: *from, to: *to },
                WEdge::Move { cells, to, profile } => ActionKind::Move {
                    orientation: c.orientation,
                    cells: *cells,
                    to: *to,
                    profile: profile.clone(),
                },
                WEdge::Task { task } => ActionKind::Task { task: *task },
                WEdge::Root => unreachable!("root has no incoming edge"),
            };
            actions.push(TimedAction {
                start: p.lb,
                duration: Some(c.lb - p.lb),
                vertex: p.vertex,
                kind,
            });
        }
        Plan {
            agent: self.problem.agent,
            start_vertex: self.problem.start_vertex,
            start_orientation: self.problem.start_orientation,
            depart: self.problem.depart,
            actions,
            arrival: self.arena[goal_idx].lb,
        }
    }
}

/// Plans one agent over the episode window: chain as many listed goals as
/// fit, then come to rest somewhere safe forever. The best resting state by
/// windowed priority is returned even when no goal is reachable, so a blocked
/// agent still yields a safe holding plan. `None` means not even a resting
/// state exists (the agent's own cell is claimed).
pub fn solve_windowed(
    problem: &WindowedProblem,
    config: &SsippConfig,
    windowed_priority: bool,
    cache: &mut HeuristicCache,
) -> WindowedOutcome {
    let n = problem.goals.len();
    let mut tail = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        let leg = cache.bound(
            problem.world,
            problem.limits,
            problem.goals[i + 1].vertex,
            problem.goals[i].vertex,
        );
        tail[i] = match leg {
            Some(t) => tail[i + 1] + t + problem.goals[i + 1].duration,
            None => 0.0,
        };
    }
    let mut s = WSearch {
        problem,
        config,
        windowed: windowed_priority,
        cache,
        tail,
        arena: Vec::new(),
        open: BinaryHeap::new(),
        seen: HashMap::new(),
        seq: 0,
        stats: SsippStats::default(),
    };
    let fail = |stats: SsippStats| WindowedOutcome { plan: None, f_win: f64::INFINITY, stats };

    let Some((_, root_iv)) = problem.table.interval_containing(problem.start_vertex, problem.depart)
    else {
        return fail(s.stats);
    };
    let Some(h0) = s.remaining(0, problem.start_vertex) else {
        return fail(s.stats);
    };
    let root_f = s.priority(problem.depart, h0);
    s.arena.push(WNode {
        vertex: problem.start_vertex,
        orientation: problem.start_orientation,
        lb: problem.depart,
        ub: root_iv.ub,
        goal: 0,
        fw: root_f,
        prev: WPrev::Start,
        parent: None,
        edge: WEdge::Root,
        retired: false,
        pending: None,
        cursor: 0,
    });
    s.seen.insert(
        (problem.start_vertex, problem.start_orientation.index() as u8, root_iv.ub.to_bits(), 0),
        (0, problem.depart),
    );
    s.open.push(HeapEntry { f: root_f, g: problem.depart, seq: 0, idx: 0 });
    s.stats.generated += 1;

    // No priority can drop below this, so an incumbent that reaches it is
    // final immediately; without the shortcut the search would flood every
    // state reachable before the window boundary once all goals are served.
    let floor = if windowed_priority {
        problem.window_end.max(problem.depart)
    } else {
        problem.depart
    };
    let mut best: Option<(usize, f64)> = None;

    while let Some(entry) = s.open.pop() {
        if s.arena[entry.idx].retired {
            continue;
        }
        if let Some((b, bf)) = best {
            if entry.f > bf + EPS_TIME {
                let plan = s.reconstruct(b);
                return WindowedOutcome { plan: Some(plan), f_win: bf, stats: s.stats };
            }
        }
        if s.arena[entry.idx].ub.is_infinite() {
            let fw = s.arena[entry.idx].fw;
            match best {
                Some((_, bf)) if bf <= fw => {}
                _ => best = Some((entry.idx, fw)),
            }
            if let Some((b, bf)) = best {
                if bf <= floor + EPS_TIME {
                    let plan = s.reconstruct(b);
                    return WindowedOutcome { plan: Some(plan), f_win: bf, stats: s.stats };
                }
            }
        }
        // Actions may only start inside the window; states at rest beyond it
        // compete as outcomes but are not expanded.
        if s.arena[entry.idx].lb >= problem.window_end {
            continue;
        }
        if s.stats.expanded >= config.expansion_limit {
            s.stats.cutoff = true;
            break;
        }
        s.stats.expanded += 1;
        s.expand(entry.idx);
    }

    match best {
        Some((b, bf)) => {
            let plan = s.reconstruct(b);
            WindowedOutcome { plan: Some(plan), f_win: bf, stats: s.stats }
        }
        None => fail(s.stats),
    }
}

/// Cuts a windowed plan down to what this episode commits to: every action
/// starting inside the window (an action spanning the boundary stays whole —
/// actions are atomic), then an unbounded wait marking the rest state. With
/// `trailing_wait` off the plan just ends, which under-reports the robot's
/// occupancy and exists only to demonstrate why the wait is needed.
pub fn commit_window(plan: &Plan, window_end: f64, trailing_wait: bool) -> Plan {
    let mut out = plan.clone();
    let cut = out
        .actions
        .iter()
        .position(|a| a.start >= window_end)
        .unwrap_or(out.actions.len());
    out.actions.truncate(cut);
    let end = out.actions.last().map_or(out.depart, |a| a.end());
    let vertex = out.actions.last().map_or(out.start_vertex, |a| a.end_vertex());
    out.arrival = end;
    if trailing_wait && end.is_finite() {
        out.actions.push(TimedAction {
            start: end,
            duration: None,
            vertex,
            kind: ActionKind::Wait,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentStart {
    pub vertex: Vertex,
    pub orientation: Orientation,
}

/// One served goal in the executed timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub time: f64,
    pub agent: u32,
    pub task: TaskKind,
    pub vertex: Vertex,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpisodeRecord {
    pub index: usize,
    pub clock: f64,
    pub replanned: Vec<u32>,
    /// Agents that kept their previous committed plan this episode (search
    /// failure or episode time budget exhausted).
    pub reused: Vec<u32>,
    pub planning_time: f64,
    pub expanded: usize,
    pub sps_calls: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationResult {
    /// Stitched per-agent trajectories actually driven over `[0, horizon]`,
    /// boundary idling filled in with explicit waits.
    pub executed: Vec<Plan>,
    /// Served goals sorted by completion time; only completions at or before
    /// the horizon count.
    pub completions: Vec<Completion>,
    /// Goals served per second of simulated time.
    pub throughput: f64,
    pub episodes: Vec<EpisodeRecord>,
}

impl SimulationResult {
    pub fn completed_goals(&self) -> usize {
        self.completions.len()
    }
}

struct AgentSim {
    id: u32,
    vertex: Vertex,
    orientation: Orientation,
    /// Next decision time: when the agent's running action completes.
    t_e: f64,
    queue: VecDeque<GoalSpec>,
    committed: Plan,
    /// The boundary-spanning action still running at the episode start, plus
    /// the heading before it; prepended to the next committed plan so other
    /// agents keep seeing its occupancy.
    carry: Option<(TimedAction, Orientation)>,
    executed: Vec<TimedAction>,
    executed_until: f64,
    cycle: usize,
}

impl AgentSim {
    /// Moves the execution cursor up to `clock`: completed actions go to the
    /// executed trace (serving goals on the way), a boundary-spanning action
    /// runs to completion, and idle time becomes an explicit wait. Updates
    /// the rest state the next plan starts from.
    fn advance(&mut self, clock: f64, horizon: f64, completions: &mut Vec<Completion>) {
        if self.executed_until > clock + EPS_TIME {
            // A previously committed action still spans this boundary; the
            // decision point (and the carried action) are unchanged.
            self.t_e = self.executed_until;
            return;
        }
        self.carry = None;
        let mut t_e = clock;
        for i in 0..self.committed.actions.len() {
            let act = &self.committed.actions[i];
            if act.start >= clock - EPS_TIME {
                break;
            }
            if act.end() <= self.executed_until + EPS_TIME {
                continue;
            }
            let crossing = act.end() > clock + EPS_TIME;
            if crossing && matches!(act.kind, ActionKind::Wait) {
                // Waiting is interruptible: the agent is simply at rest at
                // the boundary. The filler below records the idle time.
                break;
            }
            let act = act.clone();
            let before = self.orientation;
            self.vertex = act.end_vertex();
            self.orientation = act.end_orientation(before);
            self.executed_until = act.end();
            if let ActionKind::Task { task } = act.kind {
                let served = self.queue.pop_front();
                debug_assert!(
                    served.map_or(false, |g| g.vertex == act.vertex && g.task == task),
                    "executed service action does not match the queued goal"
                );
                if act.end() <= horizon + EPS_TIME {
                    completions.push(Completion {
                        time: act.end(),
                        agent: self.id,
                        task,
                        vertex: act.vertex,
                    });
                }
            }
            self.executed.push(act.clone());
            if crossing {
                t_e = act.end();
                self.carry = Some((act, before));
                break;
            }
        }
        if t_e > self.executed_until + EPS_TIME {
            self.executed.push(TimedAction {
                start: self.executed_until,
                duration: Some(t_e - self.executed_until),
                vertex: self.vertex,
                kind: ActionKind::Wait,
            });
            self.executed_until = t_e;
        }
        self.t_e = t_e;
    }

    /// Installs a freshly committed plan, prefixed with the still-running
    /// carried action so the occupancy other agents plan against stays whole.
    fn install(&mut self, committed: Plan) {
        let mut actions = Vec::with_capacity(committed.actions.len() + 1);
        let (depart, start_vertex, start_orientation) = match &self.carry {
            Some((act, before)) => {
                actions.push(act.clone());
                (act.start, act.vertex, *before)
            }
            None => (self.t_e, self.vertex, self.orientation),
        };
        actions.extend(committed.actions);
        self.committed = Plan {
            agent: self.id,
            start_vertex,
            start_orientation,
            depart,
            actions,
            arrival: committed.arrival,
        };
    }
}

fn top_up(
    agent: &mut AgentSim,
    ann: &MapAnnotations,
    rng: &mut ChaCha8Rng,
    lookahead: usize,
    task_duration: f64,
) {
    if ann.shelves.is_empty() || ann.stations.is_empty() {
        return;
    }
    while agent.queue.len() < lookahead {
        let (vertex, task) = match agent.cycle % 3 {
            0 => (ann.shelves[rng.gen_range(0..ann.shelves.len())], TaskKind::Attach),
            1 => (ann.stations[rng.gen_range(0..ann.stations.len())], TaskKind::Station),
            _ => (ann.shelves[rng.gen_range(0..ann.shelves.len())], TaskKind::Detach),
        };
        agent.queue.push_back(GoalSpec { vertex, task, duration: task_duration });
        agent.cycle += 1;
    }
}

/// Runs the full receding-horizon loop: replan every `period` seconds over a
/// `window`-second lookahead, execute the committed plans, serve goals, and
/// stitch the trajectories actually driven. An agent whose replan fails keeps
/// executing its previous committed plan, so the simulation always advances.
pub fn simulate(
    world: &GridWorld,
    limits: &KinodynamicLimits,
    starts: &[AgentStart],
    source: GoalSource,
    config: &LifelongConfig,
) -> SimulationResult {
    assert!(config.period > 0.0, "replan period must be positive");
    assert!(
        config.window >= config.period - EPS_TIME,
        "window must cover at least one replan period"
    );
    let scripted = match &source {
        GoalSource::Scripted(qs) => Some(qs),
        GoalSource::Assigner(_) => None,
    };
    let mut agents: Vec<AgentSim> = starts
        .iter()
        .enumerate()
        .map(|(i, s)| AgentSim {
            id: i as u32,
            vertex: s.vertex,
            orientation: s.orientation,
            t_e: 0.0,
            queue: scripted
                .and_then(|qs| qs.get(i))
                .map(|q| q.iter().copied().collect())
                .unwrap_or_default(),
            committed: Plan {
                agent: i as u32,
                start_vertex: s.vertex,
                start_orientation: s.orientation,
                depart: 0.0,
                actions: vec![TimedAction {
                    start: 0.0,
                    duration: None,
                    vertex: s.vertex,
                    kind: ActionKind::Wait,
                }],
                arrival: 0.0,
            },
            carry: None,
            executed: Vec::new(),
            executed_until: 0.0,
            cycle: 0,
        })
        .collect();
    let mut assigner = match source {
        GoalSource::Assigner(ann) => {
            Some((ann, ChaCha8Rng::seed_from_u64(config.seed ^ 0x9E37_79B9_7F4A_7C15)))
        }
        GoalSource::Scripted(_) => None,
    };
    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cache = HeuristicCache::new();
    let mut completions: Vec<Completion> = Vec::new();
    let mut episodes: Vec<EpisodeRecord> = Vec::new();

    let mut clock = 0.0;
    let mut index = 0;
    while clock < config.horizon - EPS_TIME {
        for a in &mut agents {
            a.advance(clock, config.horizon, &mut completions);
        }
        if let Some((ann, rng)) = &mut assigner {
            for a in &mut agents {
                top_up(a, ann, rng, config.lookahead, config.task_duration);
            }
        }
        let mut order: Vec<usize> = (0..agents.len()).collect();
        if config.randomize_order {
            order.shuffle(&mut order_rng);
        }
        let episode_start = Instant::now();
        let mut replanned = Vec::new();
        let mut reused = Vec::new();
        let mut expanded = 0;
        let mut sps_calls = 0;
        for &i in &order {
            let id = agents[i].id;
            if let Some(limit) = config.episode_time_limit {
                if episode_start.elapsed().as_secs_f64() > limit {
                    reused.push(id);
                    continue;
                }
            }
            let table = {
                let others = agents
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, b)| &b.committed);
                SafeIntervalTable::from_plans(others, world, ParkAtEnd::No, 0.0, f64::INFINITY)
            };
            let goals: Vec<GoalSpec> =
                agents[i].queue.iter().take(config.lookahead).copied().collect();
            let problem = WindowedProblem {
                world,
                limits,
                table: &table,
                agent: id,
                start_vertex: agents[i].vertex,
                start_orientation: agents[i].orientation,
                depart: agents[i].t_e,
                goals: &goals,
                window_end: clock + config.window,
            };
            let out = solve_windowed(&problem, &config.ssipp, config.windowed_priority, &mut cache);
            expanded += out.stats.expanded;
            sps_calls += out.stats.sps_calls;
            match out.plan {
                Some(plan) => {
                    let committed =
                        commit_window(&plan, clock + config.window, config.trailing_wait);
                    agents[i].install(committed);
                    replanned.push(id);
                }
                None => reused.push(id),
            }
        }
        episodes.push(EpisodeRecord {
            index,
            clock,
            replanned,
            reused,
            planning_time: episode_start.elapsed().as_secs_f64(),
            expanded,
            sps_calls,
        });
        clock += config.period;
        index += 1;
    }
    for a in &mut agents {
        a.advance(config.horizon, config.horizon, &mut completions);
    }

    completions.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.agent.cmp(&b.agent)));
    let executed = agents
        .iter()
        .zip(starts)
        .map(|(a, s)| Plan {
            agent: a.id,
            start_vertex: s.vertex,
            start_orientation: s.orientation,
            depart: 0.0,
            actions: a.executed.clone(),
            arrival: a.executed_until,
        })
        .collect();
    let throughput = completions.len() as f64 / config.horizon;
    SimulationResult { executed, completions, throughput, episodes }
}
