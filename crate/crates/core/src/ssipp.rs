//! Single-agent kinodynamic route search over a safe-interval table.
//!
//! States are stationary: the agent is at rest at a vertex with an
//! orientation, somewhere inside one safe interval of that vertex. Edges are
//! in-place rotations and straight multi-cell moves whose speed profiles come
//! from the segment solvers in [`crate::profile`]. The search is best-first
//! on `f = g + h`, where `g` is the earliest time the agent can be at rest in
//! the node's interval and `h` relaxes the remaining route to top-speed
//! straight-line motion over the grid distance.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::domain::{GridWorld, KinodynamicLimits, Orientation, Plan, TimedAction, Vertex, EPS_TIME};
use crate::domain::ActionKind;
use crate::occupancy::{SafeIntervalTable, TimeInterval};
use crate::profile::{solve_sps, SegmentWindows, SpeedProfile, SpsKind, SpsParams};

/// Grid-distance-to-goal lower bounds, shared across searches to the same
/// goal. `lower_bound` divides the 4-neighbor shortest-path distance by the
/// top speed, ignoring rotations, waiting, and acceleration limits, so it
/// never overestimates the remaining time.
#[derive(Debug, Clone)]
pub struct GridHeuristic {
    goal: Vertex,
    seconds_per_cell: f64,
    dist: Vec<u32>,
}

impl GridHeuristic {
    pub fn new(world: &GridWorld, limits: &KinodynamicLimits, goal: Vertex) -> Self {
        let n = (world.width() * world.height()) as usize;
        let mut dist = vec![u32::MAX; n];
        if world.is_free(goal) {
            dist[goal as usize] = 0;
            let mut queue = VecDeque::new();
            queue.push_back(goal);
            while let Some(v) = queue.pop_front() {
                let d = dist[v as usize];
                for n in world.neighbors(v) {
                    if dist[n as usize] == u32::MAX {
                        dist[n as usize] = d + 1;
                        queue.push_back(n);
                    }
                }
            }
        }
        Self {
            goal,
            seconds_per_cell: world.cell_length() / limits.v_max,
            dist,
        }
    }

    pub fn goal(&self) -> Vertex {
        self.goal
    }

    /// Admissible remaining-time bound, or `None` when the goal is
    /// unreachable from `v` on the grid.
    pub fn lower_bound(&self, v: Vertex) -> Option<f64> {
        let d = self.dist[v as usize];
        (d != u32::MAX).then(|| d as f64 * self.seconds_per_cell)
    }
}

/// What produced the current node; consecutive actions of the same kind are
/// never expanded (a rotate-rotate pair is covered by the direct rotation,
/// a move-move pair by the longer segment enumerated from the earlier node).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PrevAction {
    Start,
    Rotate,
    Move,
}

#[derive(Debug, Clone)]
enum Edge {
    Root,
    Rotate { from: Orientation, to: Orientation },
    Move { cells: u32, to: Vertex, profile: SpeedProfile },
}

/// A stationary interval reachable by one straight move, found by the
/// forward sweep in [`move_candidates`]. `entry_bound` is the earliest the
/// segment could possibly come to rest there (top-speed relaxation), used
/// only for ordering and pruning; the actual rest time comes from the
/// segment solver.
#[derive(Debug, Clone)]
pub(crate) struct MoveCandidate {
    pub cells: usize,
    pub target: Vertex,
    pub interval_idx: usize,
    pub interval: TimeInterval,
    pub entry_bound: f64,
    pub windows: SegmentWindows,
}

/// Cap on retained interval chains per (cell, interval) during the sweep.
///
/// Distinct chains assign different safe intervals to the swept cells, so
/// none dominates another: a chain entering earlier may carry tighter
/// upstream windows that the segment solver cannot satisfy, while a laxer
/// chain entering later solves fine. Keeping only the lowest-entry chain
/// loses routes (and with them arrival optimality); keeping them all can
/// multiply along corridors where every cell's timeline is chopped up.
/// Eight covers the alternatives that matter on dense tables while keeping
/// the sweep linear in practice.
const MAX_CHAINS_PER_INTERVAL: usize = 8;

/// Enumerates every stationary interval reachable from a node by a single
/// straight move along `orientation`, sweeping cell by cell. A safe interval
/// `i` of the next cell continues the sweep from an interval with upper
/// bound `ub0` only if `i.lb < ub0` (the agent must still hold the previous
/// cell when it starts entering the next), and the earliest-entry bound
/// advances by one cell at top speed: `max(prev + cellLength/vMax, i.lb)`.
/// Per (cell, interval) the [`MAX_CHAINS_PER_INTERVAL`] chains with the
/// smallest entry bounds are kept, each becoming its own candidate.
pub(crate) fn move_candidates(
    world: &GridWorld,
    limits: &KinodynamicLimits,
    table: &SafeIntervalTable,
    vertex: Vertex,
    orientation: Orientation,
    lb: f64,
    ub: f64,
    max_cells: Option<usize>,
) -> Vec<MoveCandidate> {
    struct Reach {
        cells: usize,
        interval_idx: usize,
        interval: TimeInterval,
        entry_bound: f64,
        parent: Option<usize>,
    }

    let t_cell = limits.min_traversal_time(world.cell_length());
    let mut arena: Vec<Reach> = Vec::new();
    // Chains that survived their layer's cap, in emission order.
    let mut kept: Vec<usize> = Vec::new();
    // Arena indices of the previous layer; `None` in a pair marks the
    // virtual layer-0 entry (the node itself).
    let mut prev_layer: Vec<Option<usize>> = vec![None];
    let mut cell = vertex;
    let mut cells = 0usize;
    while !prev_layer.is_empty() {
        if max_cells.is_some_and(|m| cells >= m) {
            break;
        }
        let Some(next) = world.step(cell, orientation) else {
            break;
        };
        cell = next;
        cells += 1;
        // (interval index) -> arena idxs of the chains into it.
        let mut reached: HashMap<usize, Vec<usize>> = HashMap::new();
        for &p in &prev_layer {
            let (p_lb, p_ub) = match p {
                None => (lb, ub),
                Some(i) => (arena[i].entry_bound, arena[i].interval.ub),
            };
            for (i, iv) in table.intervals(cell).iter().enumerate() {
                if iv.lb >= p_ub {
                    continue;
                }
                let entry = (p_lb + t_cell).max(iv.lb);
                if entry >= iv.ub {
                    continue;
                }
                arena.push(Reach {
                    cells,
                    interval_idx: i,
                    interval: *iv,
                    entry_bound: entry,
                    parent: p,
                });
                reached.entry(i).or_default().push(arena.len() - 1);
            }
        }
        let mut layer: Vec<usize> = Vec::new();
        let mut interval_idxs: Vec<usize> = reached.keys().copied().collect();
        interval_idxs.sort_unstable();
        for i in interval_idxs {
            let mut chains = reached.remove(&i).unwrap();
            chains.sort_by(|&a, &b| {
                arena[a].entry_bound.total_cmp(&arena[b].entry_bound).then(a.cmp(&b))
            });
            chains.truncate(MAX_CHAINS_PER_INTERVAL);
            layer.extend(chains);
        }
        kept.extend(layer.iter().copied());
        prev_layer = layer.into_iter().map(Some).collect();
    }

    let mut out = Vec::with_capacity(kept.len());
    for idx in kept {
        let r = &arena[idx];
        let mut windows = vec![TimeInterval::new(lb, ub); r.cells + 1];
        let mut at = Some(idx);
        while let Some(i) = at {
            let e = &arena[i];
            windows[e.cells] = e.interval;
            at = e.parent;
        }
        out.push(MoveCandidate {
            cells: r.cells,
            target: walk(world, vertex, orientation, r.cells),
            interval_idx: r.interval_idx,
            interval: r.interval,
            entry_bound: r.entry_bound,
            windows: SegmentWindows {
                t0: lb,
                cell_length: world.cell_length(),
                windows,
            },
        });
    }
    out
}

fn walk(world: &GridWorld, from: Vertex, dir: Orientation, cells: usize) -> Vertex {
    let mut v = from;
    for _ in 0..cells {
        v = world.step(v, dir).expect("walk follows a swept ray");
    }
    v
}

struct Node {
    vertex: Vertex,
    orientation: Orientation,
    lb: f64,
    ub: f64,
    prev: PrevAction,
    parent: Option<usize>,
    edge: Edge,
    retired: bool,
    /// Move candidates not yet handed to the segment solver, sorted
    /// ascending by p-value; populated on first expansion.
    pending: Option<Vec<(f64, MoveCandidate)>>,
    cursor: usize,
}

#[derive(Clone, Copy)]
pub(crate) struct HeapEntry {
    pub(crate) f: f64,
    pub(crate) g: f64,
    pub(crate) seq: u64,
    pub(crate) idx: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // BinaryHeap is a max-heap: "greater" means popped earlier. Prefer the
    // smaller f, then the larger g (deeper progress), then insertion order.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone)]
pub struct SsippConfig {
    pub sps: SpsKind,
    pub sps_params: SpsParams,
    /// Cap on move segment length in cells; `Some(1)` forces a full stop in
    /// every cell (the stop-and-go baseline), `None` leaves it unbounded.
    pub max_segment_cells: Option<usize>,
    /// Prune nodes that tie an existing (vertex, orientation, interval end)
    /// with an equal-or-later rest time.
    pub duplicate_detection: bool,
    /// Solve one move candidate per pop instead of all at once, re-queuing
    /// the parent at the next candidate's priority.
    pub partial_expansion: bool,
    /// Give up (keeping any incumbent) after this many expansions.
    pub expansion_limit: usize,
}

impl Default for SsippConfig {
    fn default() -> Self {
        Self {
            sps: SpsKind::Bcs,
            sps_params: SpsParams::default(),
            max_segment_cells: None,
            duplicate_detection: true,
            partial_expansion: true,
            expansion_limit: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SsippStats {
    pub expanded: usize,
    pub generated: usize,
    pub sps_calls: usize,
    pub duplicate_hits: usize,
    /// Wall time spent inside the segment solvers, seconds.
    pub sps_time: f64,
    /// The expansion limit was hit; a returned plan may be suboptimal.
    pub cutoff: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SsippProblem<'a> {
    pub world: &'a GridWorld,
    pub limits: &'a KinodynamicLimits,
    pub table: &'a SafeIntervalTable,
    pub agent: u32,
    pub start_vertex: Vertex,
    pub start_orientation: Orientation,
    pub depart: f64,
    pub goal: Vertex,
}

#[derive(Debug)]
pub struct SsippOutcome {
    pub plan: Option<Plan>,
    pub stats: SsippStats,
}

/// Plans one agent from rest at the start to rest at the goal, never leaving
/// the safe intervals in `problem.table`. A goal node is accepted only when
/// its interval never ends, so the agent can stay parked; the first best
/// accepted rest time is optimal for the configured segment solver. The
/// heuristic must have been built for `problem.goal`.
pub fn solve(problem: &SsippProblem, config: &SsippConfig, heuristic: &GridHeuristic) -> SsippOutcome {
    assert_eq!(heuristic.goal(), problem.goal, "heuristic built for a different goal");
    let mut stats = SsippStats::default();
    let mut arena: Vec<Node> = Vec::new();
    let mut open: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let mut seq = 0u64;
    // (vertex, orientation, interval-end bits) -> (arena idx, lb) of the
    // best known node; a strictly earlier rest time retires the old node.
    let mut seen: HashMap<(Vertex, u8, u64), (usize, f64)> = HashMap::new();
    let mut best: Option<usize> = None;

    let Some((_, root_iv)) = problem.table.interval_containing(problem.start_vertex, problem.depart)
    else {
        return SsippOutcome { plan: None, stats };
    };
    let Some(h0) = heuristic.lower_bound(problem.start_vertex) else {
        return SsippOutcome { plan: None, stats };
    };
    arena.push(Node {
        vertex: problem.start_vertex,
        orientation: problem.start_orientation,
        lb: problem.depart,
        ub: root_iv.ub,
        prev: PrevAction::Start,
        parent: None,
        edge: Edge::Root,
        retired: false,
        pending: None,
        cursor: 0,
    });
    seen.insert(
        (problem.start_vertex, problem.start_orientation.index() as u8, root_iv.ub.to_bits()),
        (0, problem.depart),
    );
    open.push(HeapEntry { f: problem.depart + h0, g: problem.depart, seq, idx: 0 });
    stats.generated += 1;

    while let Some(entry) = open.pop() {
        if arena[entry.idx].retired {
            continue;
        }
        if arena[entry.idx].vertex == problem.goal && arena[entry.idx].ub.is_infinite() {
            match best {
                Some(b) if arena[b].lb <= arena[entry.idx].lb => {}
                _ => best = Some(entry.idx),
            }
        }
        if let Some(b) = best {
            if entry.f >= arena[b].lb - EPS_TIME {
                return SsippOutcome { plan: Some(reconstruct(problem, &arena, b)), stats };
            }
        }
        if stats.expanded >= config.expansion_limit {
            stats.cutoff = true;
            break;
        }
        stats.expanded += 1;
        expand(problem, config, heuristic, &mut arena, &mut open, &mut seen, &mut stats, &mut seq, entry.idx);
    }

    SsippOutcome { plan: best.map(|b| reconstruct(problem, &arena, b)), stats }
}

#[allow(clippy::too_many_arguments)]
fn expand(
    problem: &SsippProblem,
    config: &SsippConfig,
    heuristic: &GridHeuristic,
    arena: &mut Vec<Node>,
    open: &mut BinaryHeap<HeapEntry>,
    seen: &mut HashMap<(Vertex, u8, u64), (usize, f64)>,
    stats: &mut SsippStats,
    seq: &mut u64,
    idx: usize,
) {
    if arena[idx].pending.is_none() {
        // First expansion: rotations, then gather move candidates.
        let (v, o, lb, ub, prev) = {
            let n = &arena[idx];
            (n.vertex, n.orientation, n.lb, n.ub, n.prev)
        };
        if prev != PrevAction::Rotate {
            for to in Orientation::ALL {
                if to == o {
                    continue;
                }
                let t = problem.limits.rotation_time(o, to);
                if lb + t >= ub - EPS_TIME {
                    continue;
                }
                push_child(
                    config, heuristic, arena, open, seen, stats, seq,
                    Node {
                        vertex: v,
                        orientation: to,
                        lb: lb + t,
                        ub,
                        prev: PrevAction::Rotate,
                        parent: Some(idx),
                        edge: Edge::Rotate { from: o, to },
                        retired: false,
                        pending: None,
                        cursor: 0,
                    },
                );
            }
        }
        // Move-after-move is normally redundant: the uncapped sweep already
        // enumerates the longer segment covering both runs, and the spline
        // solver can realize any intermediate slowdown inside it. A segment
        // cap breaks that subsumption, so capped mode keeps chaining moves.
        let moves_allowed = prev != PrevAction::Move || config.max_segment_cells.is_some();
        let mut pending: Vec<(f64, MoveCandidate)> = Vec::new();
        if moves_allowed {
            for cand in move_candidates(
                problem.world, problem.limits, problem.table, v, o, lb, ub,
                config.max_segment_cells,
            ) {
                let Some(h) = heuristic.lower_bound(cand.target) else {
                    continue;
                };
                pending.push((cand.entry_bound + h, cand));
            }
            pending.sort_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then(a.1.cells.cmp(&b.1.cells))
                    .then(a.1.interval_idx.cmp(&b.1.interval_idx))
            });
        }
        arena[idx].pending = Some(pending);
    }

    let take = if config.partial_expansion {
        1
    } else {
        usize::MAX
    };
    for _ in 0..take {
        let cursor = arena[idx].cursor;
        let Some((_, cand)) = arena[idx]
            .pending
            .as_ref()
            .and_then(|p| p.get(cursor))
            .cloned()
        else {
            break;
        };
        arena[idx].cursor += 1;
        stats.sps_calls += 1;
        let sps_start = std::time::Instant::now();
        let sol = solve_sps(config.sps, &cand.windows, problem.limits, &config.sps_params);
        stats.sps_time += sps_start.elapsed().as_secs_f64();
        if let Some(sol) = sol {
            let arrival = arena[idx].lb + sol.duration;
            if arrival < cand.interval.ub - EPS_TIME {
                let (o,) = (arena[idx].orientation,);
                push_child(
                    config, heuristic, arena, open, seen, stats, seq,
                    Node {
                        vertex: cand.target,
                        orientation: o,
                        lb: arrival,
                        ub: cand.interval.ub,
                        prev: PrevAction::Move,
                        parent: Some(idx),
                        edge: Edge::Move {
                            cells: cand.cells as u32,
                            to: cand.target,
                            profile: sol.profile,
                        },
                        retired: false,
                        pending: None,
                        cursor: 0,
                    },
                );
            }
        }
    }

    if config.partial_expansion {
        let n = &arena[idx];
        let next = n.pending.as_ref().and_then(|p| p.get(n.cursor)).map(|c| c.0);
        if let Some(p) = next {
            // Re-queue at the pending candidate's own priority: equivalent
            // to raising h to (p - g), which stays a lower bound for every
            // route through the remaining candidates.
            *seq += 1;
            open.push(HeapEntry { f: p, g: n.lb, seq: *seq, idx });
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn push_child(
    config: &SsippConfig,
    heuristic: &GridHeuristic,
    arena: &mut Vec<Node>,
    open: &mut BinaryHeap<HeapEntry>,
    seen: &mut HashMap<(Vertex, u8, u64), (usize, f64)>,
    stats: &mut SsippStats,
    seq: &mut u64,
    node: Node,
) {
    let Some(h) = heuristic.lower_bound(node.vertex) else {
        return;
    };
    let key = (node.vertex, node.orientation.index() as u8, node.ub.to_bits());
    if config.duplicate_detection {
        match seen.get(&key) {
            Some(&(_, lb)) if lb <= node.lb + EPS_TIME => {
                stats.duplicate_hits += 1;
                return;
            }
            Some(&(old, _)) => arena[old].retired = true,
            None => {}
        }
    }
    let f = node.lb + h;
    let g = node.lb;
    arena.push(node);
    let idx = arena.len() - 1;
    if config.duplicate_detection {
        seen.insert(key, (idx, g));
    }
    *seq += 1;
    open.push(HeapEntry { f, g, seq: *seq, idx });
    stats.generated += 1;
}

fn reconstruct(problem: &SsippProblem, arena: &[Node], goal_idx: usize) -> Plan {
    let mut chain = Vec::new();
    let mut at = Some(goal_idx);
    while let Some(i) = at {
        chain.push(i);
        at = arena[i].parent;
    }
    chain.reverse();
    let mut actions = Vec::with_capacity(chain.len().saturating_sub(1));
    for pair in chain.windows(2) {
        let (p, c) = (&arena[pair[0]], &arena[pair[1]]);
        let kind = match &c.edge {
            Edge::Rotate { from, to } => ActionKind::Rotate { from: *from, to: *to },
            Edge::Move { cells, to, profile } => ActionKind::Move {
                orientation: c.orientation,
                cells: *cells,
                to: *to,
                profile: profile.clone(),
            },
            Edge::Root => unreachable!("root has no incoming edge"),
        };
        actions.push(TimedAction {
            start: p.lb,
            duration: Some(c.lb - p.lb),
            vertex: p.vertex,
            kind,
        });
    }
    Plan {
        agent: problem.agent,
        start_vertex: problem.start_vertex,
        start_orientation: problem.start_orientation,
        depart: problem.depart,
        actions,
        arrival: arena[goal_idx].lb,
    }
}
