//! Multi-agent coordination: resolve inter-agent collisions by planning
//! agents one at a time against the occupancy of higher-priority plans.
//!
//! Two strategies share the single-agent search: prioritized planning on a
//! fixed (or seeded-random) total order, and priority-based search over a
//! binary tree of pairwise orderings explored depth-first, cheaper child
//! first. Either way the returned plan set is collision-free under the
//! occupancy model in [`crate::occupancy`].

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{GridWorld, KinodynamicLimits, Orientation, Plan, Vertex};
use crate::occupancy::{plan_occupancy, OccupancySet, ParkAtEnd, SafeIntervalTable, TimeInterval};
use crate::ssipp::{self, GridHeuristic, SsippConfig, SsippProblem, SsippStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AgentSpec {
    pub id: u32,
    pub start: Vertex,
    pub orientation: Orientation,
    pub goal: Vertex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapfAlgo {
    Pp,
    Pbs,
}

#[derive(Debug, Clone)]
pub struct MapfConfig {
    pub algo: MapfAlgo,
    pub ssipp: SsippConfig,
    /// Seed for the randomized parts (PP restart orders).
    pub seed: u64,
    /// PP only: additional seeded-random orders tried after the id order.
    pub random_restarts: usize,
    /// Wall-clock budget in seconds.
    pub time_limit: Option<f64>,
    /// PBS only: cap on priority-tree nodes expanded.
    pub node_limit: usize,
}

impl Default for MapfConfig {
    fn default() -> Self {
        Self {
            algo: MapfAlgo::Pbs,
            ssipp: SsippConfig::default(),
            seed: 0,
            random_restarts: 9,
            time_limit: None,
            node_limit: 10_000,
        }
    }
}

/// Cumulative work and per-level wall time: coordination overhead
/// (`level1_time`), single-agent search excluding segment solving
/// (`level2_time`), and segment solving itself (`level3_time`).
#[derive(Debug, Clone, Copy, Default)]
pub struct MapfStats {
    pub ssipp_runs: usize,
    pub expanded: usize,
    pub generated: usize,
    pub sps_calls: usize,
    pub level1_time: f64,
    pub level2_time: f64,
    pub level3_time: f64,
    /// PP: orders attempted. PBS: priority-tree nodes expanded.
    pub attempts: usize,
}

impl MapfStats {
    fn absorb(&mut self, s: &SsippStats, wall: f64) {
        self.ssipp_runs += 1;
        self.expanded += s.expanded;
        self.generated += s.generated;
        self.sps_calls += s.sps_calls;
        self.level2_time += wall - s.sps_time;
        self.level3_time += s.sps_time;
    }
}

#[derive(Debug, Clone)]
pub struct MapfSolution {
    /// One collision-free plan per agent, ordered by agent id.
    pub plans: Vec<Plan>,
    /// Sum of arrival times.
    pub cost: f64,
    pub stats: MapfStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapfFailureKind {
    /// No order (PP) or priority tree branch (PBS) could route this agent.
    Stuck { agent: u32 },
    /// Every branch of the priority tree was tried.
    Exhausted,
    /// Ran out of time or tree-node budget.
    Cutoff,
}

#[derive(Debug, Clone)]
pub struct MapfFailure {
    pub kind: MapfFailureKind,
    pub stats: MapfStats,
}

/// Earliest same-vertex occupancy overlap between two plans in a set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision {
    pub a: u32,
    pub b: u32,
    pub vertex: Vertex,
    pub overlap: TimeInterval,
}

/// Scans every plan pair for overlapping occupancy of the same vertex and
/// returns the earliest overlap (ties: smaller vertex, then smaller agent
/// pair). Plans are treated as parked at their goals forever.
pub fn detect_first_collision(world: &GridWorld, plans: &[Plan]) -> Option<Collision> {
    let occs: Vec<(u32, OccupancySet)> = plans
        .iter()
        .map(|p| {
            let mut o = plan_occupancy(p, world, ParkAtEnd::Forever, 0.0);
            o.normalize(0.0);
            (p.agent, o)
        })
        .collect();
    let mut best: Option<Collision> = None;
    for i in 0..occs.len() {
        for j in i + 1..occs.len() {
            let (ia, occ_a) = &occs[i];
            let (ib, occ_b) = &occs[j];
            let mut shared: Vec<Vertex> = occ_a
                .vertices()
                .filter(|v| !occ_b.intervals(*v).is_empty())
                .collect();
            shared.sort_unstable();
            for v in shared {
                for x in occ_a.intervals(v) {
                    for y in occ_b.intervals(v) {
                        if !x.overlaps(y) {
                            continue;
                        }
                        let overlap = TimeInterval::new(x.lb.max(y.lb), x.ub.min(y.ub));
                        let cand = Collision { a: *ia, b: *ib, vertex: v, overlap };
                        let better = match &best {
                            None => true,
                            Some(c) => {
                                (overlap.lb, v, *ia, *ib) < (c.overlap.lb, c.vertex, c.a, c.b)
                            }
                        };
                        if better {
                            best = Some(cand);
                        }
                    }
                }
            }
        }
    }
    best
}

/// Do two plans ever occupy a vertex at overlapping times?
pub fn plans_collide(world: &GridWorld, a: &Plan, b: &Plan) -> bool {
    let mut occ_a = plan_occupancy(a, world, ParkAtEnd::Forever, 0.0);
    let mut occ_b = plan_occupancy(b, world, ParkAtEnd::Forever, 0.0);
    occ_a.normalize(0.0);
    occ_b.normalize(0.0);
    occ_a.disjoint_from(&occ_b).is_some()
}

/// Shared per-solve scratch: the map, limits, and heuristics keyed by goal.
struct Ctx<'a> {
    world: &'a GridWorld,
    limits: &'a KinodynamicLimits,
    config: &'a MapfConfig,
    heuristics: HashMap<Vertex, GridHeuristic>,
    deadline: Option<Instant>,
    stats: MapfStats,
}

impl<'a> Ctx<'a> {
    fn new(world: &'a GridWorld, limits: &'a KinodynamicLimits, config: &'a MapfConfig) -> Self {
        Self {
            world,
            limits,
            config,
            heuristics: HashMap::new(),
            deadline: config
                .time_limit
                .map(|s| Instant::now() + std::time::Duration::from_secs_f64(s)),
            stats: MapfStats::default(),
        }
    }

    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Plans one agent against the occupancy of `obstacles`.
    fn route(&mut self, agent: &AgentSpec, obstacles: &[&Plan]) -> Option<Plan> {
        let table = SafeIntervalTable::from_plans(
            obstacles.iter().copied(),
            self.world,
            ParkAtEnd::Forever,
            0.0,
            f64::INFINITY,
        );
        let h = self
            .heuristics
            .entry(agent.goal)
            .or_insert_with(|| GridHeuristic::new(self.world, self.limits, agent.goal));
        let problem = SsippProblem {
            world: self.world,
            limits: self.limits,
            table: &table,
            agent: agent.id,
            start_vertex: agent.start,
            start_orientation: agent.orientation,
            depart: 0.0,
            goal: agent.goal,
        };
        let t0 = Instant::now();
        let out = ssipp::solve(&problem, &self.config.ssipp, h);
        self.stats.absorb(&out.stats, t0.elapsed().as_secs_f64());
        out.plan
    }
}

/// Plans all agents with the configured strategy. Agents are handled in id
/// order internally regardless of input order.
pub fn solve(
    world: &GridWorld,
    limits: &KinodynamicLimits,
    agents: &[AgentSpec],
    config: &MapfConfig,
) -> Result<MapfSolution, MapfFailure> {
    let total = Instant::now();
    let mut agents: Vec<AgentSpec> = agents.to_vec();
    agents.sort_by_key(|a| a.id);
    let mut ctx = Ctx::new(world, limits, config);
    let result = match config.algo {
        MapfAlgo::Pp => pp_solve(&agents, &mut ctx),
        MapfAlgo::Pbs => pbs_solve(&agents, &mut ctx),
    };
    let mut stats = ctx.stats;
    stats.level1_time =
        (total.elapsed().as_secs_f64() - stats.level2_time - stats.level3_time).max(0.0);
    match result {
        Ok(mut plans) => {
            plans.sort_by_key(|p| p.agent);
            let cost = plans.iter().map(|p| p.arrival).sum();
            Ok(MapfSolution { plans, cost, stats })
        }
        Err(kind) => Err(MapfFailure { kind, stats }),
    }
}

fn pp_solve(agents: &[AgentSpec], ctx: &mut Ctx) -> Result<Vec<Plan>, MapfFailureKind> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
    let mut order: Vec<usize> = (0..agents.len()).collect();
    let mut last_stuck = None;
    for attempt in 0..=ctx.config.random_restarts {
        if attempt > 0 {
            order.shuffle(&mut rng);
        }
        ctx.stats.attempts += 1;
        match pp_attempt(agents, &order, ctx) {
            Ok(plans) => return Ok(plans),
            Err(PpError::Cutoff) => return Err(MapfFailureKind::Cutoff),
            Err(PpError::Stuck(agent)) => last_stuck = Some(agent),
        }
    }
    Err(MapfFailureKind::Stuck { agent: last_stuck.expect("at least one attempt ran") })
}

enum PpError {
    Stuck(u32),
    Cutoff,
}

fn pp_attempt(agents: &[AgentSpec], order: &[usize], ctx: &mut Ctx) -> Result<Vec<Plan>, PpError> {
    let mut planned: Vec<Plan> = Vec::with_capacity(agents.len());
    for &i in order {
        if ctx.out_of_time() {
            return Err(PpError::Cutoff);
        }
        let obstacles: Vec<&Plan> = planned.iter().collect();
        match ctx.route(&agents[i], &obstacles) {
            Some(p) => planned.push(p),
            None => return Err(PpError::Stuck(agents[i].id)),
        }
    }
    Ok(planned)
}

/// Pairs (i, j) meaning agent id `i` outranks agent id `j`.
#[derive(Debug, Clone, Default)]
struct Orderings {
    pairs: HashSet<(u32, u32)>,
}

impl Orderings {
    fn with(&self, high: u32, low: u32) -> Option<Self> {
        let mut next = self.clone();
        next.pairs.insert((high, low));
        (!next.reaches(low, high)).then_some(next)
    }

    /// Is `to` transitively below `from`?
    fn reaches(&self, from: u32, to: u32) -> bool {
        let mut seen = HashSet::new();
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            for &(h, l) in &self.pairs {
                if h == v && seen.insert(l) {
                    stack.push(l);
                }
            }
        }
        false
    }

    /// Agent ids strictly above `id`, transitively.
    fn above(&self, id: u32) -> HashSet<u32> {
        let mut out = HashSet::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            for &(h, l) in &self.pairs {
                if l == v && out.insert(h) {
                    stack.push(h);
                }
            }
        }
        out
    }

    /// Ids in `ids` sorted so that higher-priority agents come first;
    /// id order breaks ties deterministically.
    fn topological(&self, ids: &[u32]) -> Vec<u32> {
        let mut remaining: Vec<u32> = ids.to_vec();
        remaining.sort_unstable();
        let mut out = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            let pick = remaining
                .iter()
                .position(|&x| {
                    !remaining.iter().any(|&y| y != x && self.reaches(y, x))
                })
                .expect("orderings stay acyclic");
            out.push(remaining.remove(pick));
        }
        out
    }
}

struct PtNode {
    orderings: Orderings,
    plans: Vec<Plan>,
    cost: f64,
}

fn pbs_solve(agents: &[AgentSpec], ctx: &mut Ctx) -> Result<Vec<Plan>, MapfFailureKind> {
    let by_id: HashMap<u32, &AgentSpec> = agents.iter().map(|a| (a.id, a)).collect();
    let mut root_plans = Vec::with_capacity(agents.len());
    for a in agents {
        match ctx.route(a, &[]) {
            Some(p) => root_plans.push(p),
            None => return Err(MapfFailureKind::Stuck { agent: a.id }),
        }
    }
    let cost = root_plans.iter().map(|p| p.arrival).sum();
    let mut stack = vec![PtNode { orderings: Orderings::default(), plans: root_plans, cost }];

    while let Some(node) = stack.pop() {
        if ctx.out_of_time() {
            return Err(MapfFailureKind::Cutoff);
        }
        if ctx.stats.attempts >= ctx.config.node_limit {
            return Err(MapfFailureKind::Cutoff);
        }
        ctx.stats.attempts += 1;
        let Some(c) = detect_first_collision(ctx.world, &node.plans) else {
            return Ok(node.plans);
        };
        let mut children = Vec::with_capacity(2);
        for (high, low) in [(c.a, c.b), (c.b, c.a)] {
            let Some(orderings) = node.orderings.with(high, low) else {
                continue;
            };
            if let Some(child) = replan_below(low, &orderings, &node.plans, &by_id, ctx)? {
                children.push(child);
            }
        }
        // Depth-first, cheaper child first: push the costlier child below.
        children.sort_by(|x, y| y.cost.total_cmp(&x.cost));
        stack.extend(children);
    }
    Err(MapfFailureKind::Exhausted)
}

/// Rebuilds plans consistent with `orderings` after `low` was demoted:
/// `low` and every agent transitively below it is re-routed, top-down,
/// whenever its current plan collides with any higher-priority plan.
/// Returns `Ok(None)` when some agent becomes unroutable (dead branch).
fn replan_below(
    low: u32,
    orderings: &Orderings,
    plans: &[Plan],
    by_id: &HashMap<u32, &AgentSpec>,
    ctx: &mut Ctx,
) -> Result<Option<PtNode>, MapfFailureKind> {
    let mut plans: Vec<Plan> = plans.to_vec();
    let mut scope: Vec<u32> = vec![low];
    for p in plans.iter() {
        if p.agent != low && orderings.reaches(low, p.agent) {
            scope.push(p.agent);
        }
    }
    let index_of: HashMap<u32, usize> =
        plans.iter().enumerate().map(|(i, p)| (p.agent, i)).collect();
    for id in orderings.topological(&scope) {
        if ctx.out_of_time() {
            return Err(MapfFailureKind::Cutoff);
        }
        let above = orderings.above(id);
        let higher: Vec<&Plan> = plans.iter().filter(|p| above.contains(&p.agent)).collect();
        let me = &plans[index_of[&id]];
        let conflicted = higher.iter().any(|h| plans_collide(ctx.world, h, me));
        if !conflicted {
            continue;
        }
        match ctx.route(by_id[&id], &higher) {
            Some(p) => plans[index_of[&id]] = p,
            None => return Ok(None),
        }
    }
    let cost = plans.iter().map(|p| p.arrival).sum();
    Ok(Some(PtNode { orderings: orderings.clone(), plans, cost }))
}
