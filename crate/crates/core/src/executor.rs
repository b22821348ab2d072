//! Plan validation and solution metrics, independent of the planner.
//!
//! Validation runs two unlike collision checks — analytic occupancy-interval
//! disjointness and dense position sampling — plus per-profile dynamics
//! bounds and action-chain continuity, so a planner bug has to fool two
//! different models to slip through.

use crate::domain::{ActionKind, GridWorld, KinodynamicLimits, Plan};
use crate::occupancy::{plan_occupancy, OccupancySet, ParkAtEnd, SafeIntervalTable};
use crate::ssipp::{self, GridHeuristic, SsippConfig, SsippProblem};

/// Speed/acceleration sampling slack; bounds themselves are hard limits.
const DYNAMICS_TOL: f64 = 1e-6;
/// Endpoint speeds must vanish to this accuracy.
const ENDPOINT_TOL: f64 = 1e-9;
/// Timing/positional continuity between consecutive actions.
const CONTINUITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Collision,
    Dynamics,
    Continuity,
    TableViolation,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub agents: Vec<u32>,
    pub time: f64,
    pub detail: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from(violations: Vec<Violation>) -> Self {
        Self { ok: violations.is_empty(), violations }
    }
}

/// Full plan-set validation: pairwise collision freedom (analytic intervals
/// and positions sampled every `dt` seconds), dynamics bounds on every move
/// profile, and action-chain continuity.
pub fn validate(
    plans: &[Plan],
    world: &GridWorld,
    limits: &KinodynamicLimits,
    dt: f64,
) -> ValidationReport {
    assert!(dt > 0.0, "sampling step must be positive");
    let mut violations = Vec::new();
    for p in plans {
        check_continuity(p, world, &mut violations);
        check_dynamics(p, world.cell_length(), limits, &mut violations);
    }
    check_collisions(plans, world, dt, &mut violations);
    ValidationReport::from(violations)
}

fn check_collisions(plans: &[Plan], world: &GridWorld, dt: f64, out: &mut Vec<Violation>) {
    let occs: Vec<OccupancySet> = plans
        .iter()
        .map(|p| {
            let mut o = plan_occupancy(p, world, ParkAtEnd::Forever, 0.0);
            o.normalize(0.0);
            o
        })
        .collect();
    for i in 0..plans.len() {
        for j in i + 1..plans.len() {
            let analytic = occs[i].disjoint_from(&occs[j]);
            if let Some((v, a, b)) = analytic {
                out.push(Violation {
                    kind: ViolationKind::Collision,
                    agents: vec![plans[i].agent, plans[j].agent],
                    time: a.lb.max(b.lb),
                    detail: format!(
                        "vertex {v} occupied by both: [{:.4}, {:.4}) and [{:.4}, {:.4})",
                        a.lb, a.ub, b.lb, b.ub
                    ),
                });
            }
            let sampled = sampled_breach(&plans[i], &plans[j], world, dt);
            match (analytic, sampled) {
                (None, Some((t, d))) => out.push(Violation {
                    kind: ViolationKind::Collision,
                    agents: vec![plans[i].agent, plans[j].agent],
                    time: t,
                    detail: format!(
                        "sampled separation {d:.6} < cell length at t = {t:.4} \
                         but occupancy intervals are disjoint"
                    ),
                }),
                (Some(_), None) => {
                    // The analytic overlap is already reported; a clean
                    // sample pass can happen when the overlap is shorter
                    // than dt, which is not an extra defect.
                }
                _ => {}
            }
        }
    }
}

/// First sampled instant at which two agents come closer than one cell
/// length, if any. Both are parked at their final vertices past arrival.
fn sampled_breach(a: &Plan, b: &Plan, world: &GridWorld, dt: f64) -> Option<(f64, f64)> {
    let end = a.end_time().max(b.end_time());
    let min_gap = world.cell_length() * (1.0 - 1e-9);
    let steps = (end / dt).ceil() as usize + 1;
    for k in 0..=steps {
        let t = (k as f64 * dt).min(end);
        let (xa, ya) = a.position_at(t, world);
        let (xb, yb) = b.position_at(t, world);
        let d = ((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt();
        if d < min_gap {
            return Some((t, d));
        }
    }
    None
}

fn check_dynamics(plan: &Plan, cell_length: f64, limits: &KinodynamicLimits, out: &mut Vec<Violation>) {
    for action in &plan.actions {
        let ActionKind::Move { profile, cells, .. } = &action.kind else {
            continue;
        };
        let total = profile.duration();
        let expected_len = *cells as f64 * cell_length;
        let mut worst: Option<(f64, String)> = None;
        let mut check = |t: f64, what: String| {
            if worst.is_none() {
                worst = Some((t, what));
            }
        };
        for k in 0..=1000usize {
            let t = total * k as f64 / 1000.0;
            let (_, v) = profile.evaluate(t);
            let acc = profile.acceleration(t);
            if v < -DYNAMICS_TOL || v > limits.v_max + DYNAMICS_TOL {
                check(t, format!("speed {v:.6} outside [0, {}]", limits.v_max));
            }
            if acc < limits.a_min - DYNAMICS_TOL || acc > limits.a_max + DYNAMICS_TOL {
                check(t, format!("acceleration {acc:.6} outside [{}, {}]", limits.a_min, limits.a_max));
            }
        }
        let (_, v0) = profile.evaluate(0.0);
        let (_, v1) = profile.evaluate(total);
        if v0.abs() > ENDPOINT_TOL || v1.abs() > ENDPOINT_TOL {
            check(if v0.abs() > ENDPOINT_TOL { 0.0 } else { total },
                  format!("endpoint speeds ({v0:.2e}, {v1:.2e}) not at rest"));
        }
        if (profile.length() - expected_len).abs() > DYNAMICS_TOL * expected_len.max(1.0) {
            check(total, format!("profile covers {:.8}, action spans {cells} cells", profile.length()));
        }
        if let Some((t, what)) = worst {
            out.push(Violation {
                kind: ViolationKind::Dynamics,
                agents: vec![plan.agent],
                time: action.start + t,
                detail: what,
            });
        }
    }
}

fn check_continuity(plan: &Plan, world: &GridWorld, out: &mut Vec<Violation>) {
    let mut t = plan.depart;
    let mut vertex = plan.start_vertex;
    let mut orientation = plan.start_orientation;
    let mut flag = |time: f64, detail: String| {
        out.push(Violation {
            kind: ViolationKind::Continuity,
            agents: vec![plan.agent],
            time,
            detail,
        });
    };
    for (i, a) in plan.actions.iter().enumerate() {
        if (a.start - t).abs() > CONTINUITY_TOL {
            flag(a.start, format!("action {i} starts at {:.6}, previous ended at {t:.6}", a.start));
        }
        if a.vertex != vertex {
            flag(a.start, format!("action {i} anchored at vertex {} but agent is at {vertex}", a.vertex));
        }
        match &a.kind {
            ActionKind::Rotate { from, to } => {
                if *from != orientation {
                    flag(a.start, format!("action {i} rotates from {from:?} but agent faces {orientation:?}"));
                }
                orientation = *to;
            }
            ActionKind::Move { orientation: dir, cells, to, .. } => {
                if *dir != orientation {
                    flag(a.start, format!("action {i} moves {dir:?} but agent faces {orientation:?}"));
                }
                let mut v = vertex;
                let mut broke = false;
                for _ in 0..*cells {
                    match world.step(v, *dir) {
                        Some(n) => v = n,
                        None => {
                            broke = true;
                            break;
                        }
                    }
                }
                if broke || v != *to {
                    flag(a.start, format!("action {i} claims {cells} cells {dir:?} to {to}, map disagrees"));
                }
                vertex = *to;
            }
            ActionKind::Wait | ActionKind::Task { .. } => {}
        }
        t = a.end();
        if !t.is_finite() {
            break;
        }
    }
    if t.is_finite() && (t - plan.arrival).abs() > CONTINUITY_TOL {
        flag(plan.arrival, format!("plan arrival {:.6} but actions end at {t:.6}", plan.arrival));
    }
}

/// Checks that one plan keeps to the free windows of a safe-interval table:
/// every occupancy interval of the plan must fit inside a free interval,
/// with `tol` slack at the boundaries for solver margins.
pub fn table_violations(
    plan: &Plan,
    world: &GridWorld,
    table: &SafeIntervalTable,
    tol: f64,
) -> Vec<Violation> {
    let mut occ = plan_occupancy(plan, world, ParkAtEnd::Forever, 0.0);
    occ.normalize(0.0);
    let mut out = Vec::new();
    for v in occ.vertices() {
        for used in occ.intervals(v) {
            let covered = table.intervals(v).iter().any(|free| {
                used.lb >= free.lb - tol && used.ub <= free.ub + tol
            });
            if !covered {
                out.push(Violation {
                    kind: ViolationKind::TableViolation,
                    agents: vec![plan.agent],
                    time: used.lb,
                    detail: format!(
                        "occupies vertex {v} over [{:.4}, {:.4}) outside its free windows",
                        used.lb, used.ub
                    ),
                });
            }
        }
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    out
}

/// Sum of arrival times.
pub fn sum_of_cost(plans: &[Plan]) -> f64 {
    plans.iter().map(|p| p.arrival).sum()
}

/// Latest arrival time.
pub fn makespan(plans: &[Plan]) -> f64 {
    plans.iter().map(|p| p.arrival).fold(0.0, f64::max)
}

/// Sum of cost divided by the sum of each agent's unconstrained solo
/// arrival (planned on an empty table with the same configuration);
/// 1.0 means coordination cost nothing.
pub fn relative_soc(
    plans: &[Plan],
    world: &GridWorld,
    limits: &KinodynamicLimits,
    config: &SsippConfig,
) -> f64 {
    let table = SafeIntervalTable::empty(f64::INFINITY);
    let mut solo = 0.0;
    for p in plans {
        let goal = p.final_vertex();
        let h = GridHeuristic::new(world, limits, goal);
        let problem = SsippProblem {
            world,
            limits,
            table: &table,
            agent: p.agent,
            start_vertex: p.start_vertex,
            start_orientation: p.start_orientation,
            depart: p.depart,
            goal,
        };
        let out = ssipp::solve(&problem, config, &h);
        solo += out
            .plan
            .map(|s| s.arrival)
            .expect("unconstrained single-agent instance must be solvable");
    }
    sum_of_cost(plans) / solo
}

/// Completed goals per second of simulated time.
pub fn throughput(completed_goals: usize, horizon: f64) -> f64 {
    assert!(horizon > 0.0, "horizon must be positive");
    completed_goals as f64 / horizon
}
