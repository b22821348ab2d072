//! Independent verification helpers used by the test suite.
//!
//! Everything here is deliberately written from first principles, without
//! reusing the planner's profile or search code, so agreement between the two
//! is meaningful evidence rather than a tautology.
//!
//! * [`closed_form_move_time`] — textbook rest-to-rest minimum time for a
//!   straight run under trapezoidal kinematics.
//! * [`discretized_arrival`] — a brute-force uniform-cost search over a
//!   discretized state space (cell, orientation, speed on a 0.1 grid,
//!   time). Its occupancy model is conservative (a move holds both cells for
//!   the whole transition), so every plan it finds is valid under the real
//!   semantics, its arrival is an upper bound on what an optimal planner may
//!   need, and — being a genuine plan — it is also lower-bounded by the
//!   continuous optimum. The planner must land between those bounds.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::domain::{GridWorld, KinodynamicLimits, Orientation, Vertex};
use crate::occupancy::SafeIntervalTable;

/// Minimum rest-to-rest time to cover `cells` cells of `cell_length` under
/// the limits: a triangular speed profile when the cap is out of reach,
/// otherwise accelerate-cruise-brake.
pub fn closed_form_move_time(cells: usize, cell_length: f64, limits: &KinodynamicLimits) -> f64 {
    let length = cells as f64 * cell_length;
    let a = limits.a_max;
    let d = -limits.a_min;
    let v = limits.v_max;
    let ramp_dist = v * v * (a + d) / (2.0 * a * d);
    if length >= ramp_dist {
        length / v + v * (a + d) / (2.0 * a * d)
    } else {
        (2.0 * length * (a + d) / (a * d)).sqrt()
    }
}

/// Speed discretization step for the brute-force search.
const SPEED_STEP: f64 = 0.1;
/// Time-bucket width used only for duplicate pruning.
const TIME_BUCKET: f64 = 0.1;
/// Exploration cap; `None` is returned when it is exhausted.
const MAX_POPS: usize = 500_000;

/// A single-agent query for the brute-force search.
pub struct OracleQuery<'a> {
    pub world: &'a GridWorld,
    pub limits: &'a KinodynamicLimits,
    pub table: &'a SafeIntervalTable,
    pub start_vertex: Vertex,
    pub start_orientation: Orientation,
    pub depart: f64,
    pub goal: Vertex,
}

#[derive(Clone, Copy)]
struct Node {
    t: f64,
    vertex: Vertex,
    orientation: Orientation,
    /// Speed bucket index: speed = bucket * SPEED_STEP (exact multiples).
    bucket: usize,
    /// Time the current cell was entered (occupancy must be contiguous).
    occupied_since: f64,
}

struct Queued(Node);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.0.t == other.0.t
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on time.
        other.0.t.total_cmp(&self.0.t)
    }
}

/// Earliest arrival (at rest, parked forever) at the goal found by the
/// discretized search, or `None` if none is found within the budget.
pub fn discretized_arrival(q: &OracleQuery) -> Option<f64> {
    let limits = q.limits;
    let cl = q.world.cell_length();
    let max_bucket = (limits.v_max / SPEED_STEP + 1e-9).floor() as usize;
    // Largest rest-to-rest peak speed for a one-cell triangle.
    let tri_cap = (limits.a_max.min(-limits.a_min) * cl).sqrt();
    let tri_max_bucket = (tri_cap / SPEED_STEP + 1e-9).floor() as usize;

    // The safe interval entered at `from` must persist through `to`.
    let covers = |v: Vertex, from: f64, to: f64| -> bool {
        q.table
            .interval_containing(v, from)
            .is_some_and(|(_, iv)| iv.ub >= to - 1e-12)
    };
    q.table.interval_containing(q.start_vertex, q.depart)?;

    let mut best: HashMap<(Vertex, u8, usize, i64), f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    heap.push(Queued(Node {
        t: q.depart,
        vertex: q.start_vertex,
        orientation: q.start_orientation,
        bucket: 0,
        occupied_since: q.depart,
    }));

    let mut pops = 0usize;
    while let Some(Queued(n)) = heap.pop() {
        pops += 1;
        if pops > MAX_POPS {
            return None;
        }
        let key = (
            n.vertex,
            n.orientation.index() as u8,
            n.bucket,
            (n.t / TIME_BUCKET).floor() as i64,
        );
        match best.get(&key) {
            Some(&t) if t <= n.t + 1e-12 => continue,
            _ => {
                best.insert(key, n.t);
            }
        }

        if n.vertex == q.goal
            && n.bucket == 0
            && q.table
                .interval_containing(n.vertex, n.occupied_since)
                .is_some_and(|(_, iv)| iv.is_unbounded())
        {
            return Some(n.t);
        }

        let speed = n.bucket as f64 * SPEED_STEP;
        let mut push = |node: Node| heap.push(Queued(node));

        if n.bucket == 0 {
            // Rotations (in place, at rest).
            for target in Orientation::ALL {
                if target == n.orientation {
                    continue;
                }
                let dt = limits.rotation_time(n.orientation, target);
                if covers(n.vertex, n.occupied_since, n.t + dt) {
                    push(Node { t: n.t + dt, orientation: target, ..n });
                }
            }
            // Targeted waits: to the opening of some interval of a neighbor.
            for dir in Orientation::ALL {
                let Some(w) = q.world.step(n.vertex, dir) else { continue };
                for iv in q.table.intervals(w) {
                    if iv.lb > n.t + 1e-12
                        && iv.lb.is_finite()
                        && covers(n.vertex, n.occupied_since, iv.lb)
                    {
                        push(Node { t: iv.lb, ..n });
                    }
                }
            }
        }

        // One-cell move straight ahead, constant acceleration from `speed`
        // to a bucket speed (or a rest-to-rest triangle when both are zero).
        let Some(w) = q.world.step(n.vertex, n.orientation) else { continue };
        let mut arrivals: Vec<(usize, f64)> = Vec::new();
        for nb in 0..=max_bucket {
            let s2 = nb as f64 * SPEED_STEP;
            if n.bucket == 0 && nb == 0 {
                continue; // handled by the triangle primitive below
            }
            let accel = (s2 * s2 - speed * speed) / (2.0 * cl);
            if accel > limits.a_max + 1e-12 || accel < limits.a_min - 1e-12 {
                continue;
            }
            arrivals.push((nb, 2.0 * cl / (speed + s2)));
        }
        if n.bucket == 0 {
            // Rest-to-rest triangle over one cell with peak speed `p`:
            // accelerate at p^2/cell for half the cell, brake symmetrically.
            for pb in 1..=tri_max_bucket {
                let p = pb as f64 * SPEED_STEP;
                arrivals.push((0, 2.0 * cl / p));
            }
        }
        for (nb, dt) in arrivals {
            let t2 = n.t + dt;
            // Conservative: the source cell is held until the move completes
            // and the target for its whole duration.
            if covers(n.vertex, n.occupied_since, t2) && covers(w, n.t, t2) {
                push(Node {
                    t: t2,
                    vertex: w,
                    bucket: nb,
                    occupied_since: n.t,
                    ..n
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupancy::{OccupancySet, TimeInterval};
    use approx::assert_abs_diff_eq;

    fn limits() -> KinodynamicLimits {
        KinodynamicLimits::default()
    }

    fn free_table() -> SafeIntervalTable {
        SafeIntervalTable::empty(f64::INFINITY)
    }

    #[test]
    fn closed_form_known_values() {
        let l = limits();
        assert_abs_diff_eq!(closed_form_move_time(1, 1.0, &l), 2.0 * 2.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(closed_form_move_time(8, 1.0, &l), 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(closed_form_move_time(10, 1.0, &l), 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(closed_form_move_time(5, 1.0, &l), 2.0 * 10.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn closed_form_is_monotone_in_length() {
        let l = limits();
        let mut prev = 0.0;
        for cells in 1..40 {
            let t = closed_form_move_time(cells, 1.0, &l);
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn single_cell_run_brackets_the_continuous_optimum() {
        let world = GridWorld::open(2, 1);
        let table = free_table();
        let l = limits();
        let q = OracleQuery {
            world: &world,
            limits: &l,
            table: &table,
            start_vertex: 0,
            start_orientation: Orientation::East,
            depart: 0.0,
            goal: 1,
        };
        let t = discretized_arrival(&q).unwrap();
        let exact = closed_form_move_time(1, 1.0, &l);
        assert!(t >= exact - 1e-9, "discretized {t} beats the optimum {exact}");
        assert!(t <= exact + 0.2, "discretized {t} too far above {exact}");
    }

    #[test]
    fn long_straight_run_brackets_the_continuous_optimum() {
        let world = GridWorld::open(11, 1);
        let table = free_table();
        let l = limits();
        let q = OracleQuery {
            world: &world,
            limits: &l,
            table: &table,
            start_vertex: 0,
            start_orientation: Orientation::East,
            depart: 0.0,
            goal: 10,
        };
        let t = discretized_arrival(&q).unwrap();
        assert!(t >= 9.0 - 1e-9);
        assert!(t <= 10.0, "discretized {t} too far above 9.0");
    }

    #[test]
    fn initial_rotation_is_paid_for() {
        let world = GridWorld::open(2, 1);
        let table = free_table();
        let l = limits();
        let q = OracleQuery {
            world: &world,
            limits: &l,
            table: &table,
            start_vertex: 0,
            start_orientation: Orientation::West,
            depart: 0.0,
            goal: 1,
        };
        let t = discretized_arrival(&q).unwrap();
        let exact = std::f64::consts::PI + closed_form_move_time(1, 1.0, &l);
        assert!(t >= exact - 1e-9);
        assert!(t <= exact + 0.2);
    }

    #[test]
    fn blocked_middle_cell_forces_a_wait_then_optimal_run() {
        // Middle cell of a 1x3 strip is unavailable until t = 3; after that
        // the optimal two-cell run is a 0 -> 1.0 -> 0 triangle taking 4 s,
        // whose speeds lie exactly on the discretization grid.
        let world = GridWorld::open(3, 1);
        let mut occ = OccupancySet::default();
        occ.add(1, TimeInterval::new(0.0, 3.0));
        occ.normalize(0.0);
        let table = SafeIntervalTable::from_occupancy(&occ, f64::INFINITY);
        let l = limits();
        let q = OracleQuery {
            world: &world,
            limits: &l,
            table: &table,
            start_vertex: 0,
            start_orientation: Orientation::East,
            depart: 0.0,
            goal: 2,
        };
        let t = discretized_arrival(&q).unwrap();
        assert_abs_diff_eq!(t, 7.0, epsilon = 1e-9);
    }

    #[test]
    fn unreachable_goal_returns_none() {
        let world = GridWorld::new(3, 1, 1.0, vec![false, true, false]);
        let table = free_table();
        let l = limits();
        let q = OracleQuery {
            world: &world,
            limits: &l,
            table: &table,
            start_vertex: 0,
            start_orientation: Orientation::East,
            depart: 0.0,
            goal: 2,
        };
        assert!(discretized_arrival(&q).is_none());
    }
}
