//! Vertex occupancy in continuous time, and its complement: the safe-interval
//! table the planner searches over.
//!
//! An agent is a disc inscribed in a cell. While translating along a straight
//! segment with travelled distance `ℓ(t)`, it overlaps the cell at distance
//! `s_k` along the segment exactly while `|ℓ(t) − s_k| < cellLength` (open
//! boundary: touching discs do not collide, so head-to-tail convoys are
//! legal). While rotating, waiting, or servicing a task it occupies its
//! current vertex for the action's span. Occupancy extends across the gaps
//! between consecutive actions (the agent physically sits at the vertex), and
//! optionally forever past the last action for one-shot plans whose agents
//! park at their goals.

use std::collections::HashMap;

use crate::domain::{ActionKind, GridWorld, Plan, Vertex, EPS_TIME};

/// Half-open time interval `[lb, ub)`; `ub = +∞` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeInterval {
    pub lb: f64,
    pub ub: f64,
}

impl TimeInterval {
    pub fn new(lb: f64, ub: f64) -> Self {
        Self { lb, ub }
    }

    /// `[0, ∞)`.
    pub fn unbounded() -> Self {
        Self { lb: 0.0, ub: f64::INFINITY }
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        t >= self.lb && t < self.ub
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.ub - self.lb <= EPS_TIME
    }

    #[inline]
    pub fn is_unbounded(&self) -> bool {
        self.ub.is_infinite()
    }

    /// Positive-measure overlap (beyond the time tolerance).
    #[inline]
    pub fn overlaps(&self, other: &TimeInterval) -> bool {
        self.lb.max(other.lb) + EPS_TIME < self.ub.min(other.ub)
    }
}

/// Per-vertex occupancy intervals of one or more plans; disjoint and sorted
/// per vertex after [`Self::normalize`].
#[derive(Debug, Clone, Default)]
pub struct OccupancySet {
    per_vertex: HashMap<Vertex, Vec<TimeInterval>>,
}

/// Whether a plan's final footprint persists after its last action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParkAtEnd {
    /// One-shot semantics: the agent rests at its final vertex forever.
    Forever,
    /// The plan accounts for its own tail (e.g. an explicit trailing wait).
    No,
}

impl OccupancySet {
    pub fn is_empty(&self) -> bool {
        self.per_vertex.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.per_vertex.keys().copied()
    }

    pub fn intervals(&self, v: Vertex) -> &[TimeInterval] {
        self.per_vertex.get(&v).map_or(&[], |iv| iv.as_slice())
    }

    fn push(&mut self, v: Vertex, lb: f64, ub: f64) {
        if ub - lb > EPS_TIME {
            self.per_vertex.entry(v).or_default().push(TimeInterval::new(lb, ub));
        }
    }

    /// Records one occupancy interval (dropped when empty).
    pub fn add(&mut self, v: Vertex, interval: TimeInterval) {
        self.push(v, interval.lb, interval.ub);
    }

    /// Adds every interval of `other`.
    pub fn merge(&mut self, other: &OccupancySet) {
        for (&v, ivs) in &other.per_vertex {
            self.per_vertex.entry(v).or_default().extend_from_slice(ivs);
        }
    }

    /// Sorts and coalesces overlapping or touching intervals per vertex,
    /// inflating each by `buffer` seconds on both sides first.
    pub fn normalize(&mut self, buffer: f64) {
        for ivs in self.per_vertex.values_mut() {
            for iv in ivs.iter_mut() {
                iv.lb -= buffer;
                if iv.ub.is_finite() {
                    iv.ub += buffer;
                }
            }
            ivs.sort_by(|a, b| a.lb.total_cmp(&b.lb));
            let mut merged: Vec<TimeInterval> = Vec::with_capacity(ivs.len());
            for iv in ivs.drain(..) {
                match merged.last_mut() {
                    Some(last) if iv.lb <= last.ub + EPS_TIME => {
                        last.ub = last.ub.max(iv.ub);
                    }
                    _ => merged.push(iv),
                }
            }
            *ivs = merged;
        }
    }

    /// True when no vertex is occupied by both sets at overlapping times.
    pub fn disjoint_from(&self, other: &OccupancySet) -> Option<(Vertex, TimeInterval, TimeInterval)> {
        for (&v, mine) in &self.per_vertex {
            let theirs = other.intervals(v);
            if theirs.is_empty() {
                continue;
            }
            for a in mine {
                for b in theirs {
                    if a.overlaps(b) {
                        return Some((v, *a, *b));
                    }
                }
            }
        }
        None
    }
}

/// Occupancy of one plan. The result is normalized (sorted, coalesced) with
/// the given safety buffer.
pub fn plan_occupancy(plan: &Plan, world: &GridWorld, park: ParkAtEnd, buffer: f64) -> OccupancySet {
    let cl = world.cell_length();
    let mut occ = OccupancySet::default();
    let n = plan.actions.len();
    for (i, a) in plan.actions.iter().enumerate() {
        // The agent rests at the action's end vertex until the next action
        // starts (contiguous plans make this a zero-length gap).
        let hold_until = match plan.actions.get(i + 1) {
            Some(next) => next.start,
            None => match park {
                ParkAtEnd::Forever => f64::INFINITY,
                ParkAtEnd::No => a.end(),
            },
        };
        match &a.kind {
            ActionKind::Move { orientation, cells, profile, .. } => {
                let mut v = a.vertex;
                for k in 0..=*cells {
                    let s_k = k as f64 * cl;
                    let entry = if k == 0 {
                        a.start
                    } else {
                        // First moment the disc pokes into cell k.
                        a.start
                            + profile
                                .first_time_strictly_above(s_k - cl)
                                .unwrap_or_else(|| profile.duration())
                    };
                    let exit = match profile.first_time_at_or_above(s_k + cl) {
                        Some(t) => a.start + t,
                        // Still inside cell k when the move ends: the agent
                        // parks there until the next action.
                        None => hold_until,
                    };
                    occ.push(v, entry, exit);
                    if k < *cells {
                        v = world
                            .step(v, *orientation)
                            .expect("move segment leaves the map");
                    }
                }
            }
            ActionKind::Rotate { .. } | ActionKind::Wait | ActionKind::Task { .. } => {
                occ.push(a.vertex, a.start, a.end().max(hold_until));
            }
        }
    }
    if n == 0 {
        if let ParkAtEnd::Forever = park {
            occ.push(plan.start_vertex, plan.depart, f64::INFINITY);
        }
    } else if plan.actions[0].start > plan.depart + EPS_TIME {
        // Leading gap before the first action: the agent sits at its start.
        occ.push(plan.start_vertex, plan.depart, plan.actions[0].start);
    }
    occ.normalize(buffer);
    occ
}

/// Safe intervals per vertex: the complement of obstacle occupancy within
/// `[0, horizon)`. Vertices untouched by any obstacle are free for the whole
/// horizon.
#[derive(Debug, Clone)]
pub struct SafeIntervalTable {
    map: HashMap<Vertex, Vec<TimeInterval>>,
    default_free: [TimeInterval; 1],
    horizon: f64,
}

impl SafeIntervalTable {
    /// Everything free up to `horizon` (usually ∞).
    pub fn empty(horizon: f64) -> Self {
        Self {
            map: HashMap::new(),
            default_free: [TimeInterval::new(0.0, horizon)],
            horizon,
        }
    }

    /// Builds the table from normalized obstacle occupancy.
    pub fn from_occupancy(occ: &OccupancySet, horizon: f64) -> Self {
        let mut map = HashMap::with_capacity(occ.per_vertex.len());
        for (&v, blocks) in &occ.per_vertex {
            let mut free = Vec::with_capacity(blocks.len() + 1);
            let mut cursor = 0.0;
            for b in blocks {
                if b.lb - cursor > EPS_TIME {
                    free.push(TimeInterval::new(cursor, b.lb.min(horizon)));
                }
                cursor = cursor.max(b.ub);
                if cursor >= horizon {
                    break;
                }
            }
            if horizon - cursor > EPS_TIME {
                free.push(TimeInterval::new(cursor, horizon));
            }
            free.retain(|iv| !iv.is_empty());
            map.insert(v, free);
        }
        Self {
            map,
            default_free: [TimeInterval::new(0.0, horizon)],
            horizon,
        }
    }

    /// Convenience: occupancy of several obstacle plans, then complement.
    pub fn from_plans<'a>(
        plans: impl IntoIterator<Item = &'a Plan>,
        world: &GridWorld,
        park: ParkAtEnd,
        buffer: f64,
        horizon: f64,
    ) -> Self {
        let mut occ = OccupancySet::default();
        for p in plans {
            occ.merge(&plan_occupancy(p, world, park, 0.0));
        }
        occ.normalize(buffer);
        Self::from_occupancy(&occ, horizon)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Safe intervals of `v`, sorted, disjoint, non-touching.
    pub fn intervals(&self, v: Vertex) -> &[TimeInterval] {
        self.map.get(&v).map_or(&self.default_free, |iv| iv.as_slice())
    }

    /// Index and bounds of the safe interval containing `t`, if any.
    pub fn interval_containing(&self, v: Vertex, t: f64) -> Option<(usize, TimeInterval)> {
        let ivs = self.intervals(v);
        let i = ivs.partition_point(|iv| iv.ub <= t);
        ivs.get(i).and_then(|iv| iv.contains(t).then_some((i, *iv)))
    }
}
