//! Shared vocabulary for the planner: the grid world, agent kinematics,
//! timed actions, and per-agent plans.
//!
//! Conventions used throughout the crate:
//! * vertices are cell indices `y * width + x` with `(0, 0)` the top-left cell;
//! * distances are measured in cells and scaled by [`GridWorld::cell_length`]
//!   where a physical length is needed;
//! * speeds are length-units/s, accelerations length-units/s²;
//! * time is absolute seconds from the start of the episode, `f64`.

use serde::{Deserialize, Serialize};

use crate::profile::SpeedProfile;

/// Flat cell index into a [`GridWorld`] (`y * width + x`).
pub type Vertex = u32;

/// Tolerance for comparing absolute times and durations, in seconds.
pub const EPS_TIME: f64 = 1e-9;

/// A four-connected grid map. Cells are unit squares of side
/// [`cell_length`](Self::cell_length); agents are discs inscribed in a cell.
#[derive(Debug, Clone)]
pub struct GridWorld {
    width: u32,
    height: u32,
    cell_length: f64,
    blocked: Vec<bool>,
}

impl GridWorld {
    /// Builds a world from a row-major blocked mask. `blocked.len()` must be
    /// `width * height`.
    pub fn new(width: u32, height: u32, cell_length: f64, blocked: Vec<bool>) -> Self {
        assert_eq!(blocked.len(), (width as usize) * (height as usize));
        assert!(cell_length > 0.0);
        Self { width, height, cell_length, blocked }
    }

    /// Fully open map of the given dimensions.
    pub fn open(width: u32, height: u32) -> Self {
        Self::new(width, height, 1.0, vec![false; (width as usize) * (height as usize)])
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    /// Physical side length of one cell (defaults to 1.0 in every config).
    #[inline]
    pub fn cell_length(&self) -> f64 {
        self.cell_length
    }

    #[inline]
    pub fn vertex_count(&self) -> u32 {
        self.width * self.height
    }

    #[inline]
    pub fn vertex(&self, x: u32, y: u32) -> Vertex {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn x_of(&self, v: Vertex) -> u32 {
        v % self.width
    }

    #[inline]
    pub fn y_of(&self, v: Vertex) -> u32 {
        v / self.width
    }

    #[inline]
    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as u32) < self.width && (y as u32) < self.height
    }

    #[inline]
    pub fn is_blocked(&self, v: Vertex) -> bool {
        self.blocked[v as usize]
    }

    #[inline]
    pub fn is_free(&self, v: Vertex) -> bool {
        !self.blocked[v as usize]
    }

    /// The neighbor one cell away in `dir`, if it is in bounds and free.
    pub fn step(&self, v: Vertex, dir: Orientation) -> Option<Vertex> {
        let (dx, dy) = dir.delta();
        let x = self.x_of(v) as i64 + dx as i64;
        let y = self.y_of(v) as i64 + dy as i64;
        if !self.in_bounds(x, y) {
            return None;
        }
        let n = self.vertex(x as u32, y as u32);
        self.is_free(n).then_some(n)
    }

    /// Free 4-neighbors of `v`.
    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        Orientation::ALL.iter().filter_map(move |&d| self.step(v, d))
    }

    /// Cell center in cell units, `(x + 0.5, y + 0.5)` scaled by cell length.
    pub fn center(&self, v: Vertex) -> (f64, f64) {
        (
            (self.x_of(v) as f64 + 0.5) * self.cell_length,
            (self.y_of(v) as f64 + 0.5) * self.cell_length,
        )
    }
}

/// Heading of a differential-drive agent. Grid y grows downward, so `North`
/// decreases y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    East,
    North,
    West,
    South,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::East,
        Orientation::North,
        Orientation::West,
        Orientation::South,
    ];

    /// Unit step `(dx, dy)` in grid coordinates.
    #[inline]
    pub fn delta(self) -> (i32, i32) {
        match self {
            Orientation::East => (1, 0),
            Orientation::North => (0, -1),
            Orientation::West => (-1, 0),
            Orientation::South => (0, 1),
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Orientation::East => 0,
            Orientation::North => 1,
            Orientation::West => 2,
            Orientation::South => 3,
        }
    }

    /// Number of quarter turns (1 or 2) between two distinct headings.
    pub fn quarter_turns_to(self, other: Orientation) -> u32 {
        let diff = (self.index() as i32 - other.index() as i32).rem_euclid(4);
        match diff {
            0 => 0,
            2 => 2,
            _ => 1,
        }
    }
}

/// Kinodynamic limits of an agent. Speeds never go negative: agents move only
/// along their current heading and turn in place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinodynamicLimits {
    /// Maximum speed, length-units/s. Must be > 0.
    pub v_max: f64,
    /// Maximum acceleration, > 0.
    pub a_max: f64,
    /// Minimum acceleration (maximum braking), < 0.
    pub a_min: f64,
    /// Time for a 90° in-place rotation, seconds.
    pub rotate90_time: f64,
    /// Time for a 180° in-place rotation, seconds.
    pub rotate180_time: f64,
}

impl Default for KinodynamicLimits {
    /// Defaults match the experiment setup used across the test corpus:
    /// speed range [0, 2] cells/s, acceleration range [-0.5, 0.5] cells/s²,
    /// and in-place rotation at 1 rad/s (π/2 s per quarter turn).
    fn default() -> Self {
        Self {
            v_max: 2.0,
            a_max: 0.5,
            a_min: -0.5,
            rotate90_time: std::f64::consts::FRAC_PI_2,
            rotate180_time: std::f64::consts::PI,
        }
    }
}

impl KinodynamicLimits {
    /// Duration of an in-place rotation between two headings. Zero when they
    /// are equal.
    pub fn rotation_time(&self, from: Orientation, to: Orientation) -> f64 {
        match from.quarter_turns_to(to) {
            0 => 0.0,
            1 => self.rotate90_time,
            _ => self.rotate180_time,
        }
    }

    /// Lower bound on the time to traverse `length` length-units in one move:
    /// the time at constant maximum speed. Admissible for any profile that
    /// respects the speed bound.
    #[inline]
    pub fn min_traversal_time(&self, length: f64) -> f64 {
        length / self.v_max
    }
}

/// What a timed action does. Move actions carry the speed profile that
/// replays them exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionKind {
    /// In-place rotation at the anchor vertex.
    Rotate { from: Orientation, to: Orientation },
    /// Straight multi-cell translation along `orientation` starting at the
    /// anchor vertex. `cells` is the segment length in cells.
    Move {
        orientation: Orientation,
        cells: u32,
        to: Vertex,
        profile: SpeedProfile,
    },
    /// Idle at the anchor vertex.
    Wait,
    /// Service action (pick up / drop off / dwell) at the anchor vertex.
    Task { task: TaskKind },
}

/// Service actions used by the lifelong simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Attach,
    Detach,
    Station,
}

/// One scheduled action of a plan. Actions are contiguous in time: each
/// starts where and when its predecessor finished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedAction {
    /// Absolute start time, seconds.
    pub start: f64,
    /// Duration in seconds; `None` only for a trailing unbounded Wait.
    pub duration: Option<f64>,
    /// Where the action starts (for moves, the segment's first vertex).
    pub vertex: Vertex,
    #[serde(flatten)]
    pub kind: ActionKind,
}

impl TimedAction {
    /// Absolute end time; +∞ for an unbounded wait.
    #[inline]
    pub fn end(&self) -> f64 {
        match self.duration {
            Some(d) => self.start + d,
            None => f64::INFINITY,
        }
    }

    /// Vertex the agent occupies when the action completes.
    pub fn end_vertex(&self) -> Vertex {
        match &self.kind {
            ActionKind::Move { to, .. } => *to,
            _ => self.vertex,
        }
    }

    /// Heading after the action completes, given the heading before it.
    pub fn end_orientation(&self, before: Orientation) -> Orientation {
        match &self.kind {
            ActionKind::Rotate { to, .. } => *to,
            _ => before,
        }
    }
}

/// A single agent's schedule. Actions are sorted by start time and contiguous;
/// `arrival` is when the plan's objective completed (for a one-shot query, the
/// end of the action that reached the goal; waits appended after it do not
/// count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub agent: u32,
    pub start_vertex: Vertex,
    pub start_orientation: Orientation,
    /// When the agent becomes active (0 for one-shot queries).
    pub depart: f64,
    pub actions: Vec<TimedAction>,
    pub arrival: f64,
}

impl Plan {
    /// A plan with no motion: the agent rests at its start vertex.
    pub fn idle(agent: u32, vertex: Vertex, orientation: Orientation, depart: f64) -> Self {
        Self {
            agent,
            start_vertex: vertex,
            start_orientation: orientation,
            depart,
            actions: Vec::new(),
            arrival: depart,
        }
    }

    /// Vertex where the plan ends.
    pub fn final_vertex(&self) -> Vertex {
        self.actions.last().map_or(self.start_vertex, |a| a.end_vertex())
    }

    /// Heading when the plan ends.
    pub fn final_orientation(&self) -> Orientation {
        self.actions
            .iter()
            .fold(self.start_orientation, |o, a| a.end_orientation(o))
    }

    /// End time of the last action (`depart` for an empty plan); +∞ when the
    /// plan ends with an unbounded wait.
    pub fn end_time(&self) -> f64 {
        self.actions.last().map_or(self.depart, |a| a.end())
    }

    /// The agent's pose `(vertex, offset along heading in length-units)` at
    /// time `t`, clamping before the first and after the last action.
    pub fn position_at(&self, t: f64, world: &GridWorld) -> (f64, f64) {
        let mut vertex = self.start_vertex;
        for a in &self.actions {
            if t < a.start {
                break;
            }
            if t < a.end() {
                if let ActionKind::Move { orientation, profile, .. } = &a.kind {
                    let (dist, _) = profile.evaluate(t - a.start);
                    let (cx, cy) = world.center(a.vertex);
                    let (dx, dy) = orientation.delta();
                    return (cx + dx as f64 * dist, cy + dy as f64 * dist);
                }
                vertex = a.vertex;
                return world.center(vertex);
            }
            vertex = a.end_vertex();
        }
        world.center(vertex)
    }
}
