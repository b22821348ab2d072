//! Speed profiles for straight multi-cell moves, and the two solvers that
//! produce them.
//!
//! A profile is the scalar travelled distance `ℓ(t)` along a segment,
//! `t ∈ [0, T]`, with `ℓ(0) = 0`, `ℓ(T) = segment length`, `ℓ' ∈ [0, vMax]`,
//! `ℓ'' ∈ [aMin, aMax]`, and zero speed at both endpoints (agents start and
//! end moves at rest). Solvers additionally honor a [`SegmentWindows`]
//! constraint set: the occupancy window of each vertex along the segment must
//! fit inside that vertex's safe interval.
//!
//! * [`bas_solve`](bas::bas_solve) — the binary acceleration solver: a single
//!   wait followed by a maximal-acceleration trapezoid. Closed form, fast,
//!   incomplete (it cannot slow down mid-segment).
//! * [`bcs_solve`](bcs::bcs_solve) — the curve solver: binary search on the
//!   duration, with an LP feasibility check over a piecewise-quadratic
//!   position curve (a quadratic Bézier spline) at each candidate duration.
//!   Complete over its shape space, with an ε-optimality certificate.
//! * [`bezier`] — a single global Bézier curve variant of the curve solver,
//!   kept for comparison; its convex-hull derivative bounds are conservative
//!   enough to cost ~2% extra duration, so it is not the default.

pub mod bas;
pub mod bcs;
pub mod bezier;
pub mod lp;

use serde::{Deserialize, Serialize};

use crate::domain::KinodynamicLimits;
use crate::occupancy::TimeInterval;

/// Travelled distance along a segment as a function of time since the move
/// started. Always starts at distance 0 with speed 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum SpeedProfile {
    /// Piecewise-constant acceleration phases (includes every wait-then-ramp
    /// shape and the spline curves produced by the curve solver).
    Piecewise(PiecewiseProfile),
    /// A single Bézier position curve on `[0, duration]`.
    Bezier(BezierProfile),
}

impl SpeedProfile {
    /// `(distance, speed)` at `t` seconds into the move; clamped to the
    /// endpoints outside `[0, duration]`.
    pub fn evaluate(&self, t: f64) -> (f64, f64) {
        match self {
            SpeedProfile::Piecewise(p) => p.evaluate(t),
            SpeedProfile::Bezier(b) => b.evaluate(t),
        }
    }

    /// Acceleration at `t` (the right-hand value on phase boundaries).
    pub fn acceleration(&self, t: f64) -> f64 {
        match self {
            SpeedProfile::Piecewise(p) => p.acceleration(t),
            SpeedProfile::Bezier(b) => b.acceleration(t),
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            SpeedProfile::Piecewise(p) => p.duration(),
            SpeedProfile::Bezier(b) => b.duration,
        }
    }

    /// Total distance covered.
    pub fn length(&self) -> f64 {
        match self {
            SpeedProfile::Piecewise(p) => p.length(),
            SpeedProfile::Bezier(b) => b.length(),
        }
    }

    /// First time the distance reaches `target` (`inf {t : ℓ(t) ≥ target}`),
    /// or `None` if the profile never gets there.
    pub fn first_time_at_or_above(&self, target: f64) -> Option<f64> {
        match self {
            SpeedProfile::Piecewise(p) => p.first_time_at_or_above(target),
            SpeedProfile::Bezier(b) => b.first_time(target, false),
        }
    }

    /// `inf {t : ℓ(t) > target}`, or `None` if the profile never exceeds it.
    /// Differs from [`Self::first_time_at_or_above`] only across plateaus.
    pub fn first_time_strictly_above(&self, target: f64) -> Option<f64> {
        match self {
            SpeedProfile::Piecewise(p) => p.first_time_strictly_above(target),
            SpeedProfile::Bezier(b) => b.first_time(target, true),
        }
    }
}

/// One constant-acceleration phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub accel: f64,
    pub duration: f64,
}

/// Sequence of constant-acceleration phases starting from rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseProfile {
    phases: Vec<Phase>,
    /// `(start time, start distance, start speed)` per phase, plus a final
    /// entry for the profile end. Rebuilt on deserialization.
    #[serde(skip)]
    knots: Vec<(f64, f64, f64)>,
}

impl PiecewiseProfile {
    pub fn new(phases: Vec<Phase>) -> Self {
        let mut p = Self { phases, knots: Vec::new() };
        p.rebuild_knots();
        p
    }

    fn rebuild_knots(&mut self) {
        let mut t = 0.0;
        let mut d = 0.0;
        let mut v = 0.0;
        self.knots.clear();
        self.knots.reserve(self.phases.len() + 1);
        for ph in &self.phases {
            debug_assert!(ph.duration >= 0.0);
            self.knots.push((t, d, v));
            t += ph.duration;
            d += v * ph.duration + 0.5 * ph.accel * ph.duration * ph.duration;
            v += ph.accel * ph.duration;
        }
        self.knots.push((t, d, v));
    }

    /// Knot table is skipped by serde; call sites deserialize through this.
    pub fn ensure_knots(&mut self) {
        if self.knots.len() != self.phases.len() + 1 {
            self.rebuild_knots();
        }
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn duration(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.0)
    }

    pub fn length(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.1)
    }

    /// Speed when the profile ends (≈ 0 for solver outputs).
    pub fn final_speed(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.2)
    }

    fn phase_index(&self, t: f64) -> usize {
        // Last phase whose start is <= t.
        match self.knots[..self.phases.len()].partition_point(|k| k.0 <= t) {
            0 => 0,
            i => i - 1,
        }
    }

    pub fn evaluate(&self, t: f64) -> (f64, f64) {
        if self.phases.is_empty() {
            return (0.0, 0.0);
        }
        let end = *self.knots.last().unwrap();
        if t >= end.0 {
            return (end.1, end.2);
        }
        if t <= 0.0 {
            return (0.0, 0.0);
        }
        let i = self.phase_index(t);
        let (t0, d0, v0) = self.knots[i];
        let a = self.phases[i].accel;
        let tau = t - t0;
        (d0 + v0 * tau + 0.5 * a * tau * tau, v0 + a * tau)
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        if self.phases.is_empty() {
            return 0.0;
        }
        let t = t.clamp(0.0, self.duration());
        self.phases[self.phase_index(t)].accel
    }

    /// Solves `d0 + v0·τ + a·τ²/2 = d0 + delta` for the first τ ≥ 0, assuming
    /// the phase actually reaches that distance. Stable for a of either sign.
    fn phase_crossing(v0: f64, a: f64, delta: f64) -> f64 {
        if delta <= 0.0 {
            return 0.0;
        }
        let disc = (v0 * v0 + 2.0 * a * delta).max(0.0);
        let denom = v0 + disc.sqrt();
        if denom <= 1e-15 {
            // Starting (essentially) at rest: pure acceleration ramp.
            if a > 1e-15 {
                (2.0 * delta / a).sqrt()
            } else {
                0.0
            }
        } else {
            2.0 * delta / denom
        }
    }

    pub fn first_time_at_or_above(&self, target: f64) -> Option<f64> {
        if target <= 0.0 {
            return Some(0.0);
        }
        // Tolerant at the far end: summing phase distances drifts by a few
        // ulps, and a target equal to the nominal length must still resolve.
        // Snapping to the duration also sidesteps the sqrt ill-conditioning
        // of a crossing tangent to the endpoint (decelerating to rest there).
        let tol = 1e-9 * target.max(1.0);
        if target > self.length() + tol {
            return None;
        }
        if target >= self.length() - tol {
            return Some(self.duration());
        }
        for (i, ph) in self.phases.iter().enumerate() {
            let (t0, d0, v0) = self.knots[i];
            let d1 = self.knots[i + 1].1;
            if d1 >= target {
                return Some(t0 + Self::phase_crossing(v0, ph.accel, target - d0));
            }
        }
        Some(self.duration())
    }

    pub fn first_time_strictly_above(&self, target: f64) -> Option<f64> {
        if target < 0.0 {
            return Some(0.0);
        }
        if target >= self.length() {
            return None;
        }
        for (i, ph) in self.phases.iter().enumerate() {
            let (t0, d0, v0) = self.knots[i];
            let d1 = self.knots[i + 1].1;
            // Skip phases that end at or below the target; the first phase
            // ending strictly above it contains the boundary point.
            if d1 > target {
                return Some(t0 + Self::phase_crossing(v0, ph.accel, target - d0));
            }
        }
        None
    }
}

/// A single Bézier position curve `ℓ(t) = Σ pᵢ·B_{i,n}(t / duration)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BezierProfile {
    /// Total duration, including any leading delay.
    pub duration: f64,
    /// Time spent parked at the origin before the curve starts. A polynomial
    /// with nonnegative control points cannot be exactly zero at an interior
    /// time, so "wait, then move" needs the wait outside the curve.
    #[serde(default)]
    pub delay: f64,
    pub points: Vec<f64>,
}

impl BezierProfile {
    fn de_casteljau(points: &[f64], u: f64) -> f64 {
        let mut w = points.to_vec();
        for level in (1..w.len()).rev() {
            for i in 0..level {
                w[i] = (1.0 - u) * w[i] + u * w[i + 1];
            }
        }
        w[0]
    }

    pub fn length(&self) -> f64 {
        *self.points.last().unwrap_or(&0.0)
    }

    /// Parameter within the curve for an absolute time, accounting for the
    /// leading delay.
    fn param(&self, t: f64) -> f64 {
        let span = self.duration - self.delay;
        if span <= 0.0 {
            return 1.0;
        }
        ((t - self.delay) / span).clamp(0.0, 1.0)
    }

    pub fn evaluate(&self, t: f64) -> (f64, f64) {
        if t < self.delay {
            return (0.0, 0.0);
        }
        let n = self.points.len() - 1;
        let span = self.duration - self.delay;
        let u = self.param(t);
        let pos = Self::de_casteljau(&self.points, u);
        let diffs: Vec<f64> = self
            .points
            .windows(2)
            .map(|w| n as f64 * (w[1] - w[0]) / span)
            .collect();
        let speed = Self::de_casteljau(&diffs, u);
        (pos, speed)
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        if t < self.delay {
            return 0.0;
        }
        let n = self.points.len() - 1;
        let span = self.duration - self.delay;
        let u = self.param(t);
        let scale = (n * (n - 1)) as f64 / (span * span);
        let dd: Vec<f64> = self
            .points
            .windows(3)
            .map(|w| scale * (w[2] - 2.0 * w[1] + w[0]))
            .collect();
        Self::de_casteljau(&dd, u)
    }

    /// Monotone boolean bisection for the first time the position passes
    /// `target` (`strict` selects `>` over `≥`).
    fn first_time(&self, target: f64, strict: bool) -> Option<f64> {
        let passes = |t: f64| {
            let pos = self.evaluate(t).0;
            if strict {
                pos > target
            } else {
                pos >= target
            }
        };
        if passes(0.0) {
            return Some(0.0);
        }
        if !passes(self.duration) {
            return None;
        }
        let (mut lo, mut hi) = (0.0, self.duration);
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            if passes(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

/// Safe-window constraints for one move: entry k holds the safe interval (in
/// absolute time) of the vertex at distance `k · cell_length` along the
/// segment. Entry 0 is the stationary interval the move departs from; the
/// last entry is the target stationary interval. The move departs at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentWindows {
    pub t0: f64,
    pub cell_length: f64,
    pub windows: Vec<TimeInterval>,
}

impl SegmentWindows {
    /// Windows that constrain nothing: every vertex free forever from t0 = 0.
    pub fn unconstrained(cells: usize, cell_length: f64) -> Self {
        Self {
            t0: 0.0,
            cell_length,
            windows: vec![TimeInterval::unbounded(); cells + 1],
        }
    }

    pub fn cells(&self) -> usize {
        self.windows.len() - 1
    }

    /// Segment length in length-units.
    pub fn length(&self) -> f64 {
        self.cells() as f64 * self.cell_length
    }
}

/// Which level-3 solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpsKind {
    Bas,
    Bcs,
    /// Single global Bézier curve feasibility (comparison variant).
    Bezier,
}

/// Tunables for the curve solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpsParams {
    /// Optimality gap of the binary search on duration, seconds.
    pub epsilon: f64,
    /// Upper bound on curve control values (spline pieces / Bézier control
    /// points). The spline solver adapts the piece count to the duration and
    /// uses this as a cap.
    pub control_points: usize,
}

impl Default for SpsParams {
    fn default() -> Self {
        Self { epsilon: 1e-3, control_points: 30 }
    }
}

/// A solved move: the profile and its total duration (`profile.duration()`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpsSolution {
    pub profile: SpeedProfile,
    pub duration: f64,
}

/// Runs the selected level-3 solver on one segment.
pub fn solve_sps(
    kind: SpsKind,
    windows: &SegmentWindows,
    limits: &KinodynamicLimits,
    params: &SpsParams,
) -> Option<SpsSolution> {
    match kind {
        SpsKind::Bas => bas::bas_solve(windows, limits),
        SpsKind::Bcs => bcs::bcs_solve(windows, limits, params),
        SpsKind::Bezier => bezier::bezier_solve(windows, limits, params),
    }
}
