//! Comparison solver: a single Bézier position curve with convex-hull bounds
//! on the derivative control points.
//!
//! Speed/acceleration limits are imposed on the hull (every derivative
//! control point individually), which is sufficient but not necessary — the
//! hull over-approximates the true derivative range. At moderate degree the
//! curve therefore cannot reproduce the bang-bang fastest shape, and the
//! minimal duration it finds sits measurably above the closed-form optimum
//! even with no occupancy constraints. The solver is retained to quantify
//! that conservatism against the piecewise-acceleration solver; it shares
//! the window handling and duration search with it.

use super::bas::motion_shape;
use super::bcs::{min_duration_search, window_rows, WindowRow};
use super::lp::{feasible, Constraint, Op};
use super::{BezierProfile, SegmentWindows, SpsParams, SpsSolution, SpeedProfile};
use crate::domain::{KinodynamicLimits, EPS_TIME};

/// Bernstein basis weights of degree `deg` at parameter `u`.
fn bernstein(deg: usize, u: f64) -> Vec<f64> {
    let mut b = vec![0.0; deg + 1];
    b[0] = 1.0;
    for d in 1..=deg {
        for i in (1..=d).rev() {
            b[i] = (1.0 - u) * b[i] + u * b[i - 1];
        }
        b[0] *= 1.0 - u;
    }
    b
}

/// One hull-LP feasibility check at duration `t`.
fn solve_at(
    windows: &SegmentWindows,
    limits: &KinodynamicLimits,
    n_points: usize,
    t: f64,
) -> Option<Vec<f64>> {
    let length = windows.length();
    let bounds = window_rows(windows, t)?;
    let deg = n_points - 1;
    let lower = vec![0.0; n_points];
    let mut rows = Vec::new();

    let unit = |i: usize, v: f64| -> Vec<f64> {
        let mut c = vec![0.0; n_points];
        c[i] = v;
        c
    };
    // Endpoints pinned; first/last differences zero so the curve starts and
    // ends at rest exactly.
    rows.push(Constraint::new(unit(0, 1.0), Op::Eq, 0.0));
    rows.push(Constraint::new(unit(deg, 1.0), Op::Eq, length));
    rows.push(Constraint::new(unit(1, 1.0), Op::Eq, 0.0));
    rows.push(Constraint::new(unit(deg - 1, 1.0), Op::Eq, length));

    // Speed hull: deg * (c_{i+1} - c_i) / t within [0, v_max].
    let vscale = deg as f64 / t;
    for i in 0..deg {
        let mut c = vec![0.0; n_points];
        c[i + 1] = vscale;
        c[i] = -vscale;
        rows.push(Constraint::new(c.clone(), Op::Ge, 0.0));
        rows.push(Constraint::new(c, Op::Le, limits.v_max));
    }
    // Acceleration hull: deg (deg-1) (c_{i+2} - 2 c_{i+1} + c_i) / t^2.
    let ascale = (deg * (deg - 1)) as f64 / (t * t);
    for i in 0..deg - 1 {
        let mut c = vec![0.0; n_points];
        c[i + 2] = ascale;
        c[i + 1] = -2.0 * ascale;
        c[i] = ascale;
        rows.push(Constraint::new(c.clone(), Op::Ge, limits.a_min));
        rows.push(Constraint::new(c, Op::Le, limits.a_max));
    }
    for b in &bounds {
        let (tau, op, bound) = match *b {
            WindowRow::AtMost { tau, bound } => (tau, Op::Le, bound),
            WindowRow::AtLeast { tau, bound } => (tau, Op::Ge, bound),
        };
        rows.push(Constraint::new(bernstein(deg, (tau / t).clamp(0.0, 1.0)), op, bound));
    }

    let mut c = feasible(&lower, &rows)?;
    // Pin the rest endpoints to machine precision.
    c[0] = 0.0;
    c[1] = 0.0;
    c[deg - 1] = length;
    c[deg] = length;
    Some(c)
}

/// Minimizes the duration of a single hull-bounded curve over the windows.
///
/// A nonnegative polynomial cannot be exactly zero at an interior time, so a
/// window that forbids crossing the very first cell boundary until it opens
/// (entry bound 0) is satisfiable only by not moving at all: that part is
/// peeled off as an explicit departure delay and the curve solved over the
/// remaining, shifted windows.
pub fn bezier_solve(
    windows: &SegmentWindows,
    limits: &KinodynamicLimits,
    params: &SpsParams,
) -> Option<SpsSolution> {
    let cells = windows.cells();
    debug_assert!(cells >= 1, "segment must cover at least one cell");
    let length = windows.length();
    let n_points = params.control_points.max(6);

    // Crossing into cell 1 is the instant the curve leaves position zero, so
    // its opening can only be honored by delaying departure.
    let delay = (windows.windows[1].lb - windows.t0).max(0.0);
    let mut shifted = windows.clone();
    shifted.t0 += delay;

    let shape = motion_shape(length, limits);
    let t_min = shape.total;
    let last = shifted.windows[cells];
    let cap = if last.ub.is_finite() { last.ub - shifted.t0 - EPS_TIME } else { f64::INFINITY };
    if cap < t_min {
        return None;
    }
    let eps = (params.epsilon / 4.0).clamp(1e-9, 1e-4);
    let try_at = |t: f64| solve_at(&shifted, limits, n_points, t);
    let finish = |t: f64, c: Vec<f64>| {
        let duration = delay + t;
        let profile = BezierProfile { duration, delay, points: c };
        SpsSolution { profile: SpeedProfile::Bezier(profile), duration }
    };

    let t_probe = (t_min + eps).min(cap);
    if let Some(c) = try_at(t_probe) {
        return Some(finish(t_probe, c));
    }
    if t_probe >= cap {
        return None;
    }

    // The hull restriction costs a bounded factor over the true optimum;
    // pad the stop-and-go upper bound accordingly and expand once if needed.
    let per_cell = motion_shape(windows.cell_length, limits).total;
    let slack: f64 = shifted
        .windows
        .iter()
        .map(|w| (w.lb - shifted.t0).max(0.0))
        .sum();
    let mut hi = (1.3
        * (4.0 * length / limits.v_max)
            .max(2.0 * t_min)
            .max(cells as f64 * per_cell)
        + 2.0
        + slack)
        .min(cap);
    if hi <= t_probe {
        return None;
    }
    let mut hi_points = try_at(hi);
    if hi_points.is_none() && hi < cap {
        hi = (2.0 * hi + 2.0).min(cap);
        hi_points = try_at(hi);
    }
    let hi_points = hi_points?;
    let (t, c) = min_duration_search(t_probe, hi, hi_points, eps, try_at);
    Some(finish(t, c))
}
