//! General speed-profile solver: binary search over the total duration with a
//! linear-program feasibility check per candidate.
//!
//! The shape space is piecewise-constant acceleration on a knot grid that
//! contains a uniform base grid, the clamped window boundary times, and the
//! switch times of the fastest rest-to-rest shape (both anchored at the start
//! and at the end of the candidate duration). Speed is then piecewise linear
//! and position piecewise quadratic, so acceleration/speed limits and
//! position bounds at window boundaries are all exactly linear in the
//! per-piece accelerations — no conservative relaxation is involved.
//!
//! Occupancy windows reduce to pointwise position bounds because position is
//! monotone: vertex `k` is entered no earlier than `lb_k` iff the position at
//! `lb_k` is still at most `s_k - cell`, and released by `ub_k` iff the
//! position at `ub_k` has reached `s_k + cell`.
//!
//! Fast path: when the wait-then-go solver succeeds its answer is returned
//! directly, because it is optimal. Any profile starting and ending at rest
//! has speed at distance `s` bounded by `min(√(2·a_max·s), v_max,
//! √(2·|a_min|·(L-s)))` — exactly the fastest shape's speed — so the time
//! still needed after entering vertex `k` is at least the fastest shape's
//! remainder, making `max_k (lb_k + remainder_k)` a lower bound on arrival
//! that the wait-then-go profile attains. The LP search is only needed when
//! release deadlines force a slowdown in the middle of the segment.

use super::bas::{bas_solve, motion_shape, MotionShape};
use super::lp::{feasible, Constraint, Op};
use super::{PiecewiseProfile, Phase, SegmentWindows, SpsParams, SpsSolution, SpeedProfile};
use crate::domain::{KinodynamicLimits, EPS_TIME};

/// Hard cap on knot count so pathological window sets cannot blow up the LP.
const MAX_KNOTS: usize = 160;

/// Positions are constrained this far inside their bound (in length units) so
/// that entry/exit times recovered from the finished profile stay strictly
/// within their windows despite solver tolerances.
const POSITION_MARGIN: f64 = 1e-6;

/// A position bound at a fixed time, derived from one occupancy window.
#[derive(Debug, Clone, Copy)]
pub(crate) enum WindowRow {
    /// position(tau) <= bound (must not yet have entered the vertex).
    AtMost { tau: f64, bound: f64 },
    /// position(tau) >= bound (must already have released the vertex).
    AtLeast { tau: f64, bound: f64 },
}

/// Translates the windows into pointwise position bounds for duration `t`.
/// Returns `None` when the windows are structurally unsatisfiable at this
/// duration (e.g. the target closes before the motion can end).
pub(crate) fn window_rows(windows: &SegmentWindows, t: f64) -> Option<Vec<WindowRow>> {
    let cells = windows.cells();
    let cl = windows.cell_length;
    let length = windows.length();
    // The margin keeps recovered entry/exit times strictly inside their
    // windows despite solver tolerance, but must not push a bound outside
    // the attainable position range [0, length].
    let margin = POSITION_MARGIN * cl;
    let mut rows = Vec::new();
    for (k, w) in windows.windows.iter().enumerate() {
        let s_k = k as f64 * cl;
        let open = w.lb - windows.t0;
        if open > EPS_TIME {
            if k == 0 {
                // The segment starts inside vertex 0; it cannot open later.
                return None;
            }
            rows.push(WindowRow::AtMost { tau: open.min(t), bound: (s_k - cl - margin).max(0.0) });
        }
        if w.ub.is_finite() {
            let close = w.ub - windows.t0;
            if close <= EPS_TIME {
                return None;
            }
            if k == cells {
                // The target must stay open through the arrival.
                if close < t - EPS_TIME {
                    return None;
                }
            } else if close < t {
                rows.push(WindowRow::AtLeast { tau: close, bound: (s_k + cl + margin).min(length) });
            }
        }
    }
    Some(rows)
}

/// Binary search for the smallest feasible duration.
///
/// `lo` must be infeasible and `hi` feasible (with `hi_value` its witness);
/// shrinks the bracket to `eps` and returns the best feasible point seen.
pub(crate) fn min_duration_search<P>(
    mut lo: f64,
    mut hi: f64,
    mut hi_value: P,
    eps: f64,
    mut try_at: impl FnMut(f64) -> Option<P>,
) -> (f64, P) {
    while hi - lo > eps {
        let mid = 0.5 * (lo + hi);
        match try_at(mid) {
            Some(p) => {
                hi = mid;
                hi_value = p;
            }
            None => lo = mid,
        }
    }
    (hi, hi_value)
}

/// Builds the knot grid for one candidate duration.
fn build_knots(windows: &SegmentWindows, shape: &MotionShape, params: &SpsParams, t: f64) -> Vec<f64> {
    let tol = 1e-9 * t.max(1.0);
    let base = ((t * 4.0).ceil() as usize).clamp(8, params.control_points.max(8));
    let mut raw = Vec::with_capacity(base + 8);
    raw.push(0.0);
    raw.push(t);
    for j in 1..base {
        raw.push(t * j as f64 / base as f64);
    }
    // Switch times of the fastest shape, anchored at both ends, so the
    // wait-then-full-effort profile is representable for any wait.
    let fwd = [shape.t_accel, shape.t_accel + shape.t_cruise, shape.total];
    let bwd = [t - shape.total, t - shape.total + shape.t_accel, t - shape.t_decel];
    for cand in fwd.into_iter().chain(bwd) {
        if cand > tol && cand < t - tol {
            raw.push(cand);
        }
    }
    for w in &windows.windows {
        if raw.len() >= MAX_KNOTS {
            break;
        }
        for b in [w.lb - windows.t0, w.ub - windows.t0] {
            if b.is_finite() && b > tol && b < t - tol {
                raw.push(b);
            }
        }
    }
    raw.sort_by(|a, b| a.total_cmp(b));
    let mut knots = Vec::with_capacity(raw.len());
    for v in raw {
        if knots.last().map_or(true, |&l: &f64| v - l > tol) {
            knots.push(v);
        }
    }
    // The endpoint must survive deduplication exactly.
    *knots.last_mut().expect("nonempty") = t;
    knots
}

/// One LP feasibility check at duration `t`; returns the repaired profile.
fn solve_at(
    windows: &SegmentWindows,
    shape: &MotionShape,
    limits: &KinodynamicLimits,
    params: &SpsParams,
    t: f64,
) -> Option<PiecewiseProfile> {
    let length = windows.length();
    let bounds = window_rows(windows, t)?;
    let knots = build_knots(windows, shape, params, t);
    let m = knots.len() - 1;
    if m < 2 {
        return None;
    }
    let h: Vec<f64> = (0..m).map(|j| knots[j + 1] - knots[j]).collect();

    // Speed and position at each knot as linear forms over the accelerations:
    // v_{j+1} = v_j + a_j h_j, s_{j+1} = s_j + v_j h_j + a_j h_j^2 / 2.
    let mut v_of = vec![vec![0.0; m]];
    let mut s_of = vec![vec![0.0; m]];
    for j in 0..m {
        let mut v_next = v_of[j].clone();
        let mut s_next = s_of[j].clone();
        for i in 0..m {
            s_next[i] += v_of[j][i] * h[j];
        }
        v_next[j] += h[j];
        s_next[j] += h[j] * h[j] / 2.0;
        v_of.push(v_next);
        s_of.push(s_next);
    }
    // Position at an arbitrary time: quadratic inside its piece.
    let pos_expr = |tau: f64| -> Vec<f64> {
        let j = knots.partition_point(|&k| k <= tau).saturating_sub(1).min(m - 1);
        let dt = (tau - knots[j]).max(0.0);
        let mut e = s_of[j].clone();
        for i in 0..m {
            e[i] += v_of[j][i] * dt;
        }
        e[j] += dt * dt / 2.0;
        e
    };

    let lower = vec![limits.a_min; m];
    let mut rows = Vec::with_capacity(3 * m + bounds.len() + 2);
    for j in 0..m {
        let mut c = vec![0.0; m];
        c[j] = 1.0;
        rows.push(Constraint::new(c, Op::Le, limits.a_max));
    }
    for j in 1..m {
        rows.push(Constraint::new(v_of[j].clone(), Op::Ge, 0.0));
        rows.push(Constraint::new(v_of[j].clone(), Op::Le, limits.v_max));
    }
    rows.push(Constraint::new(v_of[m].clone(), Op::Eq, 0.0));
    rows.push(Constraint::new(s_of[m].clone(), Op::Eq, length));
    for b in &bounds {
        match *b {
            WindowRow::AtMost { tau, bound } => {
                rows.push(Constraint::new(pos_expr(tau), Op::Le, bound));
            }
            WindowRow::AtLeast { tau, bound } => {
                rows.push(Constraint::new(pos_expr(tau), Op::Ge, bound));
            }
        }
    }

    let mut a = feasible(&lower, &rows)?;

    // Exact endpoint repair: adjust the two widest pieces so the terminal
    // speed and position close to machine precision rather than LP tolerance.
    let (mut i1, mut i2) = (0, 1);
    for j in 0..m {
        if h[j] > h[i1] {
            i2 = i1;
            i1 = j;
        } else if j != i1 && h[j] > h[i2] {
            i2 = j;
        }
    }
    let (v_end, s_end) = integrate(&a, &h);
    let v_err = v_end;
    let s_err = s_end - length;
    let mid = |j: usize| knots[j] + h[j] / 2.0;
    let denom = mid(i2) - mid(i1);
    if denom.abs() > 1e-9 {
        // alpha/beta are the speed-increments contributed by each piece.
        let alpha = (v_err * (t - mid(i2)) - s_err) / denom;
        let beta = -v_err - alpha;
        a[i1] += alpha / h[i1];
        a[i2] += beta / h[i2];
    }

    let mut phases: Vec<Phase> = Vec::with_capacity(m);
    for j in 0..m {
        match phases.last_mut() {
            Some(p) if (p.accel - a[j]).abs() < 1e-12 => p.duration += h[j],
            _ => phases.push(Phase { accel: a[j], duration: h[j] }),
        }
    }
    Some(PiecewiseProfile::new(phases))
}

fn integrate(a: &[f64], h: &[f64]) -> (f64, f64) {
    let (mut v, mut s) = (0.0, 0.0);
    for (aj, hj) in a.iter().zip(h) {
        s += v * hj + aj * hj * hj / 2.0;
        v += aj * hj;
    }
    (v, s)
}

/// Solves the segment, minimizing arrival time to within `params.epsilon`.
pub fn bcs_solve(
    windows: &SegmentWindows,
    limits: &KinodynamicLimits,
    params: &SpsParams,
) -> Option<SpsSolution> {
    let cells = windows.cells();
    debug_assert!(cells >= 1, "segment must cover at least one cell");
    // Optimal whenever it succeeds (see module docs); also the common case.
    if let Some(sol) = bas_solve(windows, limits) {
        return Some(sol);
    }

    let length = windows.length();
    let shape = motion_shape(length, limits);
    let t_min = shape.total;
    let last = windows.windows[cells];
    let cap = if last.ub.is_finite() { last.ub - windows.t0 - EPS_TIME } else { f64::INFINITY };
    if cap < t_min {
        return None;
    }
    let eps = (params.epsilon / 4.0).clamp(1e-9, 1e-4);
    let finish = |t: f64, p: PiecewiseProfile| {
        debug_assert!((p.duration() - t).abs() < 1e-6);
        let duration = p.duration();
        SpsSolution { profile: SpeedProfile::Piecewise(p), duration }
    };

    let try_at = |t: f64| solve_at(windows, &shape, limits, params, t);

    // Probe just above the absolute minimum; anything below t_min is
    // impossible for any profile, so a hit here is optimal to within eps.
    let t_probe = (t_min + eps).min(cap);
    if let Some(p) = try_at(t_probe) {
        return Some(finish(t_probe, p));
    }
    if t_probe >= cap {
        return None;
    }

    // Upper bound: stop-and-go traversal (rest-to-rest per cell) plus the
    // total time the windows can delay entry, capped by the target close.
    let per_cell = motion_shape(windows.cell_length, limits).total;
    let slack: f64 = windows
        .windows
        .iter()
        .map(|w| (w.lb - windows.t0).max(0.0))
        .sum();
    let mut hi = ((4.0 * length / limits.v_max)
        .max(2.0 * t_min)
        .max(cells as f64 * per_cell)
        + slack)
        .min(cap);
    if hi <= t_probe {
        return None;
    }
    let mut hi_profile = try_at(hi);
    if hi_profile.is_none() && hi < cap {
        hi = (2.0 * hi + 2.0).min(cap);
        hi_profile = try_at(hi);
    }
    let hi_profile = hi_profile?;
    let (t, p) = min_duration_search(t_probe, hi, hi_profile, eps, try_at);
    Some(finish(t, p))
}
