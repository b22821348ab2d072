//! Wait-then-go speed profile solver.
//!
//! Fastest rest-to-rest motion shape (max accel, optional cruise, max decel)
//! preceded by a single wait at the segment start. The wait is the only free
//! parameter, so every occupancy window turns into a closed-form bound on it
//! and the solver is a one-pass interval intersection. Cheap and exact, but
//! incomplete: it cannot slow down mid-segment, so windows that require
//! yielding part-way through make it report failure even when a feasible
//! profile exists.

use super::{PiecewiseProfile, Phase, SegmentWindows, SpsSolution, SpeedProfile};
use crate::domain::{KinodynamicLimits, EPS_TIME};

/// Time breakdown of the fastest rest-to-rest traversal of a given length.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MotionShape {
    #[allow(dead_code)] // asserted in tests; handy when debugging shapes
    pub peak: f64,
    pub t_accel: f64,
    pub t_cruise: f64,
    pub t_decel: f64,
    pub total: f64,
}

/// Computes the fastest rest-to-rest shape for `length` under `limits`:
/// a triangle when the speed cap is not reached, a trapezoid otherwise.
pub(crate) fn motion_shape(length: f64, limits: &KinodynamicLimits) -> MotionShape {
    debug_assert!(length > 0.0);
    let a = limits.a_max;
    let d = -limits.a_min;
    debug_assert!(a > 0.0 && d > 0.0);
    let peak_tri = (2.0 * length * a * d / (a + d)).sqrt();
    if peak_tri <= limits.v_max {
        let t_accel = peak_tri / a;
        let t_decel = peak_tri / d;
        MotionShape {
            peak: peak_tri,
            t_accel,
            t_cruise: 0.0,
            t_decel,
            total: t_accel + t_decel,
        }
    } else {
        let v = limits.v_max;
        let t_accel = v / a;
        let t_decel = v / d;
        let ramp_dist = v * v / 2.0 * (1.0 / a + 1.0 / d);
        let t_cruise = (length - ramp_dist) / v;
        MotionShape {
            peak: v,
            t_accel,
            t_cruise,
            t_decel,
            total: t_accel + t_cruise + t_decel,
        }
    }
}

/// Builds the acceleration phases of a shape (no leading wait).
pub(crate) fn motion_profile(shape: &MotionShape, limits: &KinodynamicLimits) -> PiecewiseProfile {
    let mut phases = Vec::with_capacity(3);
    if shape.t_accel > 0.0 {
        phases.push(Phase { accel: limits.a_max, duration: shape.t_accel });
    }
    if shape.t_cruise > 0.0 {
        phases.push(Phase { accel: 0.0, duration: shape.t_cruise });
    }
    if shape.t_decel > 0.0 {
        phases.push(Phase { accel: limits.a_min, duration: shape.t_decel });
    }
    PiecewiseProfile::new(phases)
}

/// Solves the segment by intersecting per-vertex wait bounds.
///
/// For vertex `k` at distance `s_k` the motion enters it when the head of the
/// profile first exceeds `s_k - cell` and releases it when it reaches
/// `s_k + cell`; both instants are fixed offsets into the motion, so window
/// bounds translate directly into bounds on the wait.
pub fn bas_solve(windows: &SegmentWindows, limits: &KinodynamicLimits) -> Option<SpsSolution> {
    let cells = windows.cells();
    debug_assert!(cells >= 1, "segment must cover at least one cell");
    let cl = windows.cell_length;
    let length = windows.length();
    let shape = motion_shape(length, limits);
    let motion = motion_profile(&shape, limits);

    let mut wait_lo = 0.0f64;
    let mut wait_hi = f64::INFINITY;
    for (k, w) in windows.windows.iter().enumerate() {
        let s_k = k as f64 * cl;
        // Entering vertex k no earlier than its window opens.
        let enter = if k == 0 {
            0.0
        } else {
            motion
                .first_time_strictly_above(s_k - cl)
                .expect("entry point lies within the motion")
        };
        wait_lo = wait_lo.max(w.lb - windows.t0 - enter);
        // Leaving vertex k (or arriving, for the last one) before it closes.
        if w.ub.is_finite() {
            let release = if k == cells {
                shape.total + EPS_TIME
            } else {
                motion
                    .first_time_at_or_above(s_k + cl)
                    .expect("release point lies within the motion")
            };
            wait_hi = wait_hi.min(w.ub - windows.t0 - release);
        }
    }

    if wait_lo > wait_hi + EPS_TIME {
        return None;
    }
    let wait = wait_lo.min(wait_hi.max(0.0));

    let mut phases = Vec::with_capacity(4);
    if wait > EPS_TIME {
        phases.push(Phase { accel: 0.0, duration: wait });
    }
    phases.extend(motion.phases().iter().copied());
    let profile = PiecewiseProfile::new(phases);
    let duration = profile.duration();
    Some(SpsSolution { profile: SpeedProfile::Piecewise(profile), duration })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupancy::TimeInterval;
    use approx::assert_abs_diff_eq;

    fn limits() -> KinodynamicLimits {
        KinodynamicLimits::default()
    }

    #[test]
    fn one_cell_shape_is_a_triangle() {
        let s = motion_shape(1.0, &limits());
        assert_abs_diff_eq!(s.peak, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.total, 2.0 * 2.0f64.sqrt(), epsilon = 1e-12);
        assert_eq!(s.t_cruise, 0.0);
    }

    #[test]
    fn ten_cell_shape_is_a_trapezoid() {
        let s = motion_shape(10.0, &limits());
        assert_abs_diff_eq!(s.peak, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.total, 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.t_cruise, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eight_cells_exactly_reach_the_speed_cap() {
        let s = motion_shape(8.0, &limits());
        assert_abs_diff_eq!(s.total, 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.t_cruise, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn unconstrained_solve_matches_the_shape_time() {
        let w = SegmentWindows::unconstrained(1, 1.0);
        let sol = bas_solve(&w, &limits()).unwrap();
        assert_abs_diff_eq!(sol.duration, 2.0 * 2.0f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(sol.profile.length(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.profile.evaluate(sol.duration).1, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn late_target_window_inserts_a_wait() {
        // Target cell only opens at t = 5; entry happens as soon as the motion
        // starts, so the whole motion shifts to t = 5.
        let mut w = SegmentWindows::unconstrained(1, 1.0);
        w.windows[1] = TimeInterval::new(5.0, f64::INFINITY);
        let sol = bas_solve(&w, &limits()).unwrap();
        assert_abs_diff_eq!(sol.duration, 5.0 + 2.0 * 2.0f64.sqrt(), epsilon = 1e-9);
        // The head stays at the origin during the wait.
        assert_abs_diff_eq!(sol.profile.evaluate(4.9).0, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn conflicting_windows_report_failure() {
        // Middle vertex must be released by t = 2 while the next one only
        // opens at t = 6: no single wait satisfies both.
        let mut w = SegmentWindows::unconstrained(5, 1.0);
        w.windows[2] = TimeInterval::new(0.0, 2.0);
        w.windows[3] = TimeInterval::new(6.0, f64::INFINITY);
        assert!(bas_solve(&w, &limits()).is_none());
    }

    #[test]
    fn closing_target_window_bounds_the_arrival() {
        let mut w = SegmentWindows::unconstrained(1, 1.0);
        w.windows[1] = TimeInterval::new(0.0, 2.0);
        // Fastest arrival is 2·√2 ≈ 2.83 > 2: infeasible.
        assert!(bas_solve(&w, &limits()).is_none());
    }

    #[test]
    fn offset_start_time_shifts_all_bounds() {
        let mut w = SegmentWindows::unconstrained(1, 1.0);
        w.t0 = 10.0;
        w.windows[1] = TimeInterval::new(12.0, f64::INFINITY);
        let sol = bas_solve(&w, &limits()).unwrap();
        // Wait two seconds (12 - 10), then the usual triangle.
        assert_abs_diff_eq!(sol.duration, 2.0 + 2.0 * 2.0f64.sqrt(), epsilon = 1e-9);
    }
}
