//! Small dense linear-program feasibility solver.
//!
//! The curve solvers pose systems of at most a few hundred rows over a few
//! dozen variables, so an embedded phase-1 simplex (Bland's rule, dense
//! tableau) beats pulling in an external solver: no extra dependency, fully
//! deterministic, and trivially fast at this scale.

/// Relation of one constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Le,
    Ge,
    Eq,
}

/// One linear constraint `coeffs · x (op) rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub op: Op,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, op: Op, rhs: f64) -> Self {
        Self { coeffs, op, rhs }
    }
}

/// Feasibility tolerance: a point is accepted when the phase-1 objective
/// (total constraint violation) is below this.
pub const FEASIBILITY_TOL: f64 = 1e-7;

const PIVOT_TOL: f64 = 1e-9;

/// Finds any `x` with `x[j] ≥ lower[j]` satisfying all rows, or `None` if the
/// system is infeasible. `lower` gives a finite lower bound per variable
/// (upper bounds, if any, are ordinary rows).
pub fn feasible(lower: &[f64], rows: &[Constraint]) -> Option<Vec<f64>> {
    let n = lower.len();
    // Shift to y = x - lower >= 0 and normalize all rhs to be nonnegative.
    let mut norm: Vec<(Vec<f64>, Op, f64)> = Vec::with_capacity(rows.len());
    for c in rows {
        debug_assert_eq!(c.coeffs.len(), n);
        let mut rhs = c.rhs;
        for (j, &co) in c.coeffs.iter().enumerate() {
            rhs -= co * lower[j];
        }
        let mut coeffs = c.coeffs.clone();
        let mut op = c.op;
        // Constant rows: decide immediately instead of burdening the tableau.
        if coeffs.iter().all(|&v| v.abs() < 1e-12) {
            let ok = match op {
                Op::Le => 0.0 <= rhs + FEASIBILITY_TOL,
                Op::Ge => 0.0 >= rhs - FEASIBILITY_TOL,
                Op::Eq => rhs.abs() <= FEASIBILITY_TOL,
            };
            if ok {
                continue;
            }
            return None;
        }
        if rhs < 0.0 {
            rhs = -rhs;
            for v in coeffs.iter_mut() {
                *v = -*v;
            }
            op = match op {
                Op::Le => Op::Ge,
                Op::Ge => Op::Le,
                Op::Eq => Op::Eq,
            };
        }
        norm.push((coeffs, op, rhs));
    }

    let m = norm.len();
    if m == 0 {
        return Some(lower.to_vec());
    }
    let n_slack = norm.iter().filter(|r| r.1 != Op::Eq).count();
    let n_art = norm.iter().filter(|r| r.1 != Op::Le).count();
    let cols = n + n_slack + n_art; // + rhs column appended below
    let mut tab = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![usize::MAX; m];

    let mut slack_at = n;
    let mut art_at = n + n_slack;
    for (i, (coeffs, op, rhs)) in norm.iter().enumerate() {
        tab[i][..n].copy_from_slice(coeffs);
        tab[i][cols] = *rhs;
        match op {
            Op::Le => {
                tab[i][slack_at] = 1.0;
                basis[i] = slack_at;
                slack_at += 1;
            }
            Op::Ge => {
                tab[i][slack_at] = -1.0; // surplus
                slack_at += 1;
                tab[i][art_at] = 1.0;
                basis[i] = art_at;
                art_at += 1;
            }
            Op::Eq => {
                tab[i][art_at] = 1.0;
                basis[i] = art_at;
                art_at += 1;
            }
        }
    }

    // Phase-1 objective: minimize the sum of artificials. Start from the cost
    // row (1 on artificial columns) and eliminate the basic artificials.
    let first_art = n + n_slack;
    let mut obj = vec![0.0; cols + 1];
    for j in first_art..cols {
        obj[j] = 1.0;
    }
    for i in 0..m {
        if basis[i] >= first_art {
            for j in 0..=cols {
                obj[j] -= tab[i][j];
            }
        }
    }

    let max_iters = 200 * (m + cols) + 1000;
    for _ in 0..max_iters {
        // Bland: entering = lowest-index column with negative reduced cost.
        let Some(enter) = (0..cols).find(|&j| obj[j] < -PIVOT_TOL) else {
            break;
        };
        // Ratio test; Bland ties break on the smallest basis variable.
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let a = tab[i][enter];
            if a > PIVOT_TOL {
                let ratio = tab[i][cols] / a;
                if ratio < best - 1e-12
                    || (ratio < best + 1e-12
                        && leave.map_or(true, |l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            // Unbounded phase-1 cannot happen (objective bounded below by 0);
            // bail out defensively.
            return None;
        };
        // Pivot.
        let piv = tab[leave][enter];
        for j in 0..=cols {
            tab[leave][j] /= piv;
        }
        for i in 0..m {
            if i != leave {
                let f = tab[i][enter];
                if f != 0.0 {
                    for j in 0..=cols {
                        tab[i][j] -= f * tab[leave][j];
                    }
                }
            }
        }
        let f = obj[enter];
        if f != 0.0 {
            for j in 0..=cols {
                obj[j] -= f * tab[leave][j];
            }
        }
        basis[leave] = enter;
    }

    let violation = -obj[cols];
    if violation > FEASIBILITY_TOL {
        return None;
    }
    let mut x = lower.to_vec();
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = lower[basis[i]] + tab[i][cols];
        }
    }
    Some(x)
}
