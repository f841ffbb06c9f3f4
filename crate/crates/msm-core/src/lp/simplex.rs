//! Two-phase dense-tableau simplex over bounded variables.
//!
//! Bounds are normalized before the tableau is built: a finite lower bound
//! shifts the variable to start at zero, an upper-only bound mirrors it,
//! and a free variable splits into a difference of two nonnegative ones.
//! Remaining finite upper bounds become explicit rows. Phase 1 minimizes
//! the sum of artificial variables from a slack-where-possible start;
//! phase 2 reuses the priced-out objective row maintained alongside.
//!
//! Pivoting uses the most-negative-reduced-cost rule and switches to
//! Bland's rule after [`DEGENERATE_LIMIT`] consecutive degenerate steps,
//! which guarantees termination.

use super::{check_solution, LpProblem, LpSolution, Relop, Status};

/// Reduced costs and pivot elements below this are treated as zero.
const PIVOT_TOLERANCE: f64 = 1e-9;
/// Phase-1 optimum above this means infeasible.
const PHASE1_TOLERANCE: f64 = 1e-9;
/// Consecutive degenerate pivots before Bland's rule engages.
const DEGENERATE_LIMIT: u32 = 50;
/// Hard pivot budget; exceeding it is a fault, not a status.
const MAX_PIVOTS: u64 = 1_000_000;

/// Solver fault (not an infeasible/unbounded outcome, which are statuses).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveError {
    /// More than [`MAX_PIVOTS`] pivots.
    IterationLimit,
    /// The tableau lost numerical coherence.
    Numerical(String),
}

impl std::fmt::Display for SolveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveError::IterationLimit => write!(f, "simplex exceeded {MAX_PIVOTS} pivots"),
            SolveError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for SolveError {}

/// How an original column maps onto tableau columns.
#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// `x = lb + t[col]`
    Shift { col: usize, lb: f64 },
    /// `x = ub - t[col]`
    Mirror { col: usize, ub: f64 },
    /// `x = t[pos] - t[neg]`
    Split { pos: usize, neg: usize },
}

/// Solve a bounded-variable minimization LP.
pub fn solve(p: &LpProblem) -> Result<LpSolution, SolveError> {
    // Column normalization.
    let mut col_map = Vec::with_capacity(p.n_cols);
    let mut caps: Vec<(usize, f64)> = Vec::new(); // (t-col, finite upper bound)
    let mut nt = 0usize;
    for &(lb, ub) in &p.bounds {
        if lb > ub {
            return Ok(LpSolution::status_only(Status::Infeasible));
        }
        if lb.is_finite() {
            col_map.push(ColMap::Shift { col: nt, lb });
            if ub.is_finite() {
                caps.push((nt, ub - lb));
            }
            nt += 1;
        } else if ub.is_finite() {
            col_map.push(ColMap::Mirror { col: nt, ub });
            nt += 1;
        } else {
            col_map.push(ColMap::Split { pos: nt, neg: nt + 1 });
            nt += 2;
        }
    }

    // Rows in normalized columns.
    let mut rows: Vec<(Vec<f64>, Relop, f64)> = Vec::with_capacity(p.rows.len() + caps.len());
    for row in &p.rows {
        let mut dense = vec![0.0; nt];
        let mut rhs = row.rhs;
        for (&j, &a) in &row.coeffs {
            match col_map[j] {
                ColMap::Shift { col, lb } => {
                    dense[col] += a;
                    if lb != 0.0 {
                        rhs -= a * lb;
                    }
                }
                ColMap::Mirror { col, ub } => {
                    dense[col] -= a;
                    rhs -= a * ub;
                }
                ColMap::Split { pos, neg } => {
                    dense[pos] += a;
                    dense[neg] -= a;
                }
            }
        }
        rows.push((dense, row.relop, rhs));
    }
    for &(col, cap) in &caps {
        let mut dense = vec![0.0; nt];
        dense[col] = 1.0;
        rows.push((dense, Relop::Le, cap));
    }

    // Objective in normalized columns (constant tracked implicitly; the
    // reported value is recomputed on the original columns at the end).
    let mut obj_t = vec![0.0; nt];
    for (j, &c) in p.objective.iter().enumerate() {
        match col_map[j] {
            ColMap::Shift { col, .. } => obj_t[col] += c,
            ColMap::Mirror { col, .. } => obj_t[col] -= c,
            ColMap::Split { pos, neg } => {
                obj_t[pos] += c;
                obj_t[neg] -= c;
            }
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|(_, op, _)| *op != Relop::Eq).count();

    // Assemble the tableau with rhs >= 0, slack basis where available.
    let mut n_art = 0usize;
    let mut layout: Vec<(Vec<f64>, f64, Option<usize>)> = Vec::with_capacity(m);
    {
        let mut slack_idx = 0usize;
        for (dense, relop, rhs) in rows {
            let mut coeffs = dense;
            coeffs.resize(nt + n_slack, 0.0);
            let mut rhs = rhs;
            let slack_coeff = match relop {
                Relop::Le => 1.0,
                Relop::Ge => -1.0,
                Relop::Eq => 0.0,
            };
            let slack_col = if relop != Relop::Eq {
                let col = nt + slack_idx;
                slack_idx += 1;
                coeffs[col] = slack_coeff;
                Some(col)
            } else {
                None
            };
            if rhs < 0.0 {
                for c in coeffs.iter_mut() {
                    *c = -*c;
                }
                rhs = -rhs;
            }
            let basis = slack_col.filter(|&col| coeffs[col] > 0.0);
            if basis.is_none() {
                n_art += 1;
            }
            layout.push((coeffs, rhs, basis));
        }
    }

    let art_start = nt + n_slack;
    let total = art_start + n_art;
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut b: Vec<f64> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    {
        let mut art_idx = 0usize;
        for (mut coeffs, rhs, basic) in layout {
            coeffs.resize(total, 0.0);
            let var = match basic {
                Some(col) => col,
                None => {
                    let col = art_start + art_idx;
                    art_idx += 1;
                    coeffs[col] = 1.0;
                    col
                }
            };
            a.push(coeffs);
            b.push(rhs);
            basis.push(var);
        }
    }

    // Priced-out cost rows: phase-1 (artificial sum) and phase-2. Basis
    // columns must read zero, so subtract each artificial-basis row once.
    let mut cost1 = vec![0.0; total];
    for c in cost1[art_start..].iter_mut() {
        *c = 1.0;
    }
    let mut cost2 = vec![0.0; total];
    cost2[..nt].copy_from_slice(&obj_t);
    for r in 0..m {
        if basis[r] >= art_start {
            for j in 0..total {
                cost1[j] -= a[r][j];
            }
        }
    }

    let mut tableau = Tableau { a, b, basis, costs: [cost1, cost2], pivots: 0 };

    // Phase 1.
    if n_art > 0 {
        match tableau.iterate(0, total)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => {
                return Err(SolveError::Numerical("phase 1 reported unbounded".into()))
            }
        }
        let infeasibility: f64 = (0..tableau.b.len())
            .filter(|&r| tableau.basis[r] >= art_start)
            .map(|r| tableau.b[r].max(0.0))
            .sum();
        if infeasibility > PHASE1_TOLERANCE {
            return Ok(LpSolution::status_only(Status::Infeasible));
        }
        tableau.evict_artificials(art_start);
    }
    tableau.truncate_cols(art_start);

    // Phase 2.
    match tableau.iterate(1, art_start)? {
        Outcome::Optimal => {}
        Outcome::Unbounded => return Ok(LpSolution::status_only(Status::Unbounded)),
    }

    // Read the vertex back through the column maps.
    let mut xt = vec![0.0; art_start];
    for (r, &var) in tableau.basis.iter().enumerate() {
        xt[var] = tableau.b[r].max(0.0);
    }
    let x: Vec<f64> = col_map
        .iter()
        .map(|cm| match *cm {
            ColMap::Shift { col, lb } => lb + xt[col],
            ColMap::Mirror { col, ub } => ub - xt[col],
            ColMap::Split { pos, neg } => xt[pos] - xt[neg],
        })
        .collect();

    let objective_value = p.objective_at(&x);
    let feas = check_solution(p, &x).expect("solver produced x of matching dimension");
    Ok(LpSolution {
        status: Status::Optimal,
        x: Some(x),
        objective_value: Some(objective_value),
        max_residual: Some(feas.max_residual),
    })
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    /// `costs[0]` is the phase-1 row, `costs[1]` the phase-2 row; both are
    /// kept priced out across pivots so phase 2 can start immediately.
    costs: [Vec<f64>; 2],
    pivots: u64,
}

impl Tableau {
    fn iterate(&mut self, cost: usize, width: usize) -> Result<Outcome, SolveError> {
        let mut degenerate_streak = 0u32;
        let mut bland = false;
        loop {
            let entering = {
                let row = &self.costs[cost];
                if bland {
                    (0..width).find(|&j| row[j] < -PIVOT_TOLERANCE)
                } else {
                    let mut best: Option<(usize, f64)> = None;
                    for (j, &c) in row.iter().enumerate().take(width) {
                        if c < -PIVOT_TOLERANCE && best.map(|(_, bc)| c < bc).unwrap_or(true) {
                            best = Some((j, c));
                        }
                    }
                    best.map(|(j, _)| j)
                }
            };
            let Some(col) = entering else { return Ok(Outcome::Optimal) };

            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.a.len() {
                let coeff = self.a[r][col];
                if coeff <= PIVOT_TOLERANCE {
                    continue;
                }
                let ratio = self.b[r].max(0.0) / coeff;
                let better = match leaving {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - 1e-12
                            || (ratio < lratio + 1e-12 && self.basis[r] < self.basis[lr])
                    }
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
            let Some((row, ratio)) = leaving else { return Ok(Outcome::Unbounded) };

            if ratio < 1e-12 {
                degenerate_streak += 1;
                if degenerate_streak >= DEGENERATE_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_streak = 0;
                bland = false;
            }

            self.pivot(row, col);
            self.pivots += 1;
            if self.pivots > MAX_PIVOTS {
                return Err(SolveError::IterationLimit);
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let scale = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= scale;
        }
        self.b[row] /= scale;
        self.a[row][col] = 1.0; // exact

        for r in 0..self.a.len() {
            if r == row {
                continue;
            }
            let factor = self.a[r][col];
            if factor == 0.0 {
                continue;
            }
            let (pr, cr) = if r < row {
                let (lo, hi) = self.a.split_at_mut(row);
                (&hi[0], &mut lo[r])
            } else {
                let (lo, hi) = self.a.split_at_mut(r);
                (&lo[row], &mut hi[0])
            };
            for (v, pv) in cr.iter_mut().zip(pr.iter()) {
                *v -= factor * pv;
            }
            cr[col] = 0.0;
            self.b[r] -= factor * self.b[row];
        }
        for cost in self.costs.iter_mut() {
            let factor = cost[col];
            if factor != 0.0 {
                for (v, pv) in cost.iter_mut().zip(self.a[row].iter()) {
                    *v -= factor * pv;
                }
                cost[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Pivot leftover artificial basics onto real columns, or drop their
    /// rows as redundant when no real column remains.
    fn evict_artificials(&mut self, art_start: usize) {
        let mut r = 0;
        while r < self.a.len() {
            if self.basis[r] < art_start {
                r += 1;
                continue;
            }
            let col = (0..art_start)
                .filter(|&j| self.a[r][j].abs() > 1e-7)
                .max_by(|&i, &j| self.a[r][i].abs().total_cmp(&self.a[r][j].abs()));
            match col {
                Some(col) => {
                    self.pivot(r, col);
                    r += 1;
                }
                None => {
                    self.a.remove(r);
                    self.b.remove(r);
                    self.basis.remove(r);
                }
            }
        }
    }

    fn truncate_cols(&mut self, width: usize) {
        for row in self.a.iter_mut() {
            row.truncate(width);
        }
        for cost in self.costs.iter_mut() {
            cost.truncate(width);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    type RowSpec = (Vec<(usize, f64)>, Relop, f64);

    fn problem(objective: Vec<f64>, rows: Vec<RowSpec>, bounds: Vec<(f64, f64)>) -> LpProblem {
        LpProblem {
            n_cols: objective.len(),
            objective,
            objective_offset: 0.0,
            rows: rows
                .into_iter()
                .map(|(coeffs, relop, rhs)| super::super::Row {
                    coeffs: coeffs.into_iter().collect::<BTreeMap<_, _>>(),
                    relop,
                    rhs,
                })
                .collect(),
            bounds,
        }
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn trivial_minimum_at_lower_bound() {
        let p = problem(vec![1.0], vec![], vec![(0.0, INF)]);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.x.unwrap(), vec![0.0]);
        assert_eq!(s.objective_value.unwrap(), 0.0);
    }

    #[test]
    fn simplex_vertex() {
        let p = problem(
            vec![-1.0, -1.0],
            vec![(vec![(0, 1.0), (1, 1.0)], Relop::Le, 1.0)],
            vec![(0.0, INF), (0.0, INF)],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective_value.unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_row_detected() {
        let p = problem(
            vec![0.0],
            vec![(vec![(0, 1.0)], Relop::Le, -1.0)],
            vec![(0.0, INF)],
        );
        assert_eq!(solve(&p).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn unbounded_direction_detected() {
        let p = problem(vec![-1.0], vec![], vec![(0.0, INF)]);
        assert_eq!(solve(&p).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn upper_bounds_respected() {
        let p = problem(vec![-1.0, -2.0], vec![], vec![(0.0, 3.0), (-1.0, 2.0)]);
        let s = solve(&p).unwrap();
        assert_eq!(s.x.unwrap(), vec![3.0, 2.0]);
        assert_eq!(s.objective_value.unwrap(), -7.0);
    }

    #[test]
    fn free_variable_goes_negative() {
        let p = problem(
            vec![1.0],
            vec![(vec![(0, 1.0)], Relop::Ge, -5.0)],
            vec![(-INF, INF)],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective_value.unwrap() + 5.0).abs() < 1e-9);
    }

    #[test]
    fn mirrored_variable_solves() {
        // max x with x <= 2 and no lower bound, written as min -x.
        let p = problem(
            vec![-1.0],
            vec![(vec![(0, 1.0)], Relop::Ge, 0.0)],
            vec![(-INF, 2.0)],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective_value.unwrap() + 2.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_equalities() {
        let p = problem(
            vec![1.0, 1.0],
            vec![
                (vec![(0, 1.0), (1, -1.0)], Relop::Eq, -2.0),
                (vec![(0, 1.0), (1, 1.0)], Relop::Eq, 4.0),
            ],
            vec![(0.0, INF), (0.0, INF)],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.status, Status::Optimal);
        let x = s.x.unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9);
        assert!((x[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_variable_bounds() {
        let p = problem(vec![1.0], vec![], vec![(2.5, 2.5)]);
        let s = solve(&p).unwrap();
        assert_eq!(s.x.unwrap(), vec![2.5]);
    }

    #[test]
    fn crossed_bounds_are_infeasible() {
        let p = problem(vec![1.0], vec![], vec![(1.0, 0.0)]);
        assert_eq!(solve(&p).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn optimal_solutions_verify() {
        let p = problem(
            vec![2.0, -3.0, 1.0],
            vec![
                (vec![(0, 1.0), (1, 2.0), (2, -1.0)], Relop::Le, 4.0),
                (vec![(0, -1.0), (1, 1.0)], Relop::Ge, -2.0),
                (vec![(1, 1.0), (2, 1.0)], Relop::Eq, 3.0),
            ],
            vec![(0.0, 5.0), (0.0, 5.0), (-1.0, 5.0)],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!(s.max_residual.unwrap() <= super::super::FEAS_TOLERANCE);
    }

    #[test]
    fn duplicate_rows_do_not_move_the_optimum() {
        let mut p = problem(
            vec![-1.0, -2.0],
            vec![
                (vec![(0, 1.0), (1, 1.0)], Relop::Le, 4.0),
                (vec![(0, 2.0), (1, 1.0)], Relop::Le, 6.0),
            ],
            vec![(0.0, INF), (0.0, INF)],
        );
        let before = solve(&p).unwrap().objective_value.unwrap();
        let copy = p.rows[0].clone();
        p.rows.push(copy);
        let after = solve(&p).unwrap().objective_value.unwrap();
        assert!((before - after).abs() <= 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Multiple redundant constraints intersecting at the optimum.
        let p = problem(
            vec![-0.75, 150.0, -0.02, 6.0],
            vec![
                (vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Relop::Le, 0.0),
                (vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Relop::Le, 0.0),
                (vec![(2, 1.0)], Relop::Le, 1.0),
            ],
            vec![(0.0, INF); 4],
        );
        let s = solve(&p).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective_value.unwrap() + 0.05).abs() < 1e-7);
    }
}
