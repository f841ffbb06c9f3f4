//! Linear programs: data structure, solution checking, text export, and a
//! self-contained simplex solver for desk-scale instances.

mod simplex;
mod writer;

pub use simplex::{solve, SolveError};
pub use writer::{emit_lp_file, LpLabels};

use std::collections::BTreeMap;

pub use crate::dsl::ast::Relop;

/// Tolerance for feasibility checks on rows and bounds.
pub const FEAS_TOLERANCE: f64 = 1e-8;

/// One constraint row: sparse coefficients, relation, right-hand side.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Row {
    pub coeffs: BTreeMap<usize, f64>,
    pub relop: Relop,
    pub rhs: f64,
}

/// A minimization LP over bounded variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    pub n_cols: usize,
    /// Objective coefficients, one per column.
    pub objective: Vec<f64>,
    /// Constant added to the objective value (not part of any column).
    pub objective_offset: f64,
    pub rows: Vec<Row>,
    /// Per-column `(lb, ub)`; use `f64::NEG_INFINITY` / `f64::INFINITY`
    /// for absent bounds.
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Objective value of a point, offset included.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.objective_offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Optimal => "OPTIMAL",
            Status::Infeasible => "INFEASIBLE",
            Status::Unbounded => "UNBOUNDED",
        })
    }
}

/// Solver output. `x`, `objective_value`, and `max_residual` are present
/// exactly when the status is [`Status::Optimal`].
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    pub x: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
    pub max_residual: Option<f64>,
}

impl LpSolution {
    pub(crate) fn status_only(status: Status) -> Self {
        LpSolution { status, x: None, objective_value: None, max_residual: None }
    }
}

/// Candidate point length does not match the column count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionError {
    pub expected: usize,
    pub found: usize,
}

impl std::fmt::Display for DimensionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "point has {} entries, problem has {} columns", self.found, self.expected)
    }
}

impl std::error::Error for DimensionError {}

/// Feasibility verdict for a candidate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Largest violation across rows and bounds.
    pub max_residual: f64,
}

/// Measure the worst violation of `x` against rows and bounds. A point is
/// feasible when the worst violation is within [`FEAS_TOLERANCE`].
pub fn check_solution(p: &LpProblem, x: &[f64]) -> Result<Feasibility, DimensionError> {
    if x.len() != p.n_cols {
        return Err(DimensionError { expected: p.n_cols, found: x.len() });
    }
    let mut max_residual = 0.0f64;
    for row in &p.rows {
        let lhs: f64 = row.coeffs.iter().map(|(&j, &c)| c * x[j]).sum();
        let violation = match row.relop {
            Relop::Eq => (lhs - row.rhs).abs(),
            Relop::Le => (lhs - row.rhs).max(0.0),
            Relop::Ge => (row.rhs - lhs).max(0.0),
        };
        max_residual = max_residual.max(violation);
    }
    for (j, &(lb, ub)) in p.bounds.iter().enumerate() {
        max_residual = max_residual.max(lb - x[j]).max(x[j] - ub);
    }
    Ok(Feasibility { feasible: max_residual <= FEAS_TOLERANCE, max_residual })
}
