//! Sparse linear programming: problem container, interior-point solver,
//! independent solution checks and an LP-format writer.

mod ipm;
pub mod ldl;
mod lp_format;
pub mod ordering;
mod problem;
pub mod sparse;
mod verify;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use lp_format::write_lp_format;
pub use problem::{LpProblem, Sense, VarRole};
pub use verify::{verify_solution, Verification};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    NumericalFailure,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::IterationLimit => "iteration limit",
            SolveStatus::NumericalFailure => "numerical failure",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Relative tolerance on primal/dual residuals and the duality gap.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Worker threads for KKT assembly. Results do not depend on it.
    pub threads: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: 1e-7,
            max_iterations: 200,
            threads: 1,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-2) {
            return Err(format!("tolerance {} outside (0, 1e-2]", self.tolerance));
        }
        if self.max_iterations == 0 {
            return Err("max_iterations must be positive".into());
        }
        if self.threads == 0 {
            return Err("threads must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub wall_time_secs: f64,
    /// Stored coefficients of the constraint matrix.
    pub constraint_nnz: usize,
    /// Upper-triangle entries of the reduced KKT matrix.
    pub kkt_nnz: usize,
    /// Strictly-lower entries of the `L` factor.
    pub factor_nnz: usize,
    pub memory_bytes: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub regularized_pivots: usize,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub stats: SolveStats,
}

/// Solve `problem` to the relative tolerance in `settings`.
///
/// ```
/// use dct_recover::lp::{solve, LpProblem, Sense, SolverSettings, SolveStatus, VarRole};
///
/// let mut lp = LpProblem::new();
/// let a = lp.add_var(0.0, 255.0, 0.0, VarRole::Other);
/// let b = lp.add_var(0.0, 255.0, 0.0, VarRole::Other);
/// let h = lp.add_var(0.0, 255.0, 1.0, VarRole::Other);
/// lp.add_row(&[(a, 1.0)], Sense::Eq, 10.0);
/// lp.add_row(&[(b, 1.0)], Sense::Eq, 7.0);
/// lp.add_row(&[(a, 1.0), (b, -1.0), (h, -1.0)], Sense::Le, 0.0);
/// lp.add_row(&[(b, 1.0), (a, -1.0), (h, -1.0)], Sense::Le, 0.0);
/// let sol = solve(&lp, &SolverSettings::default());
/// assert_eq!(sol.status, SolveStatus::Optimal);
/// assert!((sol.objective - 3.0).abs() < 1e-5);
/// ```
pub fn solve(problem: &LpProblem, settings: &SolverSettings) -> Solution {
    ipm::solve(problem, settings)
}
