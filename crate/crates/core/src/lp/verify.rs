use serde::{Deserialize, Serialize};

use super::problem::{LpProblem, Sense};
use super::Solution;

/// Independent recomputation of feasibility and objective for a solution.
///
/// Violations are scaled by `1 + |bound|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub max_row_violation: f64,
    pub worst_row: Option<usize>,
    pub max_bound_violation: f64,
    pub worst_var: Option<usize>,
    pub objective: f64,
    /// `|recomputed − reported| / (1 + |recomputed|)`
    pub objective_mismatch: f64,
    pub tolerance: f64,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.max_row_violation <= self.tolerance
            && self.max_bound_violation <= self.tolerance
            && self.objective_mismatch <= self.tolerance
    }
}

pub fn verify_solution(problem: &LpProblem, solution: &Solution, tolerance: f64) -> Verification {
    let x = &solution.values;
    let mut activity = vec![0.0; problem.num_rows()];
    for &(r, c, v) in problem.triplets() {
        activity[r] += v * x[c];
    }
    let mut max_row = 0.0;
    let mut worst_row = None;
    for (r, (&a, (&sense, &b))) in activity
        .iter()
        .zip(problem.senses().iter().zip(problem.rhs()))
        .enumerate()
    {
        let excess = match sense {
            Sense::Le => a - b,
            Sense::Ge => b - a,
            Sense::Eq => (a - b).abs(),
        };
        let scaled = excess.max(0.0) / (1.0 + b.abs());
        if scaled > max_row || scaled.is_nan() {
            max_row = if scaled.is_nan() { f64::INFINITY } else { scaled };
            worst_row = Some(r);
        }
    }
    let mut max_bound = 0.0;
    let mut worst_var = None;
    for (j, ((&v, &lo), &hi)) in x.iter().zip(problem.lower()).zip(problem.upper()).enumerate() {
        let below = if lo.is_finite() { (lo - v) / (1.0 + lo.abs()) } else { 0.0 };
        let above = if hi.is_finite() { (v - hi) / (1.0 + hi.abs()) } else { 0.0 };
        let worst = below.max(above).max(0.0);
        let worst = if v.is_nan() { f64::INFINITY } else { worst };
        if worst > max_bound {
            max_bound = worst;
            worst_var = Some(j);
        }
    }
    let objective = problem.objective_value(x);
    let objective_mismatch = (objective - solution.objective).abs() / (1.0 + objective.abs());
    Verification {
        max_row_violation: max_row,
        worst_row,
        max_bound_violation: max_bound,
        worst_var,
        objective,
        objective_mismatch: if objective_mismatch.is_nan() {
            f64::INFINITY
        } else {
            objective_mismatch
        },
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve, SolverSettings, VarRole};

    fn pair_problem() -> LpProblem {
        let mut lp = LpProblem::new();
        let a = lp.add_var(0.0, 255.0, 0.0, VarRole::Other);
        let b = lp.add_var(0.0, 255.0, 0.0, VarRole::Other);
        let h = lp.add_var(0.0, 255.0, 1.0, VarRole::Other);
        lp.add_row(&[(a, 1.0), (b, 1.0)], Sense::Eq, 20.0);
        lp.add_row(&[(a, 1.0)], Sense::Ge, 12.0);
        lp.add_row(&[(a, 1.0), (b, -1.0), (h, -1.0)], Sense::Le, 0.0);
        lp.add_row(&[(b, 1.0), (a, -1.0), (h, -1.0)], Sense::Le, 0.0);
        lp
    }

    #[test]
    fn optimal_solution_verifies() {
        let lp = pair_problem();
        let sol = solve(&lp, &SolverSettings::default());
        let v = verify_solution(&lp, &sol, 1e-6);
        assert!(v.passed(), "{v:?}");
        assert!((v.objective - 4.0).abs() < 1e-5);
    }

    #[test]
    fn perturbed_value_is_flagged() {
        let lp = pair_problem();
        let mut sol = solve(&lp, &SolverSettings::default());
        for j in 0..3 {
            let mut bad = sol.clone();
            bad.values[j] += 1.0;
            assert!(!verify_solution(&lp, &bad, 1e-6).passed(), "var {j}");
        }
        sol.values[0] = f64::NAN;
        assert!(!verify_solution(&lp, &sol, 1e-6).passed());
    }
}
