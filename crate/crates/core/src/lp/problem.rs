use serde::{Deserialize, Serialize};

use super::sparse::Csr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// What a variable stands for in the recovery model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarRole {
    /// Pixel intensity `x(row, col)`.
    Pixel { row: usize, col: usize },
    /// Unknown coefficient `y(k, l)` of block `block`.
    Coeff { block: usize, k: usize, l: usize },
    /// Absolute-difference bound `h` of pixel pair `pair`.
    PairSlack { pair: usize },
    Other,
}

/// A sparse linear program
///
/// ```text
/// minimize  cᵀv
/// subject to  a_rᵀv (≤|=|≥) b_r   for every row r
///             lo_j ≤ v_j ≤ hi_j
/// ```
///
/// Bounds may be infinite.
#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    roles: Vec<VarRole>,
    triplets: Vec<(usize, usize, f64)>,
    senses: Vec<Sense>,
    rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64, role: VarRole) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.roles.push(role);
        self.cost.len() - 1
    }

    pub fn add_row(&mut self, coeffs: &[(usize, f64)], sense: Sense, rhs: f64) -> usize {
        let row = self.senses.len();
        self.triplets
            .extend(coeffs.iter().filter(|(_, v)| *v != 0.0).map(|&(c, v)| (row, c, v)));
        self.senses.push(sense);
        self.rhs.push(rhs);
        row
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.senses.len()
    }

    /// Stored constraint coefficients (duplicates counted separately).
    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    /// Nonzero objective entries.
    pub fn objective(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.cost.iter().copied().enumerate().filter(|(_, c)| *c != 0.0)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn roles(&self) -> &[VarRole] {
        &self.roles
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn senses(&self) -> &[Sense] {
        &self.senses
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn rhs_mut(&mut self) -> &mut [f64] {
        &mut self.rhs
    }

    pub fn count_role(&self, pred: impl Fn(&VarRole) -> bool) -> usize {
        self.roles.iter().filter(|r| pred(r)).count()
    }

    pub fn to_csr(&self) -> Csr {
        Csr::from_triplets(self.num_rows(), self.num_vars(), &self.triplets)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.cost.iter().zip(values).map(|(c, v)| c * v).sum()
    }

    /// Checks finiteness of data and `lo ≤ hi`; returns a description of the
    /// first violation.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.num_vars();
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(format!("variable {j} has bounds [{lo}, {hi}]"));
            }
            if !self.cost[j].is_finite() {
                return Err(format!("variable {j} has cost {}", self.cost[j]));
            }
        }
        for &(r, c, v) in &self.triplets {
            if c >= n || r >= self.num_rows() {
                return Err(format!("entry ({r}, {c}) out of range"));
            }
            if !v.is_finite() {
                return Err(format!("entry ({r}, {c}) = {v}"));
            }
        }
        if let Some((r, b)) = self.rhs.iter().enumerate().find(|(_, b)| !b.is_finite()) {
            return Err(format!("row {r} has right-hand side {b}"));
        }
        Ok(())
    }
}
