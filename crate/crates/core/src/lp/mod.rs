//! Linear programs in inequality form and a dense two-phase simplex solver.
//!
//! Programs are `max cᵀv s.t. Av ≤ b` with every variable either free or
//! nonnegative. [`LpBackend`] is the seam for plugging in an external solver;
//! [`DenseSimplex`] is the bundled implementation.

mod mps;
mod simplex;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

pub use mps::write_mps;
pub use simplex::{DenseSimplex, SimplexOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("row {row} references variable {col} but the program has {num_vars} variables")]
    DimensionMismatch { row: usize, col: usize, num_vars: usize },

    #[error("objective has {actual} coefficients, expected {expected}")]
    ObjectiveLength { expected: usize, actual: usize },

    #[error("non-finite coefficient in {0}")]
    NonFinite(String),

    #[error("program has no variables")]
    Empty,

    #[error("iteration limit of {0} pivots reached")]
    IterationLimit(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Sign restriction of a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarBound {
    Free,
    NonNegative,
}

/// Sparse row `Σ coeffs · v ≤ rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// `max cᵀv` subject to `Av ≤ b` and per-variable sign restrictions.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub bounds: Vec<VarBound>,
    pub rows: Vec<Constraint>,
    /// Column names, used by the MPS writer.
    pub names: Vec<String>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, bounds: Vec<VarBound>) -> Self {
        let names = (0..bounds.len()).map(|j| format!("C{}", j + 1)).collect();
        Self { objective, bounds, rows: Vec::new(), names }
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        self.names = names;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Constraint { coeffs, rhs });
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let nv = self.num_vars();
        if nv == 0 {
            return Err(LpError::Empty);
        }
        if self.objective.len() != nv {
            return Err(LpError::ObjectiveLength { expected: nv, actual: self.objective.len() });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective".into()));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("rhs of row {r}")));
            }
            for &(col, v) in &row.coeffs {
                if col >= nv {
                    return Err(LpError::DimensionMismatch { row: r, col, num_vars: nv });
                }
                if !v.is_finite() {
                    return Err(LpError::NonFinite(format!("row {r}")));
                }
            }
        }
        Ok(())
    }

    /// `a_rᵀv` for row `r`.
    pub fn row_activity(&self, r: usize, v: &[f64]) -> f64 {
        self.rows[r].coeffs.iter().map(|&(j, a)| a * v[j]).sum()
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(c, x)| c * x).sum()
    }

    /// Same constraints, zero objective.
    pub fn feasibility_version(&self) -> Self {
        let mut lp = self.clone();
        lp.objective.iter_mut().for_each(|c| *c = 0.0);
        lp
    }

    /// Hash of the constraint system (rows and bounds, not the objective).
    pub(crate) fn constraint_fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.bounds.hash(&mut h);
        self.rows.len().hash(&mut h);
        for row in &self.rows {
            row.rhs.to_bits().hash(&mut h);
            row.coeffs.len().hash(&mut h);
            for &(j, v) in &row.coeffs {
                j.hash(&mut h);
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

/// Basis (and, for the bundled solver, the final tableau) of a previous solve.
///
/// Only usable on a program with an identical constraint system; otherwise it
/// is ignored and the solver starts cold.
#[derive(Clone, Debug)]
pub struct WarmStart {
    pub(crate) fingerprint: u64,
    pub(crate) basis: Vec<usize>,
    pub(crate) state: Option<Arc<simplex::Tableau>>,
}

impl WarmStart {
    /// Standard-form column index of the basic variable in each row.
    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    /// Drops the cached tableau, keeping only the basis.
    pub fn basis_only(&self) -> Self {
        Self { fingerprint: self.fingerprint, basis: self.basis.clone(), state: None }
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values. For `Unbounded`, the last basic feasible point.
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row, `≥ 0`, when the status is `Optimal`.
    pub duals: Option<Vec<f64>>,
    /// Improving feasible direction when the status is `Unbounded`.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
    pub warm: Option<WarmStart>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// A linear programming backend.
pub trait LpBackend: Send + Sync {
    fn solve(&self, lp: &LinearProgram, warm: Option<&WarmStart>) -> Result<LpSolution, LpError>;

    fn name(&self) -> &str {
        "external"
    }
}

/// Solves `lp` with the bundled dense simplex.
pub fn solve(lp: &LinearProgram, warm: Option<&WarmStart>) -> Result<LpSolution, LpError> {
    DenseSimplex::default().solve(lp, warm)
}

/// Finds any point satisfying the constraints of `lp`; the objective is ignored.
pub fn solve_feasibility(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    DenseSimplex::default().solve(&lp.feasibility_version(), None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(obj: Vec<f64>, bounds: Vec<VarBound>, rows: &[(&[(usize, f64)], f64)]) -> LinearProgram {
        let mut p = LinearProgram::new(obj, bounds);
        for (c, b) in rows {
            p.add_row(c.to_vec(), *b);
        }
        p
    }

    #[test]
    fn single_constraint() {
        let p = lp(vec![1.0], vec![VarBound::Free], &[(&[(0, 1.0)], 1.0)]);
        let s = solve(&p, None).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.duals.unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_constraints_unbounded() {
        let p = lp(vec![1.0], vec![VarBound::Free], &[]);
        let s = solve(&p, None).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
        assert!(s.ray.unwrap()[0] > 0.0);
    }

    #[test]
    fn contradictory_rows_infeasible() {
        let p = lp(
            vec![0.0],
            vec![VarBound::NonNegative],
            &[(&[(0, 1.0)], 0.0), (&[(0, -1.0)], -1.0)],
        );
        assert_eq!(solve(&p, None).unwrap().status, LpStatus::Infeasible);
        assert_eq!(solve_feasibility(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn empty_constraint_set_is_feasible_at_zero() {
        let p = lp(vec![3.0, -1.0], vec![VarBound::Free, VarBound::NonNegative], &[]);
        let s = solve_feasibility(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x, vec![0.0, 0.0]);
    }

    #[test]
    fn validation_errors() {
        let p = lp(vec![1.0], vec![VarBound::Free], &[(&[(3, 1.0)], 1.0)]);
        assert!(matches!(solve(&p, None), Err(LpError::DimensionMismatch { col: 3, .. })));
        let p = lp(vec![f64::NAN], vec![VarBound::Free], &[]);
        assert!(matches!(solve(&p, None), Err(LpError::NonFinite(_))));
        let p = lp(vec![1.0, 2.0], vec![VarBound::Free], &[]);
        assert!(matches!(solve(&p, None), Err(LpError::ObjectiveLength { .. })));
    }

    #[test]
    fn fingerprint_ignores_objective() {
        let a = lp(vec![1.0], vec![VarBound::Free], &[(&[(0, 1.0)], 1.0)]);
        let mut b = a.clone();
        b.objective[0] = -4.0;
        assert_eq!(a.constraint_fingerprint(), b.constraint_fingerprint());
        b.rows[0].rhs = 2.0;
        assert_ne!(a.constraint_fingerprint(), b.constraint_fingerprint());
    }
}
