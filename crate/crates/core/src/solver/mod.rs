//! Self-contained linear-programming and branch-and-bound solver used by all
//! other modules.
//!
//! Problems are stated as `min cᵀx` over sparse rows with senses, variable
//! bounds, and per-variable integrality flags. The LP engine is a
//! bounded-variable dense-tableau simplex (two-phase primal plus a dual
//! simplex for warm restarts after bound changes); the MILP engine is
//! LP-based branch and bound with best-bound node selection and
//! most-fractional branching.
//!
//! Row duals are reported nonnegative for inequality rows of either sense and
//! free for equality rows, so that `obj = Σ_{≥,=} λᵢwᵢ − Σ_{≤} λᵢwᵢ + bound
//! terms` holds at optimality.

mod milp;
mod simplex;

pub use milp::MilpOptions;

use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

pub const FEAS_TOL: f64 = 1e-7;
pub const DUAL_TOL: f64 = 1e-7;
pub const INT_TOL: f64 = 1e-6;
pub const DEFAULT_ABS_GAP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("inconsistent problem dimensions: {0}")]
    Dimension(String),
    #[error("integer variable {0} must have finite bounds")]
    UnboundedInteger(usize),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("warm-start point rejected: {0}")]
    BadWarmStart(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimization problem in standard row form.
#[derive(Debug, Clone, Default)]
pub struct Problem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
}

impl Problem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.integer.len() != n {
            return Err(SolverError::Dimension(format!(
                "objective has {n} entries, bounds/integrality differ"
            )));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                if j >= n {
                    return Err(SolverError::Dimension(format!(
                        "row {i} references variable {j} of {n}"
                    )));
                }
                if !v.is_finite() {
                    return Err(SolverError::Dimension(format!("row {i} has non-finite coefficient")));
                }
            }
            if !row.rhs.is_finite() {
                return Err(SolverError::Dimension(format!("row {i} has non-finite rhs")));
            }
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] + 1e-12 {
                return Err(SolverError::Dimension(format!(
                    "variable {j} has lower {} above upper {}",
                    self.lower[j], self.upper[j]
                )));
            }
            if self.integer[j] && (!self.lower[j].is_finite() || !self.upper[j].is_finite()) {
                return Err(SolverError::UnboundedInteger(j));
            }
        }
        Ok(())
    }

    pub fn has_integers(&self) -> bool {
        self.integer.iter().any(|&b| b)
    }

    /// Plain-text dump for debugging: objective, rows, bounds, integrality.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let term = |j: usize, v: f64| format!("{v:+} x{j}");
        s.push_str("min\n  ");
        let obj: Vec<String> = self
            .objective
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(j, &v)| term(j, v))
            .collect();
        s.push_str(if obj.is_empty() { "0" } else { "" });
        s.push_str(&obj.join(" "));
        s.push_str("\nst\n");
        for (i, row) in self.constraints.iter().enumerate() {
            let lhs: Vec<String> = row.coeffs.iter().map(|&(j, v)| term(j, v)).collect();
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(s, "  r{i}: {} {op} {}", lhs.join(" "), row.rhs);
        }
        s.push_str("bounds\n");
        for j in 0..self.num_vars() {
            let _ = writeln!(s, "  {} <= x{j} <= {}", self.lower[j], self.upper[j]);
        }
        let ints: Vec<String> = (0..self.num_vars())
            .filter(|&j| self.integer[j])
            .map(|j| format!("x{j}"))
            .collect();
        if !ints.is_empty() {
            let _ = writeln!(s, "int\n  {}", ints.join(" "));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub pivots: u64,
    pub refreshes: u64,
    pub rebuilds: u64,
    pub nodes: u64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// Per-row duals; empty for MILP solves.
    pub row_duals: Vec<f64>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

// Process-wide audit counters; the acceptance suite asserts a 100% strong
// duality pass rate over every LP solved while it runs.
static LP_SOLVES: AtomicU64 = AtomicU64::new(0);
static LP_DUALITY_FAILURES: AtomicU64 = AtomicU64::new(0);

pub(crate) fn record_lp_audit(gap_ok: bool) {
    LP_SOLVES.fetch_add(1, Ordering::Relaxed);
    if !gap_ok {
        LP_DUALITY_FAILURES.fetch_add(1, Ordering::Relaxed);
    }
}

/// (LP solves, strong-duality failures) since process start.
pub fn lp_audit_counters() -> (u64, u64) {
    (
        LP_SOLVES.load(Ordering::Relaxed),
        LP_DUALITY_FAILURES.load(Ordering::Relaxed),
    )
}

/// Solves a pure LP; rejects problems with integrality flags.
pub fn solve_lp(problem: &Problem) -> Result<Solution, SolverError> {
    problem.validate()?;
    if problem.has_integers() {
        return Err(SolverError::Dimension(
            "solve_lp called with integer variables".to_string(),
        ));
    }
    simplex::solve(problem)
}

/// Solves a mixed-integer problem to the configured absolute gap.
pub fn solve_milp(problem: &Problem, options: &MilpOptions) -> Result<Solution, SolverError> {
    problem.validate()?;
    milp::solve(problem, options)
}

// ---------------------------------------------------------------------------
// Model builder: a thin layer for assembling problems from affine expressions.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub usize);

/// Affine expression `Σ aᵢ·xᵢ + constant`.
#[derive(Debug, Clone, Default)]
pub struct Expr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr { terms: Vec::new(), constant: c }
    }

    pub fn term(v: VarId, coeff: f64) -> Self {
        Expr { terms: vec![(v, coeff)], constant: 0.0 }
    }

    pub fn add_term(mut self, v: VarId, coeff: f64) -> Self {
        self.terms.push((v, coeff));
        self
    }

    pub fn plus(mut self, other: &Expr) -> Self {
        self.terms.extend(other.terms.iter().copied());
        self.constant += other.constant;
        self
    }

    pub fn minus(mut self, other: &Expr) -> Self {
        self.terms.extend(other.terms.iter().map(|&(v, a)| (v, -a)));
        self.constant -= other.constant;
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= k;
        }
        self.constant *= k;
        self
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(items: I) -> Self {
        let mut acc = Expr::default();
        for e in items {
            acc = acc.plus(&e);
        }
        acc
    }

    pub fn value(&self, point: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(VarId(j), a)| a * point[j])
                .sum::<f64>()
    }
}

impl From<VarId> for Expr {
    fn from(v: VarId) -> Self {
        Expr::term(v, 1.0)
    }
}

/// Incremental problem builder keeping variable and row names for debugging.
#[derive(Debug, Default)]
pub struct Model {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub var_names: Vec<String>,
    pub rows: Vec<Constraint>,
    pub row_names: Vec<String>,
}

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    pub fn var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        let id = VarId(self.objective.len());
        self.objective.push(0.0);
        self.lower.push(lower);
        self.upper.push(upper);
        self.integer.push(false);
        self.var_names.push(name.into());
        id
    }

    pub fn free_var(&mut self, name: impl Into<String>) -> VarId {
        self.var(name, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> VarId {
        let v = self.var(name, 0.0, 1.0);
        self.integer[v.0] = true;
        v
    }

    pub fn integer_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        let v = self.var(name, lower, upper);
        self.integer[v.0] = true;
        v
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_objective(&mut self, expr: &Expr) {
        for &(VarId(j), a) in &expr.terms {
            self.objective[j] += a;
        }
    }

    fn push_row(&mut self, name: String, expr: Expr, sense: Sense, rhs: f64) -> usize {
        // merge duplicate variable terms so the engine sees clean rows
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(expr.terms.len());
        let mut sorted = expr.terms.clone();
        sorted.sort_by_key(|&(VarId(j), _)| j);
        for (VarId(j), a) in sorted {
            if let Some(last) = coeffs.last_mut() {
                if last.0 == j {
                    last.1 += a;
                    continue;
                }
            }
            coeffs.push((j, a));
        }
        coeffs.retain(|&(_, a)| a != 0.0);
        let idx = self.rows.len();
        self.rows.push(Constraint {
            coeffs,
            sense,
            rhs: rhs - expr.constant,
        });
        self.row_names.push(name);
        idx
    }

    pub fn le(&mut self, name: impl Into<String>, expr: Expr, rhs: f64) -> usize {
        self.push_row(name.into(), expr, Sense::Le, rhs)
    }

    pub fn ge(&mut self, name: impl Into<String>, expr: Expr, rhs: f64) -> usize {
        self.push_row(name.into(), expr, Sense::Ge, rhs)
    }

    pub fn eq(&mut self, name: impl Into<String>, expr: Expr, rhs: f64) -> usize {
        self.push_row(name.into(), expr, Sense::Eq, rhs)
    }

    /// `lo ≤ expr ≤ hi` as two rows.
    pub fn range(&mut self, name: &str, expr: Expr, lo: f64, hi: f64) {
        self.ge(format!("{name}.lo"), expr.clone(), lo);
        self.le(format!("{name}.hi"), expr, hi);
    }

    pub fn to_problem(&self) -> Problem {
        Problem {
            objective: self.objective.clone(),
            constraints: self.rows.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            integer: self.integer.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_builds_clean_rows() {
        let mut m = Model::new();
        let x = m.var("x", 0.0, 10.0);
        let y = m.free_var("y");
        let e = Expr::term(x, 1.0).add_term(y, 2.0).add_term(x, 3.0);
        m.le("r", e, 5.0);
        assert_eq!(m.rows[0].coeffs, vec![(0, 4.0), (1, 2.0)]);
        let e2 = Expr::term(x, 1.0).plus(&Expr::constant(2.0));
        m.eq("r2", e2, 5.0);
        assert_eq!(m.rows[1].rhs, 3.0);
    }

    #[test]
    fn expr_arithmetic() {
        let a = Expr::term(VarId(0), 2.0).plus(&Expr::constant(1.0));
        let b = Expr::term(VarId(1), 3.0);
        let c = a.minus(&b).scaled(2.0);
        assert_eq!(c.value(&[1.0, 1.0]), (2.0 + 1.0 - 3.0) * 2.0);
    }

    #[test]
    fn dump_mentions_everything() {
        let mut m = Model::new();
        let x = m.var("x", 0.0, 1.0);
        m.integer[x.0] = true;
        m.objective[x.0] = 2.0;
        m.ge("r", Expr::from(x), 1.0);
        let text = m.to_problem().dump();
        assert!(text.contains("min"));
        assert!(text.contains(">= 1"));
        assert!(text.contains("int"));
    }
}
