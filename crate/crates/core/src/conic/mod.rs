//! Backend-neutral second-order cone programs.
//!
//! A [`ConicProgram`] has a linear objective and four kinds of constraints,
//! all written over affine expressions of the decision vector:
//!
//! * equalities `a.x + c = 0`
//! * nonnegativities `a.x + c >= 0`
//! * second-order cones `t >= ||u||_2` with rows `[t, u_1, .., u_k]`
//! * rotated cones `2 u0 u1 >= ||w||_2^2`, `u0, u1 >= 0`, with rows `[u0, u1, w_1, ..]`
//!
//! Quadratic costs are lowered to rotated cones so any linear-objective conic
//! solver can serve as a backend. [`check_solution`] recomputes every residual
//! from the program data alone.

mod clarabel_backend;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use clarabel_backend::ClarabelBackend;

/// Feasibility tolerance on scaled residuals.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Relative objective tolerance against the backend-reported optimum.
pub const OBJECTIVE_REL_TOL: f64 = 1e-6;

/// Environment variable holding the solver time limit in seconds.
pub const TIME_LIMIT_ENV: &str = "HANDOVER_GCS_SOLVER_TIME_LIMIT_S";

/// Index of a decision variable inside the program that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VariableRef(usize);

impl VariableRef {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Sparse affine expression `sum coef * x[var] + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(VariableRef, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: VariableRef) -> Self {
        Self {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(mut self, v: VariableRef, coef: f64) -> Self {
        self.push(v, coef);
        self
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn push(&mut self, v: VariableRef, coef: f64) {
        if coef != 0.0 {
            self.terms.push((v, coef));
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= s;
        }
        self.constant *= s;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| c * x[v.0]).sum::<f64>() + self.constant
    }

    /// Magnitude used to scale residuals: `max(1, |c|, sum |a_j x_j|)`.
    fn magnitude(&self, x: &[f64]) -> f64 {
        let s: f64 = self.terms.iter().map(|(v, c)| (c * x[v.0]).abs()).sum();
        s.max(self.constant.abs()).max(1.0)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    names: Vec<Option<String>>,
    objective: Vec<f64>,
    objective_constant: f64,
    equalities: Vec<AffineExpr>,
    nonnegatives: Vec<AffineExpr>,
    second_order: Vec<Vec<AffineExpr>>,
    rotated: Vec<Vec<AffineExpr>>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: Option<&str>) -> VariableRef {
        self.names.push(name.map(str::to_owned));
        self.objective.push(0.0);
        VariableRef(self.names.len() - 1)
    }

    pub fn add_variables(&mut self, n: usize) -> Vec<VariableRef> {
        (0..n).map(|_| self.add_variable(None)).collect()
    }

    pub fn num_variables(&self) -> usize {
        self.names.len()
    }

    pub fn variable_name(&self, v: VariableRef) -> Option<&str> {
        self.names.get(v.0).and_then(|n| n.as_deref())
    }

    pub fn add_objective_term(&mut self, v: VariableRef, coef: f64) {
        self.objective[v.0] += coef;
    }

    pub fn add_objective_constant(&mut self, c: f64) {
        self.objective_constant += c;
    }

    pub fn objective_coefficients(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.objective_constant
    }

    pub fn add_equality(&mut self, expr: AffineExpr) {
        self.equalities.push(expr);
    }

    pub fn add_nonnegative(&mut self, expr: AffineExpr) {
        self.nonnegatives.push(expr);
    }

    /// `rows[0] >= ||rows[1..]||_2`
    pub fn add_second_order_cone(&mut self, rows: Vec<AffineExpr>) {
        assert!(!rows.is_empty(), "a second-order cone needs at least one row");
        self.second_order.push(rows);
    }

    /// `2 rows[0] rows[1] >= ||rows[2..]||_2^2` with `rows[0], rows[1] >= 0`
    pub fn add_rotated_cone(&mut self, rows: Vec<AffineExpr>) {
        assert!(rows.len() >= 2, "a rotated cone needs at least two rows");
        self.rotated.push(rows);
    }

    pub fn equalities(&self) -> &[AffineExpr] {
        &self.equalities
    }

    pub fn nonnegatives(&self) -> &[AffineExpr] {
        &self.nonnegatives
    }

    pub fn second_order_cones(&self) -> &[Vec<AffineExpr>] {
        &self.second_order
    }

    pub fn rotated_cones(&self) -> &[Vec<AffineExpr>] {
        &self.rotated
    }

    /// Adds `s >= ||rows||_2^2` and `weight * s` to the objective; returns `s`.
    pub fn add_quadratic_cost_epigraph(&mut self, rows: Vec<AffineExpr>, weight: f64) -> VariableRef {
        assert!(weight >= 0.0, "quadratic cost weight must be nonnegative");
        let s = self.add_variable(Some("quad_epigraph"));
        let mut cone = vec![AffineExpr::var(s), AffineExpr::constant(0.5)];
        cone.extend(rows);
        self.add_rotated_cone(cone);
        self.add_objective_term(s, weight);
        s
    }

    /// Perspective form of [`add_quadratic_cost_epigraph`]: adds
    /// `s * scale >= ||rows||_2^2` and `weight * s` to the objective.
    ///
    /// [`add_quadratic_cost_epigraph`]: ConicProgram::add_quadratic_cost_epigraph
    pub fn add_perspective_quadratic_epigraph(
        &mut self,
        rows: Vec<AffineExpr>,
        scale: VariableRef,
        weight: f64,
    ) -> VariableRef {
        assert!(weight >= 0.0, "quadratic cost weight must be nonnegative");
        let s = self.add_variable(Some("persp_epigraph"));
        let mut cone = vec![AffineExpr::var(s), AffineExpr::new().term(scale, 0.5)];
        cone.extend(rows);
        self.add_rotated_cone(cone);
        self.add_objective_term(s, weight);
        s
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_variables();
        let all_rows = self
            .equalities
            .iter()
            .chain(self.nonnegatives.iter())
            .chain(self.second_order.iter().flatten())
            .chain(self.rotated.iter().flatten());
        for row in all_rows {
            for (v, c) in &row.terms {
                if v.0 >= n {
                    return Err(Error::InvalidInput(format!(
                        "constraint references variable {} of {n}",
                        v.0
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::InvalidInput("non-finite coefficient".into()));
                }
            }
            if !row.constant.is_finite() {
                return Err(Error::InvalidInput("non-finite constant".into()));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite objective coefficient".into()));
        }
        Ok(())
    }

    /// Plain-text listing of the program for cross-checking against other
    /// solvers.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let fmt_expr = |e: &AffineExpr| {
            let mut s = String::new();
            for (v, c) in &e.terms {
                let _ = write!(s, "{c:+.17e}*x{} ", v.0);
            }
            let _ = write!(s, "{:+.17e}", e.constant);
            s
        };
        let _ = writeln!(out, "VARIABLES {}", self.num_variables());
        for (i, name) in self.names.iter().enumerate() {
            if let Some(name) = name {
                let _ = writeln!(out, "NAME x{i} {name}");
            }
        }
        let mut obj = AffineExpr::constant(self.objective_constant);
        for (i, &c) in self.objective.iter().enumerate() {
            obj.push(VariableRef(i), c);
        }
        let _ = writeln!(out, "OBJECTIVE MIN {}", fmt_expr(&obj));
        for e in &self.equalities {
            let _ = writeln!(out, "EQ {}", fmt_expr(e));
        }
        for e in &self.nonnegatives {
            let _ = writeln!(out, "NONNEG {}", fmt_expr(e));
        }
        for cone in &self.second_order {
            let _ = writeln!(out, "SOC {}", cone.len());
            for e in cone {
                let _ = writeln!(out, "  {}", fmt_expr(e));
            }
        }
        for cone in &self.rotated {
            let _ = writeln!(out, "RSOC {}", cone.len());
            for e in cone {
                let _ = writeln!(out, "  {}", fmt_expr(e));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Objective recomputed from the program at `x`.
    pub objective: f64,
    /// Objective reported by the backend.
    pub backend_objective: f64,
    /// Dual objective reported by the backend; a lower bound on the optimum
    /// up to the dual feasibility tolerance.
    pub dual_objective: f64,
    pub max_equality_residual: f64,
    pub max_cone_violation: f64,
    pub iterations: u32,
    pub solve_time_s: f64,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: VariableRef) -> f64 {
        self.x[v.0]
    }
}

/// A conic solver backend.
pub trait ConicSolver {
    fn solve(&self, program: &ConicProgram) -> Solution;

    /// Whether concurrent `solve` calls on distinct programs are safe.
    fn is_reentrant(&self) -> bool;
}

/// Solves with the default backend.
pub fn solve(program: &ConicProgram) -> Solution {
    ClarabelBackend::from_env().solve(program)
}

/// Residuals recomputed from program data. Violations are scaled by the
/// magnitude of the expression involved (see [`AffineExpr`]).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualReport {
    pub max_equality: f64,
    pub max_nonnegative: f64,
    pub max_second_order: f64,
    pub max_rotated: f64,
    pub max_equality_abs: f64,
    pub max_cone_abs: f64,
    pub worst: Option<String>,
    pub passes: bool,
}

impl ResidualReport {
    pub fn max_scaled(&self) -> f64 {
        self.max_equality
            .max(self.max_nonnegative)
            .max(self.max_second_order)
            .max(self.max_rotated)
    }
}

pub fn check_solution(program: &ConicProgram, x: &[f64]) -> ResidualReport {
    assert_eq!(x.len(), program.num_variables(), "solution dimension mismatch");
    let mut rep = ResidualReport::default();
    let mut worst = 0.0;
    let mut note = |rep: &mut ResidualReport, scaled: f64, what: String| {
        if scaled > worst {
            worst = scaled;
            rep.worst = Some(what);
        }
    };

    for (i, e) in program.equalities.iter().enumerate() {
        let r = e.eval(x).abs();
        let s = r / e.magnitude(x);
        rep.max_equality_abs = rep.max_equality_abs.max(r);
        rep.max_equality = rep.max_equality.max(s);
        note(&mut rep, s, format!("equality {i}"));
    }
    for (i, e) in program.nonnegatives.iter().enumerate() {
        let r = (-e.eval(x)).max(0.0);
        let s = r / e.magnitude(x);
        rep.max_cone_abs = rep.max_cone_abs.max(r);
        rep.max_nonnegative = rep.max_nonnegative.max(s);
        note(&mut rep, s, format!("nonnegative {i}"));
    }
    for (i, cone) in program.second_order.iter().enumerate() {
        let t = cone[0].eval(x);
        let norm = cone[1..].iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
        let r = (norm - t).max(0.0);
        let mag = cone.iter().map(|e| e.magnitude(x)).fold(1.0, f64::max);
        let s = r / mag;
        rep.max_cone_abs = rep.max_cone_abs.max(r);
        rep.max_second_order = rep.max_second_order.max(s);
        note(&mut rep, s, format!("second-order cone {i}"));
    }
    for (i, cone) in program.rotated.iter().enumerate() {
        let u0 = cone[0].eval(x);
        let u1 = cone[1].eval(x);
        let w2: f64 = cone[2..].iter().map(|e| e.eval(x).powi(2)).sum();
        // same cone written as ||(u0 - u1, sqrt2 w)|| <= u0 + u1
        let lhs = ((u0 - u1).powi(2) + 2.0 * w2).sqrt();
        let r = (lhs - (u0 + u1)).max(0.0).max(-u0).max(-u1);
        let mag = cone.iter().map(|e| e.magnitude(x)).fold(1.0, f64::max);
        let s = r / mag;
        rep.max_cone_abs = rep.max_cone_abs.max(r);
        rep.max_rotated = rep.max_rotated.max(s);
        note(&mut rep, s, format!("rotated cone {i}"));
    }
    rep.passes = rep.max_scaled() <= FEASIBILITY_TOL;
    rep
}

/// Minimum-norm correction of `x` onto the affine equality set of `program`.
///
/// Intended for small programs: it forms the dense equality matrix and uses
/// its pseudo-inverse. Inequalities are not considered.
pub fn project_onto_equalities(program: &ConicProgram, x: &[f64]) -> Vec<f64> {
    let rows = program.equalities.len();
    if rows == 0 {
        return x.to_vec();
    }
    let n = program.num_variables();
    let mut a = DMatrix::<f64>::zeros(rows, n);
    let mut resid = DVector::<f64>::zeros(rows);
    for (i, e) in program.equalities.iter().enumerate() {
        for (v, c) in &e.terms {
            a[(i, v.0)] += c;
        }
        resid[i] = e.eval(x);
    }
    let mut out = DVector::from_column_slice(x);
    // two passes absorb the rounding left by the first
    for _ in 0..2 {
        let svd = a.clone().svd(true, true);
        let Ok(delta) = svd.solve(&resid, 1e-12 * svd.singular_values.max().max(1.0)) else {
            break;
        };
        out -= delta;
        for (i, e) in program.equalities.iter().enumerate() {
            resid[i] = e.eval(out.as_slice());
        }
    }
    out.as_slice().to_vec()
}
