//! Emission of vertex sets, coupling rows and edge costs into a
//! [`ConicProgram`], either directly or homogenized by a flow variable.
//!
//! Program variables are nondimensional: a local coordinate `x_i` is
//! represented by `x_i / unit_i`, the objective is divided by a cost unit,
//! and every emitted row or cone is divided by its largest coefficient.

use crate::conic::{AffineExpr, ClarabelBackend, ConicProgram, ConicSolver, Solution, SolveStatus, VariableRef};

use super::{CouplingExpr, EdgeCost, GcsVertex, LocalCone, LocalExpr, Side, Tightening};

/// Units of the program variables.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Units {
    /// Physical value of one program unit, per local coordinate.
    pub coord: Vec<f64>,
    /// Physical cost of one objective unit.
    pub cost: f64,
}

impl Units {
    pub fn to_physical(&self, x: impl IntoIterator<Item = f64>) -> Vec<f64> {
        x.into_iter().zip(&self.coord).map(|(v, u)| v * u).collect()
    }
}

/// Variables standing for one vertex's local coordinates. With `scale` set,
/// constants are multiplied by that variable (perspective form).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Block<'a> {
    pub vars: &'a [VariableRef],
    pub scale: Option<VariableRef>,
    pub units: &'a Units,
}

impl Block<'_> {
    fn constant(&self, c: f64, out: &mut AffineExpr) {
        if c == 0.0 {
            return;
        }
        match self.scale {
            Some(y) => out.push(y, c),
            None => out.constant += c,
        }
    }

    /// The row in physical units.
    pub fn lift(&self, e: &LocalExpr) -> AffineExpr {
        let mut out = AffineExpr::new();
        for &(i, c) in &e.terms {
            out.push(self.vars[i], c * self.units.coord[i]);
        }
        self.constant(e.constant, &mut out);
        out
    }

    fn lift_cone(&self, cone: &LocalCone) -> Vec<AffineExpr> {
        normalize(cone.rows.iter().map(|r| self.lift(r)).collect())
    }
}

fn largest_coefficient(e: &AffineExpr) -> f64 {
    e.terms.iter().map(|(_, c)| c.abs()).fold(e.constant.abs(), f64::max)
}

/// Divides a row group by its largest coefficient.
fn normalize(rows: Vec<AffineExpr>) -> Vec<AffineExpr> {
    let big = rows.iter().map(largest_coefficient).fold(0.0, f64::max);
    if big > 0.0 {
        rows.into_iter().map(|r| r.scaled(1.0 / big)).collect()
    } else {
        rows
    }
}

fn normalize_row(row: AffineExpr) -> AffineExpr {
    normalize(vec![row]).pop().expect("one row")
}

pub(crate) fn emit_vertex(program: &mut ConicProgram, vertex: &GcsVertex, block: Block<'_>, tight: Tightening) {
    let c = vertex.constraints(tight);
    if !vertex.disk_is_redundant() {
        for cone in &c.disk_cones {
            program.add_second_order_cone(block.lift_cone(cone));
        }
    }
    for row in c.box_rows.iter().chain(&c.timing_rows) {
        program.add_nonnegative(normalize_row(block.lift(row)));
    }
    for cone in &c.speed_cones {
        program.add_second_order_cone(block.lift_cone(cone));
    }
}

/// Coupling rows; `tail`/`head` may be absent for source and sink edges.
/// `scale` homogenizes the constants.
pub(crate) fn emit_coupling(
    program: &mut ConicProgram,
    coupling: &[CouplingExpr],
    tail: Option<&[VariableRef]>,
    head: Option<&[VariableRef]>,
    scale: Option<VariableRef>,
    units: &Units,
) {
    for row in coupling {
        let mut e = AffineExpr::new();
        for &(side, i, c) in &row.terms {
            let vars = match side {
                Side::Tail => tail,
                Side::Head => head,
            }
            .expect("coupling refers to a missing endpoint");
            e.push(vars[i], c * units.coord[i]);
        }
        if row.constant != 0.0 {
            match scale {
                Some(y) => e.push(y, row.constant),
                None => e.constant += row.constant,
            }
        }
        program.add_equality(normalize_row(e));
    }
}

/// Adds the edge cost evaluated on the tail block. All quadratic terms share
/// one epigraph variable, each row weighted by the square root of its weight.
pub(crate) fn emit_cost(program: &mut ConicProgram, cost: &EdgeCost, tail: Option<Block<'_>>) {
    if let Some(tail) = tail {
        let k = tail.units.cost;
        let rows: Vec<AffineExpr> = cost
            .quadratic
            .iter()
            .flat_map(|q| {
                let s = (q.weight / k).sqrt();
                q.rows.iter().map(move |r| tail.lift(r).scaled(s))
            })
            .collect();
        if !rows.is_empty() {
            match tail.scale {
                Some(y) => {
                    program.add_perspective_quadratic_epigraph(rows, y, 1.0);
                }
                None => {
                    program.add_quadratic_cost_epigraph(rows, 1.0);
                }
            }
        }
        let lin = tail.lift(&cost.linear);
        for (v, c) in lin.terms {
            program.add_objective_term(v, c / k);
        }
        program.add_objective_constant(lin.constant / k);
        match tail.scale {
            Some(y) => program.add_objective_term(y, cost.constant / k),
            None => program.add_objective_constant(cost.constant / k),
        }
    } else {
        debug_assert!(cost.is_zero(), "edge cost without a tail vertex");
    }
}

/// Solves a program emitted by this module. Rows are already normalized, so
/// the backend's own equilibration is off; a numerical failure is retried
/// once with it on.
pub(crate) fn solve_emitted(program: &ConicProgram) -> Solution {
    let base = ClarabelBackend::from_env();
    // equilibration off first; shorter steps when the default ones stall
    let ladder = [(false, 0.99), (false, 0.95), (true, 0.99), (true, 0.95)];
    let mut first = None;
    for (equilibrate, max_step_fraction) in ladder {
        let sol = ClarabelBackend {
            equilibrate,
            max_step_fraction,
            ..base.clone()
        }
        .solve(program);
        if sol.status != SolveStatus::NumericalFailure {
            return sol;
        }
        log::debug!("retrying after a numerical failure (equilibrate {equilibrate}, step {max_step_fraction})");
        first.get_or_insert(sol);
    }
    first.expect("ladder is not empty")
}
