use serde::Serialize;

use crate::bezier::{SegmentPair, ShapeCurve, TimingCurve};
use crate::conic::{project_onto_equalities, ConicProgram, SolveStatus, VariableRef, FEASIBILITY_TOL};
use crate::error::{Error, Result, Stage};
use crate::regions::Node;

use super::assemble::{emit_cost, emit_coupling, emit_vertex, solve_emitted, Block};
use super::{CostKind, GcsProblem, GcsVertex, Tightening};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub geometric: f64,
    pub time: f64,
    pub handover: f64,
    pub smoothing: f64,
    pub total: f64,
}

/// A refined source-to-sink path.
#[derive(Debug, Clone)]
pub struct PathSolution {
    /// `Source, Region(..), .., Sink`
    pub path: Vec<Node>,
    pub bs_sequence: Vec<u32>,
    pub segments: Vec<SegmentPair>,
    /// Local variable vectors, one per region on the path.
    pub control: Vec<Vec<f64>>,
    pub cost: CostBreakdown,
    /// Largest violation of the untightened vertex constraints and coupling rows.
    pub max_violation: f64,
}

fn check_path(path: &[Node], problem: &GcsProblem) -> Result<Vec<usize>> {
    let bad = |d: String| Err(Error::InvalidInput(format!("bad path {path:?}: {d}")));
    if path.len() < 3 || path[0] != Node::Source || path[path.len() - 1] != Node::Sink {
        return bad("must run from source through at least one region to sink".into());
    }
    let mut edges = Vec::with_capacity(path.len() - 1);
    for w in path.windows(2) {
        match problem.graph.find_edge(w[0], w[1]) {
            Some(k) => edges.push(k),
            None => return bad(format!("no edge {:?} -> {:?}", w[0], w[1])),
        }
    }
    let inner = &path[1..path.len() - 1];
    for (i, a) in inner.iter().enumerate() {
        if !matches!(a, Node::Region(_)) || inner[i + 1..].contains(a) {
            return bad("interior nodes must be distinct regions".into());
        }
    }
    Ok(edges)
}

/// Largest violation of a vertex's exact constraints at local point `x`.
pub(crate) fn vertex_violation(vertex: &GcsVertex, x: &[f64]) -> f64 {
    let c = vertex.constraints(Tightening::NONE);
    let cone = |rows: &[super::LocalExpr]| {
        let t = rows[0].eval(x);
        let n = rows[1..].iter().map(|r| r.eval(x).powi(2)).sum::<f64>().sqrt();
        n - t
    };
    let mut worst = f64::NEG_INFINITY;
    for k in c.disk_cones.iter().chain(&c.speed_cones) {
        worst = worst.max(cone(&k.rows));
    }
    for r in c.box_rows.iter().chain(&c.timing_rows) {
        worst = worst.max(-r.eval(x));
    }
    worst.max(0.0)
}

/// Solves the convex program restricted to `path`.
///
/// Vertex sets are shrunk by [`Tightening::REFINEMENT`] and the solver's
/// answer is projected onto the coupling equalities, so the returned control
/// points satisfy the original constraints to within round-off.
pub fn refine(path: &[Node], problem: &GcsProblem) -> Result<PathSolution> {
    let edges = check_path(path, problem)?;
    let n = problem.layout().len();
    let regions: Vec<usize> = path[1..path.len() - 1]
        .iter()
        .map(|v| match v {
            Node::Region(i) => *i,
            _ => unreachable!(),
        })
        .collect();

    let units = problem.units();
    let mut p = ConicProgram::new();
    let vars: Vec<Vec<VariableRef>> = regions
        .iter()
        .map(|&i| {
            let vs = p.add_variables(n);
            emit_vertex(
                &mut p,
                &problem.vertices[i],
                Block {
                    vars: &vs,
                    scale: None,
                    units: &units,
                },
                Tightening::REFINEMENT,
            );
            vs
        })
        .collect();
    // edge j joins path[j] and path[j + 1]; region r sits at path[r + 1]
    for (j, &k) in edges.iter().enumerate() {
        let tail = (j >= 1).then(|| vars[j - 1].as_slice());
        let head = (j < regions.len()).then(|| vars[j].as_slice());
        let ge = &problem.edges[k];
        emit_coupling(&mut p, &ge.coupling, tail, head, None, &units);
        emit_cost(
            &mut p,
            &ge.cost,
            tail.map(|vars| Block {
                vars,
                scale: None,
                units: &units,
            }),
        );
    }

    let sol = solve_emitted(&p);
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(Error::infeasible(
                Stage::Refinement,
                format!("path {:?} has no feasible trajectory", problem_bs(path, problem)),
            ))
        }
        other => {
            return Err(Error::Numerical(format!("refinement solve ended with status {other:?}")));
        }
    }
    let x = project_onto_equalities(&p, &sol.x);
    let control: Vec<Vec<f64>> = vars
        .iter()
        .map(|vs| units.to_physical(vs.iter().map(|v| x[v.index()])))
        .collect();

    let mut max_violation = p
        .equalities()
        .iter()
        .map(|e| e.eval(&x).abs())
        .fold(0.0, f64::max);
    for (r, &i) in regions.iter().enumerate() {
        max_violation = max_violation.max(vertex_violation(&problem.vertices[i], &control[r]));
    }
    if max_violation > FEASIBILITY_TOL {
        return Err(Error::Numerical(format!(
            "refined trajectory violates constraints by {max_violation:.3e}"
        )));
    }

    let lay = problem.layout();
    let m = lay.degree;
    let segments = control
        .iter()
        .map(|c| {
            let shape = ShapeCurve::new((0..=m).map(|k| [c[lay.r(k, 0)], c[lay.r(k, 1)]]).collect())?;
            let timing = TimingCurve::new((0..=m).map(|k| [c[lay.h(k)]]).collect())?;
            SegmentPair::new(shape, timing)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cost = CostBreakdown::default();
    for (j, &k) in edges.iter().enumerate().skip(1) {
        let xt = &control[j - 1];
        let ec = &problem.edges[k].cost;
        for q in &ec.quadratic {
            match q.kind {
                CostKind::Geometric => cost.geometric += q.eval(xt),
                CostKind::Smoothing => cost.smoothing += q.eval(xt),
            }
        }
        cost.time += ec.linear.eval(xt);
        cost.handover += ec.constant;
    }
    cost.total = cost.geometric + cost.time + cost.handover + cost.smoothing;

    Ok(PathSolution {
        path: path.to_vec(),
        bs_sequence: regions.iter().map(|&i| problem.vertices[i].bs_id).collect(),
        segments,
        control,
        cost,
        max_violation,
    })
}

fn problem_bs(path: &[Node], problem: &GcsProblem) -> Vec<u32> {
    path.iter().filter_map(|&v| problem.bs_id(v)).collect()
}
