use crate::conic::{AffineExpr, ConicProgram, SolveStatus, VariableRef};
use crate::error::{Error, Result, Stage};
use crate::regions::{IntersectionGraph, Node};

use super::assemble::{emit_cost, emit_coupling, emit_vertex, solve_emitted, Block};
use super::{GcsProblem, Tightening};

/// Solution of the convex relaxation.
#[derive(Debug, Clone)]
pub struct RelaxationResult {
    /// Relaxed flow per edge, in graph edge order.
    pub flows: Vec<f64>,
    /// Optimal value; a lower bound on every path's cost.
    pub lower_bound: f64,
    /// Homogenized tail-vertex copies per edge (`None` for source edges).
    pub tail_copies: Vec<Option<Vec<f64>>>,
    /// Homogenized head-vertex copies per edge (`None` for sink edges).
    pub head_copies: Vec<Option<Vec<f64>>>,
    pub num_variables: usize,
    pub iterations: u32,
    pub solve_time_s: f64,
}

pub(crate) struct RelaxationProgram {
    pub program: ConicProgram,
    /// `None` for edges on no source-to-sink walk; their flow is zero.
    pub flow_vars: Vec<Option<VariableRef>>,
    pub tail_vars: Vec<Option<Vec<VariableRef>>>,
    pub head_vars: Vec<Option<Vec<VariableRef>>>,
}

/// Edges that carry positive flow in some point of the relaxed flow polytope
/// (unit flow, conservation, vertex capacity one). Any other edge is zero in
/// every feasible point, and its perspective cones would pin the vertex
/// copies to the cone apex, leaving the program without a strictly feasible
/// point.
///
/// The polytope is a node-capacitated network flow polytope and hence
/// integral, so edge `e` is usable iff an integral flow with `y_e = 1`
/// exists. That is a circulation with lower bounds (on `e` and on a return
/// arc `g -> s`), decided by one small max-flow per edge.
pub(crate) fn usable_edges(graph: &IntersectionGraph) -> Vec<bool> {
    let n = graph.num_regions();
    // nodes: region i -> (2i in, 2i+1 out); s, g, super source, super sink
    let (s, g, ss, tt) = (2 * n, 2 * n + 1, 2 * n + 2, 2 * n + 3);
    let node_in = |v: Node| match v {
        Node::Region(i) => 2 * i,
        Node::Source => s,
        Node::Sink => g,
    };
    let node_out = |v: Node| match v {
        Node::Region(i) => 2 * i + 1,
        Node::Source => s,
        Node::Sink => g,
    };
    (0..graph.edges.len())
        .map(|k| {
            let mut net = UnitNetwork::new(2 * n + 4);
            for i in 0..n {
                net.add(2 * i, 2 * i + 1, 1);
            }
            for (j, e) in graph.edges.iter().enumerate() {
                if j != k {
                    net.add(node_out(e.tail), node_in(e.head), 1);
                }
            }
            // lower bound 1 on the return arc g -> s and on edge k
            let e = graph.edges[k];
            net.add(ss, s, 1);
            net.add(g, tt, 1);
            net.add(ss, node_in(e.head), 1);
            net.add(node_out(e.tail), tt, 1);
            net.max_flow(ss, tt) == 2
        })
        .collect()
}

/// Residual network for small integral max-flow problems.
struct UnitNetwork {
    head: Vec<usize>,
    cap: Vec<i32>,
    adj: Vec<Vec<usize>>,
}

impl UnitNetwork {
    fn new(nodes: usize) -> Self {
        Self {
            head: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: i32) {
        self.adj[from].push(self.head.len());
        self.head.push(to);
        self.cap.push(cap);
        self.adj[to].push(self.head.len());
        self.head.push(from);
        self.cap.push(0);
    }

    /// Edmonds-Karp.
    fn max_flow(&mut self, src: usize, dst: usize) -> i32 {
        let mut total = 0;
        loop {
            let mut via = vec![usize::MAX; self.adj.len()];
            let mut queue = std::collections::VecDeque::from([src]);
            let mut found = false;
            while let Some(u) = queue.pop_front() {
                if u == dst {
                    found = true;
                    break;
                }
                for &a in &self.adj[u] {
                    let v = self.head[a];
                    if self.cap[a] > 0 && v != src && via[v] == usize::MAX {
                        via[v] = a;
                        queue.push_back(v);
                    }
                }
            }
            if !found {
                return total;
            }
            let mut v = dst;
            let mut push = i32::MAX;
            while v != src {
                push = push.min(self.cap[via[v]]);
                v = self.head[via[v] ^ 1];
            }
            let mut v = dst;
            while v != src {
                self.cap[via[v]] -= push;
                self.cap[via[v] ^ 1] += push;
                v = self.head[via[v] ^ 1];
            }
            total += push;
        }
    }
}

pub(crate) fn build_relaxation(problem: &GcsProblem) -> RelaxationProgram {
    let n = problem.layout().len();
    let mut p = ConicProgram::new();
    let mut flow_vars = Vec::with_capacity(problem.edges.len());
    let mut tail_vars = Vec::with_capacity(problem.edges.len());
    let mut head_vars = Vec::with_capacity(problem.edges.len());
    let live = usable_edges(&problem.graph);
    let units = problem.units();

    for (ge, &live) in problem.edges.iter().zip(&live) {
        if !live {
            flow_vars.push(None);
            tail_vars.push(None);
            head_vars.push(None);
            continue;
        }
        let y = p.add_variable(Some(&format!("y[{:?}->{:?}]", ge.edge.tail, ge.edge.head)));
        // y <= 1 follows from unit flow and the capacity rows
        p.add_nonnegative(AffineExpr::var(y));

        let copy = |p: &mut ConicProgram, node: Node| match node {
            Node::Region(i) => {
                let vars = p.add_variables(n);
                emit_vertex(
                    p,
                    &problem.vertices[i],
                    Block {
                        vars: &vars,
                        scale: Some(y),
                        units: &units,
                    },
                    Tightening::NONE,
                );
                Some(vars)
            }
            _ => None,
        };
        let zt = copy(&mut p, ge.edge.tail);
        let zh = copy(&mut p, ge.edge.head);
        emit_coupling(&mut p, &ge.coupling, zt.as_deref(), zh.as_deref(), Some(y), &units);
        emit_cost(
            &mut p,
            &ge.cost,
            zt.as_deref().map(|vars| Block {
                vars,
                scale: Some(y),
                units: &units,
            }),
        );
        flow_vars.push(Some(y));
        tail_vars.push(zt);
        head_vars.push(zh);
    }

    let adj = problem.graph.adjacency();
    let sum_flows = |edges: &[usize], sign: f64, e: &mut AffineExpr| {
        for y in edges.iter().filter_map(|&k| flow_vars[k]) {
            e.push(y, sign);
        }
    };
    let mut out_s = AffineExpr::constant(-1.0);
    sum_flows(adj.outgoing(Node::Source), 1.0, &mut out_s);
    p.add_equality(out_s);
    let mut in_g = AffineExpr::constant(-1.0);
    sum_flows(adj.incoming(Node::Sink), 1.0, &mut in_g);
    p.add_equality(in_g);

    for v in 0..problem.vertices.len() {
        let node = Node::Region(v);
        let (inc, out) = (adj.incoming(node), adj.outgoing(node));
        let mut cons = AffineExpr::new();
        sum_flows(inc, 1.0, &mut cons);
        sum_flows(out, -1.0, &mut cons);
        if cons.terms.is_empty() {
            continue;
        }
        p.add_equality(cons);
        let mut cap = AffineExpr::constant(1.0);
        sum_flows(out, -1.0, &mut cap);
        p.add_nonnegative(cap);
        // the vertex point seen through incoming and outgoing edges agrees
        for i in 0..n {
            let mut e = AffineExpr::new();
            for z in inc.iter().filter_map(|&k| head_vars[k].as_ref()) {
                e.push(z[i], 1.0);
            }
            for z in out.iter().filter_map(|&k| tail_vars[k].as_ref()) {
                e.push(z[i], -1.0);
            }
            if !e.terms.is_empty() {
                p.add_equality(e);
            }
        }
    }

    RelaxationProgram {
        program: p,
        flow_vars,
        tail_vars,
        head_vars,
    }
}

/// Solves the perspective relaxation of the shortest-path problem.
pub fn solve_relaxation(problem: &GcsProblem) -> Result<RelaxationResult> {
    let rp = build_relaxation(problem);
    log::debug!(
        "relaxation: {} variables, {} equalities, {} nonnegatives, {} cones, {} rotated",
        rp.program.num_variables(),
        rp.program.equalities().len(),
        rp.program.nonnegatives().len(),
        rp.program.second_order_cones().len(),
        rp.program.rotated_cones().len()
    );
    let sol = solve_emitted(&rp.program);
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(Error::infeasible(Stage::Relaxation, "relaxed program is infeasible"));
        }
        other => {
            return Err(Error::Numerical(format!(
                "relaxation solve ended with status {other:?} after {} iterations",
                sol.iterations
            )));
        }
    }
    let units = problem.units();
    let pick = |vs: &Option<Vec<VariableRef>>| vs.as_ref().map(|v| units.to_physical(v.iter().map(|&r| sol.value(r))));
    Ok(RelaxationResult {
        flows: rp
            .flow_vars
            .iter()
            .map(|y| y.map_or(0.0, |y| sol.value(y).clamp(0.0, 1.0)))
            .collect(),
        // weak duality, up to the dual residual
        lower_bound: sol.objective.min(sol.dual_objective) * units.cost,
        tail_copies: rp.tail_vars.iter().map(pick).collect(),
        head_copies: rp.head_vars.iter().map(pick).collect(),
        num_variables: rp.program.num_variables(),
        iterations: sol.iterations,
        solve_time_s: sol.solve_time_s,
    })
}
