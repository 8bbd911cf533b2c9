//! Graph-of-convex-sets program over the intersection graph.
//!
//! Every region vertex owns the control points of one [`SegmentPair`]
//! (`m + 1` planar shape points followed by `m + 1` timing values). Vertex
//! sets are convex: control points inside the coverage disk and the flight
//! box, timing derivatives bounded below, and speed cones
//! `||r'_k|| <= v_max h'_k`. Edges carry affine coupling (boundary
//! conditions at the source and sink, `C^eta` continuity between regions)
//! and costs that depend on the tail vertex only.
//!
//! The route search runs in three steps:
//!
//! 1. [`solve_relaxation`]: flows relaxed to `[0, 1]`, vertex sets and costs
//!    in perspective form on per-edge variable copies;
//! 2. [`round_paths`]: randomized depth-first walks weighted by the flows;
//! 3. [`refine`]: the convex program restricted to one candidate path.
//!
//! [`plan_route`] chains them; [`enumerate_oracle`] refines every simple
//! path and serves as a reference on small graphs.
//!
//! [`SegmentPair`]: crate::bezier::SegmentPair

mod assemble;
mod oracle;
mod refine;
mod relax;
mod rounding;

use serde::{Deserialize, Serialize};

use crate::bezier::{derivative_weights, MAX_DEGREE, MIN_TIMING_DERIVATIVE};
use crate::error::{Error, Result, Stage};
use crate::regions::{reachable, Airspace, Edge, FeasibleDisk, IntersectionGraph, Node};

pub use oracle::{enumerate_oracle, enumerate_simple_paths};
pub use refine::{refine, CostBreakdown, PathSolution};
pub use relax::{solve_relaxation, RelaxationResult};
pub use rounding::{round_paths, FLOW_SUPPORT_THRESHOLD};

/// Cost weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    /// Geometric effort, sum of squared first-derivative control points.
    pub alpha: f64,
    /// Flight time.
    pub beta: f64,
    /// Per-handover penalty.
    pub lambda_ho: f64,
    /// Second-derivative smoothing.
    pub gamma_sm: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 1.0,
            lambda_ho: 0.1,
            gamma_sm: 0.005,
        }
    }
}

impl Weights {
    pub fn validate(&self) -> Result<()> {
        for (n, w) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("lambda_ho", self.lambda_ho),
            ("gamma_sm", self.gamma_sm),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(format!("weight {n} must be finite and nonnegative, got {w}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcsSettings {
    pub degree: usize,
    pub continuity: usize,
    pub v_max: f64,
    pub weights: Weights,
    pub min_timing_derivative: f64,
    pub airspace: Airspace,
}

impl GcsSettings {
    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 || self.degree > MAX_DEGREE {
            return Err(Error::InvalidInput(format!(
                "Bézier degree must lie in 1..={MAX_DEGREE}, got {}",
                self.degree
            )));
        }
        if self.continuity < 1 || self.continuity > self.degree {
            return Err(Error::InvalidInput(format!(
                "continuity order must lie in 1..=degree, got {}",
                self.continuity
            )));
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(Error::InvalidInput("v_max must be positive".into()));
        }
        if !(self.min_timing_derivative > 0.0) {
            return Err(Error::InvalidInput("timing derivative margin must be positive".into()));
        }
        self.weights.validate()?;
        self.airspace.validate()
    }
}

/// Index arithmetic for one vertex's local variables:
/// `[r_0x, r_0y, .., r_mx, r_my, h_0, .., h_m]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexLayout {
    pub degree: usize,
}

impl VertexLayout {
    pub fn len(&self) -> usize {
        3 * (self.degree + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of coordinate `dim` (0 = x, 1 = y) of shape point `k`.
    pub fn r(&self, k: usize, dim: usize) -> usize {
        2 * k + dim
    }

    pub fn h(&self, k: usize) -> usize {
        2 * (self.degree + 1) + k
    }

    /// `p`-th derivative control point `k` of the shape curve, coordinate `dim`.
    pub fn r_derivative(&self, p: usize, k: usize, dim: usize) -> LocalExpr {
        let w = derivative_weights(self.degree, p).expect("order within degree");
        LocalExpr {
            terms: w.iter().enumerate().map(|(j, &c)| (self.r(k + j, dim), c)).collect(),
            constant: 0.0,
        }
    }

    pub fn h_derivative(&self, p: usize, k: usize) -> LocalExpr {
        let w = derivative_weights(self.degree, p).expect("order within degree");
        LocalExpr {
            terms: w.iter().enumerate().map(|(j, &c)| (self.h(k + j), c)).collect(),
            constant: 0.0,
        }
    }
}

/// Affine expression over one vertex's local variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LocalExpr {
    pub fn var(i: usize) -> Self {
        Self {
            terms: vec![(i, 1.0)],
            constant: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.1 *= s);
        self.constant *= s;
        self
    }

    pub fn minus(mut self, other: &LocalExpr) -> Self {
        self.terms.extend(other.terms.iter().map(|&(i, c)| (i, -c)));
        self.constant -= other.constant;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }
}

/// `rows[0] >= ||rows[1..]||`
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCone {
    pub rows: Vec<LocalExpr>,
}

/// Conservative shrinkage of the vertex sets, used by the final refinement so
/// that solver round-off cannot push a returned trajectory outside the
/// original sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tightening {
    pub disk_m: f64,
    pub box_m: f64,
    pub timing: f64,
    pub speed_rel: f64,
}

impl Tightening {
    pub const NONE: Tightening = Tightening {
        disk_m: 0.0,
        box_m: 0.0,
        timing: 0.0,
        speed_rel: 0.0,
    };

    pub const REFINEMENT: Tightening = Tightening {
        disk_m: 1e-4,
        box_m: 1e-4,
        timing: 1e-6,
        speed_rel: 1e-8,
    };
}

/// Convex constraint set of one vertex, written over local variables.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexConstraints {
    /// `rho >= ||r_k - c||`, one per shape control point.
    pub disk_cones: Vec<LocalCone>,
    /// Box inequalities `expr >= 0`, four per shape control point.
    pub box_rows: Vec<LocalExpr>,
    /// `h'_k - eps_h >= 0`
    pub timing_rows: Vec<LocalExpr>,
    /// `v_max h'_k >= ||r'_k||`
    pub speed_cones: Vec<LocalCone>,
}

impl VertexConstraints {
    pub fn num_constraints(&self) -> usize {
        self.disk_cones.len() + self.box_rows.len() + self.timing_rows.len() + self.speed_cones.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcsVertex {
    pub region: usize,
    pub bs_id: u32,
    pub disk: FeasibleDisk,
    pub layout: VertexLayout,
    v_max: f64,
    min_timing_derivative: f64,
    airspace: Airspace,
}

impl GcsVertex {
    /// True when the disk contains the whole flight box, which makes the
    /// disk cones implied by the box rows.
    pub fn disk_is_redundant(&self) -> bool {
        self.disk.covers(&self.airspace)
    }

    pub fn constraints(&self, tight: Tightening) -> VertexConstraints {
        let lay = self.layout;
        let m = lay.degree;
        let rho = (self.disk.radius_m - tight.disk_m).max(0.0);
        let c = self.disk.center;
        let disk_cones = (0..=m)
            .map(|k| LocalCone {
                rows: vec![
                    LocalExpr::constant(rho),
                    LocalExpr::var(lay.r(k, 0)).plus(-c[0]),
                    LocalExpr::var(lay.r(k, 1)).plus(-c[1]),
                ],
            })
            .collect();
        let a = &self.airspace;
        let mut box_rows = Vec::with_capacity(4 * (m + 1));
        for k in 0..=m {
            box_rows.push(LocalExpr::var(lay.r(k, 0)).plus(-(a.x_min + tight.box_m)));
            box_rows.push(LocalExpr::var(lay.r(k, 0)).scaled(-1.0).plus(a.x_max - tight.box_m));
            box_rows.push(LocalExpr::var(lay.r(k, 1)).plus(-(a.y_min + tight.box_m)));
            box_rows.push(LocalExpr::var(lay.r(k, 1)).scaled(-1.0).plus(a.y_max - tight.box_m));
        }
        let timing_rows = (0..m)
            .map(|k| lay.h_derivative(1, k).plus(-(self.min_timing_derivative + tight.timing)))
            .collect();
        let v = self.v_max * (1.0 - tight.speed_rel);
        let speed_cones = (0..m)
            .map(|k| LocalCone {
                rows: vec![
                    lay.h_derivative(1, k).scaled(v),
                    lay.r_derivative(1, k, 0),
                    lay.r_derivative(1, k, 1),
                ],
            })
            .collect();
        VertexConstraints {
            disk_cones,
            box_rows,
            timing_rows,
            speed_cones,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Tail,
    Head,
}

/// `sum coef * x_side[idx] + constant = 0`
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CouplingExpr {
    pub terms: Vec<(Side, usize, f64)>,
    pub constant: f64,
}

impl CouplingExpr {
    fn from_side(side: Side, e: &LocalExpr) -> Self {
        Self {
            terms: e.terms.iter().map(|&(i, c)| (side, i, c)).collect(),
            constant: e.constant,
        }
    }

    fn minus_side(mut self, side: Side, e: &LocalExpr) -> Self {
        self.terms.extend(e.terms.iter().map(|&(i, c)| (side, i, -c)));
        self.constant -= e.constant;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Geometric,
    Smoothing,
}

/// `weight * sum ||rows||^2`, rows over the tail vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTerm {
    pub kind: CostKind,
    pub weight: f64,
    pub rows: Vec<LocalExpr>,
}

impl QuadraticTerm {
    pub fn eval(&self, x_tail: &[f64]) -> f64 {
        self.weight * self.rows.iter().map(|r| r.eval(x_tail).powi(2)).sum::<f64>()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeCost {
    pub quadratic: Vec<QuadraticTerm>,
    /// Elapsed-time term over the tail vertex, `beta (h_m - h_0)`.
    pub linear: LocalExpr,
    /// Handover penalty.
    pub constant: f64,
}

impl EdgeCost {
    pub fn is_zero(&self) -> bool {
        self.quadratic.is_empty() && self.linear.terms.is_empty() && self.linear.constant == 0.0 && self.constant == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcsEdge {
    pub edge: Edge,
    pub coupling: Vec<CouplingExpr>,
    pub cost: EdgeCost,
}

/// Assembled graph-of-convex-sets problem.
#[derive(Debug, Clone)]
pub struct GcsProblem {
    pub graph: IntersectionGraph,
    pub vertices: Vec<GcsVertex>,
    pub edges: Vec<GcsEdge>,
    pub settings: GcsSettings,
}

impl GcsProblem {
    pub fn layout(&self) -> VertexLayout {
        VertexLayout {
            degree: self.settings.degree,
        }
    }

    /// Program units: positions in box extents, time in the time needed to
    /// cross the box at top speed, cost in the largest per-unit cost weight.
    pub(crate) fn units(&self) -> assemble::Units {
        let s = &self.settings;
        let a = s.airspace;
        let length = (a.x_max - a.x_min).max(a.y_max - a.y_min);
        let time = length / s.v_max;
        let w = s.weights;
        let cost = [
            w.alpha * length * length,
            w.beta * time,
            w.lambda_ho,
            w.gamma_sm * length * length,
            w.gamma_sm * time * time,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let lay = self.layout();
        let mut coord = vec![length; lay.len()];
        for k in 0..=lay.degree {
            coord[lay.h(k)] = time;
        }
        assemble::Units {
            coord,
            cost: if cost > 0.0 { cost } else { 1.0 },
        }
    }

    pub fn bs_id(&self, node: Node) -> Option<u32> {
        match node {
            Node::Region(i) => Some(self.vertices[i].bs_id),
            _ => None,
        }
    }
}

fn tail_cost(lay: VertexLayout, w: &Weights, handover: f64) -> EdgeCost {
    let m = lay.degree;
    let mut quadratic = Vec::new();
    if w.alpha > 0.0 {
        let rows = (0..m)
            .flat_map(|k| [lay.r_derivative(1, k, 0), lay.r_derivative(1, k, 1)])
            .collect();
        quadratic.push(QuadraticTerm {
            kind: CostKind::Geometric,
            weight: w.alpha,
            rows,
        });
    }
    if w.gamma_sm > 0.0 && m >= 2 {
        let mut rows: Vec<LocalExpr> = (0..m - 1)
            .flat_map(|k| [lay.r_derivative(2, k, 0), lay.r_derivative(2, k, 1)])
            .collect();
        rows.extend((0..m - 1).map(|k| lay.h_derivative(2, k)));
        quadratic.push(QuadraticTerm {
            kind: CostKind::Smoothing,
            weight: w.gamma_sm,
            rows,
        });
    }
    let linear = if w.beta > 0.0 {
        LocalExpr {
            terms: vec![(lay.h(m), w.beta), (lay.h(0), -w.beta)],
            constant: 0.0,
        }
    } else {
        LocalExpr::default()
    };
    EdgeCost {
        quadratic,
        linear,
        constant: handover,
    }
}

fn source_coupling(lay: VertexLayout, start: [f64; 2]) -> Vec<CouplingExpr> {
    let mut c = Vec::new();
    for d in 0..2 {
        c.push(CouplingExpr::from_side(Side::Head, &LocalExpr::var(lay.r(0, d)).plus(-start[d])));
    }
    c.push(CouplingExpr::from_side(Side::Head, &LocalExpr::var(lay.h(0))));
    for d in 0..2 {
        c.push(CouplingExpr::from_side(Side::Head, &lay.r_derivative(1, 0, d)));
    }
    c
}

fn sink_coupling(lay: VertexLayout, goal: [f64; 2]) -> Vec<CouplingExpr> {
    let m = lay.degree;
    let mut c = Vec::new();
    for d in 0..2 {
        c.push(CouplingExpr::from_side(Side::Tail, &LocalExpr::var(lay.r(m, d)).plus(-goal[d])));
    }
    for d in 0..2 {
        c.push(CouplingExpr::from_side(Side::Tail, &lay.r_derivative(1, m - 1, d)));
    }
    c
}

fn continuity_coupling(lay: VertexLayout, eta: usize) -> Vec<CouplingExpr> {
    let m = lay.degree;
    let mut c = Vec::new();
    for p in 0..=eta {
        for d in 0..2 {
            c.push(
                CouplingExpr::from_side(Side::Tail, &lay.r_derivative(p, m - p, d))
                    .minus_side(Side::Head, &lay.r_derivative(p, 0, d)),
            );
        }
        c.push(
            CouplingExpr::from_side(Side::Tail, &lay.h_derivative(p, m - p))
                .minus_side(Side::Head, &lay.h_derivative(p, 0)),
        );
    }
    c
}

/// Assembles vertex sets, edge coupling and edge costs.
pub fn build_gcs(graph: &IntersectionGraph, settings: &GcsSettings) -> Result<GcsProblem> {
    settings.validate()?;
    if !reachable(graph) {
        return Err(Error::infeasible(Stage::Graph, "no source-to-sink path in the intersection graph"));
    }
    let lay = VertexLayout {
        degree: settings.degree,
    };
    let vertices = graph
        .disks
        .iter()
        .enumerate()
        .map(|(i, d)| GcsVertex {
            region: i,
            bs_id: d.bs_id,
            disk: *d,
            layout: lay,
            v_max: settings.v_max,
            min_timing_derivative: settings.min_timing_derivative,
            airspace: settings.airspace,
        })
        .collect();
    let w = settings.weights;
    let edges = graph
        .edges
        .iter()
        .map(|&edge| {
            let (coupling, cost) = match (edge.tail, edge.head) {
                (Node::Source, _) => (source_coupling(lay, graph.start), EdgeCost::default()),
                (_, Node::Sink) => (sink_coupling(lay, graph.goal), tail_cost(lay, &w, 0.0)),
                _ => (continuity_coupling(lay, settings.continuity), tail_cost(lay, &w, w.lambda_ho)),
            };
            GcsEdge { edge, coupling, cost }
        })
        .collect();
    Ok(GcsProblem {
        graph: graph.clone(),
        vertices,
        edges,
        settings: *settings,
    })
}

impl Default for GcsSettings {
    fn default() -> Self {
        Self {
            degree: 6,
            continuity: 2,
            v_max: 20.0,
            weights: Weights::default(),
            min_timing_derivative: MIN_TIMING_DERIVATIVE,
            airspace: Airspace {
                x_min: 0.0,
                x_max: 5000.0,
                y_min: 0.0,
                y_max: 5000.0,
                altitude_m: 300.0,
            },
        }
    }
}

/// Options for [`plan_route`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteOptions {
    pub trials: usize,
    pub seed: u64,
    /// Maximum number of distinct rounded paths to refine.
    pub candidate_cap: usize,
    /// Simple-path budget for the enumeration fallback when rounding finds nothing.
    pub fallback_max_paths: usize,
}

impl Default for RouteOptions {
    fn default() -> Self {
        Self {
            trials: 32,
            seed: 0,
            candidate_cap: 16,
            fallback_max_paths: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RouteResult {
    pub solution: PathSolution,
    pub lower_bound: f64,
    pub gap: f64,
    pub relaxation: RelaxationResult,
    pub candidates: Vec<Vec<Node>>,
    pub rejected_candidates: usize,
}

/// `(cost - bound) / max(|bound|, 1e-9)`
pub fn relative_gap(cost: f64, bound: f64) -> f64 {
    (cost - bound) / bound.abs().max(1e-9)
}

/// Relaxation, randomized rounding, then refinement of every distinct
/// candidate; returns the cheapest refined path.
pub fn plan_route(problem: &GcsProblem, options: &RouteOptions) -> Result<RouteResult> {
    use rayon::prelude::*;

    let relaxation = solve_relaxation(problem)?;
    let mut candidates = round_paths(&problem.graph, &relaxation.flows, options.trials, options.seed);
    candidates.truncate(options.candidate_cap);
    if candidates.is_empty() {
        log::warn!("rounding produced no path; falling back to enumeration");
        candidates = enumerate_simple_paths(&problem.graph, options.fallback_max_paths).map_err(|_| {
            Error::infeasible(Stage::Rounding, "rounding found no path and the graph is too large to enumerate")
        })?;
        candidates.truncate(options.candidate_cap);
    }
    let refined: Vec<_> = candidates.par_iter().map(|p| refine(p, problem)).collect();
    let mut rejected = 0;
    let mut best: Option<PathSolution> = None;
    for r in refined {
        match r {
            Ok(sol) => {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        sol.cost.total < b.cost.total || (sol.cost.total == b.cost.total && sol.path < b.path)
                    }
                };
                if better {
                    best = Some(sol);
                }
            }
            Err(Error::Infeasible { .. }) => rejected += 1,
            Err(e) => {
                log::warn!("candidate refinement failed: {e}");
                rejected += 1;
            }
        }
    }
    let solution =
        best.ok_or_else(|| Error::infeasible(Stage::Refinement, "every rounded candidate failed refinement"))?;
    let lower_bound = relaxation.lower_bound;
    if solution.cost.total < lower_bound - 1e-6 * lower_bound.abs().max(1.0) {
        log::warn!(
            "refined cost {} below relaxation bound {}",
            solution.cost.total,
            lower_bound
        );
    }
    let gap = relative_gap(solution.cost.total, lower_bound);
    Ok(RouteResult {
        solution,
        lower_bound,
        gap,
        relaxation,
        candidates,
        rejected_candidates: rejected,
    })
}
