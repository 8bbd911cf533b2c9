//! URLLC coverage disks at the flight altitude and their directed
//! intersection graph.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::channel::{snr_at_radius, BaseStation, ChannelParams};
use crate::error::{Error, Result};

/// Radial scan step for the coverage boundary search (m).
const SCAN_STEP_M: f64 = 1.0;
/// Bisection tolerance on the coverage radius (m); radii below it are dropped.
pub const RADIUS_TOL_M: f64 = 1e-3;
const SCAN_LIMIT_M: f64 = 1e7;
const MONOTONE_REL_TOL: f64 = 1e-9;

/// Planar flight box at a fixed altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Airspace {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub altitude_m: f64,
}

impl Airspace {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(Error::InvalidInput("airspace box is empty".into()));
        }
        if !(self.altitude_m > 0.0) {
            return Err(Error::InvalidInput("altitude must be positive".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.x_min, self.y_min],
            [self.x_max, self.y_min],
            [self.x_max, self.y_max],
            [self.x_min, self.y_max],
        ]
    }
}

/// Closed disk of URLLC-feasible positions for one BS (unclipped by the box).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleDisk {
    pub bs_id: u32,
    pub center: [f64; 2],
    pub radius_m: f64,
    /// False when the radial SNR profile was not monotone and the radius fell
    /// back to the first crossing.
    pub monotone: bool,
}

impl FeasibleDisk {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        planar_distance(self.center, p) <= self.radius_m
    }

    /// True when the disk covers the whole box, so box membership implies
    /// disk membership.
    pub fn covers(&self, airspace: &Airspace) -> bool {
        airspace.corners().iter().all(|&c| self.contains(c))
    }
}

pub fn planar_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageRadius {
    pub radius_m: f64,
    pub monotone: bool,
}

/// Largest horizontal radius around the BS ground point whose SNR at the
/// flight altitude meets `gamma_min`, or `None` when there is no disk of
/// positive radius.
pub fn coverage_radius(
    bs: &BaseStation,
    airspace: &Airspace,
    params: &ChannelParams,
    gamma_min: f64,
) -> Option<CoverageRadius> {
    let snr = |r: f64| snr_at_radius(r, airspace.altitude_m, bs.z_m, params);
    let mut prev = snr(0.0);
    if !(prev >= gamma_min) {
        return None;
    }
    let mut monotone = true;
    let mut r = 0.0;
    let crossing = loop {
        let next_r = r + SCAN_STEP_M;
        if next_r > SCAN_LIMIT_M {
            break None;
        }
        let s = snr(next_r);
        if s > prev * (1.0 + MONOTONE_REL_TOL) {
            monotone = false;
        }
        if s < gamma_min {
            break Some((r, next_r));
        }
        prev = s;
        r = next_r;
    };
    let Some((mut lo, mut hi)) = crossing else {
        return Some(CoverageRadius {
            radius_m: SCAN_LIMIT_M,
            monotone,
        });
    };
    while hi - lo > RADIUS_TOL_M {
        let mid = 0.5 * (lo + hi);
        if snr(mid) >= gamma_min {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !monotone {
        log::warn!("BS {}: SNR not monotone in radius; using first crossing", bs.id);
    }
    (lo >= RADIUS_TOL_M).then_some(CoverageRadius {
        radius_m: lo,
        monotone,
    })
}

/// One disk per BS whose coverage radius is positive.
pub fn build_disks(
    stations: &[BaseStation],
    airspace: &Airspace,
    params: &ChannelParams,
    gamma_min: f64,
) -> Vec<FeasibleDisk> {
    stations
        .iter()
        .filter_map(|bs| {
            coverage_radius(bs, airspace, params, gamma_min).map(|c| FeasibleDisk {
                bs_id: bs.id,
                center: bs.ground(),
                radius_m: c.radius_m,
                monotone: c.monotone,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Source,
    /// Index into [`IntersectionGraph::disks`].
    Region(usize),
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub tail: Node,
    pub head: Node,
}

impl Edge {
    pub fn is_internal(&self) -> bool {
        matches!((self.tail, self.head), (Node::Region(_), Node::Region(_)))
    }
}

/// Directed overlap graph of the coverage disks plus source and sink.
#[derive(Debug, Clone)]
pub struct IntersectionGraph {
    pub disks: Vec<FeasibleDisk>,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub edges: Vec<Edge>,
}

impl IntersectionGraph {
    pub fn num_regions(&self) -> usize {
        self.disks.len()
    }

    pub fn out_edges(&self, node: Node) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.tail == node)
    }

    pub fn in_edges(&self, node: Node) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.head == node)
    }

    pub fn find_edge(&self, tail: Node, head: Node) -> Option<usize> {
        self.edges.iter().position(|e| e.tail == tail && e.head == head)
    }

    /// Adjacency lists of edge indices keyed by tail node.
    pub fn adjacency(&self) -> Adjacency {
        let n = self.num_regions();
        let mut out = vec![Vec::new(); n + 2];
        let mut inc = vec![Vec::new(); n + 2];
        for (i, e) in self.edges.iter().enumerate() {
            out[node_slot(e.tail, n)].push(i);
            inc[node_slot(e.head, n)].push(i);
        }
        Adjacency { n, out, inc }
    }
}

fn node_slot(node: Node, n: usize) -> usize {
    match node {
        Node::Region(i) => i,
        Node::Source => n,
        Node::Sink => n + 1,
    }
}

/// Edge-index adjacency, indexable by [`Node`].
#[derive(Debug, Clone)]
pub struct Adjacency {
    n: usize,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn outgoing(&self, node: Node) -> &[usize] {
        &self.out[node_slot(node, self.n)]
    }

    pub fn incoming(&self, node: Node) -> &[usize] {
        &self.inc[node_slot(node, self.n)]
    }
}

/// Overlap graph with the closed-set convention: tangent disks are adjacent.
pub fn build_graph(disks: &[FeasibleDisk], start: [f64; 2], goal: [f64; 2]) -> IntersectionGraph {
    let mut edges = Vec::new();
    for (i, d) in disks.iter().enumerate() {
        if d.contains(start) {
            edges.push(Edge {
                tail: Node::Source,
                head: Node::Region(i),
            });
        }
    }
    for (i, a) in disks.iter().enumerate() {
        for (j, b) in disks.iter().enumerate() {
            if i != j && planar_distance(a.center, b.center) <= a.radius_m + b.radius_m {
                edges.push(Edge {
                    tail: Node::Region(i),
                    head: Node::Region(j),
                });
            }
        }
    }
    for (i, d) in disks.iter().enumerate() {
        if d.contains(goal) {
            edges.push(Edge {
                tail: Node::Region(i),
                head: Node::Sink,
            });
        }
    }
    IntersectionGraph {
        disks: disks.to_vec(),
        start,
        goal,
        edges,
    }
}

/// Whether a directed source-to-sink path exists (breadth-first search).
pub fn reachable(graph: &IntersectionGraph) -> bool {
    let adj = graph.adjacency();
    let n = graph.num_regions();
    let mut seen = vec![false; n + 2];
    let mut queue = VecDeque::from([Node::Source]);
    seen[node_slot(Node::Source, n)] = true;
    while let Some(u) = queue.pop_front() {
        if u == Node::Sink {
            return true;
        }
        for &e in adj.outgoing(u) {
            let v = graph.edges[e].head;
            let slot = node_slot(v, n);
            if !seen[slot] {
                seen[slot] = true;
                queue.push_back(v);
            }
        }
    }
    false
}
