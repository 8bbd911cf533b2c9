use rayon::prelude::*;

use crate::error::{Error, Result, Stage};
use crate::regions::{IntersectionGraph, Node};

use super::{refine, GcsProblem, PathSolution};

/// All simple source-to-sink paths, in depth-first order over the graph's
/// edge order. Fails with [`Error::PathGuard`] past `max_paths`.
pub fn enumerate_simple_paths(graph: &IntersectionGraph, max_paths: usize) -> Result<Vec<Vec<Node>>> {
    fn dfs(
        graph: &IntersectionGraph,
        adj: &crate::regions::Adjacency,
        path: &mut Vec<Node>,
        out: &mut Vec<Vec<Node>>,
        max_paths: usize,
    ) -> Result<()> {
        let cur = *path.last().expect("nonempty");
        if cur == Node::Sink {
            if out.len() == max_paths {
                return Err(Error::PathGuard(max_paths));
            }
            out.push(path.clone());
            return Ok(());
        }
        for &k in adj.outgoing(cur) {
            let h = graph.edges[k].head;
            if path.contains(&h) {
                continue;
            }
            path.push(h);
            dfs(graph, adj, path, out, max_paths)?;
            path.pop();
        }
        Ok(())
    }
    let adj = graph.adjacency();
    let mut out = Vec::new();
    dfs(graph, &adj, &mut vec![Node::Source], &mut out, max_paths)?;
    Ok(out)
}

/// Refines every simple path and returns the cheapest; ties go to the
/// lexicographically smallest node sequence.
pub fn enumerate_oracle(problem: &GcsProblem, max_paths: usize) -> Result<PathSolution> {
    let paths = enumerate_simple_paths(&problem.graph, max_paths)?;
    let results: Vec<_> = paths.par_iter().map(|p| refine(p, problem)).collect();
    let mut best: Option<PathSolution> = None;
    for r in results {
        match r {
            Ok(s) => {
                if best
                    .as_ref()
                    .map_or(true, |b| s.cost.total < b.cost.total || (s.cost.total == b.cost.total && s.path < b.path))
                {
                    best = Some(s);
                }
            }
            Err(Error::Infeasible { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| Error::infeasible(Stage::Refinement, "no simple path admits a feasible trajectory"))
}
