use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::regions::{Adjacency, IntersectionGraph, Node};

/// Edges with relaxed flow at or below this value are not followed.
pub const FLOW_SUPPORT_THRESHOLD: f64 = 1e-4;

const MAX_WALK_STEPS: usize = 100_000;

fn walk(graph: &IntersectionGraph, adj: &Adjacency, flows: &[f64], rng: &mut ChaCha8Rng) -> Option<Vec<Node>> {
    let mut path = vec![Node::Source];
    let mut tried: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..MAX_WALK_STEPS {
        let cur = *path.last()?;
        if cur == Node::Sink {
            return Some(path);
        }
        let options: Vec<usize> = adj
            .outgoing(cur)
            .iter()
            .copied()
            .filter(|&k| {
                flows[k] > FLOW_SUPPORT_THRESHOLD
                    && !path.contains(&graph.edges[k].head)
                    && !tried.last().is_some_and(|t| t.contains(&k))
            })
            .collect();
        if options.is_empty() {
            // dead end: step back, the edge into `cur` stays marked as tried
            if path.len() == 1 {
                return None;
            }
            path.pop();
            tried.pop();
            continue;
        }
        let dist = WeightedIndex::new(options.iter().map(|&k| flows[k])).ok()?;
        let k = options[dist.sample(rng)];
        tried.last_mut()?.push(k);
        path.push(graph.edges[k].head);
        tried.push(Vec::new());
    }
    None
}

/// Randomized depth-first rounding. Each trial walks from the source,
/// choosing outgoing edges with probability proportional to their flow and
/// backtracking out of dead ends; vertices are never revisited. Trial `i`
/// draws from stream `i` of a generator seeded with `seed`. Returns the
/// distinct paths in order of first appearance.
pub fn round_paths(graph: &IntersectionGraph, flows: &[f64], trials: usize, seed: u64) -> Vec<Vec<Node>> {
    assert_eq!(flows.len(), graph.edges.len(), "one flow per edge");
    let adj = graph.adjacency();
    let mut out: Vec<Vec<Node>> = Vec::new();
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        if let Some(p) = walk(graph, &adj, flows, &mut rng) {
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}
