//! Coordinate-guided greedy path search.
//!
//! Given an embedding, the search expands a per-hop candidate frontier
//! toward the target. A frontier node whose estimated distance to the
//! target is `e` predicts `e - 1` for a neighbor on the shortest path; a
//! neighbor is admitted when its own estimate is within a one-sided slack
//! of that prediction. Each hop keeps the `c_max` most promising
//! candidates, and the search succeeds the moment an explored neighbor is
//! adjacent to the target. Refreshing the prediction from the frontier
//! node (rather than counting down from the source estimate) keeps the
//! admission window open when coordinate estimates run systematically low
//! at long range. Failures surface as `None`; they are never silently
//! patched with BFS.

use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::query::{estimate_distance, QueryConfig};

/// Search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConfig {
    /// One-sided admission slack: a neighbor of frontier node `u` qualifies
    /// when its estimate to the target is at most
    /// `(estimate(u, target) - 1) * (1 + delta)`.
    pub delta: f64,
    /// Candidates kept per hop.
    pub c_max: usize,
    /// Hop budget; `None` means `2 * ceil(initial estimate) + 2`.
    pub max_hops: Option<usize>,
    /// Retry once with doubled slack and budget before giving up.
    pub relax_retry: bool,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            delta: 0.3,
            c_max: 30,
            max_hops: None,
            relax_retry: true,
        }
    }
}

impl PathConfig {
    fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(Error::Argument(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        if self.c_max == 0 {
            return Err(Error::Argument("c_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// A found path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathResult {
    /// Edge-consecutive node sequence from source to target.
    pub path: Vec<NodeId>,
    /// Whether the length equals the BFS distance; filled only when the
    /// caller ran an oracle check.
    pub exact: Option<bool>,
    /// Frontier hops expanded before the path closed (0 for 1- and 2-hop
    /// lookups).
    pub hops_explored: usize,
}

/// Finds a path from `a` to `b`, or `None` when the greedy search dead-ends
/// even after the relax retry.
pub fn find_path(
    graph: &Graph,
    embedding: &Embedding,
    a: NodeId,
    b: NodeId,
    config: &PathConfig,
) -> Result<Option<PathResult>> {
    config.validate()?;
    if a == b {
        return Err(Error::Argument("path endpoints must differ".into()));
    }
    for u in [a, b] {
        if !embedding.is_embedded(u) {
            return Err(Error::Query(format!(
                "node {u} is not covered by the embedding"
            )));
        }
    }

    // 1- and 2-hop pairs are adjacency-list lookups.
    if graph.are_adjacent(a, b) {
        return Ok(Some(PathResult {
            path: vec![a, b],
            exact: None,
            hops_explored: 0,
        }));
    }
    if let Some(w) = graph.common_neighbor(a, b) {
        return Ok(Some(PathResult {
            path: vec![a, w, b],
            exact: None,
            hops_explored: 0,
        }));
    }

    let estimate = embedding
        .space()
        .distance_unchecked(embedding.point(a).unwrap(), embedding.point(b).unwrap());
    let max_hops = config.max_hops.unwrap_or(2 * estimate.ceil() as usize + 2);

    let first = search(
        graph,
        embedding,
        a,
        b,
        estimate,
        config.delta,
        config.c_max,
        max_hops,
    )?;
    match first {
        Outcome::Found(r) => Ok(Some(r)),
        Outcome::DeadEnd(explored) if config.relax_retry => {
            let retry = search(
                graph,
                embedding,
                a,
                b,
                estimate,
                config.delta * 2.0,
                config.c_max * 2,
                max_hops,
            )?;
            Ok(match retry {
                Outcome::Found(mut r) => {
                    r.hops_explored += explored;
                    Some(r)
                }
                Outcome::DeadEnd(_) => None,
            })
        }
        Outcome::DeadEnd(_) => Ok(None),
    }
}

enum Outcome {
    Found(PathResult),
    DeadEnd(usize),
}

#[allow(clippy::too_many_arguments)]
fn search(
    graph: &Graph,
    embedding: &Embedding,
    a: NodeId,
    b: NodeId,
    estimate: f64,
    delta: f64,
    c_max: usize,
    max_hops: usize,
) -> Result<Outcome> {
    let query = QueryConfig::default();
    // Arena of admitted candidates for parent-link reconstruction.
    let mut arena: Vec<(NodeId, usize)> = vec![(a, usize::MAX)];
    // Frontier entries: (arena index, estimate to the target).
    let mut frontier: Vec<(usize, f64)> = vec![(0, estimate)];
    let mut visited = vec![false; graph.node_count()];
    visited[a as usize] = true;
    visited[b as usize] = true; // the target is reached via adjacency, not expansion

    for hop in 1..=max_hops {
        // (estimate to target, node, arena index) for this hop.
        let mut admitted: Vec<(f64, NodeId, usize)> = Vec::new();
        for &(fi, est_u) in &frontier {
            let (u, _) = arena[fi];
            // Any neighbor worth expanding sits at distance >= 2 from the
            // target (distance-1 neighbors terminate the search instead),
            // so the expected remaining distance is floored at 2.
            let expected_remaining = (est_u - 1.0).max(2.0) * (1.0 + delta);
            for &v in graph.neighbors(u) {
                if visited[v as usize] || !embedding.is_embedded(v) {
                    continue;
                }
                if admitted.iter().any(|&(_, w, _)| w == v) {
                    continue;
                }
                // Termination fires as soon as any explored neighbor
                // touches the target; the admission slack only governs
                // what gets expanded further.
                if graph.are_adjacent(v, b) {
                    arena.push((v, fi));
                    let mut path = reconstruct(&arena, arena.len() - 1);
                    path.push(b);
                    return Ok(Outcome::Found(PathResult {
                        path,
                        exact: None,
                        hops_explored: hop,
                    }));
                }
                let est = estimate_distance(graph, embedding, v, b, query)?;
                if est <= expected_remaining {
                    arena.push((v, fi));
                    admitted.push((est, v, arena.len() - 1));
                }
            }
        }
        if admitted.is_empty() {
            return Ok(Outcome::DeadEnd(hop));
        }
        admitted.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        admitted.truncate(c_max);
        debug_assert!(admitted.len() <= c_max);
        frontier = admitted
            .iter()
            .map(|&(est, v, ai)| {
                visited[v as usize] = true;
                (ai, est)
            })
            .collect();
    }
    Ok(Outcome::DeadEnd(max_hops))
}

fn reconstruct(arena: &[(NodeId, usize)], mut idx: usize) -> Vec<NodeId> {
    let mut path = Vec::new();
    while idx != usize::MAX {
        path.push(arena[idx].0);
        idx = arena[idx].1;
    }
    path.reverse();
    path
}
