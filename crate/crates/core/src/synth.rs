//! Deterministic synthetic graph generators for desk-scale experiments:
//! path, star, grid, Watts–Strogatz small-world and Barabási–Albert
//! scale-free graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Undirected edges over nodes `0..n`, in generation order.
pub type EdgeList = Vec<(NodeId, NodeId)>;

pub fn path(n: usize) -> Result<EdgeList> {
    if n == 0 {
        return Err(Error::Argument("path graph needs at least 1 node".into()));
    }
    Ok((1..n as NodeId).map(|i| (i - 1, i)).collect())
}

/// Star with node 0 at the center.
pub fn star(n: usize) -> Result<EdgeList> {
    if n == 0 {
        return Err(Error::Argument("star graph needs at least 1 node".into()));
    }
    Ok((1..n as NodeId).map(|i| (0, i)).collect())
}

/// `rows x cols` grid with 4-neighborhoods, node id `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Result<EdgeList> {
    if rows == 0 || cols == 0 {
        return Err(Error::Argument("grid needs positive rows and cols".into()));
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let id = (r * cols + c) as NodeId;
            if c + 1 < cols {
                edges.push((id, id + 1));
            }
            if r + 1 < rows {
                edges.push((id, id + cols as NodeId));
            }
        }
    }
    Ok(edges)
}

/// Watts–Strogatz small-world graph: a ring lattice where each node links
/// to `k / 2` neighbors on each side, then each lattice edge is rewired to
/// a random target with probability `p`.
pub fn smallworld(n: usize, k: usize, p: f64, seed: u64) -> Result<EdgeList> {
    if k == 0 || !k.is_multiple_of(2) {
        return Err(Error::Argument(format!(
            "smallworld k must be positive and even, got {k}"
        )));
    }
    if n <= k {
        return Err(Error::Argument(format!(
            "smallworld needs n > k, got n={n} k={k}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Argument(format!(
            "rewiring probability must be in [0, 1], got {p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj: Vec<std::collections::BTreeSet<NodeId>> = vec![Default::default(); n];
    let mut edges: EdgeList = Vec::with_capacity(n * k / 2);

    let connect = |adj: &mut Vec<std::collections::BTreeSet<NodeId>>, u: NodeId, v: NodeId| {
        adj[u as usize].insert(v);
        adj[v as usize].insert(u);
    };

    for j in 1..=(k / 2) as NodeId {
        for u in 0..n as NodeId {
            let v = (u + j) % n as NodeId;
            connect(&mut adj, u, v);
        }
    }
    for j in 1..=(k / 2) as NodeId {
        for u in 0..n as NodeId {
            let v = (u + j) % n as NodeId;
            if rng.gen::<f64>() < p {
                // Pick a fresh target; give up on this edge after a few
                // collisions so dense corners cannot loop forever.
                let mut rewired = false;
                for _ in 0..32 {
                    let w = rng.gen_range(0..n as NodeId);
                    if w != u && !adj[u as usize].contains(&w) {
                        adj[u as usize].remove(&v);
                        adj[v as usize].remove(&u);
                        connect(&mut adj, u, w);
                        edges.push((u, w));
                        rewired = true;
                        break;
                    }
                }
                if !rewired {
                    edges.push((u, v));
                }
            } else {
                edges.push((u, v));
            }
        }
    }
    Ok(edges)
}

/// Barabási–Albert scale-free graph: an initial `(m + 1)`-clique, then each
/// new node attaches to `m` distinct existing nodes chosen preferentially
/// by degree.
pub fn scalefree(n: usize, m: usize, seed: u64) -> Result<EdgeList> {
    if m == 0 {
        return Err(Error::Argument("scalefree m must be at least 1".into()));
    }
    if n <= m {
        return Err(Error::Argument(format!(
            "scalefree needs n > m, got n={n} m={m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: EdgeList = Vec::new();
    // One entry per edge endpoint; sampling from it is sampling by degree.
    let mut endpoints: Vec<NodeId> = Vec::new();

    for u in 0..=(m as NodeId) {
        for v in 0..u {
            edges.push((v, u));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    for u in (m + 1)..n {
        let u = u as NodeId;
        let mut targets = std::collections::BTreeSet::new();
        while targets.len() < m {
            let t = endpoints[rng.gen_range(0..endpoints.len())];
            targets.insert(t);
        }
        for &t in &targets {
            edges.push((t, u));
            endpoints.push(u);
            endpoints.push(t);
        }
    }
    Ok(edges)
}

/// Builds a [`Graph`] from a generated edge list.
pub fn to_graph(n: usize, edges: &EdgeList) -> Graph {
    Graph::from_edges(n, edges.iter().copied())
}

/// Renders an edge list in the text format consumed by
/// [`crate::graph::load_edge_list`].
pub fn render_edge_list(edges: &EdgeList) -> String {
    let mut out = String::new();
    for (u, v) in edges {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}
