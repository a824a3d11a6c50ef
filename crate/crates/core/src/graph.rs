//! Immutable graph storage, edge-list ingestion, the exact BFS oracle and
//! deterministic node sampling.
//!
//! Graphs are undirected, unweighted and static. Nodes get dense internal
//! ids `0..N` in first-appearance order of their external labels; adjacency
//! is CSR with per-node neighbor lists sorted ascending, which makes BFS
//! expansion order (and therefore oracle paths) reproducible.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense internal node id.
pub type NodeId = u32;

/// Hop-count marker for nodes a BFS cannot reach.
pub const UNREACHABLE: u32 = u32::MAX;

const BINARY_MAGIC: &[u8; 4] = b"RGL1";

/// Immutable undirected graph in CSR form.
#[derive(Debug, Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    labels: Vec<String>,
    label_ids: HashMap<String, NodeId>,
}

/// Counters reported by [`load_edge_list`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub self_loops_dropped: usize,
    pub duplicate_edges_dropped: usize,
}

/// Exact hop distances from one source to every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceVector {
    pub source: NodeId,
    pub dist: Vec<u32>,
}

impl DistanceVector {
    /// Distance to `v`, or `None` when `v` is unreachable.
    #[inline]
    pub fn get(&self, v: NodeId) -> Option<u32> {
        match self.dist[v as usize] {
            UNREACHABLE => None,
            d => Some(d),
        }
    }
}

impl Graph {
    /// Builds a graph over nodes `0..n` from an undirected edge iterator.
    /// Self-loops and duplicates are dropped silently; use
    /// [`load_edge_list`] when the counts matter.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Graph {
        let labels = (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        let mut directed = Vec::new();
        for (u, v) in edges {
            assert!(
                (u as usize) < n && (v as usize) < n,
                "edge endpoint out of range"
            );
            if u == v {
                continue;
            }
            directed.push((u, v));
            directed.push((v, u));
        }
        Self::from_directed_pairs(labels, directed).0
    }

    /// Finishes construction from a symmetric pair list (both directions
    /// present). Returns the duplicate count observed while deduplicating.
    fn from_directed_pairs(
        labels: Vec<String>,
        mut directed: Vec<(NodeId, NodeId)>,
    ) -> (Graph, usize) {
        let n = labels.len();
        directed.sort_unstable();
        let before = directed.len();
        directed.dedup();
        // Each undirected duplicate shows up in both directions.
        let duplicates = (before - directed.len()) / 2;

        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in &directed {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let neighbors = directed.into_iter().map(|(_, v)| v).collect();

        let label_ids = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as NodeId))
            .collect();
        (
            Graph {
                offsets,
                neighbors,
                labels,
                label_ids,
            },
            duplicates,
        )
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[u as usize]..self.offsets[u as usize + 1]]
    }

    #[inline]
    pub fn degree(&self, u: NodeId) -> usize {
        self.offsets[u as usize + 1] - self.offsets[u as usize]
    }

    pub fn label(&self, u: NodeId) -> &str {
        &self.labels[u as usize]
    }

    pub fn id_of(&self, label: &str) -> Option<NodeId> {
        self.label_ids.get(label).copied()
    }

    /// True when `u` and `v` share an edge. Binary search over the sorted
    /// adjacency of the lower-degree endpoint.
    #[inline]
    pub fn are_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Smallest-id common neighbor of `u` and `v`, if any. Linear merge of
    /// the two sorted adjacency lists.
    pub fn common_neighbor(&self, u: NodeId, v: NodeId) -> Option<NodeId> {
        let (mut i, mut j) = (0, 0);
        let nu = self.neighbors(u);
        let nv = self.neighbors(v);
        while i < nu.len() && j < nv.len() {
            match nu[i].cmp(&nv[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return Some(nu[i]),
            }
        }
        None
    }

    fn check_node(&self, u: NodeId) -> Result<()> {
        if (u as usize) < self.node_count() {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "node id {u} out of range (graph has {} nodes)",
                self.node_count()
            )))
        }
    }

    /// Writes the adjacency structure as the `RGL1` binary cache:
    /// magic, little-endian u64 node and edge counts, CSR offsets (u64),
    /// then the neighbor array (u32). Labels are not stored.
    pub fn write_binary<W: Write>(&self, sink: &mut W) -> Result<()> {
        sink.write_all(BINARY_MAGIC)?;
        sink.write_all(&(self.node_count() as u64).to_le_bytes())?;
        sink.write_all(&(self.edge_count() as u64).to_le_bytes())?;
        for &o in &self.offsets {
            sink.write_all(&(o as u64).to_le_bytes())?;
        }
        for &v in &self.neighbors {
            sink.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a graph back from the `RGL1` cache. Node labels become the
    /// decimal internal ids.
    pub fn read_binary<R: Read>(source: &mut R) -> Result<Graph> {
        let mut magic = [0u8; 4];
        read_exact(source, &mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                magic, BINARY_MAGIC
            )));
        }
        let n = read_u64(source)? as usize;
        let e = read_u64(source)? as usize;
        let mut offsets = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            offsets.push(read_u64(source)? as usize);
        }
        if offsets.first() != Some(&0) || *offsets.last().unwrap() != 2 * e {
            return Err(Error::Format("inconsistent CSR offsets".into()));
        }
        let mut neighbors = Vec::with_capacity(2 * e);
        for _ in 0..2 * e {
            let mut buf = [0u8; 4];
            read_exact(source, &mut buf)?;
            neighbors.push(u32::from_le_bytes(buf));
        }
        if neighbors.iter().any(|&v| v as usize >= n) {
            return Err(Error::Format("neighbor id out of range".into()));
        }
        let labels = (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        let label_ids = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as NodeId))
            .collect();
        Ok(Graph {
            offsets,
            neighbors,
            labels,
            label_ids,
        })
    }

    /// Writes the graph as edge-list text, one `"<label> <label>"` line per
    /// undirected edge in ascending id order.
    pub fn write_edge_list<W: Write>(&self, sink: &mut W) -> Result<()> {
        for u in 0..self.node_count() as NodeId {
            for &v in self.neighbors(u) {
                if u < v {
                    writeln!(sink, "{} {}", self.label(u), self.label(v))?;
                }
            }
        }
        Ok(())
    }
}

fn read_exact<R: Read>(source: &mut R, buf: &mut [u8]) -> Result<()> {
    source
        .read_exact(buf)
        .map_err(|e| Error::Format(format!("truncated input: {e}")))
}

fn read_u64<R: Read>(source: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    read_exact(source, &mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

/// Parses whitespace-separated `"<label> <label>"` lines into an undirected
/// graph. Lines starting with `#` are comments; blank lines are skipped.
/// Duplicate edges collapse, self-loops are dropped and counted, labels map
/// to dense ids in first-appearance order.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<(Graph, LoadStats)> {
    let mut labels: Vec<String> = Vec::new();
    let mut ids: HashMap<String, NodeId> = HashMap::new();
    let mut directed: Vec<(NodeId, NodeId)> = Vec::new();
    let mut stats = LoadStats::default();

    let intern = |tok: &str, labels: &mut Vec<String>, ids: &mut HashMap<String, NodeId>| {
        if let Some(&id) = ids.get(tok) {
            id
        } else {
            let id = labels.len() as NodeId;
            labels.push(tok.to_string());
            ids.insert(tok.to_string(), id);
            id
        }
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let (a, b) = match (toks.next(), toks.next(), toks.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected exactly two tokens, got {line:?}"),
                })
            }
        };
        let u = intern(a, &mut labels, &mut ids);
        let v = intern(b, &mut labels, &mut ids);
        if u == v {
            stats.self_loops_dropped += 1;
            continue;
        }
        directed.push((u, v));
        directed.push((v, u));
    }

    let (graph, duplicates) = Graph::from_directed_pairs(labels, directed);
    stats.duplicate_edges_dropped = duplicates;
    Ok((graph, stats))
}

/// Exact hop distances from `source` to every node, unreachable nodes
/// marked [`UNREACHABLE`]. Neighbors expand in ascending id order.
pub fn bfs_distances(graph: &Graph, source: NodeId) -> Result<DistanceVector> {
    graph.check_node(source)?;
    let mut dist = vec![UNREACHABLE; graph.node_count()];
    dist[source as usize] = 0;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        for &v in graph.neighbors(u) {
            if dist[v as usize] == UNREACHABLE {
                dist[v as usize] = du + 1;
                queue.push_back(v);
            }
        }
    }
    Ok(DistanceVector { source, dist })
}

/// A true shortest path from `u` to `v`, or `None` when disconnected.
/// Ties break by smallest-neighbor-id expansion order, so the result is
/// deterministic.
pub fn shortest_path(graph: &Graph, u: NodeId, v: NodeId) -> Result<Option<Vec<NodeId>>> {
    graph.check_node(u)?;
    graph.check_node(v)?;
    if u == v {
        return Ok(Some(vec![u]));
    }
    let mut parent = vec![UNREACHABLE; graph.node_count()];
    parent[u as usize] = u;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(u);
    'search: while let Some(x) = queue.pop_front() {
        for &y in graph.neighbors(x) {
            if parent[y as usize] == UNREACHABLE {
                parent[y as usize] = x;
                if y == v {
                    break 'search;
                }
                queue.push_back(y);
            }
        }
    }
    if parent[v as usize] == UNREACHABLE {
        return Ok(None);
    }
    let mut path = vec![v];
    let mut cur = v;
    while cur != u {
        cur = parent[cur as usize];
        path.push(cur);
    }
    path.reverse();
    Ok(Some(path))
}

/// `k` distinct node ids sampled uniformly without replacement,
/// deterministic for a fixed seed.
pub fn sample_nodes(graph: &Graph, k: usize, seed: u64) -> Result<Vec<NodeId>> {
    let n = graph.node_count();
    if k > n {
        return Err(Error::Argument(format!(
            "cannot sample {k} nodes from a graph of {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, n, k)
        .into_iter()
        .map(|i| i as NodeId)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn load(text: &str) -> (Graph, LoadStats) {
        load_edge_list(Cursor::new(text)).unwrap()
    }

    #[test]
    fn loads_minimal_path_graph() {
        let (g, stats) = load("0 1\n1 2");
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(g.are_adjacent(0, 1));
        assert!(g.are_adjacent(1, 2));
        assert!(!g.are_adjacent(0, 2));
        assert_eq!(stats, LoadStats::default());
    }

    #[test]
    fn collapses_duplicates_both_directions() {
        let (g, stats) = load("a b\nb a\na b");
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(stats.duplicate_edges_dropped, 2);
    }

    #[test]
    fn drops_and_counts_self_loops() {
        let (g, stats) = load("x x");
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(stats.self_loops_dropped, 1);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let (g, _) = load("# header\n\n0 1\n  # another\n1 2\n");
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn malformed_lines_carry_line_numbers() {
        let err = load_edge_list(Cursor::new("0 1\n1 2 3")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(load_edge_list(Cursor::new("lonely")).is_err());
    }

    #[test]
    fn labels_map_in_first_appearance_order() {
        let (g, _) = load("b a\na c");
        assert_eq!(g.id_of("b"), Some(0));
        assert_eq!(g.id_of("a"), Some(1));
        assert_eq!(g.id_of("c"), Some(2));
        assert_eq!(g.label(2), "c");
    }

    #[test]
    fn bfs_on_path_graph() {
        let (g, _) = load("0 1\n1 2");
        let d = bfs_distances(&g, 0).unwrap();
        assert_eq!(d.dist, vec![0, 1, 2]);
    }

    #[test]
    fn bfs_on_star_graph() {
        let g = Graph::from_edges(5, (1..5).map(|i| (0, i)));
        let d = bfs_distances(&g, 0).unwrap();
        assert_eq!(d.dist, vec![0, 1, 1, 1, 1]);
    }

    #[test]
    fn bfs_marks_other_component_unreachable() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]);
        let d = bfs_distances(&g, 0).unwrap();
        assert_eq!(d.get(1), Some(1));
        assert_eq!(d.get(2), None);
        assert_eq!(d.dist[3], UNREACHABLE);
    }

    #[test]
    fn bfs_source_out_of_range() {
        let g = Graph::from_edges(2, [(0, 1)]);
        assert!(bfs_distances(&g, 2).is_err());
    }

    #[test]
    fn shortest_path_basics() {
        let (g, _) = load("0 1\n1 2");
        assert_eq!(shortest_path(&g, 0, 2).unwrap(), Some(vec![0, 1, 2]));
        assert_eq!(shortest_path(&g, 1, 1).unwrap(), Some(vec![1]));
        let g2 = Graph::from_edges(4, [(0, 1), (2, 3)]);
        assert_eq!(shortest_path(&g2, 0, 3).unwrap(), None);
    }

    #[test]
    fn shortest_path_ties_break_by_smallest_id() {
        // Diamond 0-1, 0-2, 1-3, 2-3: both routes have length 2; the
        // deterministic oracle must go through node 1.
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert_eq!(shortest_path(&g, 0, 3).unwrap(), Some(vec![0, 1, 3]));
    }

    #[test]
    fn sampling_contract() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        assert_eq!(sample_nodes(&g, 0, 7).unwrap(), Vec::<NodeId>::new());
        let all = sample_nodes(&g, 6, 7).unwrap();
        let mut sorted = all.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(
            sample_nodes(&g, 3, 42).unwrap(),
            sample_nodes(&g, 3, 42).unwrap()
        );
        assert!(sample_nodes(&g, 7, 0).is_err());
    }

    #[test]
    fn binary_cache_round_trips_bitwise() {
        let (g, _) = load("0 1\n1 2\n2 3\n3 0\n0 2");
        let mut bytes = Vec::new();
        g.write_binary(&mut bytes).unwrap();
        let g2 = Graph::read_binary(&mut Cursor::new(&bytes)).unwrap();
        let mut bytes2 = Vec::new();
        g2.write_binary(&mut bytes2).unwrap();
        assert_eq!(bytes, bytes2);
        assert_eq!(g.offsets, g2.offsets);
        assert_eq!(g.neighbors, g2.neighbors);
    }

    #[test]
    fn binary_cache_rejects_corruption() {
        let (g, _) = load("0 1\n1 2");
        let mut bytes = Vec::new();
        g.write_binary(&mut bytes).unwrap();
        let truncated = &bytes[..bytes.len() - 3];
        assert!(matches!(
            Graph::read_binary(&mut Cursor::new(truncated)),
            Err(Error::Format(_))
        ));
        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(Graph::read_binary(&mut Cursor::new(&wrong_magic)).is_err());
    }

    #[test]
    fn edge_list_text_round_trip_preserves_adjacency() {
        let (g, _) = load("5 3\n3 9\n9 5\n9 7");
        let mut text = Vec::new();
        g.write_edge_list(&mut text).unwrap();
        let (g2, _) = load_edge_list(Cursor::new(&text)).unwrap();
        assert_eq!(g.node_count(), g2.node_count());
        for u in 0..g.node_count() as NodeId {
            let v = g2.id_of(g.label(u)).unwrap();
            let nbrs: Vec<&str> = g.neighbors(u).iter().map(|&x| g.label(x)).collect();
            let nbrs2: Vec<&str> = g2.neighbors(v).iter().map(|&x| g2.label(x)).collect();
            let mut a = nbrs.clone();
            let mut b = nbrs2.clone();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
        }
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (
            2usize..40,
            prop::collection::vec((0u32..40, 0u32..40), 0..120),
        )
            .prop_map(|(n, raw)| {
                let edges = raw
                    .into_iter()
                    .map(|(u, v)| (u % n as u32, v % n as u32))
                    .filter(|(u, v)| u != v);
                Graph::from_edges(n, edges)
            })
    }

    proptest! {
        // Distances change by at most one across any edge.
        #[test]
        fn bfs_is_edge_lipschitz(g in arb_graph(), src in 0u32..40) {
            let src = src % g.node_count() as u32;
            let d = bfs_distances(&g, src).unwrap();
            for u in 0..g.node_count() as NodeId {
                for &v in g.neighbors(u) {
                    if let (Some(du), Some(dv)) = (d.get(u), d.get(v)) {
                        prop_assert!(du.abs_diff(dv) <= 1);
                    } else {
                        // Across one edge, reachability is shared.
                        prop_assert!(d.get(u).is_none() && d.get(v).is_none());
                    }
                }
            }
        }

        #[test]
        fn shortest_path_length_matches_bfs(g in arb_graph(), u in 0u32..40, v in 0u32..40) {
            let u = u % g.node_count() as u32;
            let v = v % g.node_count() as u32;
            let d = bfs_distances(&g, u).unwrap();
            match shortest_path(&g, u, v).unwrap() {
                Some(path) => {
                    prop_assert_eq!(path.len() as u32 - 1, d.get(v).unwrap());
                    prop_assert_eq!(path[0], u);
                    prop_assert_eq!(*path.last().unwrap(), v);
                    for w in path.windows(2) {
                        prop_assert!(g.are_adjacent(w[0], w[1]));
                    }
                }
                None => prop_assert!(d.get(v).is_none()),
            }
        }
    }
}
