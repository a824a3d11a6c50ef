//! Shared command plumbing: graph/embedding loading, pair selection,
//! truth caching and latency statistics.

use std::collections::HashMap;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigel_core::{bfs_distances, DistanceVector, Embedding, Graph, NodeId};

/// Loads a graph from either the text edge-list format or the binary
/// adjacency cache (sniffed by magic bytes).
pub fn load_graph(path: &Path) -> Result<Graph> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("cannot open graph {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let head = {
        use std::io::BufRead;
        reader.fill_buf()?.get(..4).map(<[u8]>::to_vec)
    };
    if head.as_deref() == Some(b"RGL1") {
        Ok(Graph::read_binary(&mut reader)?)
    } else {
        let (graph, stats) = rigel_core::load_edge_list(reader)?;
        if stats.self_loops_dropped > 0 {
            eprintln!("warning: dropped {} self-loop(s)", stats.self_loops_dropped);
        }
        Ok(graph)
    }
}

pub fn load_embedding(path: &Path) -> Result<Embedding> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("cannot open embedding {}", path.display()))?;
    Ok(rigel_core::load_embedding(&mut BufReader::new(file))?)
}

/// Node pairs for query-style commands: either parsed from a
/// `"a b;c d"` label list or sampled among embedded nodes.
pub fn resolve_pairs(
    graph: &Graph,
    embedding: &Embedding,
    pairs: Option<&str>,
    random: Option<usize>,
    seed: u64,
) -> Result<Vec<(NodeId, NodeId)>> {
    match (pairs, random) {
        (Some(spec), None) => parse_pairs(graph, spec),
        (None, Some(count)) => Ok(random_pairs(graph, embedding, count, seed)),
        _ => bail!(rigel_core::Error::Argument(
            "exactly one of --pairs and --random is required".into()
        )),
    }
}

pub fn parse_pairs(graph: &Graph, spec: &str) -> Result<Vec<(NodeId, NodeId)>> {
    let mut out = Vec::new();
    for chunk in spec.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let toks: Vec<&str> = chunk.split([' ', ',']).filter(|t| !t.is_empty()).collect();
        if toks.len() != 2 {
            bail!(rigel_core::Error::Argument(format!(
                "pair {chunk:?} must name exactly two nodes"
            )));
        }
        let resolve = |tok: &str| -> Result<NodeId> {
            graph.id_of(tok).ok_or_else(|| {
                anyhow::anyhow!(rigel_core::Error::Argument(format!(
                    "unknown node label {tok:?}"
                )))
            })
        };
        out.push((resolve(toks[0])?, resolve(toks[1])?));
    }
    if out.is_empty() {
        bail!(rigel_core::Error::Argument("no pairs given".into()));
    }
    Ok(out)
}

pub fn random_pairs(
    graph: &Graph,
    embedding: &Embedding,
    count: usize,
    seed: u64,
) -> Vec<(NodeId, NodeId)> {
    let n = graph.node_count() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut guard = 0usize;
    while out.len() < count && guard < count * 1000 + 1000 {
        guard += 1;
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && embedding.is_embedded(u) && embedding.is_embedded(v) {
            out.push((u, v));
        }
    }
    out
}

/// BFS truths with a per-source cache.
pub struct TruthOracle<'a> {
    graph: &'a Graph,
    cache: HashMap<NodeId, DistanceVector>,
}

impl<'a> TruthOracle<'a> {
    pub fn new(graph: &'a Graph) -> Self {
        TruthOracle {
            graph,
            cache: HashMap::new(),
        }
    }

    pub fn distance(&mut self, u: NodeId, v: NodeId) -> Option<u32> {
        self.cache
            .entry(u)
            .or_insert_with(|| bfs_distances(self.graph, u).expect("valid source"))
            .get(v)
    }
}

/// Mean / median / p99 of a latency sample, in microseconds.
pub struct LatencyStats {
    pub mean_us: f64,
    pub median_us: f64,
    pub p99_us: f64,
}

pub fn latency_stats(mut samples_ns: Vec<u64>) -> LatencyStats {
    assert!(!samples_ns.is_empty());
    samples_ns.sort_unstable();
    let mean = samples_ns.iter().sum::<u64>() as f64 / samples_ns.len() as f64;
    let pick = |q: f64| samples_ns[((samples_ns.len() - 1) as f64 * q) as usize] as f64;
    LatencyStats {
        mean_us: mean / 1000.0,
        median_us: pick(0.5) / 1000.0,
        p99_us: pick(0.99) / 1000.0,
    }
}

pub fn parse_k_list(spec: &str) -> Result<Vec<usize>> {
    let ks: Vec<usize> = spec
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| rigel_core::Error::Argument(format!("bad k list {spec:?}: {e}")))?;
    if ks.is_empty() || ks.contains(&0) {
        bail!(rigel_core::Error::Argument(
            "k list must be non-empty and positive".into()
        ));
    }
    Ok(ks)
}

pub fn mode_tag(local_landmarks: usize) -> String {
    match local_landmarks {
        0 => "Raw Rigel".to_string(),
        1 => "Rigel".to_string(),
        n => format!("Rigel ({n} local landmarks)"),
    }
}

pub fn query_mode(local_optimization: bool) -> &'static str {
    if local_optimization {
        "Rigel"
    } else {
        "Rigel-S"
    }
}
