//! The embedding pipeline: landmark selection, two-phase landmark bootstrap
//! (primaries placed jointly, expanders added one by one), per-node
//! calibration against a small set of references, cascade input ordering
//! with 1-hop local landmarks, and the three-phase parallel orchestration.
//!
//! Phase 1 computes one BFS per landmark, phase 2 fixes landmark
//! coordinates, phase 3 embeds all remaining nodes level by level, where a
//! node's level is its smallest BFS distance to any landmark. Nodes within
//! a level only read coordinates from strictly lower levels, which makes
//! the result bitwise independent of the worker count.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{hyperboloid_from_parts, Model, Space};
use crate::graph::{bfs_distances, DistanceVector, Graph, NodeId, UNREACHABLE};
use crate::simplex::{minimize, OptimizerConfig};

const EMBEDDING_MAGIC: &[u8; 4] = b"RGE1";

/// Error functional applied to (coordinate distance, graph distance) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// `(estimate - truth)^2`, the default.
    SquaredAbs,
    /// `|estimate - truth|`.
    Abs,
    /// `((estimate - truth) / max(truth, 1))^2`.
    SquaredRel,
}

impl ObjectiveKind {
    #[inline]
    pub(crate) fn error(&self, estimate: f64, truth: f64) -> f64 {
        let diff = estimate - truth;
        match self {
            ObjectiveKind::SquaredAbs => diff * diff,
            ObjectiveKind::Abs => diff.abs(),
            ObjectiveKind::SquaredRel => {
                let r = diff / truth.max(1.0);
                r * r
            }
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectiveKind::SquaredAbs => "squared-abs",
            ObjectiveKind::Abs => "abs",
            ObjectiveKind::SquaredRel => "squared-rel",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "squared-abs" => Ok(ObjectiveKind::SquaredAbs),
            "abs" => Ok(ObjectiveKind::Abs),
            "squared-rel" => Ok(ObjectiveKind::SquaredRel),
            other => Err(Error::Argument(format!("unknown objective kind {other:?}"))),
        }
    }

    fn tag(&self) -> u8 {
        match self {
            ObjectiveKind::SquaredAbs => 0,
            ObjectiveKind::Abs => 1,
            ObjectiveKind::SquaredRel => 2,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(ObjectiveKind::SquaredAbs),
            1 => Ok(ObjectiveKind::Abs),
            2 => Ok(ObjectiveKind::SquaredRel),
            other => Err(Error::Format(format!("unknown objective tag {other}"))),
        }
    }
}

/// Pipeline configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    pub space: Space,
    /// Number of landmarks `l`.
    pub landmark_count: usize,
    /// Landmarks placed by joint optimization; the rest are expanders.
    pub primary_count: usize,
    /// References each node calibrates against.
    pub refs_per_node: usize,
    /// Already-embedded 1-hop neighbors substituted for landmarks
    /// (0 disables the cascade's local information entirely).
    pub local_landmarks: usize,
    pub seed: u64,
    /// Worker threads for phases 1 and 3. Never affects the output.
    pub workers: usize,
    pub objective: ObjectiveKind,
    pub optimizer: OptimizerConfig,
}

impl EmbedConfig {
    pub fn new(space: Space) -> Self {
        EmbedConfig {
            space,
            landmark_count: 100,
            primary_count: 16,
            refs_per_node: 16,
            local_landmarks: 1,
            seed: 0,
            workers: 1,
            objective: ObjectiveKind::SquaredAbs,
            optimizer: OptimizerConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.landmark_count == 0 {
            return Err(Error::Argument("landmark_count must be at least 1".into()));
        }
        if self.primary_count == 0 || self.primary_count > self.landmark_count {
            return Err(Error::Argument(format!(
                "primary_count must be in [1, landmark_count], got {} with l={}",
                self.primary_count, self.landmark_count
            )));
        }
        if self.refs_per_node == 0 || self.refs_per_node > self.landmark_count {
            return Err(Error::Argument(format!(
                "refs_per_node must be in [1, landmark_count], got {} with l={}",
                self.refs_per_node, self.landmark_count
            )));
        }
        if self.local_landmarks >= self.refs_per_node {
            return Err(Error::Argument(format!(
                "local_landmarks ({}) must be smaller than refs_per_node ({})",
                self.local_landmarks, self.refs_per_node
            )));
        }
        if self.workers == 0 {
            return Err(Error::Argument("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Wall-clock and residual bookkeeping from [`embed_graph`].
#[derive(Debug, Clone, Default)]
pub struct EmbedStats {
    pub phase1_bfs: Duration,
    pub phase2_bootstrap: Duration,
    pub partitioning: Duration,
    pub phase3_embed: Duration,
    pub excluded: usize,
    /// Joint primary objective plus expander residuals after bootstrap.
    pub bootstrap_objective: f64,
    /// Sum of per-node objective values at the initialization points.
    pub initial_residual_sum: f64,
    /// Sum of per-node objective values at the optimized points.
    pub final_residual_sum: f64,
    pub embedded_nodes: usize,
}

/// Per-node coordinate table plus everything needed to interpret it.
///
/// `landmark_bfs` is pipeline state: it is populated by [`embed_graph`] /
/// caller-supplied vectors and is not serialized.
#[derive(Debug, Clone)]
pub struct Embedding {
    space: Space,
    coords: Vec<f64>,
    embedded: Vec<bool>,
    pub landmark_ids: Vec<NodeId>,
    pub landmark_bfs: Vec<DistanceVector>,
    pub config: EmbedConfig,
    pub stats: EmbedStats,
}

impl Embedding {
    /// Assembles an embedding from raw parts. Primarily useful for tests
    /// and tooling that need synthetic coordinate tables.
    pub fn from_parts(
        space: Space,
        coords: Vec<f64>,
        embedded: Vec<bool>,
        landmark_ids: Vec<NodeId>,
        config: EmbedConfig,
    ) -> Result<Self> {
        if coords.len() != embedded.len() * space.dimension() {
            return Err(Error::Argument(format!(
                "coordinate table has {} values, expected {} nodes x {} dims",
                coords.len(),
                embedded.len(),
                space.dimension()
            )));
        }
        Ok(Embedding {
            space,
            coords,
            embedded,
            landmark_ids,
            landmark_bfs: Vec::new(),
            config,
            stats: EmbedStats::default(),
        })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn node_count(&self) -> usize {
        self.embedded.len()
    }

    #[inline]
    pub fn is_embedded(&self, u: NodeId) -> bool {
        self.embedded.get(u as usize).copied().unwrap_or(false)
    }

    /// Coordinate of `u`, or `None` when `u` is excluded.
    #[inline]
    pub fn point(&self, u: NodeId) -> Option<&[f64]> {
        if self.is_embedded(u) {
            let dim = self.space.dimension();
            let base = u as usize * dim;
            Some(&self.coords[base..base + dim])
        } else {
            None
        }
    }

    pub fn excluded_count(&self) -> usize {
        self.embedded.iter().filter(|&&e| !e).count()
    }

    pub fn excluded_nodes(&self) -> Vec<NodeId> {
        (0..self.node_count() as NodeId)
            .filter(|&u| !self.is_embedded(u))
            .collect()
    }

    /// Raw flat coordinate table (`node_count * dimension` values,
    /// zero-filled for excluded nodes).
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Per-node input level: the smallest BFS distance to any landmark.
/// Landmarks sit at level 0; unreachable nodes carry [`UNREACHABLE`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeLevels {
    pub level: Vec<u32>,
}

impl CascadeLevels {
    pub fn is_excluded(&self, u: NodeId) -> bool {
        self.level[u as usize] == UNREACHABLE
    }
}

/// A calibration reference: an already-placed point and the graph distance
/// the node being embedded should sit from it.
#[derive(Debug, Clone, Copy)]
pub struct NodeRef<'a> {
    pub point: &'a [f64],
    pub distance: f64,
}

/// The `l` highest-degree nodes, ties broken by ascending id.
pub fn select_landmarks(graph: &Graph, l: usize) -> Result<Vec<NodeId>> {
    let n = graph.node_count();
    if l > n {
        return Err(Error::Argument(format!(
            "cannot select {l} landmarks from {n} nodes"
        )));
    }
    let mut ids: Vec<NodeId> = (0..n as NodeId).collect();
    ids.sort_by_key(|&u| (std::cmp::Reverse(graph.degree(u)), u));
    ids.truncate(l);
    Ok(ids)
}

/// Deterministic per-node RNG stream (SplitMix64 mixing of seed and node).
fn node_rng(seed: u64, node: NodeId) -> ChaCha8Rng {
    let mut z = seed ^ 0x9E3779B97F4A7C15u64.wrapping_mul(node as u64 + 1);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Prepared reference for the hot objective: hyperboloid evaluations reuse
/// `1 + |y|^2` across iterations.
struct PreparedRef<'a> {
    point: &'a [f64],
    sy: f64,
    distance: f64,
}

fn prepare_refs<'a>(refs: &[NodeRef<'a>], space: &Space) -> Vec<PreparedRef<'a>> {
    refs.iter()
        .map(|r| {
            let sy = match space.model() {
                Model::Hyperboloid => 1.0 + r.point.iter().map(|v| v * v).sum::<f64>(),
                Model::Euclidean => 0.0,
            };
            PreparedRef {
                point: r.point,
                sy,
                distance: r.distance,
            }
        })
        .collect()
}

fn residual(prepared: &[PreparedRef], space: &Space, objective: ObjectiveKind, x: &[f64]) -> f64 {
    match space.model() {
        Model::Euclidean => prepared
            .iter()
            .map(|r| {
                let mut sum = 0.0;
                for (a, b) in x.iter().zip(r.point) {
                    let d = a - b;
                    sum += d * d;
                }
                objective.error(sum.sqrt(), r.distance)
            })
            .sum(),
        Model::Hyperboloid => {
            let sx = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
            prepared
                .iter()
                .map(|r| {
                    let mut dot = 0.0;
                    for (a, b) in x.iter().zip(r.point) {
                        dot += a * b;
                    }
                    let d = hyperboloid_from_parts(sx, r.sy, dot, space.curvature());
                    objective.error(d, r.distance)
                })
                .sum()
        }
    }
}

/// Places one node so its coordinate distances to the references match
/// their graph distances, starting from the closest reference's point.
/// Returns the optimized point.
pub fn embed_node(
    refs: &[NodeRef],
    space: &Space,
    objective: ObjectiveKind,
    optimizer: &OptimizerConfig,
) -> Result<Vec<f64>> {
    embed_node_with_residuals(refs, space, objective, optimizer).map(|(p, _, _)| p)
}

/// As [`embed_node`], also reporting the objective at the initialization
/// point and at the optimum.
pub fn embed_node_with_residuals(
    refs: &[NodeRef],
    space: &Space,
    objective: ObjectiveKind,
    optimizer: &OptimizerConfig,
) -> Result<(Vec<f64>, f64, f64)> {
    if refs.is_empty() {
        return Err(Error::Argument(
            "embed_node requires at least one reference".into(),
        ));
    }
    let dim = space.dimension();
    for r in refs {
        if r.point.len() != dim {
            return Err(Error::Argument(format!(
                "reference point has dimension {}, space is {dim}-dimensional",
                r.point.len()
            )));
        }
        if !r.distance.is_finite() || r.distance < 0.0 {
            return Err(Error::Argument(format!(
                "reference distance {} is invalid",
                r.distance
            )));
        }
    }
    let start_idx = refs
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.distance.total_cmp(&b.distance))
        .map(|(i, _)| i)
        .unwrap();
    let start = refs[start_idx].point.to_vec();

    let prepared = prepare_refs(refs, space);
    let initial = residual(&prepared, space, objective, &start);
    let result = minimize(
        |x| residual(&prepared, space, objective, x),
        &start,
        optimizer,
    )?;
    Ok((result.argmin, initial, result.value))
}

/// Joint objective over a set of placed landmarks:
/// `sum over i < j of err(delta(P_i, P_j), d_ij)`.
fn joint_objective(
    placed: &[Vec<f64>],
    dist: &[Vec<f64>],
    space: &Space,
    objective: ObjectiveKind,
) -> f64 {
    let mut total = 0.0;
    for i in 0..placed.len() {
        for j in (i + 1)..placed.len() {
            let d = space.distance_unchecked(&placed[i], &placed[j]);
            total += objective.error(d, dist[i][j]);
        }
    }
    total
}

/// Fixes landmark coordinates: the seeded primary subset is placed by
/// minimizing the joint pairwise objective (block-coordinate sweeps, one
/// simplex run per landmark per sweep), then each expander is placed
/// against all landmarks already holding coordinates.
///
/// `landmark_bfs[i]` must be the BFS vector rooted at `landmark_ids[i]`.
/// Returns a partial embedding holding only landmark coordinates.
pub fn bootstrap_landmarks(
    graph: &Graph,
    landmark_ids: &[NodeId],
    landmark_bfs: &[DistanceVector],
    config: &EmbedConfig,
) -> Result<Embedding> {
    config.validate()?;
    let l = landmark_ids.len();
    if l == 0 {
        return Err(Error::Argument("no landmarks given".into()));
    }
    if landmark_bfs.len() != l {
        return Err(Error::Argument(format!(
            "got {} BFS vectors for {} landmarks",
            landmark_bfs.len(),
            l
        )));
    }
    for (i, bfs) in landmark_bfs.iter().enumerate() {
        if bfs.source != landmark_ids[i] {
            return Err(Error::Argument(format!(
                "BFS vector {i} is rooted at {} but landmark {i} is {}",
                bfs.source, landmark_ids[i]
            )));
        }
    }
    // Mutual reachability: in an undirected graph it suffices that the
    // first landmark reaches all others.
    for &lj in landmark_ids.iter().skip(1) {
        if landmark_bfs[0].get(lj).is_none() {
            return Err(Error::Bootstrap(format!(
                "landmarks {} and {} are in different components",
                landmark_ids[0], lj
            )));
        }
    }

    let dim = config.space.dimension();
    let primary_count = config.primary_count.min(l);

    // Pairwise landmark graph distances.
    let mut dist = vec![vec![0.0f64; l]; l];
    for i in 0..l {
        for j in 0..l {
            if i != j {
                dist[i][j] = landmark_bfs[i]
                    .get(landmark_ids[j])
                    .expect("landmarks are mutually reachable") as f64;
            }
        }
    }

    let mut primary_idx: Vec<usize> = {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x51A9_B0D4_7E3C_2F15);
        rand::seq::index::sample(&mut rng, l, primary_count).into_vec()
    };
    primary_idx.sort_unstable();

    // Joint placement of the primaries.
    let mut placed: Vec<Vec<f64>> = Vec::with_capacity(primary_count);
    let mut total_objective = 0.0;
    if primary_count == 1 {
        placed.push(vec![0.0; dim]);
    } else {
        let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xC2B2_AE3D_27D4_EB4F);
        for _ in 0..primary_count {
            placed.push((0..dim).map(|_| init_rng.gen_range(-1.0..1.0)).collect());
        }
        let pdist: Vec<Vec<f64>> = primary_idx
            .iter()
            .map(|&i| primary_idx.iter().map(|&j| dist[i][j]).collect())
            .collect();
        let mut prev = joint_objective(&placed, &pdist, &config.space, config.objective);
        for _sweep in 0..25 {
            for a in 0..primary_count {
                let refs: Vec<NodeRef> = (0..primary_count)
                    .filter(|&b| b != a)
                    .map(|b| NodeRef {
                        point: &placed[b],
                        distance: pdist[a][b],
                    })
                    .collect();
                let prepared = prepare_refs(&refs, &config.space);
                let objective = config.objective;
                let space = config.space;
                let r = minimize(
                    |x| residual(&prepared, &space, objective, x),
                    &placed[a],
                    &config.optimizer,
                )?;
                placed[a] = r.argmin;
            }
            let now = joint_objective(&placed, &pdist, &config.space, config.objective);
            if prev - now < 1e-9 * (1.0 + now.abs()) {
                prev = now;
                break;
            }
            prev = now;
        }
        total_objective = prev;
    }

    // Landmark index -> position table, primaries first.
    let mut coords_by_index: HashMap<usize, Vec<f64>> = HashMap::new();
    for (slot, &idx) in primary_idx.iter().enumerate() {
        coords_by_index.insert(idx, placed[slot].clone());
    }
    let mut placed_order: Vec<usize> = primary_idx.clone();

    // Expanders, in landmark (degree) order, each against everything
    // already placed.
    for (idx, dist_row) in dist.iter().enumerate() {
        if coords_by_index.contains_key(&idx) {
            continue;
        }
        let refs: Vec<NodeRef> = placed_order
            .iter()
            .map(|&p| NodeRef {
                point: &coords_by_index[&p],
                distance: dist_row[p],
            })
            .collect();
        let (point, _, value) =
            embed_node_with_residuals(&refs, &config.space, config.objective, &config.optimizer)?;
        total_objective += value;
        coords_by_index.insert(idx, point);
        placed_order.push(idx);
    }

    let n = graph.node_count();
    let mut coords = vec![0.0; n * dim];
    let mut embedded = vec![false; n];
    for (idx, &id) in landmark_ids.iter().enumerate() {
        let base = id as usize * dim;
        coords[base..base + dim].copy_from_slice(&coords_by_index[&idx]);
        embedded[id as usize] = true;
    }

    let stats = EmbedStats {
        bootstrap_objective: total_objective,
        ..EmbedStats::default()
    };
    Ok(Embedding {
        space: config.space,
        coords,
        embedded,
        landmark_ids: landmark_ids.to_vec(),
        landmark_bfs: landmark_bfs.to_vec(),
        config: config.clone(),
        stats,
    })
}

/// Computes per-node input levels from the landmark BFS vectors already
/// held by the embedding; no graph traversal happens here.
pub fn cascade_levels(graph: &Graph, embedding: &Embedding) -> Result<CascadeLevels> {
    if embedding.landmark_bfs.is_empty() {
        return Err(Error::Argument(
            "embedding carries no landmark BFS vectors (loaded from file?)".into(),
        ));
    }
    let n = graph.node_count();
    let mut level = vec![UNREACHABLE; n];
    for bfs in &embedding.landmark_bfs {
        for (lv, &d) in level.iter_mut().zip(&bfs.dist) {
            if d < *lv {
                *lv = d;
            }
        }
    }
    Ok(CascadeLevels { level })
}

/// Runs one BFS per landmark, spread round-robin over `workers` threads.
fn parallel_landmark_bfs(
    graph: &Graph,
    landmark_ids: &[NodeId],
    workers: usize,
) -> Result<Vec<DistanceVector>> {
    let mut out: Vec<Option<DistanceVector>> = vec![None; landmark_ids.len()];
    if workers <= 1 || landmark_ids.len() <= 1 {
        for (i, &id) in landmark_ids.iter().enumerate() {
            out[i] = Some(bfs_distances(graph, id)?);
        }
    } else {
        let results: Vec<Result<Vec<(usize, DistanceVector)>>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers.min(landmark_ids.len()))
                .map(|w| {
                    s.spawn(move || {
                        let mut part = Vec::new();
                        let mut i = w;
                        while i < landmark_ids.len() {
                            part.push((i, bfs_distances(graph, landmark_ids[i])?));
                            i += workers;
                        }
                        Ok(part)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("BFS worker panicked"))
                .collect()
        });
        for r in results {
            for (i, v) in r? {
                out[i] = Some(v);
            }
        }
    }
    Ok(out
        .into_iter()
        .map(|v| v.expect("all landmarks visited"))
        .collect())
}

/// Reference assembly for one node of the cascade: up to `local_landmarks`
/// already-embedded 1-hop neighbors from strictly lower levels, the rest
/// seeded-random landmarks.
///
/// Returns `(neighbor ids chosen as locals, landmark indices chosen)`.
fn choose_references(
    graph: &Graph,
    u: NodeId,
    levels: &[u32],
    embedded: &[bool],
    landmark_ids: &[NodeId],
    config: &EmbedConfig,
) -> (Vec<NodeId>, Vec<usize>) {
    let mut rng = node_rng(config.seed, u);
    let my_level = levels[u as usize];

    let candidates: Vec<NodeId> = graph
        .neighbors(u)
        .iter()
        .copied()
        .filter(|&v| levels[v as usize] < my_level && embedded[v as usize])
        .collect();
    let n_local = config.local_landmarks.min(candidates.len());
    let locals: Vec<NodeId> = if n_local == 0 {
        Vec::new()
    } else if n_local == candidates.len() {
        candidates
    } else {
        rand::seq::index::sample(&mut rng, candidates.len(), n_local)
            .into_iter()
            .map(|i| candidates[i])
            .collect()
    };

    let fill = config.refs_per_node - locals.len();
    let eligible: Vec<usize> = (0..landmark_ids.len())
        .filter(|&i| !locals.contains(&landmark_ids[i]))
        .collect();
    let fill = fill.min(eligible.len());
    let landmarks: Vec<usize> = rand::seq::index::sample(&mut rng, eligible.len(), fill)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    (locals, landmarks)
}

/// Embeds the whole graph. Deterministic for a fixed seed regardless of
/// the worker count; nodes unreachable from every landmark are excluded
/// and reported via `stats.excluded`.
pub fn embed_graph(graph: &Graph, config: &EmbedConfig) -> Result<Embedding> {
    config.validate()?;
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::Argument("cannot embed an empty graph".into()));
    }
    if config.landmark_count > n {
        return Err(Error::Argument(format!(
            "landmark_count {} exceeds node count {n}",
            config.landmark_count
        )));
    }

    // Phase 1: one BFS per landmark.
    let t0 = Instant::now();
    let landmark_ids = select_landmarks(graph, config.landmark_count)?;
    let landmark_bfs = parallel_landmark_bfs(graph, &landmark_ids, config.workers)?;
    let phase1 = t0.elapsed();

    // Phase 2: landmark bootstrap.
    let t1 = Instant::now();
    let mut embedding = bootstrap_landmarks(graph, &landmark_ids, &landmark_bfs, config)?;
    let phase2 = t1.elapsed();

    // Partitioning: levels, then level groups in ascending id order.
    let t2 = Instant::now();
    let levels = cascade_levels(graph, &embedding)?;
    let max_level = levels
        .level
        .iter()
        .copied()
        .filter(|&x| x != UNREACHABLE)
        .max()
        .unwrap_or(0);
    let mut groups: Vec<Vec<NodeId>> = vec![Vec::new(); max_level as usize + 1];
    let mut excluded = 0usize;
    for u in 0..n as NodeId {
        match levels.level[u as usize] {
            UNREACHABLE => excluded += 1,
            0 => {} // landmarks were placed in phase 2
            lv => groups[lv as usize].push(u),
        }
    }
    let partitioning = t2.elapsed();

    // Phase 3: embed level by level against the lower-level snapshot.
    let t3 = Instant::now();
    let dim = config.space.dimension();
    let mut initial_residual_sum = 0.0;
    let mut final_residual_sum = 0.0;
    let mut embedded_nodes = embedding.landmark_ids.len();

    for group in groups.iter().skip(1) {
        if group.is_empty() {
            continue;
        }
        let results = embed_level(graph, &embedding, &levels, group, config)?;
        for (u, point, init, fin) in results {
            let base = u as usize * dim;
            embedding.coords[base..base + dim].copy_from_slice(&point);
            embedding.embedded[u as usize] = true;
            initial_residual_sum += init;
            final_residual_sum += fin;
            embedded_nodes += 1;
        }
    }
    let phase3 = t3.elapsed();

    embedding.stats.phase1_bfs = phase1;
    embedding.stats.phase2_bootstrap = phase2;
    embedding.stats.partitioning = partitioning;
    embedding.stats.phase3_embed = phase3;
    embedding.stats.excluded = excluded;
    embedding.stats.initial_residual_sum = initial_residual_sum;
    embedding.stats.final_residual_sum = final_residual_sum;
    embedding.stats.embedded_nodes = embedded_nodes;
    Ok(embedding)
}

type NodeResult = (NodeId, Vec<f64>, f64, f64);

/// Embeds all nodes of one level. Workers only read coordinates from
/// strictly lower levels, so scheduling cannot influence results; nodes
/// are dealt round-robin by their position in the (id-ascending) group.
fn embed_level(
    graph: &Graph,
    embedding: &Embedding,
    levels: &CascadeLevels,
    group: &[NodeId],
    config: &EmbedConfig,
) -> Result<Vec<NodeResult>> {
    let workers = config.workers.min(group.len()).max(1);
    if workers == 1 {
        let mut out = Vec::with_capacity(group.len());
        for &u in group {
            out.push(embed_one(graph, embedding, levels, u, config)?);
        }
        return Ok(out);
    }

    let results: Vec<Result<Vec<NodeResult>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    let mut part = Vec::new();
                    let mut i = w;
                    while i < group.len() {
                        part.push(embed_one(graph, embedding, levels, group[i], config)?);
                        i += workers;
                    }
                    Ok(part)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("embed worker panicked"))
            .collect()
    });

    let mut out = Vec::with_capacity(group.len());
    for r in results {
        out.extend(r?);
    }
    // Round-robin interleaving is harmless to determinism (each node is
    // independent), but keep merge order stable for reproducible stats.
    out.sort_by_key(|&(u, ..)| u);
    Ok(out)
}

fn embed_one(
    graph: &Graph,
    embedding: &Embedding,
    levels: &CascadeLevels,
    u: NodeId,
    config: &EmbedConfig,
) -> Result<NodeResult> {
    let dim = config.space.dimension();
    let (locals, landmark_idx) = choose_references(
        graph,
        u,
        &levels.level,
        &embedding.embedded,
        &embedding.landmark_ids,
        config,
    );
    debug_assert!(locals.len() + landmark_idx.len() == config.refs_per_node);
    debug_assert!(locals.len() <= config.local_landmarks);

    let mut refs: Vec<NodeRef> = Vec::with_capacity(config.refs_per_node);
    for &v in &locals {
        let base = v as usize * dim;
        refs.push(NodeRef {
            point: &embedding.coords[base..base + dim],
            distance: 1.0,
        });
    }
    for &i in &landmark_idx {
        let id = embedding.landmark_ids[i];
        let base = id as usize * dim;
        let d = embedding.landmark_bfs[i]
            .get(u)
            .expect("node with a finite level reaches every landmark");
        refs.push(NodeRef {
            point: &embedding.coords[base..base + dim],
            distance: d as f64,
        });
    }
    let (point, init, fin) =
        embed_node_with_residuals(&refs, &config.space, config.objective, &config.optimizer)?;
    Ok((u, point, init, fin))
}

// ---------------------------------------------------------------------------
// Serialization: the RGE1 embedding file.
//
// magic "RGE1"; u8 model tag; f64 curvature; u32 dimension; u64 node count;
// u32 landmark count; u64 seed; u32 local landmarks; landmark ids (u64 each);
// node_count records of dimension f64 coordinates; excluded bitmap
// (ceil(N/8) bytes, LSB first); trailer u32 primary_count, u32
// refs_per_node, u8 objective tag. All integers and floats little-endian.
// ---------------------------------------------------------------------------

fn model_tag(model: Model) -> u8 {
    match model {
        Model::Hyperboloid => 0,
        Model::Euclidean => 1,
    }
}

/// Writes the embedding in the RGE1 format.
pub fn save_embedding<W: Write>(embedding: &Embedding, sink: &mut W) -> Result<()> {
    let space = embedding.space;
    sink.write_all(EMBEDDING_MAGIC)?;
    sink.write_all(&[model_tag(space.model())])?;
    sink.write_all(&space.curvature().to_le_bytes())?;
    sink.write_all(&(space.dimension() as u32).to_le_bytes())?;
    sink.write_all(&(embedding.node_count() as u64).to_le_bytes())?;
    sink.write_all(&(embedding.landmark_ids.len() as u32).to_le_bytes())?;
    sink.write_all(&embedding.config.seed.to_le_bytes())?;
    sink.write_all(&(embedding.config.local_landmarks as u32).to_le_bytes())?;
    for &id in &embedding.landmark_ids {
        sink.write_all(&(id as u64).to_le_bytes())?;
    }
    for v in &embedding.coords {
        sink.write_all(&v.to_le_bytes())?;
    }
    let n = embedding.node_count();
    let mut bitmap = vec![0u8; n.div_ceil(8)];
    for (u, &e) in embedding.embedded.iter().enumerate() {
        if !e {
            bitmap[u / 8] |= 1 << (u % 8);
        }
    }
    sink.write_all(&bitmap)?;
    sink.write_all(&(embedding.config.primary_count as u32).to_le_bytes())?;
    sink.write_all(&(embedding.config.refs_per_node as u32).to_le_bytes())?;
    sink.write_all(&[embedding.config.objective.tag()])?;
    Ok(())
}

fn read_exact<R: Read>(source: &mut R, buf: &mut [u8]) -> Result<()> {
    source
        .read_exact(buf)
        .map_err(|e| Error::Format(format!("truncated embedding file: {e}")))
}

fn read_u32<R: Read>(source: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(source, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(source: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(source, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(source: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(source, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads an RGE1 file back. The returned embedding has no landmark BFS
/// vectors; query and path operations do not need them.
pub fn load_embedding<R: Read>(source: &mut R) -> Result<Embedding> {
    let mut magic = [0u8; 4];
    read_exact(source, &mut magic)?;
    if &magic != EMBEDDING_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {magic:?}, expected {EMBEDDING_MAGIC:?}"
        )));
    }
    let mut tag = [0u8; 1];
    read_exact(source, &mut tag)?;
    let curvature = read_f64(source)?;
    let dim = read_u32(source)? as usize;
    let n = read_u64(source)? as usize;
    let l = read_u32(source)? as usize;
    let seed = read_u64(source)?;
    let n_local = read_u32(source)? as usize;

    let space = match tag[0] {
        0 => Space::hyperboloid(curvature, dim),
        1 => Space::euclidean(dim),
        other => return Err(Error::Format(format!("unknown model tag {other}"))),
    }
    .map_err(|e| Error::Format(format!("invalid space header: {e}")))?;

    let mut landmark_ids = Vec::with_capacity(l);
    for _ in 0..l {
        let id = read_u64(source)?;
        if id >= n as u64 {
            return Err(Error::Format(format!(
                "landmark id {id} out of range for {n} nodes"
            )));
        }
        landmark_ids.push(id as NodeId);
    }
    let mut coords = Vec::with_capacity(n * dim);
    for _ in 0..n * dim {
        coords.push(read_f64(source)?);
    }
    let mut bitmap = vec![0u8; n.div_ceil(8)];
    read_exact(source, &mut bitmap)?;
    let embedded: Vec<bool> = (0..n)
        .map(|u| bitmap[u / 8] & (1 << (u % 8)) == 0)
        .collect();

    let primary_count = read_u32(source)? as usize;
    let refs_per_node = read_u32(source)? as usize;
    let mut obj_tag = [0u8; 1];
    read_exact(source, &mut obj_tag)?;
    let objective = ObjectiveKind::from_tag(obj_tag[0])?;

    let mut extra = [0u8; 1];
    if source.read(&mut extra)? != 0 {
        return Err(Error::Format(
            "trailing bytes after embedding payload".into(),
        ));
    }

    let mut config = EmbedConfig::new(space);
    config.landmark_count = l;
    config.seed = seed;
    config.local_landmarks = n_local;
    config.primary_count = primary_count;
    config.refs_per_node = refs_per_node;
    config.objective = objective;

    Embedding::from_parts(space, coords, embedded, landmark_ids, config)
}
