//! Constant-time node-distance estimation.
//!
//! A query first applies local path optimization (adjacency and
//! common-neighbor lookups answer 1- and 2-hop pairs exactly), then falls
//! back to the coordinate distance. The hybrid estimator fuses two
//! coordinate sets (one tuned for long distances, one for short) through a
//! per-distance maximum-likelihood model.

use std::io::{BufRead, Write};

use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Distance query options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryConfig {
    /// Answer 1- and 2-hop pairs exactly from adjacency lists before
    /// consulting coordinates.
    pub local_optimization: bool,
}

impl Default for QueryConfig {
    fn default() -> Self {
        QueryConfig {
            local_optimization: true,
        }
    }
}

fn require_embedded(embedding: &Embedding, u: NodeId) -> Result<&[f64]> {
    embedding
        .point(u)
        .ok_or_else(|| Error::Query(format!("node {u} is not covered by the embedding")))
}

/// Estimated hop distance between `u` and `v`.
///
/// Returns 0 for `u == v`; with local optimization, exactly 1 for adjacent
/// pairs and exactly 2 for pairs sharing a neighbor; otherwise the
/// coordinate-space distance.
pub fn estimate_distance(
    graph: &Graph,
    embedding: &Embedding,
    u: NodeId,
    v: NodeId,
    config: QueryConfig,
) -> Result<f64> {
    let pu = require_embedded(embedding, u)?;
    let pv = require_embedded(embedding, v)?;
    if u == v {
        return Ok(0.0);
    }
    if config.local_optimization {
        if graph.are_adjacent(u, v) {
            return Ok(1.0);
        }
        if graph.common_neighbor(u, v).is_some() {
            return Ok(2.0);
        }
    }
    Ok(embedding.space().distance_unchecked(pu, pv))
}

/// Conditional histograms `P(binned estimate | true distance)` for the
/// long-range (`L`) and short-range (`S`) estimators, Laplace-smoothed.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodModel {
    theta_min: u32,
    theta_max: u32,
    bin_width: f64,
    alpha: f64,
    table_l: Vec<Vec<f64>>,
    table_s: Vec<Vec<f64>>,
    /// Holdout sample count per true distance; zero-sample rows fell back
    /// to the smoothed-uniform distribution.
    pub samples: Vec<u64>,
    /// Holdout pairs ignored: outside the theta range or not embedded.
    pub skipped_pairs: usize,
}

impl LikelihoodModel {
    pub fn theta_range(&self) -> (u32, u32) {
        (self.theta_min, self.theta_max)
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn bin_count(&self) -> usize {
        bin_count(self.theta_max, self.bin_width)
    }

    /// Bin index (0-based) of a continuous estimate; the flag reports a
    /// clamp to the learned support.
    fn bin_of(&self, x: f64) -> (usize, bool) {
        let raw = (x / self.bin_width).round() as i64;
        let max = self.bin_count() as i64;
        let clamped = raw.clamp(1, max);
        ((clamped - 1) as usize, clamped != raw)
    }

    pub fn row_l(&self, theta: u32) -> &[f64] {
        &self.table_l[(theta - self.theta_min) as usize]
    }

    pub fn row_s(&self, theta: u32) -> &[f64] {
        &self.table_s[(theta - self.theta_min) as usize]
    }
}

fn bin_count(theta_max: u32, bin_width: f64) -> usize {
    (theta_max as f64 / bin_width).ceil() as usize
}

/// Fits the conditional histograms from holdout pairs `(u, v, true
/// distance)`. Raw coordinate estimates (no local shortcut) from each
/// embedding are binned per true distance; rows are Laplace-smoothed with
/// `alpha` and normalized. The effective distance ceiling is
/// `min(theta_max, largest observed true distance)`.
pub fn fit_likelihood_model(
    _graph: &Graph,
    emb_l: &Embedding,
    emb_s: &Embedding,
    holdout: &[(NodeId, NodeId, u32)],
    theta_max: u32,
    bin_width: f64,
    alpha: f64,
) -> Result<LikelihoodModel> {
    if theta_max < 1 {
        return Err(Error::Argument("theta_max must be at least 1".into()));
    }
    if !bin_width.is_finite() || bin_width <= 0.0 {
        return Err(Error::Argument("bin_width must be positive".into()));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Argument("smoothing alpha must be positive".into()));
    }
    if holdout.is_empty() {
        return Err(Error::Argument("holdout pair list is empty".into()));
    }

    let observed_max = holdout.iter().map(|&(_, _, d)| d).max().unwrap();
    let theta_max = theta_max.min(observed_max.max(1));
    let theta_min = 1u32;
    let bins = bin_count(theta_max, bin_width);
    let thetas = (theta_max - theta_min + 1) as usize;

    let mut counts_l = vec![vec![0u64; bins]; thetas];
    let mut counts_s = vec![vec![0u64; bins]; thetas];
    let mut samples = vec![0u64; thetas];
    let mut skipped = 0usize;

    let raw = QueryConfig {
        local_optimization: false,
    };
    for &(u, v, d) in holdout {
        if d < theta_min || d > theta_max {
            skipped += 1;
            continue;
        }
        let (xl, xs) = match (
            estimate_distance(_graph, emb_l, u, v, raw),
            estimate_distance(_graph, emb_s, u, v, raw),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                skipped += 1;
                continue;
            }
        };
        let row = (d - theta_min) as usize;
        let bl = ((xl / bin_width).round() as i64).clamp(1, bins as i64) as usize - 1;
        let bs = ((xs / bin_width).round() as i64).clamp(1, bins as i64) as usize - 1;
        counts_l[row][bl] += 1;
        counts_s[row][bs] += 1;
        samples[row] += 1;
    }

    let normalize = |counts: Vec<Vec<u64>>| -> Vec<Vec<f64>> {
        counts
            .into_iter()
            .enumerate()
            .map(|(row, c)| {
                let total = samples[row] as f64 + alpha * bins as f64;
                c.into_iter().map(|x| (x as f64 + alpha) / total).collect()
            })
            .collect()
    };

    Ok(LikelihoodModel {
        theta_min,
        theta_max,
        bin_width,
        alpha,
        table_l: normalize(counts_l),
        table_s: normalize(counts_s),
        samples,
        skipped_pairs: skipped,
    })
}

/// Maximum-likelihood distance from the two raw estimates: the theta
/// maximizing `P_L(bin(x_l) | theta) * P_S(bin(x_s) | theta)`, ties toward
/// the smaller theta. The flag reports estimates clamped into the learned
/// bin support.
pub fn mle_estimate_detailed(model: &LikelihoodModel, x_l: f64, x_s: f64) -> (u32, bool) {
    let (bl, cl) = model.bin_of(x_l);
    let (bs, cs) = model.bin_of(x_s);
    let mut best_theta = model.theta_min;
    let mut best = f64::NEG_INFINITY;
    for theta in model.theta_min..=model.theta_max {
        let row = (theta - model.theta_min) as usize;
        let p = model.table_l[row][bl] * model.table_s[row][bs];
        if p > best {
            best = p;
            best_theta = theta;
        }
    }
    (best_theta, cl || cs)
}

/// As [`mle_estimate_detailed`], without the clamp flag.
pub fn mle_estimate(model: &LikelihoodModel, x_l: f64, x_s: f64) -> u32 {
    mle_estimate_detailed(model, x_l, x_s).0
}

/// Hybrid estimate: local path optimization first, then the MLE fusion of
/// the two raw coordinate estimates.
pub fn estimate_distance_hybrid(
    graph: &Graph,
    emb_l: &Embedding,
    emb_s: &Embedding,
    model: &LikelihoodModel,
    u: NodeId,
    v: NodeId,
) -> Result<f64> {
    let pl_u = require_embedded(emb_l, u)?;
    let pl_v = require_embedded(emb_l, v)?;
    let ps_u = require_embedded(emb_s, u)?;
    let ps_v = require_embedded(emb_s, v)?;
    if u == v {
        return Ok(0.0);
    }
    if graph.are_adjacent(u, v) {
        return Ok(1.0);
    }
    if graph.common_neighbor(u, v).is_some() {
        return Ok(2.0);
    }
    let xl = emb_l.space().distance_unchecked(pl_u, pl_v);
    let xs = emb_s.space().distance_unchecked(ps_u, ps_v);
    Ok(mle_estimate(model, xl, xs) as f64)
}

// ---------------------------------------------------------------------------
// Textual model file: a header naming the theta range, bin width and
// smoothing, then one `L|S <theta> <p1> ... <pB>` row per table per theta.
// ---------------------------------------------------------------------------

const MODEL_HEADER: &str = "rigel-likelihood-model v1";

pub fn save_model<W: Write>(model: &LikelihoodModel, sink: &mut W) -> Result<()> {
    writeln!(sink, "{MODEL_HEADER}")?;
    writeln!(sink, "theta_range {} {}", model.theta_min, model.theta_max)?;
    writeln!(sink, "bin_width {}", model.bin_width)?;
    writeln!(sink, "alpha {}", model.alpha)?;
    for (tag, table) in [("L", &model.table_l), ("S", &model.table_s)] {
        for (row, probs) in table.iter().enumerate() {
            write!(sink, "{tag} {}", model.theta_min + row as u32)?;
            for p in probs {
                write!(sink, " {p}")?;
            }
            writeln!(sink)?;
        }
    }
    Ok(())
}

pub fn load_model<R: BufRead>(source: R) -> Result<LikelihoodModel> {
    let mut lines = source.lines().enumerate();
    let mut next_line = |expect: &str| -> Result<(usize, String)> {
        lines
            .next()
            .ok_or_else(|| Error::Format(format!("model file ended before {expect}")))
            .and_then(|(i, l)| Ok((i + 1, l?)))
    };

    let (_, header) = next_line("header")?;
    if header.trim() != MODEL_HEADER {
        return Err(Error::Format(format!("unexpected model header {header:?}")));
    }
    let parse_kv = |line: &str, key: &str, n: usize| -> Result<Vec<f64>> {
        let mut toks = line.split_whitespace();
        if toks.next() != Some(key) {
            return Err(Error::Format(format!("expected {key} line, got {line:?}")));
        }
        let vals: Vec<f64> = toks
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("bad number in {key} line: {e}")))?;
        if vals.len() != n {
            return Err(Error::Format(format!("{key} line needs {n} values")));
        }
        Ok(vals)
    };

    let (_, l1) = next_line("theta_range")?;
    let range = parse_kv(&l1, "theta_range", 2)?;
    let (theta_min, theta_max) = (range[0] as u32, range[1] as u32);
    if theta_min < 1 || theta_max < theta_min {
        return Err(Error::Format("invalid theta range".into()));
    }
    let (_, l2) = next_line("bin_width")?;
    let bin_width = parse_kv(&l2, "bin_width", 1)?[0];
    if !bin_width.is_finite() || bin_width <= 0.0 {
        return Err(Error::Format("bin width must be positive".into()));
    }
    let (_, l3) = next_line("alpha")?;
    let alpha = parse_kv(&l3, "alpha", 1)?[0];

    let thetas = (theta_max - theta_min + 1) as usize;
    let bins = bin_count(theta_max, bin_width);
    let mut table_l = Vec::with_capacity(thetas);
    let mut table_s = Vec::with_capacity(thetas);
    for (tag, table) in [("L", &mut table_l), ("S", &mut table_s)] {
        for t in 0..thetas {
            let (line_no, line) = next_line("probability row")?;
            let mut toks = line.split_whitespace();
            if toks.next() != Some(tag) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected a {tag} row"),
                });
            }
            let theta: u32 =
                toks.next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: "missing theta".into(),
                    })?;
            if theta != theta_min + t as u32 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("rows out of order at theta {theta}"),
                });
            }
            let probs: Vec<f64> = toks
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: line_no,
                    msg: format!("bad probability: {e}"),
                })?;
            if probs.len() != bins {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {bins} probabilities, got {}", probs.len()),
                });
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-6 || probs.iter().any(|&p| p <= 0.0) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("row is not a smoothed distribution (sum {sum})"),
                });
            }
            table.push(probs);
        }
    }

    Ok(LikelihoodModel {
        theta_min,
        theta_max,
        bin_width,
        alpha,
        table_l,
        table_s,
        samples: vec![0; thetas],
        skipped_pairs: 0,
    })
}
