//! Distortion metrics and the three distance-driven applications:
//! separation metrics, centrality ranking and distance-ranked social
//! search. Every operation takes the distance function as a closure so the
//! same protocol runs against estimates and against the BFS oracle.

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Aggregate distortion metrics over (estimate, truth) pairs.
///
/// ARE/AAE are mean relative/absolute errors. AER averages `est/truth` over
/// expanding pairs, ACR averages `truth/est` over contracting pairs, ASPD
/// averages the per-pair worst ratio, and SD multiplies the worst expansion
/// by the worst contraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub are: f64,
    pub aae: f64,
    pub aer: f64,
    pub acr: f64,
    pub aspd: f64,
    pub sd: f64,
    pub pair_count: usize,
}

/// Radius, diameter and average path length over a node sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationReport {
    pub radius: f64,
    pub diameter: f64,
    pub avg_path_length: f64,
    /// Nodes of the sample that produced at least one finite distance.
    pub sample_size: usize,
    /// Unordered pairs skipped because the distance function had no answer.
    pub skipped_pairs: usize,
}

/// Distortion metrics over `(estimate, truth)` pairs.
/// Estimates must be positive and truths at least 1.
pub fn error_metrics(pairs: &[(f64, f64)]) -> Result<MetricsReport> {
    if pairs.is_empty() {
        return Err(Error::Argument(
            "error_metrics needs at least one pair".into(),
        ));
    }
    for &(est, truth) in pairs {
        // NaN fails both checks and is rejected too.
        let valid = est.is_finite() && est > 0.0 && truth.is_finite() && truth >= 1.0;
        if !valid {
            return Err(Error::Argument(format!(
                "pairs must satisfy estimate > 0 and truth >= 1, got ({est}, {truth})"
            )));
        }
    }
    let n = pairs.len() as f64;
    let mut are = 0.0;
    let mut aae = 0.0;
    let mut expansion_sum = 0.0;
    let mut expansion_count = 0usize;
    let mut contraction_sum = 0.0;
    let mut contraction_count = 0usize;
    let mut aspd = 0.0;
    let mut worst_expansion = 1.0f64;
    let mut worst_contraction = 1.0f64;

    for &(est, truth) in pairs {
        are += (est - truth).abs() / truth;
        aae += (est - truth).abs();
        let ratio = est / truth;
        if est >= truth {
            expansion_sum += ratio;
            expansion_count += 1;
        } else {
            contraction_sum += 1.0 / ratio;
            contraction_count += 1;
        }
        aspd += ratio.max(1.0 / ratio);
        worst_expansion = worst_expansion.max(ratio);
        worst_contraction = worst_contraction.max(1.0 / ratio);
    }

    Ok(MetricsReport {
        are: are / n,
        aae: aae / n,
        aer: if expansion_count > 0 {
            expansion_sum / expansion_count as f64
        } else {
            1.0
        },
        acr: if contraction_count > 0 {
            contraction_sum / contraction_count as f64
        } else {
            1.0
        },
        aspd: aspd / n,
        sd: worst_expansion * worst_contraction,
        pair_count: pairs.len(),
    })
}

/// Separation metrics over a node sample: eccentricity is a node's largest
/// distance to any other sample node; radius and diameter are the smallest
/// and largest eccentricities; the average runs over unordered pairs.
/// Pairs the distance function cannot answer are skipped and counted.
pub fn separation_metrics<F>(distance: F, sample: &[NodeId]) -> Result<SeparationReport>
where
    F: Fn(NodeId, NodeId) -> Option<f64>,
{
    if sample.len() < 2 {
        return Err(Error::Argument(
            "separation metrics need a sample of at least 2".into(),
        ));
    }
    let n = sample.len();
    let mut ecc = vec![f64::NEG_INFINITY; n];
    let mut pair_sum = 0.0;
    let mut pair_count = 0usize;
    let mut skipped = 0usize;

    for i in 0..n {
        for j in (i + 1)..n {
            match distance(sample[i], sample[j]) {
                Some(d) => {
                    ecc[i] = ecc[i].max(d);
                    ecc[j] = ecc[j].max(d);
                    pair_sum += d;
                    pair_count += 1;
                }
                None => skipped += 1,
            }
        }
    }

    let usable: Vec<f64> = ecc.into_iter().filter(|e| e.is_finite()).collect();
    if usable.is_empty() || pair_count == 0 {
        return Err(Error::Argument(
            "no sample pair produced a finite distance".into(),
        ));
    }
    let radius = usable.iter().copied().fold(f64::INFINITY, f64::min);
    let diameter = usable.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SeparationReport {
        radius,
        diameter,
        avg_path_length: pair_sum / pair_count as f64,
        sample_size: usable.len(),
        skipped_pairs: skipped,
    })
}

/// Mean distance from `u` to the reference set, skipping `u` itself and
/// unanswerable references. `None` when nothing was answerable.
fn mean_distance<F>(distance: &F, u: NodeId, references: &[NodeId]) -> Option<f64>
where
    F: Fn(NodeId, NodeId) -> Option<f64>,
{
    let mut sum = 0.0;
    let mut count = 0usize;
    for &r in references {
        if r == u {
            continue;
        }
        if let Some(d) = distance(u, r) {
            sum += d;
            count += 1;
        }
    }
    if count > 0 {
        Some(sum / count as f64)
    } else {
        None
    }
}

/// Top-`k` candidates by ascending mean distance to the reference set,
/// ties broken by id. Candidates with no answerable reference sort last.
pub fn centrality_topk<F>(
    distance: F,
    candidates: &[NodeId],
    references: &[NodeId],
    k: usize,
) -> Result<Vec<NodeId>>
where
    F: Fn(NodeId, NodeId) -> Option<f64>,
{
    if references.is_empty() {
        return Err(Error::Argument(
            "centrality needs a non-empty reference set".into(),
        ));
    }
    if k > candidates.len() {
        return Err(Error::Argument(format!(
            "k={k} exceeds the {} candidates",
            candidates.len()
        )));
    }
    let mut scored: Vec<(f64, NodeId)> = candidates
        .iter()
        .map(|&c| {
            (
                mean_distance(&distance, c, references).unwrap_or(f64::INFINITY),
                c,
            )
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().take(k).map(|(_, c)| c).collect())
}

/// Top-`k` responders by ascending distance to the query node, ties by id.
pub fn social_search<F>(
    distance: F,
    query_node: NodeId,
    responders: &[NodeId],
    k: usize,
) -> Result<Vec<NodeId>>
where
    F: Fn(NodeId, NodeId) -> Option<f64>,
{
    if k > responders.len() {
        return Err(Error::Argument(format!(
            "k={k} exceeds the {} responders",
            responders.len()
        )));
    }
    let mut scored: Vec<(f64, NodeId)> = responders
        .iter()
        .map(|&r| (distance(query_node, r).unwrap_or(f64::INFINITY), r))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().take(k).map(|(_, r)| r).collect())
}

/// `|set(a[..k]) ∩ set(b[..k])| / k`.
pub fn topk_overlap(a: &[NodeId], b: &[NodeId], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    if a.len() < k || b.len() < k {
        return Err(Error::Argument(format!(
            "both lists need at least k={k} entries, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let sa: std::collections::HashSet<NodeId> = a[..k].iter().copied().collect();
    let overlap = b[..k].iter().filter(|x| sa.contains(x)).count();
    Ok(overlap as f64 / k as f64)
}

/// Per-true-distance error breakdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBucket {
    pub distance: u32,
    pub count: usize,
    pub aae: f64,
    pub are: f64,
}

/// Buckets `(estimate, true distance)` pairs by true distance and reports
/// the mean absolute and relative error per bucket, ascending.
pub fn bucketed_errors(pairs: &[(f64, u32)]) -> Vec<DistanceBucket> {
    let mut by_distance: std::collections::BTreeMap<u32, (usize, f64)> = Default::default();
    for &(est, truth) in pairs {
        let e = by_distance.entry(truth).or_default();
        e.0 += 1;
        e.1 += (est - truth as f64).abs();
    }
    by_distance
        .into_iter()
        .map(|(distance, (count, abs_sum))| DistanceBucket {
            distance,
            count,
            aae: abs_sum / count as f64,
            are: abs_sum / count as f64 / distance.max(1) as f64,
        })
        .collect()
}
