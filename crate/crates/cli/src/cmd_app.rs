use std::io::Write;
use std::time::Instant;

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigel_core::analytics::{centrality_topk, separation_metrics, social_search, topk_overlap};
use rigel_core::{
    bfs_distances, estimate_distance, sample_nodes, Embedding, Graph, NodeId, QueryConfig,
};
use serde_json::json;

use crate::manifest::{default_path, RunManifest};
use crate::util::{load_embedding, load_graph, parse_k_list};
use crate::{AppArgs, AppCommand, CentralityArgs, SearchArgs, SeparationArgs};

pub fn run(args: AppArgs, argv: Vec<String>) -> Result<()> {
    match args.app {
        AppCommand::Separation(a) => separation(a, argv),
        AppCommand::Centrality(a) => centrality(a, argv),
        AppCommand::Search(a) => search(a, argv),
    }
}

fn estimated_fn<'a>(
    graph: &'a Graph,
    embedding: &'a Embedding,
) -> impl Fn(NodeId, NodeId) -> Option<f64> + 'a {
    let config = QueryConfig::default();
    move |u, v| estimate_distance(graph, embedding, u, v, config).ok()
}

/// Sample of embedded nodes.
fn embedded_sample(
    graph: &Graph,
    embedding: &Embedding,
    count: usize,
    seed: u64,
) -> Result<Vec<NodeId>> {
    let sample: Vec<NodeId> = sample_nodes(graph, count.min(graph.node_count()), seed)?
        .into_iter()
        .filter(|&u| embedding.is_embedded(u))
        .collect();
    Ok(sample)
}

fn separation(args: SeparationArgs, argv: Vec<String>) -> Result<()> {
    let t0 = Instant::now();
    let graph = load_graph(&args.graph)?;
    let embedding = load_embedding(&args.embedding)?;
    let sample = embedded_sample(&graph, &embedding, args.sample, args.seed)?;

    let est = separation_metrics(estimated_fn(&graph, &embedding), &sample)?;
    println!(
        "estimated: radius={} diameter={} avg_path_length={:.4} sample_size={} skipped_pairs={}",
        est.radius, est.diameter, est.avg_path_length, est.sample_size, est.skipped_pairs
    );

    let exact = if args.no_oracle {
        None
    } else {
        // One BFS per sample node answers every sample pair exactly.
        let mut cache = std::collections::HashMap::new();
        for &u in &sample {
            cache.insert(u, bfs_distances(&graph, u)?);
        }
        let exact = separation_metrics(|u, v| cache[&u].get(v).map(|d| d as f64), &sample)?;
        println!(
            "exact:     radius={} diameter={} avg_path_length={:.4}",
            exact.radius, exact.diameter, exact.avg_path_length
        );
        println!(
            "delta:     radius={:+.2} diameter={:+.2} avg_path_length={:+.4}",
            est.radius - exact.radius,
            est.diameter - exact.diameter,
            est.avg_path_length - exact.avg_path_length
        );
        Some(exact)
    };

    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "metric,estimated,exact,delta")?;
    let rows = [
        ("radius", est.radius, exact.map(|e| e.radius)),
        ("diameter", est.diameter, exact.map(|e| e.diameter)),
        (
            "avg_path_length",
            est.avg_path_length,
            exact.map(|e| e.avg_path_length),
        ),
    ];
    for (name, e, x) in rows {
        match x {
            Some(x) => writeln!(out, "{name},{e},{x},{}", e - x)?,
            None => writeln!(out, "{name},{e},,")?,
        }
    }
    drop(out);

    let mut manifest = RunManifest::new(
        "app-separation",
        argv,
        json!({
            "embedding": args.embedding.display().to_string(),
            "graph": args.graph.display().to_string(),
            "sample": args.sample,
            "seed": args.seed,
            "oracle": !args.no_oracle,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.time("total", t0.elapsed().as_secs_f64());
    manifest.add_input(&args.embedding)?;
    manifest.add_input(&args.graph)?;
    manifest.add_output(&args.out)?;
    manifest.write(&args.manifest.unwrap_or_else(|| default_path(&args.out)))?;
    Ok(())
}

fn centrality(args: CentralityArgs, argv: Vec<String>) -> Result<()> {
    let t0 = Instant::now();
    let graph = load_graph(&args.graph)?;
    let embedding = load_embedding(&args.embedding)?;
    let ks = parse_k_list(&args.k_list)?;
    let candidates = embedded_sample(&graph, &embedding, args.candidates, args.seed)?;
    let references: Vec<NodeId> = if args.references == 0 {
        (0..graph.node_count() as NodeId)
            .filter(|&u| embedding.is_embedded(u))
            .collect()
    } else {
        embedded_sample(
            &graph,
            &embedding,
            args.references,
            args.seed.wrapping_add(1),
        )?
    };

    // The oracle needs exact distances from every candidate.
    let mut cache = std::collections::HashMap::new();
    for &c in &candidates {
        cache.insert(c, bfs_distances(&graph, c)?);
    }
    let exact_fn = |u: NodeId, v: NodeId| cache[&u].get(v).map(|d| d as f64);

    let k_max = *ks.iter().max().unwrap();
    let k_max = k_max.min(candidates.len());
    let est_rank = centrality_topk(
        estimated_fn(&graph, &embedding),
        &candidates,
        &references,
        k_max,
    )?;
    let exact_rank = centrality_topk(exact_fn, &candidates, &references, k_max)?;

    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "k,overlap")?;
    for &k in &ks {
        if k > k_max {
            continue;
        }
        let overlap = topk_overlap(&est_rank, &exact_rank, k)?;
        writeln!(out, "{k},{overlap}")?;
        println!("centrality top-{k} overlap: {overlap:.3}");
    }
    drop(out);

    let mut manifest = RunManifest::new(
        "app-centrality",
        argv,
        json!({
            "embedding": args.embedding.display().to_string(),
            "graph": args.graph.display().to_string(),
            "candidates": args.candidates,
            "references": args.references,
            "k_list": args.k_list,
            "seed": args.seed,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.time("total", t0.elapsed().as_secs_f64());
    manifest.add_input(&args.embedding)?;
    manifest.add_input(&args.graph)?;
    manifest.add_output(&args.out)?;
    manifest.write(&args.manifest.unwrap_or_else(|| default_path(&args.out)))?;
    Ok(())
}

fn search(args: SearchArgs, argv: Vec<String>) -> Result<()> {
    let t0 = Instant::now();
    let graph = load_graph(&args.graph)?;
    let embedding = load_embedding(&args.embedding)?;
    let ks = parse_k_list(&args.k_list)?;
    let embedded: Vec<NodeId> = (0..graph.node_count() as NodeId)
        .filter(|&u| embedding.is_embedded(u))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut overlap_sum: std::collections::BTreeMap<usize, f64> = Default::default();
    let mut queries_run = 0usize;
    for _ in 0..args.queries {
        let q = embedded[rng.gen_range(0..embedded.len())];
        // Responders sampled without replacement, excluding the query node.
        let mut responders = Vec::with_capacity(args.responders);
        let mut tries = 0;
        while responders.len() < args.responders.min(embedded.len() - 1) && tries < 100_000 {
            tries += 1;
            let r = embedded[rng.gen_range(0..embedded.len())];
            if r != q && !responders.contains(&r) {
                responders.push(r);
            }
        }
        let exact_bfs = bfs_distances(&graph, q)?;
        let exact_fn = |u: NodeId, v: NodeId| {
            debug_assert_eq!(u, q);
            let _ = u;
            exact_bfs.get(v).map(|d| d as f64)
        };
        let k_max = ks.iter().copied().max().unwrap().min(responders.len());
        let est = social_search(estimated_fn(&graph, &embedding), q, &responders, k_max)?;
        let exact = social_search(exact_fn, q, &responders, k_max)?;
        for &k in &ks {
            if k > k_max {
                continue;
            }
            *overlap_sum.entry(k).or_default() += topk_overlap(&est, &exact, k)?;
        }
        queries_run += 1;
    }

    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "k,mean_overlap")?;
    for (&k, &sum) in &overlap_sum {
        let mean = sum / queries_run as f64;
        writeln!(out, "{k},{mean}")?;
        println!("search top-{k} mean overlap over {queries_run} queries: {mean:.3}");
    }
    drop(out);

    let mut manifest = RunManifest::new(
        "app-search",
        argv,
        json!({
            "embedding": args.embedding.display().to_string(),
            "graph": args.graph.display().to_string(),
            "queries": args.queries,
            "responders": args.responders,
            "k_list": args.k_list,
            "seed": args.seed,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.time("total", t0.elapsed().as_secs_f64());
    manifest.add_input(&args.embedding)?;
    manifest.add_input(&args.graph)?;
    manifest.add_output(&args.out)?;
    manifest.write(&args.manifest.unwrap_or_else(|| default_path(&args.out)))?;
    Ok(())
}
