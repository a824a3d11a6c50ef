use std::io::Write;
use std::time::Instant;

use anyhow::{Context, Result};
use rigel_core::{bfs_distances, estimate_distance, QueryConfig};
use serde_json::json;

use crate::manifest::{default_path, RunManifest};
use crate::util::{latency_stats, load_embedding, load_graph, query_mode, random_pairs};
use crate::BenchArgs;

pub fn run(args: BenchArgs, argv: Vec<String>) -> Result<()> {
    let t0 = Instant::now();
    let graph = load_graph(&args.graph)?;
    let embedding = load_embedding(&args.embedding)?;
    let pairs = random_pairs(&graph, &embedding, args.queries, args.seed);
    let config = QueryConfig {
        local_optimization: !args.no_local_opt,
    };
    let mode = query_mode(config.local_optimization);

    // Warm pass.
    let mut acc = 0.0;
    for &(u, v) in pairs.iter().take(pairs.len().min(10_000)) {
        acc += estimate_distance(&graph, &embedding, u, v, config)?;
    }

    let (estimate_mean_us, stats_line, qps) = if args.parallel {
        let workers = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1);
        let t = Instant::now();
        let total: f64 = std::thread::scope(|s| {
            (0..workers)
                .map(|w| {
                    let pairs = &pairs;
                    let graph = &graph;
                    let embedding = &embedding;
                    s.spawn(move || {
                        let mut local = 0.0;
                        let mut i = w;
                        while i < pairs.len() {
                            let (u, v) = pairs[i];
                            local += estimate_distance(graph, embedding, u, v, config)
                                .expect("validated by the warm pass");
                            i += workers;
                        }
                        local
                    })
                })
                .collect::<Vec<_>>()
                .into_iter()
                .map(|h| h.join().expect("bench worker panicked"))
                .sum()
        });
        acc += total;
        let wall = t.elapsed().as_secs_f64();
        let mean_us = wall / pairs.len() as f64 * 1e6;
        let qps = pairs.len() as f64 / wall;
        (
            mean_us,
            format!("throughput {qps:.0} queries/s over {workers} threads"),
            Some(qps),
        )
    } else {
        let t = Instant::now();
        for &(u, v) in &pairs {
            acc += estimate_distance(&graph, &embedding, u, v, config)?;
        }
        let wall = t.elapsed().as_secs_f64();
        let mean_us = wall / pairs.len() as f64 * 1e6;
        // A second, per-query-timed pass for the distribution.
        let mut samples = Vec::with_capacity(pairs.len().min(20_000));
        for &(u, v) in pairs.iter().take(20_000) {
            let t = Instant::now();
            acc += estimate_distance(&graph, &embedding, u, v, config)?;
            samples.push(t.elapsed().as_nanos() as u64);
        }
        let s = latency_stats(samples);
        (
            mean_us,
            format!("median {:.3}us p99 {:.3}us", s.median_us, s.p99_us),
            None,
        )
    };

    let bfs_count = args.bfs_pairs.max(1).min(pairs.len());
    let t = Instant::now();
    for &(u, v) in pairs.iter().take(bfs_count) {
        acc += bfs_distances(&graph, u)?.get(v).unwrap_or(0) as f64;
    }
    let bfs_mean_ms = t.elapsed().as_secs_f64() / bfs_count as f64 * 1e3;
    let speedup = bfs_mean_ms * 1e3 / estimate_mean_us;

    println!("mode: {mode}");
    println!(
        "estimate mean {estimate_mean_us:.3}us ({stats_line}); BFS mean {bfs_mean_ms:.3}ms over {bfs_count} runs; speedup {speedup:.0}x (checksum {acc:.3})"
    );

    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "metric,value")?;
    writeln!(out, "queries,{}", pairs.len())?;
    writeln!(out, "estimate_mean_us,{estimate_mean_us}")?;
    writeln!(out, "bfs_mean_ms,{bfs_mean_ms}")?;
    writeln!(out, "bfs_runs,{bfs_count}")?;
    writeln!(out, "speedup,{speedup}")?;
    if let Some(qps) = qps {
        writeln!(out, "throughput_qps,{qps}")?;
    }
    drop(out);

    let mut manifest = RunManifest::new(
        "bench",
        argv,
        json!({
            "embedding": args.embedding.display().to_string(),
            "graph": args.graph.display().to_string(),
            "queries": args.queries,
            "bfs_pairs": args.bfs_pairs,
            "seed": args.seed,
            "local_optimization": config.local_optimization,
            "parallel": args.parallel,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.mode = Some(mode.to_string());
    manifest.time("estimate_mean_us", estimate_mean_us);
    manifest.time("bfs_mean_ms", bfs_mean_ms);
    manifest.time("total", t0.elapsed().as_secs_f64());
    manifest.add_input(&args.embedding)?;
    manifest.add_input(&args.graph)?;
    manifest.add_output(&args.out)?;
    manifest.write(&args.manifest.unwrap_or_else(|| default_path(&args.out)))?;
    Ok(())
}
