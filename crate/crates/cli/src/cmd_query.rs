use std::io::Write;
use std::time::Instant;

use anyhow::{Context, Result};
use rigel_core::{estimate_distance, QueryConfig};
use serde_json::json;

use crate::manifest::{default_path, RunManifest};
use crate::util::{
    latency_stats, load_embedding, load_graph, query_mode, resolve_pairs, TruthOracle,
};
use crate::QueryArgs;

pub fn run(args: QueryArgs, argv: Vec<String>) -> Result<()> {
    let t0 = Instant::now();
    let graph = load_graph(&args.graph)?;
    let embedding = load_embedding(&args.embedding)?;
    let pairs = resolve_pairs(
        &graph,
        &embedding,
        args.pairs.as_deref(),
        args.random,
        args.seed,
    )?;
    let config = QueryConfig {
        local_optimization: !args.no_local_opt,
    };
    let mode = query_mode(config.local_optimization);

    // Warm pass; also catches query errors before timing.
    let warm = pairs.len().min(1000);
    for &(u, v) in pairs.iter().take(warm) {
        estimate_distance(&graph, &embedding, u, v, config)?;
    }

    let mut estimates = Vec::with_capacity(pairs.len());
    let mut sample_ns = Vec::with_capacity(pairs.len());
    let t_batch = Instant::now();
    if args.parallel {
        let workers = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1);
        let results: Vec<Vec<(usize, f64)>> = std::thread::scope(|s| {
            (0..workers)
                .map(|w| {
                    let pairs = &pairs;
                    let graph = &graph;
                    let embedding = &embedding;
                    s.spawn(move || {
                        let mut part = Vec::new();
                        let mut i = w;
                        while i < pairs.len() {
                            let (u, v) = pairs[i];
                            let e = estimate_distance(graph, embedding, u, v, config)
                                .expect("pairs validated by the warm pass");
                            part.push((i, e));
                            i += workers;
                        }
                        part
                    })
                })
                .collect::<Vec<_>>()
                .into_iter()
                .map(|h| h.join().expect("query worker panicked"))
                .collect()
        });
        estimates = vec![0.0; pairs.len()];
        for part in results {
            for (i, e) in part {
                estimates[i] = e;
            }
        }
    } else {
        for &(u, v) in &pairs {
            let t = Instant::now();
            let e = estimate_distance(&graph, &embedding, u, v, config)?;
            sample_ns.push(t.elapsed().as_nanos() as u64);
            estimates.push(e);
        }
    }
    let batch_s = t_batch.elapsed().as_secs_f64();

    let mut truths = Vec::new();
    if args.exact {
        let mut oracle = TruthOracle::new(&graph);
        for &(u, v) in &pairs {
            truths.push(oracle.distance(u, v));
        }
    }

    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut out = std::io::BufWriter::new(file);
    if args.exact {
        writeln!(out, "u,v,estimate,truth,abs_error")?;
    } else {
        writeln!(out, "u,v,estimate")?;
    }
    for (i, &(u, v)) in pairs.iter().enumerate() {
        if args.exact {
            match truths[i] {
                Some(t) => writeln!(
                    out,
                    "{},{},{},{},{}",
                    graph.label(u),
                    graph.label(v),
                    estimates[i],
                    t,
                    (estimates[i] - t as f64).abs()
                )?,
                None => writeln!(
                    out,
                    "{},{},{},unreachable,",
                    graph.label(u),
                    graph.label(v),
                    estimates[i]
                )?,
            }
        } else {
            writeln!(
                out,
                "{},{},{}",
                graph.label(u),
                graph.label(v),
                estimates[i]
            )?;
        }
    }
    drop(out);

    println!("mode: {mode}");
    println!("{} queries -> {}", pairs.len(), args.out.display());
    let mut manifest = RunManifest::new(
        "query",
        argv,
        json!({
            "embedding": args.embedding.display().to_string(),
            "graph": args.graph.display().to_string(),
            "pairs": args.pairs,
            "random": args.random,
            "seed": args.seed,
            "exact": args.exact,
            "local_optimization": config.local_optimization,
            "parallel": args.parallel,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.mode = Some(mode.to_string());
    if args.parallel {
        let qps = pairs.len() as f64 / batch_s;
        println!("throughput: {qps:.0} queries/s over {batch_s:.3}s");
        manifest.time("batch", batch_s);
    } else {
        let stats = latency_stats(sample_ns);
        println!(
            "latency: mean {:.3}us, median {:.3}us, p99 {:.3}us",
            stats.mean_us, stats.median_us, stats.p99_us
        );
        manifest.time("latency_mean_us", stats.mean_us);
        manifest.time("latency_median_us", stats.median_us);
        manifest.time("latency_p99_us", stats.p99_us);
    }
    manifest.time("total", t0.elapsed().as_secs_f64());
    manifest.add_input(&args.embedding)?;
    manifest.add_input(&args.graph)?;
    manifest.add_output(&args.out)?;
    manifest.write(&args.manifest.unwrap_or_else(|| default_path(&args.out)))?;
    Ok(())
}
