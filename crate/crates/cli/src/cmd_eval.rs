use std::io::Write;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rigel_core::analytics::{bucketed_errors, error_metrics};
use rigel_core::{
    embed_graph, estimate_distance, estimate_distance_hybrid, EmbedConfig, Embedding, Graph,
    NodeId, QueryConfig, Space,
};
use serde_json::json;

use crate::manifest::{default_path, RunManifest};
use crate::util::{load_embedding, load_graph, query_mode, random_pairs, TruthOracle};
use crate::EvalArgs;

/// Sampled pairs with their exact distances; unreachable pairs are dropped
/// and counted.
fn pairs_with_truth(
    graph: &Graph,
    embedding: &Embedding,
    count: usize,
    seed: u64,
) -> (Vec<(NodeId, NodeId, u32)>, usize) {
    let mut oracle = TruthOracle::new(graph);
    let mut out = Vec::with_capacity(count);
    let mut skipped = 0usize;
    for (u, v) in random_pairs(graph, embedding, count, seed) {
        match oracle.distance(u, v) {
            Some(d) => out.push((u, v, d)),
            None => skipped += 1,
        }
    }
    (out, skipped)
}

pub fn run(args: EvalArgs, argv: Vec<String>) -> Result<()> {
    let t0 = Instant::now();
    let graph = load_graph(&args.graph)?;
    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut out = std::io::BufWriter::new(file);

    let mut manifest = RunManifest::new(
        "eval",
        argv,
        json!({
            "embedding": args.embedding.as_ref().map(|p| p.display().to_string()),
            "graph": args.graph.display().to_string(),
            "pairs": args.pairs,
            "seed": args.seed,
            "local_optimization": !args.no_local_opt,
            "hybrid": args.hybrid.as_ref().map(|p| p.display().to_string()),
            "s_embedding": args.s_embedding.as_ref().map(|p| p.display().to_string()),
            "sweep_curvature": args.sweep_curvature,
            "landmarks": args.landmarks,
            "dim": args.dim,
            "local_landmarks": args.local_landmarks,
            "embed_seed": args.embed_seed,
            "workers": args.workers,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.add_input(&args.graph)?;

    if let Some(spec) = &args.sweep_curvature {
        // Embed per curvature (0 means the Euclidean comparator) and
        // report overall error metrics per point.
        let curvatures: Vec<f64> = spec
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| rigel_core::Error::Argument(format!("bad curvature list: {e}")))?;
        writeln!(out, "curvature,model,are,aae,aer,acr,aspd,sd,pairs")?;
        for &c in &curvatures {
            let space = if c == 0.0 {
                Space::euclidean(args.dim)?
            } else {
                Space::hyperboloid(c, args.dim)?
            };
            let mut config = EmbedConfig::new(space);
            config.landmark_count = args.landmarks;
            config.local_landmarks = args.local_landmarks;
            config.seed = args.embed_seed;
            config.workers = args.workers;
            let embedding = embed_graph(&graph, &config)?;
            let (pairs, _) = pairs_with_truth(&graph, &embedding, args.pairs, args.seed);
            let qc = QueryConfig {
                local_optimization: !args.no_local_opt,
            };
            let observed: Vec<(f64, f64)> = pairs
                .iter()
                .map(|&(u, v, d)| {
                    let e = estimate_distance(&graph, &embedding, u, v, qc).expect("embedded");
                    (e.max(1e-12), d as f64)
                })
                .collect();
            let m = error_metrics(&observed)?;
            writeln!(
                out,
                "{c},{},{},{},{},{},{},{},{}",
                space.model().as_str(),
                m.are,
                m.aae,
                m.aer,
                m.acr,
                m.aspd,
                m.sd,
                m.pair_count
            )?;
            println!(
                "curvature {c} ({}): are={:.4} aae={:.4}",
                space.model().as_str(),
                m.are,
                m.aae
            );
        }
        drop(out);
        manifest.time("total", t0.elapsed().as_secs_f64());
        manifest.add_output(&args.out)?;
        manifest.write(&args.manifest.unwrap_or_else(|| default_path(&args.out)))?;
        return Ok(());
    }

    let Some(embedding_path) = &args.embedding else {
        bail!(rigel_core::Error::Argument(
            "--embedding is required unless --sweep-curvature is given".into()
        ));
    };
    let embedding = load_embedding(embedding_path)?;
    manifest.add_input(embedding_path)?;
    let (pairs, skipped) = pairs_with_truth(&graph, &embedding, args.pairs, args.seed);
    let qc = QueryConfig {
        local_optimization: !args.no_local_opt,
    };
    let mode = query_mode(qc.local_optimization);
    manifest.mode = Some(mode.to_string());

    writeln!(out, "method,distance,count,aae,are")?;
    let write_bucketed =
        |out: &mut dyn Write, method: &str, observed: &[(f64, u32)]| -> Result<()> {
            for b in bucketed_errors(observed) {
                writeln!(
                    out,
                    "{method},{},{},{},{}",
                    b.distance, b.count, b.aae, b.are
                )?;
            }
            Ok(())
        };

    if let Some(model_path) = &args.hybrid {
        let Some(s_path) = &args.s_embedding else {
            bail!(rigel_core::Error::Argument(
                "--hybrid requires --s-embedding".into()
            ));
        };
        let s_embedding = load_embedding(s_path)?;
        let model = {
            let file = std::fs::File::open(model_path)
                .with_context(|| format!("cannot open model {}", model_path.display()))?;
            rigel_core::load_model(std::io::BufReader::new(file))?
        };
        manifest.add_input(model_path)?;
        manifest.add_input(s_path)?;

        let raw = QueryConfig {
            local_optimization: false,
        };
        let mut l_obs = Vec::new();
        let mut s_obs = Vec::new();
        let mut h_obs = Vec::new();
        for &(u, v, d) in &pairs {
            if !s_embedding.is_embedded(u) || !s_embedding.is_embedded(v) {
                continue;
            }
            l_obs.push((estimate_distance(&graph, &embedding, u, v, raw)?, d));
            s_obs.push((estimate_distance(&graph, &s_embedding, u, v, raw)?, d));
            h_obs.push((
                estimate_distance_hybrid(&graph, &embedding, &s_embedding, &model, u, v)?,
                d,
            ));
        }
        write_bucketed(&mut out, "l", &l_obs)?;
        write_bucketed(&mut out, "s", &s_obs)?;
        write_bucketed(&mut out, "hybrid", &h_obs)?;
        let overall = error_metrics(
            &h_obs
                .iter()
                .map(|&(e, d)| (e.max(1e-12), d as f64))
                .collect::<Vec<_>>(),
        )?;
        println!(
            "hybrid over {} pairs ({} skipped): are={:.4} aae={:.4} aer={:.4} acr={:.4} aspd={:.4} sd={:.4}",
            overall.pair_count, skipped, overall.are, overall.aae, overall.aer, overall.acr,
            overall.aspd, overall.sd
        );
    } else {
        let observed: Vec<(f64, u32)> = pairs
            .iter()
            .map(|&(u, v, d)| {
                let e = estimate_distance(&graph, &embedding, u, v, qc).expect("embedded");
                (e, d)
            })
            .collect();
        write_bucketed(
            &mut out,
            if qc.local_optimization {
                "rigel"
            } else {
                "rigel-s"
            },
            &observed,
        )?;
        let overall = error_metrics(
            &observed
                .iter()
                .map(|&(e, d)| (e.max(1e-12), d as f64))
                .collect::<Vec<_>>(),
        )?;
        println!("mode: {mode}");
        println!(
            "are={:.6} aae={:.6} aer={:.6} acr={:.6} aspd={:.6} sd={:.6} pair_count={} skipped={}",
            overall.are,
            overall.aae,
            overall.aer,
            overall.acr,
            overall.aspd,
            overall.sd,
            overall.pair_count,
            skipped
        );
    }
    drop(out);

    manifest.time("total", t0.elapsed().as_secs_f64());
    manifest.add_output(&args.out)?;
    manifest.write(&args.manifest.unwrap_or_else(|| default_path(&args.out)))?;
    Ok(())
}
