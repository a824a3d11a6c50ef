use std::io::BufWriter;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rigel_core::{embed_graph, save_embedding, EmbedConfig, ObjectiveKind, Space};
use serde_json::json;

use crate::manifest::{default_path, RunManifest};
use crate::util::{load_graph, mode_tag};
use crate::EmbedArgs;

pub fn run(args: EmbedArgs, argv: Vec<String>) -> Result<()> {
    let space = match args.model.as_str() {
        "hyperboloid" => Space::hyperboloid(args.curvature, args.dim)?,
        "euclidean" => Space::euclidean(args.dim)?,
        other => bail!(rigel_core::Error::Argument(format!(
            "unknown model {other:?}"
        ))),
    };

    let t0 = Instant::now();
    let graph = load_graph(&args.graph)?;
    let load_s = t0.elapsed().as_secs_f64();

    let mut config = EmbedConfig::new(space);
    config.landmark_count = args.landmarks;
    config.primary_count = args.primaries;
    config.refs_per_node = args.refs;
    config.local_landmarks = args.local_landmarks;
    config.objective = ObjectiveKind::parse(&args.objective)?;
    config.seed = args.seed;
    config.workers = args.workers;
    config.optimizer.max_iterations = args.opt_max_iters;
    config.optimizer.tolerance = args.opt_tolerance;

    let embedding = embed_graph(&graph, &config)?;
    let stats = &embedding.stats;
    let mode = mode_tag(args.local_landmarks);
    println!(
        "embedded {} of {} nodes ({} excluded) as {mode}",
        stats.embedded_nodes,
        graph.node_count(),
        stats.excluded
    );
    println!(
        "phases: bfs {:.3}s, bootstrap {:.3}s, partitioning {:.3}s, embedding {:.3}s",
        stats.phase1_bfs.as_secs_f64(),
        stats.phase2_bootstrap.as_secs_f64(),
        stats.partitioning.as_secs_f64(),
        stats.phase3_embed.as_secs_f64()
    );

    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut writer = BufWriter::new(file);
    save_embedding(&embedding, &mut writer)?;
    drop(writer);
    println!("embedding -> {}", args.out.display());

    let mut manifest = RunManifest::new(
        "embed",
        argv,
        json!({
            "graph": args.graph.display().to_string(),
            "model": args.model,
            "curvature": args.curvature,
            "dim": args.dim,
            "landmarks": args.landmarks,
            "primaries": args.primaries,
            "refs": args.refs,
            "local_landmarks": args.local_landmarks,
            "objective": args.objective,
            "seed": args.seed,
            "workers": args.workers,
            "opt_max_iters": args.opt_max_iters,
            "opt_tolerance": args.opt_tolerance,
            "excluded": stats.excluded,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.mode = Some(mode);
    manifest.time("load_graph", load_s);
    manifest.time("phase1_bfs", stats.phase1_bfs.as_secs_f64());
    manifest.time("phase2_bootstrap", stats.phase2_bootstrap.as_secs_f64());
    manifest.time("partitioning", stats.partitioning.as_secs_f64());
    manifest.time("phase3_embed", stats.phase3_embed.as_secs_f64());
    manifest.time("total", t0.elapsed().as_secs_f64());
    manifest.add_input(&args.graph)?;
    manifest.add_output(&args.out)?;
    manifest.write(&args.manifest.unwrap_or_else(|| default_path(&args.out)))?;
    Ok(())
}
