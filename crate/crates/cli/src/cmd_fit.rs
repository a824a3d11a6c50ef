use std::io::BufWriter;
use std::time::Instant;

use anyhow::{Context, Result};
use rigel_core::{fit_likelihood_model, save_model, NodeId};
use serde_json::json;

use crate::manifest::{default_path, RunManifest};
use crate::util::{load_embedding, load_graph, random_pairs, TruthOracle};
use crate::FitModelArgs;

pub fn run(args: FitModelArgs, argv: Vec<String>) -> Result<()> {
    let t0 = Instant::now();
    let graph = load_graph(&args.graph)?;
    let emb_l = load_embedding(&args.l_embedding)?;
    let emb_s = load_embedding(&args.s_embedding)?;

    let mut oracle = TruthOracle::new(&graph);
    let holdout: Vec<(NodeId, NodeId, u32)> = random_pairs(&graph, &emb_l, args.holdout, args.seed)
        .into_iter()
        .filter_map(|(u, v)| oracle.distance(u, v).map(|d| (u, v, d)))
        .collect();

    let model = fit_likelihood_model(
        &graph,
        &emb_l,
        &emb_s,
        &holdout,
        args.theta_max,
        args.bin_width,
        args.alpha,
    )?;
    let (lo, hi) = model.theta_range();
    println!(
        "fitted theta range [{lo}, {hi}] from {} holdout pairs ({} skipped)",
        holdout.len(),
        model.skipped_pairs
    );
    for (i, &s) in model.samples.iter().enumerate() {
        if s == 0 {
            eprintln!(
                "warning: no holdout pairs at distance {}; row is the smoothed uniform",
                lo + i as u32
            );
        }
    }

    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut writer = BufWriter::new(file);
    save_model(&model, &mut writer)?;
    drop(writer);
    println!("model -> {}", args.out.display());

    let mut manifest = RunManifest::new(
        "fit-model",
        argv,
        json!({
            "graph": args.graph.display().to_string(),
            "l_embedding": args.l_embedding.display().to_string(),
            "s_embedding": args.s_embedding.display().to_string(),
            "holdout": args.holdout,
            "seed": args.seed,
            "theta_max": args.theta_max,
            "bin_width": args.bin_width,
            "alpha": args.alpha,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.time("total", t0.elapsed().as_secs_f64());
    manifest.add_input(&args.graph)?;
    manifest.add_input(&args.l_embedding)?;
    manifest.add_input(&args.s_embedding)?;
    manifest.add_output(&args.out)?;
    manifest.write(&args.manifest.unwrap_or_else(|| default_path(&args.out)))?;
    Ok(())
}
