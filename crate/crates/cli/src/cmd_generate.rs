use std::time::Instant;

use anyhow::{bail, Context, Result};
use rigel_core::synth;
use serde_json::json;

use crate::manifest::{default_path, RunManifest};
use crate::GenerateArgs;

fn need(value: Option<usize>, name: &str, kind: &str) -> Result<usize> {
    value.ok_or_else(|| {
        anyhow::anyhow!(rigel_core::Error::Argument(format!(
            "--{name} is required for {kind}"
        )))
    })
}

pub fn run(args: GenerateArgs, argv: Vec<String>) -> Result<()> {
    let t0 = Instant::now();
    let (node_count, edges) = match args.kind.as_str() {
        "path" => {
            let n = need(args.nodes, "nodes", "path")?;
            (n, synth::path(n)?)
        }
        "star" => {
            let n = need(args.nodes, "nodes", "star")?;
            (n, synth::star(n)?)
        }
        "grid" => {
            let rows = need(args.rows, "rows", "grid")?;
            let cols = need(args.cols, "cols", "grid")?;
            (rows * cols, synth::grid(rows, cols)?)
        }
        "smallworld" => {
            let n = need(args.nodes, "nodes", "smallworld")?;
            let k = need(args.k, "k", "smallworld")?;
            let p = args.p.ok_or_else(|| {
                anyhow::anyhow!(rigel_core::Error::Argument(
                    "--p is required for smallworld".into()
                ))
            })?;
            (n, synth::smallworld(n, k, p, args.seed)?)
        }
        "scalefree" => {
            let n = need(args.nodes, "nodes", "scalefree")?;
            let m = need(args.m, "m", "scalefree")?;
            (n, synth::scalefree(n, m, args.seed)?)
        }
        other => bail!(rigel_core::Error::Argument(format!(
            "unknown graph kind {other:?}"
        ))),
    };

    let text = synth::render_edge_list(&edges);
    std::fs::write(&args.out, &text)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!(
        "generated {} graph: {node_count} nodes, {} edges -> {}",
        args.kind,
        edges.len(),
        args.out.display()
    );
    if let Some(cache) = &args.cache {
        // The cache mirrors the edge-list file, so both load into the same
        // internal id space (labels intern in first-appearance order).
        let (graph, _) = rigel_core::load_edge_list(std::io::Cursor::new(&text))?;
        let file = std::fs::File::create(cache)
            .with_context(|| format!("cannot create {}", cache.display()))?;
        let mut writer = std::io::BufWriter::new(file);
        graph.write_binary(&mut writer)?;
        println!("binary cache -> {}", cache.display());
    }

    let mut manifest = RunManifest::new(
        "generate",
        argv,
        json!({
            "kind": args.kind,
            "nodes": args.nodes,
            "rows": args.rows,
            "cols": args.cols,
            "k": args.k,
            "p": args.p,
            "m": args.m,
            "seed": args.seed,
            "out": args.out.display().to_string(),
            "cache": args.cache.as_ref().map(|p| p.display().to_string()),
        }),
    );
    manifest.time("total", t0.elapsed().as_secs_f64());
    manifest.add_output(&args.out)?;
    if let Some(cache) = &args.cache {
        manifest.add_output(cache)?;
    }
    manifest.write(&args.manifest.unwrap_or_else(|| default_path(&args.out)))?;
    Ok(())
}
