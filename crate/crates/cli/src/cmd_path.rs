use std::io::Write;
use std::time::Instant;

use anyhow::{Context, Result};
use rigel_core::{find_path, PathConfig};
use serde_json::json;

use crate::manifest::{default_path, RunManifest};
use crate::util::{load_embedding, load_graph, resolve_pairs, TruthOracle};
use crate::PathArgs;

pub fn run(args: PathArgs, argv: Vec<String>) -> Result<()> {
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
    let config = PathConfig {
        delta: args.delta,
        c_max: args.cmax,
        max_hops: args.max_hops,
        relax_retry: !args.no_retry,
    };

    let mut oracle = args.oracle.then(|| TruthOracle::new(&graph));
    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "a,b,found,length,hops_explored,bfs_length,exact")?;

    let mut failures = 0usize;
    let mut exact_count = 0usize;
    let mut checked = 0usize;
    let mut error_hist: std::collections::BTreeMap<u32, usize> = Default::default();
    for &(a, b) in &pairs {
        let result = if a == b {
            None
        } else {
            find_path(&graph, &embedding, a, b, &config)?
        };
        match result {
            Some(mut r) => {
                // Returned paths are always validated.
                assert_eq!(r.path.first(), Some(&a));
                assert_eq!(r.path.last(), Some(&b));
                for w in r.path.windows(2) {
                    assert!(graph.are_adjacent(w[0], w[1]), "invalid walk returned");
                }
                let len = r.path.len() - 1;
                let (bfs_s, exact_s) = match oracle.as_mut() {
                    Some(o) => match o.distance(a, b) {
                        Some(t) => {
                            r.exact = Some(len == t as usize);
                            checked += 1;
                            if len == t as usize {
                                exact_count += 1;
                            }
                            *error_hist.entry(len as u32 - t).or_default() += 1;
                            (t.to_string(), (len == t as usize).to_string())
                        }
                        None => ("unreachable".into(), String::new()),
                    },
                    None => (String::new(), String::new()),
                };
                writeln!(
                    out,
                    "{},{},true,{},{},{},{}",
                    graph.label(a),
                    graph.label(b),
                    len,
                    r.hops_explored,
                    bfs_s,
                    exact_s
                )?;
            }
            None => {
                failures += 1;
                writeln!(out, "{},{},false,,,,", graph.label(a), graph.label(b))?;
            }
        }
    }
    drop(out);

    println!("{} path queries -> {}", pairs.len(), args.out.display());
    println!(
        "failures: {failures} ({:.2}%)",
        100.0 * failures as f64 / pairs.len() as f64
    );
    if args.oracle && checked > 0 {
        println!(
            "exact: {exact_count}/{checked} ({:.2}%), absolute-error histogram (extra hops -> count): {error_hist:?}",
            100.0 * exact_count as f64 / checked as f64
        );
    }

    let mut manifest = RunManifest::new(
        "path",
        argv,
        json!({
            "embedding": args.embedding.display().to_string(),
            "graph": args.graph.display().to_string(),
            "pairs": args.pairs,
            "random": args.random,
            "seed": args.seed,
            "delta": args.delta,
            "cmax": args.cmax,
            "max_hops": args.max_hops,
            "relax_retry": !args.no_retry,
            "oracle": args.oracle,
            "failures": failures,
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
