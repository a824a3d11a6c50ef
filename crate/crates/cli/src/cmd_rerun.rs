use std::path::Path;

use anyhow::{bail, Result};

use crate::manifest::{sha256_file, RunManifest};
use crate::RerunArgs;

pub fn run(args: RerunArgs) -> Result<()> {
    let manifest = RunManifest::read(&args.manifest)?;
    if manifest.command == "rerun" {
        bail!(rigel_core::Error::Argument(
            "refusing to rerun a rerun manifest".into()
        ));
    }

    // Flag drifted inputs before re-executing.
    for input in &manifest.inputs {
        let path = Path::new(&input.path);
        if !path.exists() {
            bail!("input {} from the manifest no longer exists", input.path);
        }
        let now = sha256_file(path)?;
        if now != input.sha256 {
            eprintln!(
                "warning: input {} changed since the recorded run (sha256 {} -> {})",
                input.path, input.sha256, now
            );
        }
    }

    println!("re-executing: rigel {}", manifest.argv.join(" "));
    crate::dispatch_argv(manifest.argv.clone())?;

    if args.verify {
        let mut mismatched = 0usize;
        for output in &manifest.outputs {
            let now = sha256_file(Path::new(&output.path))?;
            if now == output.sha256 {
                println!("verified {}", output.path);
            } else {
                eprintln!(
                    "MISMATCH {} (recorded {}, reproduced {})",
                    output.path, output.sha256, now
                );
                mismatched += 1;
            }
        }
        if mismatched > 0 {
            bail!("{mismatched} output(s) did not reproduce bitwise");
        }
        println!(
            "all {} output(s) reproduced bitwise",
            manifest.outputs.len()
        );
    }
    Ok(())
}
