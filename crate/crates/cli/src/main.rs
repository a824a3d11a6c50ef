//! `rigel`, a graph coordinate system workbench.
//!
//! Embeds graphs into hyperbolic (or Euclidean) coordinate spaces, answers
//! node-distance and shortest-path queries from the coordinates, and runs
//! the distance-driven analytics with BFS-oracle accuracy checks. Every
//! data-producing run writes a manifest that `rigel rerun` can re-execute
//! and verify bit for bit.

mod cmd_app;
mod cmd_bench;
mod cmd_embed;
mod cmd_eval;
mod cmd_fit;
mod cmd_generate;
mod cmd_path;
mod cmd_query;
mod cmd_rerun;
mod manifest;
mod util;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "rigel",
    version,
    about = "Graph coordinate system: constant-time distance and path queries over embedded graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph as an edge-list file
    Generate(GenerateArgs),
    /// Embed a graph into a coordinate space (three parallel phases)
    Embed(EmbedArgs),
    /// Estimate node distances, with per-query latency statistics
    Query(QueryArgs),
    /// Find paths guided by the coordinate space
    Path(PathArgs),
    /// Error metrics bucketed by true distance; curvature sweeps; hybrid
    Eval(EvalArgs),
    /// Fit the two-coordinate-set maximum-likelihood model
    FitModel(FitModelArgs),
    /// Separation metrics, centrality and social search vs the BFS oracle
    App(AppArgs),
    /// Estimate-vs-BFS latency benchmark
    Bench(BenchArgs),
    /// Re-execute a recorded manifest, optionally verifying output digests
    Rerun(RerunArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Graph family: path | star | grid | smallworld | scalefree
    #[arg(long)]
    pub kind: String,
    /// Node count (path, star, smallworld, scalefree)
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    /// Ring-lattice degree for smallworld (even)
    #[arg(long)]
    pub k: Option<usize>,
    /// Rewiring probability for smallworld
    #[arg(long)]
    pub p: Option<f64>,
    /// Edges per new node for scalefree
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the binary adjacency cache (RGL1) here
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// hyperboloid | euclidean
    #[arg(long, default_value = "hyperboloid")]
    pub model: String,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub curvature: f64,
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    #[arg(long, default_value_t = 100)]
    pub landmarks: usize,
    #[arg(long, default_value_t = 16)]
    pub primaries: usize,
    /// References each node calibrates against
    #[arg(long, default_value_t = 16)]
    pub refs: usize,
    /// 1-hop local landmarks per node (0 = "Raw Rigel")
    #[arg(long, default_value_t = 1)]
    pub local_landmarks: usize,
    /// squared-abs | abs | squared-rel
    #[arg(long, default_value = "squared-abs")]
    pub objective: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the BFS and embedding phases
    #[arg(long, default_value_t = default_workers())]
    pub workers: usize,
    /// Simplex iteration budget per placement (default 500 x dimension)
    #[arg(long)]
    pub opt_max_iters: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    pub opt_tolerance: f64,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    /// Semicolon-separated node-label pairs, e.g. "0 5;12 9"
    #[arg(long)]
    pub pairs: Option<String>,
    /// Sample this many random embedded pairs instead
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add exact BFS distances and error columns
    #[arg(long)]
    pub exact: bool,
    /// Disable the 1/2-hop shortcut ("Rigel-S" mode)
    #[arg(long)]
    pub no_local_opt: bool,
    /// Time the batch across all cores (throughput mode)
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct PathArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub pairs: Option<String>,
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Admission slack
    #[arg(long, default_value_t = 0.3)]
    pub delta: f64,
    /// Candidates kept per hop
    #[arg(long, default_value_t = 30)]
    pub cmax: usize,
    /// Hop budget (default 2 x ceil(estimate) + 2)
    #[arg(long)]
    pub max_hops: Option<usize>,
    /// Give up after the first dead end instead of retrying relaxed
    #[arg(long)]
    pub no_retry: bool,
    /// Check returned paths against the BFS oracle
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Embedding under evaluation (the L-coordinates with --hybrid)
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Disable the 1/2-hop shortcut ("Rigel-S" mode)
    #[arg(long)]
    pub no_local_opt: bool,
    /// Likelihood model file; enables hybrid evaluation
    #[arg(long)]
    pub hybrid: Option<PathBuf>,
    /// Short-range coordinate set for --hybrid
    #[arg(long)]
    pub s_embedding: Option<PathBuf>,
    /// Comma-separated curvature list; 0 evaluates the Euclidean model
    #[arg(long, allow_hyphen_values = true)]
    pub sweep_curvature: Option<String>,
    /// Embedding parameters used by --sweep-curvature
    #[arg(long, default_value_t = 100)]
    pub landmarks: usize,
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    #[arg(long, default_value_t = 1)]
    pub local_landmarks: usize,
    #[arg(long, default_value_t = 0)]
    pub embed_seed: u64,
    #[arg(long, default_value_t = default_workers())]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct FitModelArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Long-range coordinate set (no local landmarks)
    #[arg(long)]
    pub l_embedding: PathBuf,
    /// Short-range coordinate set (4 local landmarks)
    #[arg(long)]
    pub s_embedding: PathBuf,
    /// Holdout pair count
    #[arg(long, default_value_t = 5000)]
    pub holdout: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 18)]
    pub theta_max: u32,
    #[arg(long, default_value_t = 1.0)]
    pub bin_width: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct AppArgs {
    #[command(subcommand)]
    pub app: AppCommand,
}

#[derive(Subcommand)]
pub enum AppCommand {
    /// Radius, diameter and average path length over a node sample
    Separation(SeparationArgs),
    /// Top-k closeness-centrality ranking accuracy
    Centrality(CentralityArgs),
    /// Distance-ranked social search overlap accuracy
    Search(SearchArgs),
}

#[derive(Args)]
pub struct SeparationArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub sample: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the exact BFS comparison
    #[arg(long)]
    pub no_oracle: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct CentralityArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    /// Candidate nodes ranked by centrality
    #[arg(long, default_value_t = 500)]
    pub candidates: usize,
    /// Reference-set size for the mean distance (0 = all nodes)
    #[arg(long, default_value_t = 0)]
    pub references: usize,
    #[arg(long, default_value = "5,10,15,20,25,30,35,40,45,50")]
    pub k_list: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    /// Number of seeded query repetitions
    #[arg(long, default_value_t = 200)]
    pub queries: usize,
    /// Responders sampled per query
    #[arg(long, default_value_t = 100)]
    pub responders: usize,
    #[arg(long, default_value = "5,10,15,20,25,30,35,40,45,50")]
    pub k_list: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub queries: usize,
    /// Full BFS runs for the baseline mean
    #[arg(long, default_value_t = 25)]
    pub bfs_pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub no_local_opt: bool,
    /// Throughput mode across all cores
    #[arg(long)]
    pub parallel: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct RerunArgs {
    /// Manifest file from a previous run
    pub manifest: PathBuf,
    /// Compare re-produced output digests against the manifest
    #[arg(long)]
    pub verify: bool,
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn dispatch(command: Command, argv: Vec<String>) -> anyhow::Result<()> {
    match command {
        Command::Generate(args) => cmd_generate::run(args, argv),
        Command::Embed(args) => cmd_embed::run(args, argv),
        Command::Query(args) => cmd_query::run(args, argv),
        Command::Path(args) => cmd_path::run(args, argv),
        Command::Eval(args) => cmd_eval::run(args, argv),
        Command::FitModel(args) => cmd_fit::run(args, argv),
        Command::App(args) => cmd_app::run(args, argv),
        Command::Bench(args) => cmd_bench::run(args, argv),
        Command::Rerun(args) => cmd_rerun::run(args),
    }
}

/// Re-parses and dispatches a stored argv (used by `rerun`).
pub fn dispatch_argv(argv: Vec<String>) -> anyhow::Result<()> {
    let mut full = vec!["rigel".to_string()];
    full.extend(argv.iter().cloned());
    let cli = Cli::try_parse_from(&full)?;
    dispatch(cli.command, argv)
}

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command, argv) {
        eprintln!("error: {e:#}");
        let usage = e.chain().any(|c| {
            matches!(
                c.downcast_ref::<rigel_core::Error>(),
                Some(rigel_core::Error::Argument(_)) | Some(rigel_core::Error::Parse { .. })
            )
        });
        std::process::exit(if usage { 2 } else { 1 });
    }
}
