//! End-to-end tests driving the compiled `rigel` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rigel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rigel"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = rigel(dir, args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read(path: PathBuf) -> Vec<u8> {
    std::fs::read(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().expect("tempdir"),
        }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    /// A generated graph plus its embedding, shared across assertions.
    fn with_embedding(&self) -> (PathBuf, PathBuf) {
        let graph = self.path().join("g.txt");
        let emb = self.path().join("e.rge");
        ok(
            self.path(),
            &[
                "generate",
                "--kind",
                "smallworld",
                "--nodes",
                "300",
                "--k",
                "8",
                "--p",
                "0.1",
                "--seed",
                "7",
                "--out",
                "g.txt",
            ],
        );
        ok(
            self.path(),
            &[
                "embed",
                "--graph",
                "g.txt",
                "--out",
                "e.rge",
                "--landmarks",
                "40",
                "--seed",
                "7",
                "--workers",
                "2",
            ],
        );
        (graph, emb)
    }
}

#[test]
fn generate_is_deterministic_and_path_matches_format() {
    let ws = Workspace::new();
    let args = [
        "generate",
        "--kind",
        "smallworld",
        "--nodes",
        "400",
        "--k",
        "6",
        "--p",
        "0.2",
        "--seed",
        "11",
        "--out",
    ];
    ok(ws.path(), &[&args[..], &["a.txt"]].concat());
    ok(ws.path(), &[&args[..], &["b.txt"]].concat());
    assert_eq!(read(ws.path().join("a.txt")), read(ws.path().join("b.txt")));

    ok(
        ws.path(),
        &[
            "generate", "--kind", "path", "--nodes", "3", "--out", "p.txt",
        ],
    );
    assert_eq!(read(ws.path().join("p.txt")), b"0 1\n1 2\n");
}

#[test]
fn generated_scalefree_file_has_a_heavy_tail() {
    let ws = Workspace::new();
    ok(
        ws.path(),
        &[
            "generate",
            "--kind",
            "scalefree",
            "--nodes",
            "1000",
            "--m",
            "5",
            "--seed",
            "3",
            "--out",
            "sf.txt",
        ],
    );
    let text = String::from_utf8(read(ws.path().join("sf.txt"))).unwrap();
    let mut degree = std::collections::HashMap::<&str, usize>::new();
    let mut edges = 0usize;
    for line in text.lines() {
        let mut toks = line.split_whitespace();
        let (a, b) = (toks.next().unwrap(), toks.next().unwrap());
        *degree.entry(a).or_default() += 1;
        *degree.entry(b).or_default() += 1;
        edges += 1;
    }
    assert_eq!(degree.len(), 1000);
    let max = *degree.values().max().unwrap() as f64;
    let mean = 2.0 * edges as f64 / 1000.0;
    assert!(max > 5.0 * mean, "max degree {max} vs mean {mean}");
}

#[test]
fn embedding_files_are_identical_across_worker_counts() {
    let ws = Workspace::new();
    ok(
        ws.path(),
        &[
            "generate",
            "--kind",
            "smallworld",
            "--nodes",
            "300",
            "--k",
            "8",
            "--p",
            "0.1",
            "--seed",
            "7",
            "--out",
            "g.txt",
        ],
    );
    for (workers, out) in [("1", "w1.rge"), ("8", "w8.rge")] {
        ok(
            ws.path(),
            &[
                "embed",
                "--graph",
                "g.txt",
                "--out",
                out,
                "--landmarks",
                "40",
                "--seed",
                "5",
                "--workers",
                workers,
            ],
        );
    }
    assert_eq!(
        read(ws.path().join("w1.rge")),
        read(ws.path().join("w8.rge"))
    );
}

#[test]
fn binary_cache_is_interchangeable_with_the_edge_list() {
    let ws = Workspace::new();
    ok(
        ws.path(),
        &[
            "generate",
            "--kind",
            "smallworld",
            "--nodes",
            "200",
            "--k",
            "6",
            "--p",
            "0.1",
            "--seed",
            "3",
            "--out",
            "g.txt",
            "--cache",
            "g.rgl",
        ],
    );
    assert_eq!(&read(ws.path().join("g.rgl"))[..4], b"RGL1");
    for (graph, out) in [("g.txt", "from_text.rge"), ("g.rgl", "from_cache.rge")] {
        ok(
            ws.path(),
            &[
                "embed",
                "--graph",
                graph,
                "--out",
                out,
                "--landmarks",
                "30",
                "--seed",
                "3",
            ],
        );
    }
    assert_eq!(
        read(ws.path().join("from_text.rge")),
        read(ws.path().join("from_cache.rge"))
    );
}

#[test]
fn embed_manifest_tags_modes_and_records_phases() {
    let ws = Workspace::new();
    ok(
        ws.path(),
        &[
            "generate",
            "--kind",
            "smallworld",
            "--nodes",
            "200",
            "--k",
            "6",
            "--p",
            "0.1",
            "--seed",
            "2",
            "--out",
            "g.txt",
        ],
    );
    ok(
        ws.path(),
        &[
            "embed",
            "--graph",
            "g.txt",
            "--out",
            "raw.rge",
            "--landmarks",
            "30",
            "--local-landmarks",
            "0",
            "--seed",
            "2",
        ],
    );
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(ws.path().join("raw.rge.manifest.json"))).unwrap();
    assert_eq!(manifest["mode"], "Raw Rigel");
    assert_eq!(manifest["config"]["seed"], 2);
    for phase in [
        "phase1_bfs",
        "phase2_bootstrap",
        "partitioning",
        "phase3_embed",
    ] {
        assert!(
            manifest["timings_s"][phase].is_number(),
            "missing timing {phase}"
        );
    }
}

#[test]
fn query_answers_adjacent_pairs_and_reports_modes() {
    let ws = Workspace::new();
    let (graph, _) = ws.with_embedding();
    // Find one adjacent pair from the edge list.
    let text = String::from_utf8(read(graph)).unwrap();
    let pair = text.lines().next().unwrap().to_string();

    let stdout = ok(
        ws.path(),
        &[
            "query",
            "--embedding",
            "e.rge",
            "--graph",
            "g.txt",
            "--pairs",
            &pair,
            "--exact",
            "--out",
            "q.csv",
        ],
    );
    assert!(stdout.contains("mode: Rigel\n"));
    let csv = String::from_utf8(read(ws.path().join("q.csv"))).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(
        cols[2], "1",
        "adjacent pair must estimate exactly 1, got {row}"
    );
    assert_eq!(cols[3], "1");

    let stdout = ok(
        ws.path(),
        &[
            "query",
            "--embedding",
            "e.rge",
            "--graph",
            "g.txt",
            "--pairs",
            &pair,
            "--no-local-opt",
            "--out",
            "qs.csv",
        ],
    );
    assert!(stdout.contains("mode: Rigel-S\n"));
}

#[test]
fn eval_buckets_one_and_two_have_zero_error_with_local_opt() {
    let ws = Workspace::new();
    ws.with_embedding();
    ok(
        ws.path(),
        &[
            "eval",
            "--embedding",
            "e.rge",
            "--graph",
            "g.txt",
            "--pairs",
            "500",
            "--seed",
            "3",
            "--out",
            "ev.csv",
        ],
    );
    let csv = String::from_utf8(read(ws.path().join("ev.csv"))).unwrap();
    let mut seen = 0;
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let distance: u32 = cols[1].parse().unwrap();
        if distance <= 2 {
            assert_eq!(
                cols[3].parse::<f64>().unwrap(),
                0.0,
                "bucket {distance} in {line}"
            );
            seen += 1;
        }
    }
    assert!(seen > 0, "no short-distance buckets sampled");
}

#[test]
fn eval_bucket_counts_sum_to_sampled_pairs() {
    let ws = Workspace::new();
    ws.with_embedding();
    let stdout = ok(
        ws.path(),
        &[
            "eval",
            "--embedding",
            "e.rge",
            "--graph",
            "g.txt",
            "--pairs",
            "400",
            "--seed",
            "9",
            "--out",
            "ev.csv",
        ],
    );
    let skipped: usize = stdout
        .split("skipped=")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    let csv = String::from_utf8(read(ws.path().join("ev.csv"))).unwrap();
    let total: usize = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total + skipped, 400);
}

#[test]
fn hybrid_eval_reports_all_three_methods() {
    let ws = Workspace::new();
    ok(
        ws.path(),
        &[
            "generate",
            "--kind",
            "smallworld",
            "--nodes",
            "300",
            "--k",
            "8",
            "--p",
            "0.1",
            "--seed",
            "7",
            "--out",
            "g.txt",
        ],
    );
    for (nl, out) in [("0", "L.rge"), ("4", "S.rge")] {
        ok(
            ws.path(),
            &[
                "embed",
                "--graph",
                "g.txt",
                "--out",
                out,
                "--landmarks",
                "40",
                "--local-landmarks",
                nl,
                "--seed",
                "7",
                "--workers",
                "2",
            ],
        );
    }
    ok(
        ws.path(),
        &[
            "fit-model",
            "--graph",
            "g.txt",
            "--l-embedding",
            "L.rge",
            "--s-embedding",
            "S.rge",
            "--holdout",
            "1500",
            "--seed",
            "5",
            "--out",
            "model.txt",
        ],
    );
    ok(
        ws.path(),
        &[
            "eval",
            "--embedding",
            "L.rge",
            "--s-embedding",
            "S.rge",
            "--hybrid",
            "model.txt",
            "--graph",
            "g.txt",
            "--pairs",
            "300",
            "--seed",
            "6",
            "--out",
            "hy.csv",
        ],
    );
    let csv = String::from_utf8(read(ws.path().join("hy.csv"))).unwrap();
    for method in ["l,", "s,", "hybrid,"] {
        assert!(
            csv.lines().any(|l| l.starts_with(method)),
            "missing {method} rows in:\n{csv}"
        );
    }
}

#[test]
fn rerun_reproduces_outputs_bitwise() {
    let ws = Workspace::new();
    ws.with_embedding();
    let before = read(ws.path().join("e.rge"));
    let stdout = ok(ws.path(), &["rerun", "e.rge.manifest.json", "--verify"]);
    assert!(stdout.contains("reproduced bitwise"), "stdout: {stdout}");
    assert_eq!(before, read(ws.path().join("e.rge")));
}

#[test]
fn exit_codes_distinguish_usage_from_runtime_errors() {
    let ws = Workspace::new();
    // Unknown generator kind: usage error.
    let out = rigel(ws.path(), &["generate", "--kind", "nope", "--out", "x.txt"]);
    assert_eq!(out.status.code(), Some(2));
    // Missing flag entirely: clap usage error.
    let out = rigel(ws.path(), &["generate", "--kind", "path", "--out", "x.txt"]);
    assert_eq!(out.status.code(), Some(2));
    // Missing input file: runtime error.
    let out = rigel(
        ws.path(),
        &[
            "query",
            "--embedding",
            "missing.rge",
            "--graph",
            "missing.txt",
            "--random",
            "5",
            "--out",
            "x.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    // Success exits zero (checked implicitly everywhere via `ok`).
}

#[test]
fn separation_app_matches_oracle_shape() {
    let ws = Workspace::new();
    ws.with_embedding();
    ok(
        ws.path(),
        &[
            "app",
            "separation",
            "--embedding",
            "e.rge",
            "--graph",
            "g.txt",
            "--sample",
            "100",
            "--seed",
            "4",
            "--out",
            "sep.csv",
        ],
    );
    let csv = String::from_utf8(read(ws.path().join("sep.csv"))).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "metric,estimated,exact,delta");
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4);
        cols[1].parse::<f64>().unwrap();
        cols[2].parse::<f64>().unwrap();
    }
}

#[test]
fn centrality_emits_a_k_curve() {
    let ws = Workspace::new();
    ws.with_embedding();
    ok(
        ws.path(),
        &[
            "app",
            "centrality",
            "--embedding",
            "e.rge",
            "--graph",
            "g.txt",
            "--candidates",
            "80",
            "--k-list",
            "5,10,20",
            "--seed",
            "5",
            "--out",
            "c.csv",
        ],
    );
    let csv = String::from_utf8(read(ws.path().join("c.csv"))).unwrap();
    let ks: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(ks, vec!["5", "10", "20"]);
}
