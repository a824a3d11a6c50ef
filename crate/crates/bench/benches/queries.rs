//! Query-side latency: estimates with and without local path optimization,
//! the BFS oracle for contrast, and path search.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigel_bench::embedded_smallworld;
use rigel_core::{bfs_distances, estimate_distance, find_path, PathConfig, QueryConfig};

fn bench_queries(c: &mut Criterion) {
    let (graph, embedding) = embedded_smallworld(10_000, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let pairs: Vec<(u32, u32)> = (0..4096)
        .map(|_| (rng.gen_range(0..10_000u32), rng.gen_range(0..10_000u32)))
        .filter(|(a, b)| a != b)
        .collect();

    let mut group = c.benchmark_group("query_10k");
    let configs = [
        (
            "estimate_local_opt",
            QueryConfig {
                local_optimization: true,
            },
        ),
        (
            "estimate_raw",
            QueryConfig {
                local_optimization: false,
            },
        ),
    ];
    for (name, config) in configs {
        group.bench_function(name, |b| {
            let mut i = 0usize;
            b.iter(|| {
                let (u, v) = pairs[i % pairs.len()];
                i += 1;
                black_box(estimate_distance(&graph, &embedding, u, v, config).unwrap())
            })
        });
    }
    group.sample_size(20);
    group.bench_function("bfs_oracle", |b| {
        let mut i = 0usize;
        b.iter(|| {
            let (u, v) = pairs[i % pairs.len()];
            i += 1;
            black_box(bfs_distances(&graph, u).unwrap().get(v))
        })
    });
    group.bench_function("find_path", |b| {
        let mut i = 0usize;
        b.iter(|| {
            let (u, v) = pairs[i % pairs.len()];
            i += 1;
            black_box(find_path(&graph, &embedding, u, v, &PathConfig::default()).unwrap())
        })
    });
    group.finish();
}

criterion_group!(benches, bench_queries);
criterion_main!(benches);
