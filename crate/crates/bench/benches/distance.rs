//! Raw distance-function throughput for both geometry models.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigel_core::Space;

fn random_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect()
}

fn bench_distance(c: &mut Criterion) {
    let points = random_points(1024, 10, 1);
    let spaces = [
        ("hyperboloid", Space::hyperboloid(-1.0, 10).unwrap()),
        ("euclidean", Space::euclidean(10).unwrap()),
    ];
    let mut group = c.benchmark_group("distance");
    for (name, space) in spaces {
        group.bench_function(name, |b| {
            let mut i = 0usize;
            b.iter(|| {
                let x = &points[i % points.len()];
                let y = &points[(i * 7 + 3) % points.len()];
                i += 1;
                black_box(space.distance_unchecked(black_box(x), black_box(y)))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_distance);
criterion_main!(benches);
