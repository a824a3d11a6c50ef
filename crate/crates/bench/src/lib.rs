//! Shared fixtures for the criterion benchmarks.

use rigel_core::{embed_graph, synth, EmbedConfig, Embedding, Graph, Space};

/// A small-world graph with its default hyperbolic embedding, sized for
/// benchmarking rather than accuracy studies.
pub fn embedded_smallworld(n: usize, seed: u64) -> (Graph, Embedding) {
    let edges = synth::smallworld(n, 10, 0.1, seed).expect("valid parameters");
    let graph = synth::to_graph(n, &edges);
    let mut config = EmbedConfig::new(Space::default_hyperbolic());
    config.landmark_count = 100.min(n / 2);
    config.seed = seed;
    config.workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1);
    let embedding = embed_graph(&graph, &config).expect("embedding succeeds");
    (graph, embedding)
}
