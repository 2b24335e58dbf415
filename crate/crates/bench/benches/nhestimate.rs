use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use halluprobe_bench::{pair_file_text, scored_corpus};
use halluprobe_core::nhestimate::{bottom_epsilon, estimate_anh, f1_select, f2_select, AnhParams, LineCorpus};

fn nhestimate(c: &mut Criterion) {
    let corpus = scored_corpus(100_000, 7);
    let scores = corpus.scores();
    let params = AnhParams::default();

    let mut g = c.benchmark_group("nhestimate_100k");
    g.sample_size(10);
    g.bench_function("f1", |b| b.iter(|| f1_select(black_box(&corpus), 4, 2)));
    g.bench_function("f2", |b| b.iter(|| f2_select(black_box(&corpus))));
    g.bench_function("bottom_epsilon", |b| b.iter(|| bottom_epsilon(black_box(&scores), 1.0)));
    g.bench_function("estimate_anh", |b| b.iter(|| estimate_anh(black_box(&corpus), params)));
    let text = pair_file_text(&corpus);
    g.bench_function("parse_lines", |b| {
        b.iter_batched(
            || text.clone(),
            |t| LineCorpus::parse(t, None, Path::new("bench")),
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

criterion_group!(benches, nhestimate);
criterion_main!(benches);
