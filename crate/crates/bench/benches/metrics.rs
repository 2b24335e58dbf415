use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use halluprobe_bench::sentence_pairs;
use halluprobe_core::metrics::{adjusted_bleu, corpus_bleu_str, sentence_chrf};

fn metrics(c: &mut Criterion) {
    let pairs = sentence_pairs(1000, 1);
    let (hyps, refs): (Vec<&str>, Vec<&str>) = pairs.iter().map(|(h, r)| (h.as_str(), r.as_str())).unzip();

    c.bench_function("chrf_1000_pairs", |b| {
        b.iter(|| {
            pairs
                .iter()
                .map(|(h, r)| sentence_chrf(black_box(h), black_box(r), 6, 2.0))
                .sum::<f64>()
        })
    });
    c.bench_function("adjusted_bleu_1000_pairs", |b| {
        b.iter(|| {
            pairs
                .iter()
                .map(|(h, r)| adjusted_bleu(black_box(h), black_box(r)))
                .sum::<f64>()
        })
    });
    c.bench_function("corpus_bleu_1000_pairs", |b| {
        b.iter(|| corpus_bleu_str(black_box(&hyps), black_box(&refs)))
    });
}

criterion_group!(benches, metrics);
criterion_main!(benches);
