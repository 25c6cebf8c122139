use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use docalign_bench::fixture;
use docalign_core::vectorspace::{collect_tokens, compute_idf, language_vocabulary, project_corpus, vectorize};

fn vectorization(c: &mut Criterion) {
    let fx = fixture(10, 100, &["fr"]);
    let mut group = c.benchmark_group("vectorspace");
    group.sample_size(10);
    group.bench_function("vocabulary", |b| {
        b.iter(|| language_vocabulary(&fx.parts, "en", &fx.params))
    });
    let tokens = collect_tokens(&fx.parts, "en");
    group.bench_function("idf", |b| {
        b.iter(|| compute_idf(tokens.iter().copied(), &fx.vocab).unwrap())
    });
    let idf = compute_idf(tokens.iter().copied(), &fx.vocab).unwrap();
    group.bench_function("vectorize_collection", |b| {
        b.iter(|| {
            for t in &tokens {
                black_box(vectorize("u", t, &fx.vocab, &idf));
            }
        })
    });
    group.bench_function("project_corpus", |b| {
        b.iter(|| project_corpus(&fx.parts, &fx.alignments, &fx.vocab, &fx.params).unwrap())
    });
    let fr = collect_tokens(&fx.parts, "fr");
    let al = &fx.alignments["fr"];
    group.bench_function("map_tokens", |b| {
        b.iter(|| {
            for t in &fr {
                black_box(al.map_tokens(t));
            }
        })
    });
    group.finish();
}

criterion_group!(benches, vectorization);
criterion_main!(benches);
