use std::hint::black_box;

use capgen_bench::{feature, model};
use capgen_core::metrics::{evaluate_corpus, EvalPair};
use capgen_core::{beam_search, bidirectional_decode, greedy_decode, DecodeParams, Direction};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn search(c: &mut Criterion) {
    let m = model(300, 32, 64, 16);
    let f = feature("decode");
    let mut group = c.benchmark_group("decode");
    group.bench_function("greedy", |b| b.iter(|| greedy_decode(&m, black_box(&f), Direction::Forward).unwrap()));
    for k in [1, 3, 10] {
        let params = DecodeParams {
            beam_width: k,
            max_len: 16,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::new("beam", k), &params, |b, p| {
            b.iter(|| beam_search(&m, black_box(&f), Direction::Forward, p).unwrap())
        });
    }
    let params = DecodeParams {
        max_len: 16,
        ..Default::default()
    };
    group.bench_function("bidirectional_beam3", |b| b.iter(|| bidirectional_decode(&m, black_box(&f), &params).unwrap()));
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let words = ["নদীতে", "একটি", "নৌকা", "ছেলে", "মাঠে", "খেলছে", "কুকুর", "বসে"];
    let sentence = |seed: usize, len: usize| -> Vec<String> { (0..len).map(|i| words[(seed * 7 + i * 3 + i * i) % words.len()].to_string()).collect() };
    let pairs: Vec<EvalPair> = (0..1000)
        .map(|i| EvalPair::new(sentence(i, 8 + i % 5), (0..5).map(|r| sentence(i + r, 7 + r)).collect()).unwrap())
        .collect();
    c.bench_function("evaluate_corpus_1000x5", |b| b.iter(|| evaluate_corpus(black_box(&pairs)).unwrap()));
}

criterion_group!(benches, search, metrics);
criterion_main!(benches);
