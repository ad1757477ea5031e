use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use newstopics::eval::intertopic_map;
use newstopics::lda::{train_lda, LdaHyperparams};
use newstopics::preprocess::tokenize;
use newstopics::synthetic::planted_corpus;

fn gibbs(c: &mut Criterion) {
    let supports: Vec<Vec<u32>> = (0..4).map(|k| (k * 10..k * 10 + 10).collect()).collect();
    let corpus = planted_corpus(&supports, 200, 50, 0.9, 1);
    let mut group = c.benchmark_group("gibbs");
    group.sample_size(10);
    for iterations in [20usize, 80] {
        let hyper = LdaHyperparams {
            iterations,
            burn_in: iterations / 2,
            thin: 5,
            ..LdaHyperparams::new(4)
        };
        group.bench_with_input(BenchmarkId::new("train_k4_200docs", iterations), &hyper, |b, h| {
            b.iter(|| train_lda(&corpus.docs, corpus.vocab_size, h).unwrap())
        });
    }
    group.finish();
}

fn tokenizer(c: &mut Criterion) {
    let text = "Folkhälsomyndigheten rapporterar att smittspridningen ökar i Stockholm, \
                enligt statsepidemiolog Anders Tegnell. Covid-19-vaccinet väntas i januari. "
        .repeat(50);
    c.bench_function("tokenize_7kb", |b| b.iter(|| tokenize(&text)));
}

fn diagnostics(c: &mut Criterion) {
    let supports: Vec<Vec<u32>> = (0..10).map(|k| (k * 5..k * 5 + 5).collect()).collect();
    let corpus = planted_corpus(&supports, 100, 30, 0.8, 2);
    let hyper = LdaHyperparams {
        iterations: 30,
        burn_in: 10,
        thin: 5,
        ..LdaHyperparams::new(10)
    };
    let model = train_lda(&corpus.docs, corpus.vocab_size, &hyper).unwrap();
    c.bench_function("intertopic_map_k10", |b| b.iter(|| intertopic_map(&model).unwrap()));
}

criterion_group!(benches, gibbs, tokenizer, diagnostics);
criterion_main!(benches);
