use bae_bench::{mnist_sized_model, uniform, SIDE};
use bae_core::scoring::{score_batch, score_dataset};
use bae_core::{LikelihoodKind, Posterior, PosteriorSampler};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn scoring(c: &mut Criterion) {
    let d = SIDE * SIDE;
    let x = uniform(100, d, 3);
    let samples: Vec<_> = (0..100).map(|t| uniform(100, d, 10 + t)).collect();
    c.bench_function("score_batch 100 inputs T=100", |b| {
        b.iter(|| score_batch(LikelihoodKind::Bernoulli, black_box(&x), &samples).unwrap())
    });

    let members = (0..5).map(mnist_sized_model).collect();
    let ens = PosteriorSampler::new(
        Posterior::AnchoredEnsemble(members),
        LikelihoodKind::GaussianUnit,
        0,
    );
    let dropout = PosteriorSampler::new(
        Posterior::McDropout {
            model: mnist_sized_model(9),
            p_drop: 0.2,
        },
        LikelihoodKind::Bernoulli,
        0,
    );
    let inputs = uniform(200, d, 4);
    c.bench_function("score_dataset ensemble M=5, 200 inputs", |b| {
        b.iter(|| score_dataset(&ens, black_box(&inputs), 5).unwrap())
    });
    let mut g = c.benchmark_group("mc_dropout");
    g.sample_size(10);
    g.bench_function("score_dataset T=100, 200 inputs", |b| {
        b.iter(|| score_dataset(&dropout, black_box(&inputs), 100).unwrap())
    });
    g.finish();
}

criterion_group!(benches, scoring);
criterion_main!(benches);
