//! Benchmarks for the paths that dominate experiment wall time: the
//! per-epoch objective/gradient evaluation, the fairness metrics bundle,
//! and the balance-factor solve.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use fairsurr::balanced;
use fairsurr::dataset::Dataset;
use fairsurr::metrics::{self, MarginSet};
use fairsurr::surrogates::Surrogate;
use fairsurr::trainer::{self, PenaltyMode, TrainConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn synthetic_dataset(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Array2::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    let mut sensitive = Vec::with_capacity(n);
    for i in 0..n {
        let z: i8 = if rng.random::<f64>() < 0.4 { -1 } else { 1 };
        let mut score = 0.3 * f64::from(z);
        for j in 0..dim {
            let x: f64 = rng.sample(StandardNormal);
            let x = x + if j % 3 == 0 { 0.2 * f64::from(z) } else { 0.0 };
            features[(i, j)] = x;
            score += x * if j % 2 == 0 { 0.5 } else { -0.25 };
        }
        labels.push(u8::from(score + rng.sample::<f64, _>(StandardNormal) > 0.0));
        sensitive.push(z);
    }
    Dataset {
        features,
        labels,
        sensitive,
        feature_names: (0..dim).map(|j| format!("x{j}")).collect(),
        n_dropped: 0,
    }
}

fn margin_set(data: &Dataset, seed: u64) -> MarginSet {
    let cfg = TrainConfig {
        max_epochs: 5,
        seed,
        ..TrainConfig::default()
    };
    let fit = trainer::train(data, Surrogate::Linear, &cfg).unwrap();
    metrics::margins(&fit.model, data).unwrap()
}

fn bench_trainer_epochs(c: &mut Criterion) {
    let data = synthetic_dataset(8_192, 24, 1);
    let mut group = c.benchmark_group("trainer");
    for (name, surrogate) in [
        ("linear", Surrogate::Linear),
        ("general-sigmoid-w2", Surrogate::general_sigmoid(2.0).unwrap()),
    ] {
        group.bench_function(format!("10-epochs-{name}"), |b| {
            let cfg = TrainConfig {
                rho: 2.0,
                penalty_mode: PenaltyMode::Squared,
                max_epochs: 10,
                grad_tolerance: 0.0,
                ..TrainConfig::default()
            };
            b.iter(|| trainer::train(black_box(&data), surrogate, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_metrics_bundle(c: &mut Criterion) {
    let data = synthetic_dataset(65_536, 24, 2);
    let m = margin_set(&data, 2);
    let gs = Surrogate::general_sigmoid(2.0).unwrap();
    let mut group = c.benchmark_group("metrics");
    group.bench_function("ddp-hat", |b| {
        b.iter(|| metrics::ddp_hat_from(black_box(&m)).unwrap())
    });
    group.bench_function("ddp-tilde-gs", |b| {
        b.iter(|| metrics::ddp_tilde(black_box(&m), gs).unwrap())
    });
    group.bench_function("cov-hat", |b| {
        b.iter(|| metrics::cov_hat(black_box(&m), Surrogate::Linear).unwrap())
    });
    group.bench_function("large-margin-stats", |b| {
        b.iter_batched(
            || m.clone(),
            |m| metrics::large_margin_stats(black_box(&m)).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn bench_solve_lambda(c: &mut Criterion) {
    let data = synthetic_dataset(65_536, 24, 3);
    let m = margin_set(&data, 3);
    c.bench_function("solve-lambda-sigmoid", |b| {
        b.iter(|| balanced::solve_lambda(black_box(&m), Surrogate::Sigmoid).unwrap())
    });
}

criterion_group!(
    benches,
    bench_trainer_epochs,
    bench_metrics_bundle,
    bench_solve_lambda
);
criterion_main!(benches);
