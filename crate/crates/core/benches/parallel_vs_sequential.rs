// SPDX-License-Identifier: Apache-2.0

//! Run once per build mode to compare the two in one report:
//!
//! ```text
//! cargo bench -p aggdetect
//! cargo bench -p aggdetect --no-default-features
//! ```
//!
//! Parallel builds also time a one-thread pool.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use aggdetect::aggregate::{sum_all, threshold};
use aggdetect::netgen::{generate, CommunitySpec, EnsembleParams, LayerProbs};
use aggdetect::par;
use aggdetect::spectral::{lanczos, EigOptions, LinearOperator, ModularityOperator};

fn mode() -> &'static str {
    if par::is_parallel() {
        "parallel"
    } else {
        "sequential"
    }
}

fn params(n: usize) -> EnsembleParams {
    EnsembleParams {
        n,
        layers: 16,
        layer_probs: LayerProbs::Gaussian { mean: 0.01, std: 0.001 },
        communities: vec![CommunitySpec::random(20, 2, 1.0)],
        seed: 1,
    }
}

fn with_modes(c: &mut Criterion, group: &str, n: usize, mut f: impl FnMut() + Send) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_function(BenchmarkId::new(mode(), n), |b| b.iter(&mut f));
    if par::is_parallel() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        g.bench_function(BenchmarkId::new("parallel-1-thread", n), |b| b.iter(|| pool.install(&mut f)));
    }
    g.finish();
}

fn bench_generate(c: &mut Criterion) {
    let p = params(5000);
    with_modes(c, "generate", 5000, || {
        black_box(generate(&p).unwrap());
    });
}

fn bench_aggregate(c: &mut Criterion) {
    let net = generate(&params(5000)).unwrap();
    with_modes(c, "sum_and_threshold", 5000, || {
        let s = sum_all(&net).unwrap();
        black_box(threshold(&s, 2).unwrap());
    });
}

fn bench_matvec(c: &mut Criterion) {
    let n = 20_000;
    let op = ModularityOperator::empirical(&sum_all(&generate(&params(n)).unwrap()).unwrap());
    let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let mut y = vec![0.0; n];
    with_modes(c, "matvec", n, || {
        op.apply(&x, &mut y);
        black_box(&y);
    });
}

fn bench_eigensolve(c: &mut Criterion) {
    let n = 5000;
    let op = ModularityOperator::empirical(&sum_all(&generate(&params(n)).unwrap()).unwrap());
    let opts = EigOptions::default();
    with_modes(c, "lanczos_top5", n, || {
        black_box(lanczos(&op, 5, &opts).unwrap());
    });
}

criterion_group!(benches, bench_generate, bench_aggregate, bench_matvec, bench_eigensolve);
criterion_main!(benches);
