use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use conepricer::cps::find_cps;
use conepricer::pricing::{dual_price, price_process, primal_price};
use conepricer_bench::{binomial, corpus};

fn corpus_pricing(c: &mut Criterion) {
    let inputs = corpus(10);
    let mut group = c.benchmark_group("corpus of 10 trees");
    group.sample_size(10);
    group.bench_function("primal", |b| {
        b.iter(|| {
            for (tree, claim) in &inputs {
                black_box(primal_price(tree, claim, 0).unwrap());
            }
        })
    });
    group.bench_function("dual", |b| {
        b.iter(|| {
            for (tree, claim) in &inputs {
                black_box(dual_price(tree, claim, 0).unwrap());
            }
        })
    });
    group.bench_function("find_cps", |b| {
        b.iter(|| {
            for (tree, _) in &inputs {
                black_box(find_cps(tree, 0).unwrap());
            }
        })
    });
    group.finish();
}

fn binomial_depth(c: &mut Criterion) {
    let mut group = c.benchmark_group("binomial price process");
    group.sample_size(10);
    for depth in [2, 3, 4, 5] {
        let (tree, claim) = binomial(depth);
        group.bench_with_input(BenchmarkId::from_parameter(depth), &depth, |b, _| {
            b.iter(|| black_box(price_process(&tree, &claim).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, corpus_pricing, binomial_depth);
criterion_main!(benches);
