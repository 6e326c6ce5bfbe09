// Copyright The qudit-qkd Authors
// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qudit_qkd_bench::{field, SIZES};
use qudit_qkd_core::analysis::{ep_closed_form, ErrorDistribution};
use qudit_qkd_core::TOperator;

fn field_mul(c: &mut Criterion) {
    let f = field(2, 4);
    let xs: Vec<_> = f.elements().collect();
    let mut g = c.benchmark_group("gf16");
    g.bench_function("mul table", |b| {
        b.iter(|| {
            xs.iter()
                .flat_map(|&x| xs.iter().map(move |&y| (x, y)))
                .fold(0, |acc, (x, y)| acc ^ f.mul(x, y).index())
        })
    });
    g.bench_function("mul schoolbook", |b| {
        b.iter(|| {
            xs.iter()
                .flat_map(|&x| xs.iter().map(move |&y| (x, y)))
                .fold(0, |acc, (x, y)| acc ^ f.mul_schoolbook(x, y).index())
        })
    });
    g.finish();
}

fn build_t(c: &mut Criterion) {
    let mut g = c.benchmark_group("build T");
    for (p, n) in SIZES {
        let f = field(p, n);
        g.bench_with_input(BenchmarkId::from_parameter(f.size()), &f, |b, f| {
            b.iter(|| TOperator::new(black_box(f)).unwrap())
        });
    }
    g.finish();
}

fn purification(c: &mut Criterion) {
    let f = field(2, 4);
    let t = TOperator::new(&f).unwrap();
    let d = ErrorDistribution::worst_case(&f, &t.equiv_classes(), 0.8).unwrap();
    c.bench_function("ep closed form N=16 k=6", |b| b.iter(|| ep_closed_form(black_box(&d), 6).unwrap()));
}

criterion_group!(
    name = group;
    config = Criterion::default()
        .warm_up_time(Duration::from_millis(300))
        .measurement_time(Duration::from_secs(2))
        .sample_size(10);
    targets = field_mul, build_t, purification
);
criterion_main!(group);
