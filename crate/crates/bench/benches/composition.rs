//! Benchmarks for the kernels everything else sits on: series
//! composition, compositional powering (the ramification-sequence
//! workload), and ramification numbers end to end.
//!
//! Truncations mirror the oracle corpus so regressions here predict
//! oracle wall-time directly.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ramlab_core::nottingham::{compose, comp_inverse, ram_sequence, FieldSpec, WildSeries};

fn series_pair(p: u64, n: usize, seed: u64) -> (WildSeries, WildSeries) {
    let field = FieldSpec::gf(p).expect("prime");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = WildSeries::random(&field, n, Some(1), &mut rng).expect("series");
    let g = WildSeries::random(&field, n, Some(1), &mut rng).expect("series");
    (f, g)
}

fn bench_compose(c: &mut Criterion) {
    let mut group = c.benchmark_group("compose");
    for &(p, n) in &[(2u64, 256usize), (2, 1024), (2, 4096), (3, 243), (3, 729)] {
        let (f, g) = series_pair(p, n, 0xc0_ffee);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new(format!("p{p}"), n), &n, |b, _| {
            b.iter(|| compose(&f, &g).expect("composes"))
        });
    }
    group.finish();
}

fn bench_inverse(c: &mut Criterion) {
    let mut group = c.benchmark_group("comp_inverse");
    for &(p, n) in &[(2u64, 256usize), (2, 1024), (3, 243)] {
        let (f, _) = series_pair(p, n, 0xdecade);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new(format!("p{p}"), n), &n, |b, _| {
            b.iter(|| comp_inverse(&f).expect("inverts"))
        });
    }
    group.finish();
}

fn bench_ram_sequence(c: &mut Criterion) {
    let mut group = c.benchmark_group("ram_sequence");
    group.sample_size(10);
    for &(p, n, levels) in &[(2u64, 1024usize, 3usize), (3, 729, 3)] {
        let (f, _) = series_pair(p, n, 0xbeef);
        group.bench_with_input(BenchmarkId::new(format!("p{p}"), n), &n, |b, _| {
            b.iter(|| ram_sequence(&f, levels).expect("sequence"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_compose, bench_inverse, bench_ram_sequence);
criterion_main!(benches);
