use std::hint::black_box;

use apbias_core::classno::{hurwitz, ClassNumberCache};
use apbias_core::curves::{batch_ap, CurveRecord, WeierstrassCurve};
use apbias_core::traces::{trace_new_tn, trace_signed, TraceQuery};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn sample_records(count: usize) -> Vec<CurveRecord> {
    // Small coefficients with a nonzero discriminant; the conductor only
    // matters for exclusion, so a large prime keeps every pair admitted.
    (0..count as i64)
        .map(|i| WeierstrassCurve::new([i % 2, -(i % 3), 1, -10 - i % 17, -20 + i % 29]))
        .filter(|c| c.discriminant() != 0.into())
        .map(|c| CurveRecord::new(c, 1_000_003, 0))
        .collect()
}

fn bench_batch_ap(c: &mut Criterion) {
    let records = sample_records(2_000);
    let mut group = c.benchmark_group("batch_ap");
    for primes in [vec![7u64], vec![97], vec![293], vec![2, 3, 5, 7, 11, 13, 97, 199, 293]] {
        group.throughput(Throughput::Elements((records.len() * primes.len()) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(format!("{primes:?}")), &primes, |b, primes| {
            b.iter(|| batch_ap(black_box(&records), primes).unwrap())
        });
    }
    group.finish();
}

fn bench_hurwitz(c: &mut Criterion) {
    let mut group = c.benchmark_group("hurwitz");
    for n in [88u64, 4_003, 40_004, 400_003] {
        group.bench_with_input(BenchmarkId::new("uncached", n), &n, |b, &n| b.iter(|| hurwitz(black_box(n))));
    }
    let cache = ClassNumberCache::default();
    group.bench_function("cached 40004", |b| b.iter(|| cache.hurwitz(black_box(40_004))));
    group.finish();
}

fn bench_traces(c: &mut Criterion) {
    let mut group = c.benchmark_group("traces");
    for (k, level, n) in [(2, 4_003, 2), (2, 9_997, 7), (8, 499, 7)] {
        let q = TraceQuery::new(k, level, n).unwrap();
        group.bench_with_input(BenchmarkId::new("trace_new_tn", format!("{k}/{level}/{n}")), &q, |b, &q| {
            b.iter(|| trace_new_tn(black_box(q)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("trace_signed", format!("{k}/{level}/{n}")), &q, |b, &q| {
            b.iter(|| trace_signed(black_box(q)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch_ap, bench_hurwitz, bench_traces);
criterion_main!(benches);
