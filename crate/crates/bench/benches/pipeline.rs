use std::hint::black_box;

use cavity_squeeze::squeezing::{bloch_messiah_at, bloch_messiah_on_grid, branch_align, hd_best, DEFAULT_SEED};
use cavity_squeeze::{classify, FrequencyGrid, LoConfig, LoPhase, Normalization, SqueezingSpectrum};
use cavity_squeeze_bench::{generic_model, generic_system, SIZES};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn classification(c: &mut Criterion) {
    let mut group = c.benchmark_group("classify");
    for n in SIZES {
        let model = generic_model(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &model, |b, m| b.iter(|| classify(black_box(m), 1e-9)));
    }
    group.finish();
}

fn pointwise(c: &mut Criterion) {
    let mut group = c.benchmark_group("pointwise");
    for n in SIZES {
        let sys = generic_system(n);
        group.bench_with_input(BenchmarkId::new("transfer", n), &sys, |b, s| b.iter(|| s.transfer(black_box(0.7)).unwrap()));
        group.bench_with_input(BenchmarkId::new("covariance", n), &sys, |b, s| {
            b.iter(|| s.spectral_covariance(black_box(0.7), Normalization::ShotNoiseUnity).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("bloch_messiah", n), &sys, |b, s| b.iter(|| bloch_messiah_at(s, black_box(0.7)).unwrap()));
        let sample = sys.spectral_covariance(0.7, Normalization::ShotNoiseUnity).unwrap();
        group.bench_with_input(BenchmarkId::new("hd_best", n), &sample, |b, s| b.iter(|| hd_best(black_box(s), 8, DEFAULT_SEED)));
    }
    group.finish();
}

fn spectra(c: &mut Criterion) {
    let grid = FrequencyGrid::linspace(0.0, 3.0, 301).unwrap();
    let mut group = c.benchmark_group("spectrum_301");
    group.throughput(Throughput::Elements(grid.len() as u64));
    group.sample_size(20);
    for n in SIZES {
        let sys = generic_system(n);
        let lo = LoConfig::single_mode(n, 0, LoPhase::Scan).unwrap();
        group.bench_with_input(BenchmarkId::new("squeezing", n), &sys, |b, s| {
            b.iter(|| SqueezingSpectrum::compute(s, &grid, &lo, Normalization::ShotNoiseUnity).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("aligned_bloch_messiah", n), &sys, |b, s| {
            b.iter(|| branch_align(&bloch_messiah_on_grid(s, &grid).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, classification, pointwise, spectra);
criterion_main!(benches);
