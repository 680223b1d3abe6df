use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use erase_bench::{mixed, noise, FS};
use erase_core::ica::{fit_fastica, IcaConfig};
use erase_core::metrics::{fractal_dimension, ranksum_exact, FdParams};
use erase_core::signal::{design_butterworth, stft_power, FilterSpec, TimeSeries};

fn filtering(c: &mut Criterion) {
    let x = noise(60_000, 1);
    let sos = design_butterworth(&FilterSpec::bandpass(4, 80.0, 160.0), FS).unwrap();
    c.bench_function("bandpass order 4, 30 s", |b| b.iter(|| sos.apply(black_box(&x))));
    c.bench_function("butterworth design", |b| {
        b.iter(|| design_butterworth(black_box(&FilterSpec::bandpass(3, 3.0, 200.0)), FS).unwrap())
    });
}

fn spectral(c: &mut Criterion) {
    let ts = TimeSeries::new(noise(60_000, 2), FS).unwrap();
    c.bench_function("stft 512/128, 30 s", |b| b.iter(|| stft_power(black_box(&ts), 512, 128).unwrap()));
}

fn ica(c: &mut Criterion) {
    let x = mixed(8, 40_000, 3);
    let cfg = IcaConfig::default();
    let mut g = c.benchmark_group("fastica");
    g.sample_size(10);
    g.bench_function("8 ch, 20 s", |b| b.iter(|| fit_fastica(black_box(x.view()), &cfg).unwrap()));
    g.finish();
}

fn statistics(c: &mut Criterion) {
    let x = noise(4000, 4);
    let p = FdParams::new(FS);
    c.bench_function("fractal dimension, 2 s", |b| b.iter(|| fractal_dimension(black_box(&x), &p).unwrap()));
    let (a, bb) = (noise(10, 5), noise(10, 6));
    c.bench_function("exact rank sum 10 vs 10", |b| b.iter(|| ranksum_exact(black_box(&a), black_box(&bb)).unwrap()));
}

criterion_group!(benches, filtering, spectral, ica, statistics);
criterion_main!(benches);
