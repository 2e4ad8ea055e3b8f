//! Rayon vs single-thread timings for the data-parallel stages.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use disadapt::ingest::RhythmogramRecord;
use disadapt::learn::easy::{train_easy_ensemble, EasyParams};
use disadapt::learn::gbm::{train_gbm, GbmParams};
use disadapt::par;
use disadapt::preprocess::{FeatureExtractor, FeatureKind, FeatureParams, FeatureSet};
use disadapt::synth::{generate_records, SynthConfig};

fn corpus() -> Vec<RhythmogramRecord> {
    generate_records(&SynthConfig { n_records: 60, ..SynthConfig::default() }).unwrap()
}

fn features(records: &[RhythmogramRecord], kind: FeatureKind) -> FeatureSet {
    let refs: Vec<&RhythmogramRecord> = records.iter().collect();
    FeatureExtractor::new(kind, FeatureParams::default()).unwrap().build(&refs)
}

/// Runs `f` once on the rayon pool and once pinned to one thread.
fn both<F: Fn() + Send + Sync>(c: &mut Criterion, group: &str, f: F) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_function(BenchmarkId::from_parameter("parallel"), |b| b.iter(&f));
    g.bench_function(BenchmarkId::from_parameter("sequential"), |b| b.iter(|| par::sequential(&f)));
    g.finish();
}

fn benches(c: &mut Criterion) {
    let records = corpus();
    both(c, "spectrogram_features", || {
        black_box(features(&records, FeatureKind::Spectrogram));
    });

    let raw = features(&records, FeatureKind::RawSegment);
    let y = raw.label_bits();
    both(c, "gbm_raw_fit", || {
        black_box(train_gbm(&raw.rows, &y, &GbmParams::default()).unwrap());
    });

    let spec = features(&records, FeatureKind::Spectrogram);
    let ys = spec.label_bits();
    let short = GbmParams { n_stages: 10, ..GbmParams::default() };
    both(c, "gbm_spectrogram_fit_10_stages", || {
        black_box(train_gbm(&spec.rows, &ys, &short).unwrap());
    });

    both(c, "easy_ensemble_raw_fit", || {
        black_box(train_easy_ensemble(&raw.rows, &y, &EasyParams::default(), 7).unwrap());
    });
}

criterion_group!(pipeline, benches);
criterion_main!(pipeline);
