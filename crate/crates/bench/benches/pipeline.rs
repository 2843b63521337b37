use criterion::{black_box, criterion_group, criterion_main, Criterion};

use tandem_bench::{demo_prediction_set, demo_training_data};
use tandem_core::fitting::{fit_rank_weighted, FitConfig};
use tandem_core::synthgen::{generate_dataset, DgpConfig};
use tandem_core::types::EvaluationSpec;
use tandem_core::{optimize_weights_general, optimize_weights_mse, CombinerConfig};

fn bench_generate_dataset(c: &mut Criterion) {
    c.bench_function("generate_dataset 8000x10", |b| {
        b.iter(|| generate_dataset(black_box(&DgpConfig::new(8000, 42))).unwrap())
    });
}

fn bench_mse_combiner(c: &mut Criterion) {
    let preds = demo_prediction_set(2000, 7);
    let cfg = CombinerConfig::default();
    c.bench_function("optimize_weights_mse n=2000", |b| {
        b.iter(|| optimize_weights_mse(black_box(&preds), &cfg))
    });
}

fn bench_general_combiner(c: &mut Criterion) {
    let preds = demo_prediction_set(500, 11);
    let cfg = CombinerConfig::default();
    let spec = EvaluationSpec::blended(0.5, 0.5, 0.5).unwrap();
    c.bench_function("optimize_weights_general n=500 blended", |b| {
        b.iter(|| optimize_weights_general(black_box(&preds), &spec, &cfg).unwrap())
    });
}

fn bench_rank_weighted_fit(c: &mut Criterion) {
    let (x, y, view) = demo_training_data(8000, 3);
    let cfg = FitConfig::default();
    c.bench_function("fit_rank_weighted n=8000 d=10", |b| {
        b.iter(|| fit_rank_weighted(black_box(&x), black_box(&y), &view, 0.5, 0.5, &cfg).unwrap())
    });
}

criterion_group!(
    benches,
    bench_generate_dataset,
    bench_mse_combiner,
    bench_general_combiner,
    bench_rank_weighted_fit
);
criterion_main!(benches);
