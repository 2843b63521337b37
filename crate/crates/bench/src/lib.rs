//! Shared fixtures for the benchmark targets.

use tandem_core::fitting::{fit_ols, predict, FitConfig};
use tandem_core::synthgen::{generate_dataset, overlap_split, DgpConfig, FeatureView};
use tandem_core::types::PredictionSet;

/// A realistic prediction set: two OLS policies fitted on partially
/// overlapping views of a fresh draw from the default process, evaluated on
/// held-out data of size `n`.
pub fn demo_prediction_set(n: usize, seed: u64) -> PredictionSet {
    let (x_train, y_train) = generate_dataset(&DgpConfig::new(2000, seed)).expect("train data");
    let (x_test, y_test) = generate_dataset(&DgpConfig::new(n, seed ^ 1)).expect("test data");
    let (view_h, view_m) = overlap_split(10, 4, seed ^ 2).expect("split");
    let cfg = FitConfig::default();
    let policy_h = fit_ols(&x_train, &y_train, &view_h, &cfg).expect("human fit");
    let policy_m = fit_ols(&x_train, &y_train, &view_m, &cfg).expect("machine fit");
    PredictionSet::from_predictions(
        y_test.iter().copied().collect(),
        predict(&policy_h, &x_test).expect("human predictions"),
        predict(&policy_m, &x_test).expect("machine predictions"),
    )
    .expect("prediction set")
}

/// Training data plus the full feature view, for fitting benchmarks.
pub fn demo_training_data(
    n: usize,
    seed: u64,
) -> (nalgebra::DMatrix<f64>, nalgebra::DVector<f64>, FeatureView) {
    let (x, y) = generate_dataset(&DgpConfig::new(n, seed)).expect("data");
    (x, y, FeatureView::new(0..10).expect("view"))
}
