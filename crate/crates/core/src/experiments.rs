//! Seeded, replicated parameter sweeps over the three synthetic settings:
//! feature overlap, feature predictive power, and objective divergence.

use rayon::prelude::*;

use crate::combiner::{optimize_weights_general, optimize_weights_mse, CombinerConfig};
use crate::error::{Error, Result};
use crate::fitting::{fit_ols, fit_rank_weighted, predict, FitConfig};
use crate::metrics::{c_across, c_within, combine_predictions};
use crate::objectives::{eval_mse, evaluate, v_weights};
use crate::rng::{derive_seed, purpose};
use crate::synthgen::{alpha_mask, generate_dataset, overlap_split, DgpConfig, FeatureView};
use crate::types::{EvaluationSpec, PredictionSet, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Both agents see `z` shared features plus `(d - z) / 2` exclusive ones.
    Overlap,
    /// The human sees features `0..d-1`; the machine sees the last feature
    /// with its entries kept at rate `alpha`.
    Alpha,
    /// Both agents see everything, but the human minimizes the rank-weighted
    /// loss while the machine minimizes MSE; the joint objective blends them.
    Objective,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::Overlap => "overlap",
            ExperimentKind::Alpha => "alpha",
            ExperimentKind::Objective => "objective",
        }
    }
}

/// Full description of one sweep: grids, replicate counts, and the component
/// configurations. `dgp.n` and `dgp.seed` are templates; every replicate
/// overrides them with the train/test sizes and derived seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n_train: usize,
    pub n_test: usize,
    pub replicates: usize,
    pub seed: u64,
    pub z_values: Vec<usize>,
    pub alpha_values: Vec<f64>,
    pub a: f64,
    pub b_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    pub dgp: DgpConfig,
    pub fit: FitConfig,
    pub combiner: CombinerConfig,
}

impl ExperimentConfig {
    pub fn overlap(seed: u64) -> Self {
        Self::base(ExperimentKind::Overlap, seed, 200)
    }

    pub fn alpha(seed: u64) -> Self {
        Self::base(ExperimentKind::Alpha, seed, 200)
    }

    pub fn objective(seed: u64) -> Self {
        Self::base(ExperimentKind::Objective, seed, 5)
    }

    fn base(kind: ExperimentKind, seed: u64, replicates: usize) -> Self {
        Self {
            kind,
            n_train: 8000,
            n_test: 2000,
            replicates,
            seed,
            z_values: vec![0, 2, 4, 6, 8],
            alpha_values: (0..=10).map(|i| i as f64 / 10.0).collect(),
            a: 0.5,
            // capped at the largest curvature keeping every rank weight
            // nonnegative for a = 0.5
            b_values: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5],
            theta_values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            dgp: DgpConfig::new(1, 0),
            fit: FitConfig::default(),
            combiner: CombinerConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig(
                "n_train and n_test must be positive".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be positive".into()));
        }
        self.dgp.with_n_seed(1, 0).validate()?;
        self.fit.validate()?;
        self.combiner.validate()?;
        match self.kind {
            ExperimentKind::Overlap => {
                if self.z_values.is_empty() {
                    return Err(Error::InvalidConfig("sweep.z must be non-empty".into()));
                }
                for &z in &self.z_values {
                    if z >= self.dgp.d {
                        return Err(Error::InvalidConfig(format!(
                            "sweep.z: z = {z} must be strictly less than d = {}",
                            self.dgp.d
                        )));
                    }
                    if !(self.dgp.d - z).is_multiple_of(2) {
                        return Err(Error::InvalidConfig(format!(
                            "sweep.z: z = {z} leaves an odd number of non-shared features \
                             (d - z must be even to split them evenly)"
                        )));
                    }
                }
            }
            ExperimentKind::Alpha => {
                if self.alpha_values.is_empty() {
                    return Err(Error::InvalidConfig("sweep.alpha must be non-empty".into()));
                }
                if self.dgp.d < 2 {
                    return Err(Error::InvalidConfig(
                        "the alpha experiment needs at least two features".into(),
                    ));
                }
                for &alpha in &self.alpha_values {
                    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
                        return Err(Error::InvalidConfig(format!(
                            "sweep.alpha: alpha = {alpha} outside [0, 1]"
                        )));
                    }
                }
            }
            ExperimentKind::Objective => {
                if self.b_values.is_empty() || self.theta_values.is_empty() {
                    return Err(Error::InvalidConfig(
                        "sweep.b and sweep.theta must be non-empty".into(),
                    ));
                }
                for &b in &self.b_values {
                    // surfaces invalid (a, b) pairs before any replicate runs
                    v_weights(self.a, b, self.n_test, false)?;
                    v_weights(self.a, b, self.n_train, false)?;
                }
                for &theta in &self.theta_values {
                    if !theta.is_finite() || !(0.0..=1.0).contains(&theta) {
                        return Err(Error::InvalidConfig(format!(
                            "sweep.theta: theta = {theta} outside [0, 1]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Sweep points in output order.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        match self.kind {
            ExperimentKind::Overlap => self
                .z_values
                .iter()
                .map(|&z| SweepPoint::Overlap { z })
                .collect(),
            ExperimentKind::Alpha => self
                .alpha_values
                .iter()
                .map(|&alpha| SweepPoint::Alpha { alpha })
                .collect(),
            ExperimentKind::Objective => {
                let mut points = Vec::new();
                for &b in &self.b_values {
                    for &theta in &self.theta_values {
                        points.push(SweepPoint::Objective {
                            a: self.a,
                            b,
                            theta,
                        });
                    }
                }
                points
            }
        }
    }
}

/// Parameter values of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepPoint {
    Overlap { z: usize },
    Alpha { alpha: f64 },
    Objective { a: f64, b: f64, theta: f64 },
}

impl SweepPoint {
    pub fn label(&self) -> String {
        match self {
            SweepPoint::Overlap { z } => format!("z={z}"),
            SweepPoint::Alpha { alpha } => format!("alpha={alpha}"),
            SweepPoint::Objective { a, b, theta } => format!("a={a},b={b},theta={theta}"),
        }
    }
}

/// One replicate's measurements. For the objective experiment the `loss_*`
/// fields hold the blended objective values and `dg_*` the joint-minus-agent
/// differences.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub point: SweepPoint,
    pub replicate: usize,
    pub seed: u64,
    pub c_across: f64,
    pub c_within: f64,
    pub loss_joint: f64,
    pub loss_h: f64,
    pub loss_m: f64,
    pub dg_h: Option<f64>,
    pub dg_m: Option<f64>,
}

/// Mean and population standard deviation across replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
}

pub fn stats(values: &[f64]) -> Stats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Stats {
        mean,
        std: var.sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPointStats {
    pub point: SweepPoint,
    pub replicates: usize,
    pub c_across: Stats,
    pub c_within: Stats,
    pub loss_joint: Stats,
    pub loss_h: Stats,
    pub loss_m: Stats,
    pub dg_h: Option<Stats>,
    pub dg_m: Option<Stats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub points: Vec<SweepPointStats>,
    pub replicates: Vec<ReplicateRecord>,
}

type TrainTestData = (
    nalgebra::DMatrix<f64>,
    nalgebra::DVector<f64>,
    nalgebra::DMatrix<f64>,
    nalgebra::DVector<f64>,
);

/// Runs all of a replicate's randomness off `replicate_seed` so replicates
/// are independent of each other and of scheduling.
fn replicate_data(cfg: &ExperimentConfig, replicate_seed: u64) -> Result<TrainTestData> {
    let train_cfg = cfg.dgp.with_n_seed(
        cfg.n_train,
        derive_seed(replicate_seed, purpose::TRAIN_DATA),
    );
    let test_cfg = cfg
        .dgp
        .with_n_seed(cfg.n_test, derive_seed(replicate_seed, purpose::TEST_DATA));
    let (x_train, y_train) = generate_dataset(&train_cfg)?;
    let (x_test, y_test) = generate_dataset(&test_cfg)?;
    Ok((x_train, y_train, x_test, y_test))
}

fn mse_record(
    point: SweepPoint,
    replicate: usize,
    seed: u64,
    preds: &PredictionSet,
    w: &WeightVector,
) -> Result<ReplicateRecord> {
    let joint = combine_predictions(preds, w)?;
    Ok(ReplicateRecord {
        point,
        replicate,
        seed,
        c_across: c_across(w),
        c_within: c_within(w),
        loss_joint: eval_mse(&joint, preds.y()),
        loss_h: eval_mse(preds.pred_h(), preds.y()),
        loss_m: eval_mse(preds.pred_m(), preds.y()),
        dg_h: None,
        dg_m: None,
    })
}

/// One overlap replicate: draw train/test data, split the features, fit OLS
/// per view, and measure the oracle MSE combination on the test set.
pub fn run_replicate_overlap(
    z: usize,
    cfg: &ExperimentConfig,
    replicate_seed: u64,
) -> Result<ReplicateRecord> {
    let (x_train, y_train, x_test, y_test) = replicate_data(cfg, replicate_seed)?;
    let (view_h, view_m) = overlap_split(
        cfg.dgp.d,
        z,
        derive_seed(replicate_seed, purpose::VIEW_SPLIT),
    )?;
    let policy_h = fit_ols(&x_train, &y_train, &view_h, &cfg.fit)?;
    let policy_m = fit_ols(&x_train, &y_train, &view_m, &cfg.fit)?;
    let preds = PredictionSet::from_predictions(
        y_test.iter().copied().collect(),
        predict(&policy_h, &x_test)?,
        predict(&policy_m, &x_test)?,
    )?;
    let w = optimize_weights_mse(&preds, &cfg.combiner);
    mse_record(SweepPoint::Overlap { z }, 0, replicate_seed, &preds, &w)
}

/// One alpha replicate: the human sees all but the last feature, the machine
/// sees only the last feature with entries kept at rate `alpha` (masked
/// independently in train and test).
pub fn run_replicate_alpha(
    alpha: f64,
    cfg: &ExperimentConfig,
    replicate_seed: u64,
) -> Result<ReplicateRecord> {
    let (mut x_train, y_train, mut x_test, y_test) = replicate_data(cfg, replicate_seed)?;
    let d = cfg.dgp.d;
    let view_h = FeatureView::new(0..d - 1)?;
    let view_m = FeatureView::new([d - 1])?;

    // the machine's copy of the last column is degraded; the human never
    // sees that column at all
    let masked_train = alpha_mask(
        x_train.column(d - 1).as_slice(),
        alpha,
        derive_seed(replicate_seed, purpose::MASK_TRAIN),
    )?;
    let masked_test = alpha_mask(
        x_test.column(d - 1).as_slice(),
        alpha,
        derive_seed(replicate_seed, purpose::MASK_TEST),
    )?;
    x_train.set_column(d - 1, &nalgebra::DVector::from_vec(masked_train).column(0));
    x_test.set_column(d - 1, &nalgebra::DVector::from_vec(masked_test).column(0));

    let policy_h = fit_ols(&x_train, &y_train, &view_h, &cfg.fit)?;
    let policy_m = fit_ols(&x_train, &y_train, &view_m, &cfg.fit)?;
    let preds = PredictionSet::from_predictions(
        y_test.iter().copied().collect(),
        predict(&policy_h, &x_test)?,
        predict(&policy_m, &x_test)?,
    )?;
    let w = optimize_weights_mse(&preds, &cfg.combiner);
    mse_record(SweepPoint::Alpha { alpha }, 0, replicate_seed, &preds, &w)
}

/// One objective replicate: both agents see every feature; the machine fits
/// OLS, the human fits the rank-weighted loss, and the joint weights optimize
/// the blend.
pub fn run_replicate_objective(
    a: f64,
    b: f64,
    theta: f64,
    cfg: &ExperimentConfig,
    replicate_seed: u64,
) -> Result<ReplicateRecord> {
    let (x_train, y_train, x_test, y_test) = replicate_data(cfg, replicate_seed)?;
    let view = FeatureView::new(0..cfg.dgp.d)?;
    let policy_m = fit_ols(&x_train, &y_train, &view, &cfg.fit)?;
    let fit_h = fit_rank_weighted(&x_train, &y_train, &view, a, b, &cfg.fit)?;
    let preds = PredictionSet::from_predictions(
        y_test.iter().copied().collect(),
        predict(&fit_h.policy, &x_test)?,
        predict(&policy_m, &x_test)?,
    )?;
    let spec = EvaluationSpec::blended(a, b, theta)?.with_rank_mode(cfg.fit.rank_mode);
    let w = optimize_weights_general(&preds, &spec, &cfg.combiner)?;
    let joint = combine_predictions(&preds, &w)?;
    let g_joint = evaluate(&joint, preds.y(), &spec)?;
    let g_h = evaluate(preds.pred_h(), preds.y(), &spec)?;
    let g_m = evaluate(preds.pred_m(), preds.y(), &spec)?;
    Ok(ReplicateRecord {
        point: SweepPoint::Objective { a, b, theta },
        replicate: 0,
        seed: replicate_seed,
        c_across: c_across(&w),
        c_within: c_within(&w),
        loss_joint: g_joint,
        loss_h: g_h,
        loss_m: g_m,
        dg_h: Some(g_joint - g_h),
        dg_m: Some(g_joint - g_m),
    })
}

fn run_replicate(point: SweepPoint, cfg: &ExperimentConfig, seed: u64) -> Result<ReplicateRecord> {
    match point {
        SweepPoint::Overlap { z } => run_replicate_overlap(z, cfg, seed),
        SweepPoint::Alpha { alpha } => run_replicate_alpha(alpha, cfg, seed),
        SweepPoint::Objective { a, b, theta } => run_replicate_objective(a, b, theta, cfg, seed),
    }
}

/// Runs the full sweep: `replicates` independent replicates per sweep point,
/// each on its own derived stream, aggregated into means and standard
/// deviations. Deterministic given `cfg.seed` regardless of how many worker
/// threads rayon uses.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let points = cfg.sweep_points();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.replicates).map(move |r| (p, r)))
        .collect();

    let outcomes: Vec<Result<ReplicateRecord>> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let seed = derive_seed(derive_seed(cfg.seed, p as u64), r as u64);
            run_replicate(points[p], cfg, seed)
                .map(|mut record| {
                    record.replicate = r;
                    record
                })
                .map_err(|e| Error::Replicate {
                    point: points[p].label(),
                    replicate: r,
                    seed,
                    source: Box::new(e),
                })
        })
        .collect();

    // surface the first failure in job order, independent of scheduling
    let mut records = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        records.push(outcome?);
    }

    let mut point_stats = Vec::with_capacity(points.len());
    for (p, &point) in points.iter().enumerate() {
        let chunk = &records[p * cfg.replicates..(p + 1) * cfg.replicates];
        for record in chunk {
            check_dominance(record)?;
        }
        let collect =
            |f: fn(&ReplicateRecord) -> f64| -> Vec<f64> { chunk.iter().map(f).collect() };
        let dg = if matches!(point, SweepPoint::Objective { .. }) {
            (
                Some(stats(
                    &chunk.iter().map(|r| r.dg_h.unwrap()).collect::<Vec<_>>(),
                )),
                Some(stats(
                    &chunk.iter().map(|r| r.dg_m.unwrap()).collect::<Vec<_>>(),
                )),
            )
        } else {
            (None, None)
        };
        point_stats.push(SweepPointStats {
            point,
            replicates: cfg.replicates,
            c_across: stats(&collect(|r| r.c_across)),
            c_within: stats(&collect(|r| r.c_within)),
            loss_joint: stats(&collect(|r| r.loss_joint)),
            loss_h: stats(&collect(|r| r.loss_h)),
            loss_m: stats(&collect(|r| r.loss_m)),
            dg_h: dg.0,
            dg_m: dg.1,
        });
    }
    Ok(ExperimentResult {
        kind: cfg.kind,
        points: point_stats,
        replicates: records,
    })
}

/// The oracle combiner can never lose to a constant policy; a violation here
/// is a bug, not noise, so it aborts the run.
fn check_dominance(record: &ReplicateRecord) -> Result<()> {
    if record.loss_joint > record.loss_h.min(record.loss_m) + 1e-9 {
        return Err(Error::Internal(format!(
            "feasibility dominance violated at {} replicate {}: joint {} vs ({}, {})",
            record.point.label(),
            record.replicate,
            record.loss_joint,
            record.loss_h,
            record.loss_m
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_overlap(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            n_train: 400,
            n_test: 200,
            replicates: 3,
            z_values: vec![0, 4, 8],
            ..ExperimentConfig::overlap(seed)
        }
    }

    #[test]
    fn overlap_replicate_dominates_and_fills_fields() {
        let cfg = small_overlap(1);
        let record = run_replicate_overlap(4, &cfg, 77).unwrap();
        assert!(record.loss_joint <= record.loss_h.min(record.loss_m));
        assert!(record.dg_h.is_none());
        assert!((0.0..=0.25).contains(&record.c_across));
        assert!((0.0..=1.0).contains(&record.c_within));
    }

    #[test]
    fn alpha_zero_machine_predicts_nothing() {
        let cfg = ExperimentConfig {
            n_train: 500,
            n_test: 300,
            ..ExperimentConfig::alpha(3)
        };
        let record = run_replicate_alpha(0.0, &cfg, 123).unwrap();
        // machine column is all zeros; its fit degenerates to predicting 0,
        // so its loss is roughly Var(y) = d + noise^2 = 11
        assert!(
            (record.loss_m - 11.0).abs() < 2.0,
            "loss_m {}",
            record.loss_m
        );
        assert!(record.loss_h < record.loss_m);
    }

    #[test]
    fn objective_replicate_reports_nonpositive_differences() {
        let cfg = ExperimentConfig {
            n_train: 500,
            n_test: 200,
            ..ExperimentConfig::objective(5)
        };
        let record = run_replicate_objective(0.5, 0.5, 0.5, &cfg, 9).unwrap();
        assert!(record.dg_h.unwrap() <= 1e-9);
        assert!(record.dg_m.unwrap() <= 1e-9);
    }

    #[test]
    fn single_replicate_has_zero_std() {
        let cfg = ExperimentConfig {
            replicates: 1,
            n_train: 300,
            n_test: 100,
            z_values: vec![2],
            ..ExperimentConfig::overlap(11)
        };
        let result = run_experiment(&cfg).unwrap();
        let point = &result.points[0];
        assert_eq!(point.c_across.std, 0.0);
        assert_eq!(point.loss_joint.std, 0.0);
    }

    #[test]
    fn experiment_is_reproducible() {
        let cfg = small_overlap(21);
        let r1 = run_experiment(&cfg).unwrap();
        let r2 = run_experiment(&cfg).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn invalid_z_rejected_with_rule_message() {
        let cfg = ExperimentConfig {
            z_values: vec![9],
            ..ExperimentConfig::overlap(1)
        };
        let err = run_experiment(&cfg).unwrap_err().to_string();
        assert!(err.contains("odd"), "{err}");
    }

    #[test]
    fn replicate_failures_name_point_and_seed() {
        // force a replicate failure: z = 0 gives each view 5 features, and
        // 3 training rows cannot identify them
        let cfg = ExperimentConfig {
            n_train: 3,
            n_test: 50,
            replicates: 1,
            z_values: vec![0],
            ..ExperimentConfig::overlap(2)
        };
        let err = run_experiment(&cfg).unwrap_err();
        match err {
            Error::Replicate { point, .. } => assert_eq!(point, "z=0"),
            other => panic!("expected replicate error, got {other}"),
        }
    }
}
