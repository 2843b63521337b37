//! Quantifying the potential for complementarity between two predictors.
//!
//! Given aligned predictions from two agents -- by convention a human and a
//! machine -- this crate computes the per-instance convex combination of
//! their outputs that is optimal under a configurable evaluation function
//! (plain MSE, a rank-weighted loss derived from a probability weighting
//! function, or a blend), and summarizes *how* the optimum combines them:
//!
//! - `c_across`: variance of the weights across instances; high when
//!   different instances are routed to different agents,
//! - `c_within`: one minus the mean squared weight gap; high when both
//!   agents contribute to each individual decision,
//! - the strict-dominance check that the joint policy beats both agents.
//!
//! The weights are optimized **with access to the true targets on the
//! evaluation set**. They bound what any joint decision rule could achieve;
//! this is a diagnostic for the *potential* of a human-machine pairing, not
//! a deployable combiner.
//!
//! The [`experiments`] module reproduces three seeded synthetic studies
//! (feature overlap, feature predictive power, diverging objectives) end to
//! end on a linear-Gaussian data process.

pub mod combiner;
pub mod error;
pub mod experiments;
pub mod fitting;
pub mod metrics;
pub mod objectives;
pub mod rng;
pub mod synthgen;
pub mod types;

pub use combiner::{
    closed_form_weight, grid_discretization_bound, grid_oracle, optimize_weights_general,
    optimize_weights_mse, CombinerConfig, TieBreak,
};
pub use error::{Error, Result};
pub use experiments::{
    run_experiment, run_replicate_alpha, run_replicate_objective, run_replicate_overlap,
    ExperimentConfig, ExperimentKind, ExperimentResult, ReplicateRecord, Stats, SweepPoint,
    SweepPointStats,
};
pub use fitting::{fit_ols, fit_rank_weighted, predict, FitConfig, LinearPolicy, RankWeightedFit};
pub use metrics::{
    c_across, c_within, check_complementarity, combine_predictions, summarize_report,
};
pub use objectives::{eval_blended, eval_mse, eval_rank_weighted, evaluate, v_weights, VWeights};
pub use synthgen::{alpha_mask, generate_dataset, overlap_split, DgpConfig, FeatureView};
pub use types::{
    ComplementarityReport, Direction, EvalKind, EvaluationSpec, PredictionSet, RankMode,
    WeightVector, SIMPLEX_TOL,
};
