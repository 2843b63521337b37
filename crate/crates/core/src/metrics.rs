//! Complementarity metrics and the joint-vs-single-agent criterion.

use crate::error::{Error, Result};
use crate::objectives::evaluate;
use crate::types::{ComplementarityReport, Direction, EvaluationSpec, PredictionSet, WeightVector};

/// Across-instance complementarity: the population variance of the
/// per-instance machine weights (equivalently of the human weights, since the
/// pair sums to one).
///
/// High values mean different instances are handled by different agents (a
/// routing/deferral pattern). Range `[0, 0.25]`; zero for constant weights.
pub fn c_across(w: &WeightVector) -> f64 {
    let wm = w.w_m();
    let n = wm.len() as f64;
    let mean = wm.iter().sum::<f64>() / n;
    let var = wm.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
    // strip float dust; the value is mathematically in [0, 1/4]
    var.clamp(0.0, 0.25)
}

/// Within-instance complementarity: one minus the mean squared gap between
/// the two agents' weights.
///
/// Equals 1 iff every instance is an equal blend (both weights 0.5) and 0 iff
/// every instance is fully routed to one agent. Range `[0, 1]`.
pub fn c_within(w: &WeightVector) -> f64 {
    let n = w.len() as f64;
    let mean_gap_sq = w
        .w_h()
        .iter()
        .zip(w.w_m())
        .map(|(&h, &m)| (h - m) * (h - m))
        .sum::<f64>()
        / n;
    (1.0 - mean_gap_sq).clamp(0.0, 1.0)
}

/// Strict-dominance complementarity criterion: the joint value must beat both
/// single agents. Ties are not complementarity.
pub fn check_complementarity(
    value_joint: f64,
    value_h: f64,
    value_m: f64,
    direction: Direction,
) -> bool {
    match direction {
        Direction::Minimize => value_joint < value_h.min(value_m),
        Direction::Maximize => value_joint > value_h.max(value_m),
    }
}

/// Per-instance convex combination of the two agents' predictions.
pub fn combine_predictions(preds: &PredictionSet, w: &WeightVector) -> Result<Vec<f64>> {
    if preds.len() != w.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} predictions, {} weights",
            preds.len(),
            w.len()
        )));
    }
    Ok(preds
        .pred_h()
        .iter()
        .zip(preds.pred_m())
        .zip(w.w_h().iter().zip(w.w_m()))
        .map(|((&ph, &pm), (&wh, &wm))| wh * ph + wm * pm)
        .collect())
}

/// Evaluates the joint, human-only, and machine-only policies under `spec`
/// and fills a [`ComplementarityReport`].
pub fn summarize_report(
    preds: &PredictionSet,
    w: &WeightVector,
    spec: &EvaluationSpec,
) -> Result<ComplementarityReport> {
    let joint = combine_predictions(preds, w)?;
    let value_joint = evaluate(&joint, preds.y(), spec)?;
    let value_h = evaluate(preds.pred_h(), preds.y(), spec)?;
    let value_m = evaluate(preds.pred_m(), preds.y(), spec)?;
    Ok(ComplementarityReport {
        c_across: c_across(w),
        c_within: c_within(w),
        value_joint,
        value_h,
        value_m,
        complementary: check_complementarity(value_joint, value_h, value_m, spec.direction),
    })
}
