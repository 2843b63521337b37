//! Evaluation functions: plain MSE, rank-weighted squared loss, and their
//! blend.
//!
//! The rank weights come from the derivative of a two-parameter probability
//! weighting function (fixed point `a`, curvature `b`): instances are sorted
//! by loss and the i-th rank quantile `i/n` is mapped through a quadratic.
//! `b = 1` makes every weight 1 and the rank-weighted loss collapses to MSE.

use crate::error::{Error, Result};
use crate::types::{EvalKind, EvaluationSpec, RankMode};

/// Per-rank loss multipliers for a given `(a, b, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VWeights {
    values: Vec<f64>,
    a: f64,
    b: f64,
}

impl VWeights {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Computes `v_i = (3 - 3b)/(a^2 - a + 1) * (3i^2/n^2 - 2(a+1)i/n + a) + 1`
/// for `i = 1..=n`.
///
/// A monotone probability weighting function needs a nonnegative derivative,
/// so negative weights are rejected unless `allow_negative` is set; the
/// override exists to explore curvatures outside the valid region.
pub fn v_weights(a: f64, b: f64, n: usize, allow_negative: bool) -> Result<VWeights> {
    if !a.is_finite() || !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidConfig(format!("a = {a} outside [0, 1]")));
    }
    if !b.is_finite() || b <= 0.0 {
        return Err(Error::InvalidConfig(format!("b = {b} must be positive")));
    }
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    let scale = (3.0 - 3.0 * b) / (a * a - a + 1.0);
    let nf = n as f64;
    let mut values = Vec::with_capacity(n);
    for i in 1..=n {
        let q = i as f64 / nf;
        let v = scale * (3.0 * q * q - 2.0 * (a + 1.0) * q + a) + 1.0;
        if v < 0.0 && !allow_negative {
            return Err(Error::InvalidConfig(format!(
                "negative rank weight v_{i} = {v} for a = {a}, b = {b}, n = {n}; \
                 the weighting function is not monotone here (pass allow_negative to override)"
            )));
        }
        values.push(v);
    }
    Ok(VWeights { values, a, b })
}

/// Mean squared error `(1/n) * sum (pred_i - y_i)^2`.
pub fn eval_mse(preds: &[f64], y: &[f64]) -> f64 {
    assert_eq!(preds.len(), y.len(), "prediction/target length mismatch");
    assert!(!preds.is_empty(), "empty prediction vector");
    let n = preds.len() as f64;
    preds
        .iter()
        .zip(y)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum::<f64>()
        / n
}

/// Rank-weighted squared loss `(1/n) * sum v_i * loss_(i)`.
///
/// Under [`RankMode::Sorted`] the weights apply to losses sorted ascending;
/// under [`RankMode::FixedIndex`] they apply in instance order.
pub fn eval_rank_weighted(preds: &[f64], y: &[f64], vw: &VWeights, rank_mode: RankMode) -> f64 {
    assert_eq!(preds.len(), y.len(), "prediction/target length mismatch");
    assert_eq!(preds.len(), vw.len(), "prediction/weight length mismatch");
    let n = preds.len() as f64;
    let mut losses: Vec<f64> = preds
        .iter()
        .zip(y)
        .map(|(&p, &t)| (p - t) * (p - t))
        .collect();
    if rank_mode == RankMode::Sorted {
        losses.sort_unstable_by(f64::total_cmp);
    }
    losses
        .iter()
        .zip(vw.values())
        .map(|(&l, &v)| v * l)
        .sum::<f64>()
        / n
}

/// Blended objective `theta * E_m + (1 - theta) * E_h`.
pub fn eval_blended(preds: &[f64], y: &[f64], spec: &EvaluationSpec) -> Result<f64> {
    let EvalKind::Blended { a, b, theta } = spec.kind else {
        return Err(Error::InvalidConfig(
            "eval_blended requires a blended evaluation spec".into(),
        ));
    };
    let vw = v_weights(a, b, preds.len(), false)?;
    Ok(theta * eval_mse(preds, y)
        + (1.0 - theta) * eval_rank_weighted(preds, y, &vw, spec.rank_mode))
}

/// Dispatches to the evaluation function named by `spec.kind`.
pub fn evaluate(preds: &[f64], y: &[f64], spec: &EvaluationSpec) -> Result<f64> {
    match spec.kind {
        EvalKind::Mse => Ok(eval_mse(preds, y)),
        EvalKind::RankWeighted { a, b } => {
            let vw = v_weights(a, b, preds.len(), false)?;
            Ok(eval_rank_weighted(preds, y, &vw, spec.rank_mode))
        }
        EvalKind::Blended { .. } => eval_blended(preds, y, spec),
    }
}
