//! Domain types shared across the crate.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Tolerance for the per-instance simplex constraint `w_h + w_m = 1`.
///
/// Inputs violating it are rejected, never renormalized: silent repair would
/// mask caller bugs.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Aligned per-instance records: true target plus the two agents' predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    instance_id: Vec<i64>,
    y: Vec<f64>,
    pred_h: Vec<f64>,
    pred_m: Vec<f64>,
}

impl PredictionSet {
    /// Builds a prediction set, checking that all four columns have the same
    /// nonzero length, ids are unique, and every value is finite.
    pub fn new(
        instance_id: Vec<i64>,
        y: Vec<f64>,
        pred_h: Vec<f64>,
        pred_m: Vec<f64>,
    ) -> Result<Self> {
        let n = instance_id.len();
        if n == 0 {
            return Err(Error::InvalidInput(
                "prediction set must contain at least one instance".into(),
            ));
        }
        if y.len() != n || pred_h.len() != n || pred_m.len() != n {
            return Err(Error::InvalidInput(format!(
                "length mismatch: {} ids, {} targets, {} human predictions, {} machine predictions",
                n,
                y.len(),
                pred_h.len(),
                pred_m.len()
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for (i, id) in instance_id.iter().enumerate() {
            if !seen.insert(*id) {
                return Err(Error::InvalidInput(format!(
                    "duplicate instance_id {id} at index {i}"
                )));
            }
        }
        for (name, col) in [("y", &y), ("pred_h", &pred_h), ("pred_m", &pred_m)] {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite value in {name} at index {i}"
                )));
            }
        }
        Ok(Self {
            instance_id,
            y,
            pred_h,
            pred_m,
        })
    }

    /// Convenience constructor with ids `0..n`.
    pub fn from_predictions(y: Vec<f64>, pred_h: Vec<f64>, pred_m: Vec<f64>) -> Result<Self> {
        let ids = (0..y.len() as i64).collect();
        Self::new(ids, y, pred_h, pred_m)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn instance_id(&self) -> &[i64] {
        &self.instance_id
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn pred_h(&self) -> &[f64] {
        &self.pred_h
    }

    pub fn pred_m(&self) -> &[f64] {
        &self.pred_m
    }
}

/// Per-instance convex aggregation weights for the two agents.
///
/// Every pair satisfies `0 <= w <= 1` and `w_h + w_m = 1` within
/// [`SIMPLEX_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w_h: Vec<f64>,
    w_m: Vec<f64>,
}

impl WeightVector {
    pub fn new(w_h: Vec<f64>, w_m: Vec<f64>) -> Result<Self> {
        if w_h.is_empty() {
            return Err(Error::InvalidInput(
                "weight vector must contain at least one instance".into(),
            ));
        }
        if w_h.len() != w_m.len() {
            return Err(Error::InvalidInput(format!(
                "length mismatch: {} human weights, {} machine weights",
                w_h.len(),
                w_m.len()
            )));
        }
        for (i, (&h, &m)) in w_h.iter().zip(&w_m).enumerate() {
            check_unit_interval(h, "w_h", i)?;
            check_unit_interval(m, "w_m", i)?;
            if (h + m - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::InvalidInput(format!(
                    "simplex violation at index {i}: w_h + w_m = {} (must be 1 within {SIMPLEX_TOL:e})",
                    h + m
                )));
            }
        }
        Ok(Self { w_h, w_m })
    }

    /// Builds a weight vector from human weights alone; machine weights are
    /// the complement. For `w in [0, 1]` the rounded complement always lands
    /// within [`SIMPLEX_TOL`] of the simplex.
    pub fn from_human(w_h: Vec<f64>) -> Result<Self> {
        let w_m = w_h.iter().map(|&h| 1.0 - h).collect();
        Self::new(w_h, w_m)
    }

    pub fn len(&self) -> usize {
        self.w_h.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn w_h(&self) -> &[f64] {
        &self.w_h
    }

    pub fn w_m(&self) -> &[f64] {
        &self.w_m
    }
}

fn check_unit_interval(w: f64, name: &str, i: usize) -> Result<()> {
    if !w.is_finite() || !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidInput(format!(
            "{name}[{i}] = {w} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Whether smaller or larger evaluation values are better.
///
/// The joint-policy objective is stated as a maximization, but every
/// experiment here scores losses; carrying the direction explicitly keeps the
/// sign convention out of the call sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// How rank weights are matched to instance losses.
///
/// `Sorted` applies the i-th weight to the i-th smallest loss (an
/// L-statistic); `FixedIndex` applies it to the i-th instance as given.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMode {
    Sorted,
    FixedIndex,
}

/// Evaluation function family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalKind {
    /// Mean squared error.
    Mse,
    /// Rank-weighted squared loss with probability-weighting parameters
    /// `a` (fixed point) and `b` (curvature).
    RankWeighted { a: f64, b: f64 },
    /// `theta * mse + (1 - theta) * rank_weighted(a, b)`.
    Blended { a: f64, b: f64, theta: f64 },
}

/// Which objective to score a policy with, plus direction and rank handling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationSpec {
    pub kind: EvalKind,
    pub direction: Direction,
    pub rank_mode: RankMode,
}

impl EvaluationSpec {
    pub fn mse() -> Self {
        Self {
            kind: EvalKind::Mse,
            direction: Direction::Minimize,
            rank_mode: RankMode::Sorted,
        }
    }

    pub fn rank_weighted(a: f64, b: f64) -> Result<Self> {
        check_weighting_params(a, b)?;
        Ok(Self {
            kind: EvalKind::RankWeighted { a, b },
            direction: Direction::Minimize,
            rank_mode: RankMode::Sorted,
        })
    }

    pub fn blended(a: f64, b: f64, theta: f64) -> Result<Self> {
        check_weighting_params(a, b)?;
        if !theta.is_finite() || !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidConfig(format!(
                "theta = {theta} outside [0, 1]"
            )));
        }
        Ok(Self {
            kind: EvalKind::Blended { a, b, theta },
            direction: Direction::Minimize,
            rank_mode: RankMode::Sorted,
        })
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_rank_mode(mut self, rank_mode: RankMode) -> Self {
        self.rank_mode = rank_mode;
        self
    }
}

fn check_weighting_params(a: f64, b: f64) -> Result<()> {
    if !a.is_finite() || !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidConfig(format!("a = {a} outside [0, 1]")));
    }
    if !b.is_finite() || b <= 0.0 {
        return Err(Error::InvalidConfig(format!("b = {b} must be positive")));
    }
    Ok(())
}

/// Summary of one joint-vs-single-agent comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplementarityReport {
    /// Variance of the aggregation weights across instances; in `[0, 0.25]`.
    pub c_across: f64,
    /// One minus the mean squared gap between the agents' weights; in `[0, 1]`.
    pub c_within: f64,
    pub value_joint: f64,
    pub value_h: f64,
    pub value_m: f64,
    /// True iff the joint value strictly beats both single agents under the
    /// spec's direction.
    pub complementary: bool,
}
