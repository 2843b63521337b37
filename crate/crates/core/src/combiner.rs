//! Oracle-optimal per-instance convex aggregation weights.
//!
//! All optimizers here are given the *true targets of the evaluation set*:
//! they bound what any joint decision rule could achieve, by construction.
//! The output is an upper bound on joint performance -- a measure of
//! potential, not a deployable combiner.
//!
//! Squared loss is separable across instances, so the MSE optimizer is an
//! exact per-instance closed form. Rank-weighted objectives couple instances
//! through the loss ordering; those are solved by a multi-start alternating
//! scheme (exact per-instance solves under a frozen ranking) with a projected
//! gradient polish, and certified against an exhaustive grid oracle at small
//! `n`.

use crate::error::{Error, Result};
use crate::objectives::{eval_mse, eval_rank_weighted, v_weights, VWeights};
use crate::rng::rng_from;
use crate::types::{Direction, EvalKind, EvaluationSpec, PredictionSet, RankMode, WeightVector};
use rand::Rng;

/// Weight assigned when the two predictions coincide and any weight yields
/// the same decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// `w_m = 1`: coinciding policies count as machine-only. This is the
    /// default so that identical agents report zero complementarity on both
    /// metrics.
    Machine,
    Human,
    Half,
}

impl TieBreak {
    fn weight_h(self) -> f64 {
        match self {
            TieBreak::Machine => 0.0,
            TieBreak::Human => 1.0,
            TieBreak::Half => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinerConfig {
    pub tie_break: TieBreak,
    pub max_iters: usize,
    pub tol: f64,
    /// Number of seeded random starts added to the deterministic ones.
    pub restarts: usize,
    pub grid_resolution: f64,
    pub step_size: f64,
}

impl Default for CombinerConfig {
    fn default() -> Self {
        Self {
            tie_break: TieBreak::Machine,
            max_iters: 200,
            tol: 1e-9,
            restarts: 5,
            grid_resolution: 0.01,
            step_size: 0.1,
        }
    }
}

impl CombinerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be positive".into()));
        }
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return Err(Error::InvalidConfig("step_size must be positive".into()));
        }
        resolution_steps(self.grid_resolution)?;
        Ok(())
    }
}

/// Seed for the combiner's random restarts; fixed so identical inputs always
/// produce identical weights.
const RESTART_SEED: u64 = 0x7461_6e64_656d_3031;

/// The weight minimizing `(w * pred_h + (1 - w) * pred_m - y)^2` over
/// `[0, 1]`: the unclamped interpolator `(y - pred_m) / (pred_h - pred_m)`
/// clamped to the box, or the tie-break weight when the predictions coincide.
pub fn closed_form_weight(pred_h: f64, pred_m: f64, y: f64, cfg: &CombinerConfig) -> f64 {
    let spread = pred_h - pred_m;
    if spread == 0.0 {
        return cfg.tie_break.weight_h();
    }
    ((y - pred_m) / spread).clamp(0.0, 1.0)
}

/// Instance-wise optimal weights under MSE; exact because squared loss is
/// separable across instances.
pub fn optimize_weights_mse(preds: &PredictionSet, cfg: &CombinerConfig) -> WeightVector {
    let w_h: Vec<f64> = preds
        .pred_h()
        .iter()
        .zip(preds.pred_m())
        .zip(preds.y())
        .map(|((&ph, &pm), &y)| closed_form_weight(ph, pm, y, cfg))
        .collect();
    WeightVector::from_human(w_h).expect("closed-form weights lie in [0, 1]")
}

/// Everything the inner loops need about one optimization problem.
struct Problem<'a> {
    y: &'a [f64],
    pred_h: &'a [f64],
    pred_m: &'a [f64],
    /// Effective multiplier for the loss at each rank (or index, under
    /// `FixedIndex`), `(theta + (1 - theta) v_k) / n`; always nonnegative
    /// when the rank weights are.
    coeff: Vec<f64>,
    vw: VWeights,
    theta: Option<f64>,
    rank_mode: RankMode,
}

impl Problem<'_> {
    fn len(&self) -> usize {
        self.y.len()
    }

    fn joint(&self, w_h: &[f64]) -> Vec<f64> {
        w_h.iter()
            .zip(self.pred_h.iter().zip(self.pred_m))
            .map(|(&w, (&ph, &pm))| w * ph + (1.0 - w) * pm)
            .collect()
    }

    /// Canonical objective value; bit-identical to [`crate::objectives::evaluate`]
    /// on the same joint predictions.
    fn objective(&self, joint: &[f64]) -> f64 {
        match self.theta {
            None => eval_rank_weighted(joint, self.y, &self.vw, self.rank_mode),
            Some(theta) => {
                theta * eval_mse(joint, self.y)
                    + (1.0 - theta) * eval_rank_weighted(joint, self.y, &self.vw, self.rank_mode)
            }
        }
    }

    /// Maps the per-rank coefficients onto instances for the current losses.
    /// Ties sort by instance index, keeping the assignment deterministic.
    fn instance_coefficients(&self, losses: &[f64]) -> Vec<f64> {
        match self.rank_mode {
            RankMode::FixedIndex => self.coeff.clone(),
            RankMode::Sorted => {
                let n = losses.len();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_unstable_by(|&i, &j| losses[i].total_cmp(&losses[j]).then(i.cmp(&j)));
                let mut out = vec![0.0; n];
                for (rank, &i) in order.iter().enumerate() {
                    out[i] = self.coeff[rank];
                }
                out
            }
        }
    }

    fn losses(&self, joint: &[f64]) -> Vec<f64> {
        joint
            .iter()
            .zip(self.y)
            .map(|(&p, &t)| (p - t) * (p - t))
            .collect()
    }
}

/// Tracks the best weight vector seen; strict improvement only, so ties
/// resolve to the earliest candidate (fixed start order makes this
/// deterministic).
struct Best {
    w: Vec<f64>,
    objective: f64,
}

impl Best {
    fn note(&mut self, w: &[f64], objective: f64) {
        if objective < self.objective {
            self.objective = objective;
            self.w = w.to_vec();
        }
    }
}

/// Finds per-instance weights minimizing a rank-weighted or blended
/// objective.
///
/// Multi-start alternating scheme: freeze the loss ranking, solve every
/// instance in closed form (the frozen objective is separable), re-rank, and
/// repeat; a projected-gradient polish runs when the alternation cycles. The
/// constant all-human and all-machine vectors are among the starts, so the
/// returned objective never exceeds either single agent's.
pub fn optimize_weights_general(
    preds: &PredictionSet,
    spec: &EvaluationSpec,
    cfg: &CombinerConfig,
) -> Result<WeightVector> {
    if spec.direction == Direction::Maximize {
        return Err(Error::InvalidConfig(
            "the oracle combiner optimizes loss-style objectives (direction must be minimize)"
                .into(),
        ));
    }
    let (theta, vw) = match spec.kind {
        EvalKind::Mse => return Ok(optimize_weights_mse(preds, cfg)),
        EvalKind::RankWeighted { a, b } => (None, v_weights(a, b, preds.len(), false)?),
        EvalKind::Blended { a, b, theta } => (Some(theta), v_weights(a, b, preds.len(), false)?),
    };
    cfg.validate()?;

    let n = preds.len();
    let nf = n as f64;
    let mix = theta.unwrap_or(0.0);
    let coeff: Vec<f64> = vw
        .values()
        .iter()
        .map(|&v| (mix + (1.0 - mix) * v) / nf)
        .collect();
    let problem = Problem {
        y: preds.y(),
        pred_h: preds.pred_h(),
        pred_m: preds.pred_m(),
        coeff,
        vw,
        theta,
        rank_mode: spec.rank_mode,
    };

    let mut best = Best {
        w: vec![cfg.tie_break.weight_h(); n],
        objective: f64::INFINITY,
    };
    for start in start_list(preds, cfg) {
        run_alternating(&problem, cfg, start, &mut best);
    }
    // The constant vectors are feasible, so the result must never lose to
    // either single agent. Replacement is strict: when the agents coincide
    // every candidate ties and the tie-break iterate from the first start
    // stands.
    for constant in [vec![0.0; n], vec![1.0; n]] {
        let objective = problem.objective(&problem.joint(&constant));
        best.note(&constant, objective);
    }
    WeightVector::from_human(best.w)
}

/// Start points: the constant extremes, the equal blend, the MSE closed form,
/// and `restarts` seeded random vectors. The start matching the tie-break
/// convention goes first so exact objective ties resolve to the tie weights.
fn start_list(preds: &PredictionSet, cfg: &CombinerConfig) -> Vec<Vec<f64>> {
    let n = preds.len();
    let mut starts = vec![
        vec![0.0; n], // all machine
        vec![1.0; n], // all human
        vec![0.5; n], // equal blend
        optimize_weights_mse(preds, cfg).w_h().to_vec(),
    ];
    let tie_first = match cfg.tie_break {
        TieBreak::Machine => 0,
        TieBreak::Human => 1,
        TieBreak::Half => 2,
    };
    starts.swap(0, tie_first);
    let mut rng = rng_from(RESTART_SEED);
    for _ in 0..cfg.restarts {
        starts.push((0..n).map(|_| rng.random::<f64>()).collect());
    }
    starts
}

/// Runs the alternating scheme from one start. Only *produced* iterates are
/// candidates: a raw start vector can tie the optimum up to combination
/// rounding (most visibly when the two agents' predictions coincide), and
/// letting it win by a stray ulp would scramble the tie-break convention.
fn run_alternating(problem: &Problem, cfg: &CombinerConfig, start: Vec<f64>, best: &mut Best) {
    let mut w = start;
    let mut joint = problem.joint(&w);
    let mut prev = problem.objective(&joint);

    let mut start_best = Best {
        w: w.clone(),
        objective: prev,
    };
    let mut cycled = false;

    for _ in 0..cfg.max_iters {
        let losses = problem.losses(&joint);
        let inst_coeff = problem.instance_coefficients(&losses);
        let mut w_new = Vec::with_capacity(problem.len());
        for (i, &coeff) in inst_coeff.iter().enumerate() {
            let (ph, pm, y) = (problem.pred_h[i], problem.pred_m[i], problem.y[i]);
            let wi = if coeff > 0.0 {
                closed_form_weight(ph, pm, y, cfg)
            } else if coeff < 0.0 {
                // a negative multiplier rewards loss: push to the worse endpoint
                let loss_m = (pm - y) * (pm - y);
                let loss_h = (ph - y) * (ph - y);
                if loss_m > loss_h {
                    0.0
                } else if loss_h > loss_m {
                    1.0
                } else {
                    cfg.tie_break.weight_h()
                }
            } else {
                cfg.tie_break.weight_h()
            };
            w_new.push(wi);
        }
        joint = problem.joint(&w_new);
        let obj = problem.objective(&joint);
        best.note(&w_new, obj);
        start_best.note(&w_new, obj);
        let moved = w_new != w;
        let delta = prev - obj;
        w = w_new;
        prev = obj;
        if delta < cfg.tol {
            // still moving at stop time means the ranking is oscillating
            cycled = moved;
            break;
        }
    }

    if cycled {
        polish(problem, cfg, &start_best.w, best);
    }
}

/// Projected-gradient descent over the `[0, 1]^n` box with backtracking,
/// using the rank assignment at the current point as a subgradient.
fn polish(problem: &Problem, cfg: &CombinerConfig, start: &[f64], best: &mut Best) {
    let mut w = start.to_vec();
    let mut joint = problem.joint(&w);
    let mut obj = problem.objective(&joint);
    let mut step = cfg.step_size;

    for _ in 0..cfg.max_iters {
        let losses = problem.losses(&joint);
        let inst_coeff = problem.instance_coefficients(&losses);
        let grad: Vec<f64> = (0..problem.len())
            .map(|i| {
                let spread = problem.pred_h[i] - problem.pred_m[i];
                inst_coeff[i] * 2.0 * (joint[i] - problem.y[i]) * spread
            })
            .collect();

        let mut improved = false;
        while step >= 1e-12 {
            let w_try: Vec<f64> = w
                .iter()
                .zip(&grad)
                .map(|(&wi, &gi)| (wi - step * gi).clamp(0.0, 1.0))
                .collect();
            let joint_try = problem.joint(&w_try);
            let obj_try = problem.objective(&joint_try);
            if obj_try < obj {
                w = w_try;
                joint = joint_try;
                obj = obj_try;
                best.note(&w, obj);
                improved = true;
                step = (step * 2.0).min(cfg.step_size);
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
}

/// Exhaustively evaluates every grid combination of per-instance weights.
/// A testing oracle: cost grows as `(1/resolution + 1)^n`, so `n <= 6` is
/// enforced.
pub fn grid_oracle(
    preds: &PredictionSet,
    spec: &EvaluationSpec,
    resolution: f64,
) -> Result<(WeightVector, f64)> {
    let n = preds.len();
    if n > 6 {
        return Err(Error::OracleRefused(format!(
            "n = {n} instances exceed the oracle limit of 6; the grid has \
             (1/resolution + 1)^n points and becomes unaffordable"
        )));
    }
    if spec.direction == Direction::Maximize {
        return Err(Error::InvalidConfig(
            "the grid oracle evaluates loss-style objectives (direction must be minimize)".into(),
        ));
    }
    let steps = resolution_steps(resolution)?;
    let problem = oracle_problem(preds, spec)?;

    let points: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let mut digits = vec![0usize; n];
    let mut w = vec![0.0; n];
    let mut best = Best {
        w: w.clone(),
        objective: f64::INFINITY,
    };
    'outer: loop {
        for (wi, &digit) in w.iter_mut().zip(&digits) {
            *wi = points[digit];
        }
        let joint = problem.joint(&w);
        best.note(&w, problem.objective(&joint));

        let mut pos = 0;
        loop {
            digits[pos] += 1;
            if digits[pos] <= steps {
                break;
            }
            digits[pos] = 0;
            pos += 1;
            if pos == n {
                break 'outer;
            }
        }
    }
    let objective = best.objective;
    Ok((WeightVector::from_human(best.w)?, objective))
}

/// A certified bound on how far the grid optimum can sit above the true
/// optimum: snapping every weight to the nearest grid point moves each loss
/// by at most `2 |pred_h - pred_m| R h / 2` (R bounds the residual over the
/// whole box), and a nonnegatively rank-weighted sum of losses is
/// 1-Lipschitz in their sup norm scaled by the coefficient total.
pub fn grid_discretization_bound(
    preds: &PredictionSet,
    spec: &EvaluationSpec,
    resolution: f64,
) -> Result<f64> {
    let steps = resolution_steps(resolution)?;
    let h = 1.0 / steps as f64;
    let problem = oracle_problem(preds, spec)?;
    let coeff_total: f64 = problem.coeff.iter().sum();
    let worst = preds
        .pred_h()
        .iter()
        .zip(preds.pred_m())
        .zip(preds.y())
        .map(|((&ph, &pm), &y)| (ph - pm).abs() * (ph - y).abs().max((pm - y).abs()))
        .fold(0.0_f64, f64::max);
    Ok(coeff_total * worst * h)
}

fn oracle_problem<'a>(preds: &'a PredictionSet, spec: &EvaluationSpec) -> Result<Problem<'a>> {
    let n = preds.len();
    let nf = n as f64;
    let (theta, vw) = match spec.kind {
        // uniform weights make the rank-weighted path compute a plain MSE
        EvalKind::Mse => (Some(1.0), v_weights(0.5, 1.0, n, false)?),
        EvalKind::RankWeighted { a, b } => (None, v_weights(a, b, n, false)?),
        EvalKind::Blended { a, b, theta } => (Some(theta), v_weights(a, b, n, false)?),
    };
    let mix = theta.unwrap_or(0.0);
    let coeff = vw
        .values()
        .iter()
        .map(|&v| (mix + (1.0 - mix) * v) / nf)
        .collect();
    Ok(Problem {
        y: preds.y(),
        pred_h: preds.pred_h(),
        pred_m: preds.pred_m(),
        coeff,
        vw,
        theta,
        rank_mode: spec.rank_mode,
    })
}

fn resolution_steps(resolution: f64) -> Result<usize> {
    if !resolution.is_finite() || resolution <= 0.0 || resolution > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "grid resolution {resolution} outside (0, 1]"
        )));
    }
    let steps = (1.0 / resolution).round();
    if steps < 1.0 || (steps * resolution - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "grid resolution {resolution} does not divide 1 evenly"
        )));
    }
    Ok(steps as usize)
}
