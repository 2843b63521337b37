//! Linear policy fitting: ordinary least squares for the machine agent and
//! alternating weighted least squares for the rank-weighted human objective.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::objectives::{eval_rank_weighted, v_weights, VWeights};
use crate::synthgen::FeatureView;
use crate::types::RankMode;

/// Solver knobs. The defaults fit the zero-mean synthetic process: no
/// intercept, tight convergence, and a diagonal nudge reserved for singular
/// systems.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub include_intercept: bool,
    pub max_outer_iters: usize,
    pub convergence_tol: f64,
    pub ridge_epsilon: f64,
    pub rank_mode: RankMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            include_intercept: false,
            max_outer_iters: 100,
            convergence_tol: 1e-8,
            ridge_epsilon: 1e-10,
            rank_mode: RankMode::Sorted,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidConfig(
                "max_outer_iters must be positive".into(),
            ));
        }
        if !self.convergence_tol.is_finite() || self.convergence_tol <= 0.0 {
            return Err(Error::InvalidConfig(
                "convergence_tol must be positive".into(),
            ));
        }
        if !self.ridge_epsilon.is_finite() || self.ridge_epsilon < 0.0 {
            return Err(Error::InvalidConfig(
                "ridge_epsilon must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// A linear predictor over a feature view.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPolicy {
    view: FeatureView,
    coefficients: Vec<f64>,
    intercept: f64,
}

impl LinearPolicy {
    pub fn new(view: FeatureView, coefficients: Vec<f64>, intercept: f64) -> Result<Self> {
        if coefficients.len() != view.len() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for a view of {} features",
                coefficients.len(),
                view.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) || !intercept.is_finite() {
            return Err(Error::InvalidInput("non-finite policy parameter".into()));
        }
        Ok(Self {
            view,
            coefficients,
            intercept,
        })
    }

    pub fn view(&self) -> &FeatureView {
        &self.view
    }

    /// Coefficients in ascending view-index order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }
}

/// Outcome of the alternating rank-weighted fit: the best iterate visited,
/// its objective, and whether the tolerance criterion was met before the
/// iteration cap.
#[derive(Debug, Clone, PartialEq)]
pub struct RankWeightedFit {
    pub policy: LinearPolicy,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Least-squares fit of `y` on the `view` columns of `x`.
///
/// Solved via the normal equations and Cholesky; `ridge_epsilon` is added to
/// the diagonal only if the plain system is numerically singular, and a
/// system that stays singular after that is reported with its condition
/// estimate.
pub fn fit_ols(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    view: &FeatureView,
    cfg: &FitConfig,
) -> Result<LinearPolicy> {
    cfg.validate()?;
    let design = design_matrix(x, view, cfg.include_intercept)?;
    check_shape(&design, y)?;
    let solution = solve_wls(&design, y, None, cfg.ridge_epsilon)?;
    split_solution(solution, view.clone(), cfg.include_intercept)
}

/// Applies a policy to the rows of a full feature matrix.
pub fn predict(policy: &LinearPolicy, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    if policy.view.max_index() >= x.ncols() {
        return Err(Error::InvalidInput(format!(
            "policy uses feature {} but the matrix has only {} columns",
            policy.view.max_index(),
            x.ncols()
        )));
    }
    let mut out = Vec::with_capacity(x.nrows());
    for i in 0..x.nrows() {
        let mut acc = policy.intercept;
        for (c, &j) in policy.coefficients.iter().zip(policy.view.indices()) {
            acc += c * x[(i, j)];
        }
        out.push(acc);
    }
    Ok(out)
}

/// Fits a linear policy that approximately minimizes the rank-weighted
/// squared loss for `(a, b)` by alternating between (1) ranking the current
/// residual losses and (2) solving the weighted least squares induced by the
/// rank weights. Starts from the plain OLS solution and keeps the best
/// iterate visited, so the returned objective never exceeds the OLS policy's
/// rank-weighted objective.
pub fn fit_rank_weighted(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    view: &FeatureView,
    a: f64,
    b: f64,
    cfg: &FitConfig,
) -> Result<RankWeightedFit> {
    cfg.validate()?;
    let n = x.nrows();
    let vw = v_weights(a, b, n, false)?;
    let design = design_matrix(x, view, cfg.include_intercept)?;
    check_shape(&design, y)?;
    let y_slice: Vec<f64> = y.iter().copied().collect();

    let mut current = solve_wls(&design, y, None, cfg.ridge_epsilon)?;
    let preds = design_predict(&design, &current);
    let mut prev_obj = eval_rank_weighted(&preds, &y_slice, &vw, cfg.rank_mode);
    let mut best = current.clone();
    let mut best_obj = prev_obj;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_outer_iters {
        iterations += 1;
        let preds = design_predict(&design, &current);
        let weights = rank_weights_for(&preds, &y_slice, &vw, cfg.rank_mode);
        current = solve_wls(&design, y, Some(&weights), cfg.ridge_epsilon)?;
        let preds = design_predict(&design, &current);
        let obj = eval_rank_weighted(&preds, &y_slice, &vw, cfg.rank_mode);
        if obj < best_obj {
            best_obj = obj;
            best = current.clone();
        }
        if prev_obj - obj < cfg.convergence_tol {
            converged = true;
            break;
        }
        prev_obj = obj;
    }

    let policy = split_solution(best, view.clone(), cfg.include_intercept)?;
    Ok(RankWeightedFit {
        policy,
        objective: best_obj,
        converged,
        iterations,
    })
}

/// Assigns each instance the rank weight of its loss position: under
/// `Sorted`, the k-th smallest loss gets `v_k` (ties broken by instance
/// index); under `FixedIndex`, instance i gets `v_i`.
fn rank_weights_for(preds: &[f64], y: &[f64], vw: &VWeights, rank_mode: RankMode) -> Vec<f64> {
    let n = preds.len();
    match rank_mode {
        RankMode::FixedIndex => vw.values().to_vec(),
        RankMode::Sorted => {
            let losses: Vec<f64> = preds
                .iter()
                .zip(y)
                .map(|(&p, &t)| (p - t) * (p - t))
                .collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_unstable_by(|&i, &j| losses[i].total_cmp(&losses[j]).then(i.cmp(&j)));
            let mut weights = vec![0.0; n];
            for (rank, &i) in order.iter().enumerate() {
                weights[i] = vw.values()[rank];
            }
            weights
        }
    }
}

fn design_predict(design: &DMatrix<f64>, solution: &DVector<f64>) -> Vec<f64> {
    (design * solution).iter().copied().collect()
}

/// Restricts `x` to the view columns, appending a ones column when an
/// intercept is requested.
fn design_matrix(x: &DMatrix<f64>, view: &FeatureView, intercept: bool) -> Result<DMatrix<f64>> {
    if view.max_index() >= x.ncols() {
        return Err(Error::InvalidInput(format!(
            "view uses feature {} but the matrix has only {} columns",
            view.max_index(),
            x.ncols()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "feature matrix contains a non-finite value".into(),
        ));
    }
    let p = view.len() + usize::from(intercept);
    let mut design = DMatrix::zeros(x.nrows(), p);
    for (dst, &src) in view.indices().iter().enumerate() {
        design.set_column(dst, &x.column(src));
    }
    if intercept {
        design.set_column(p - 1, &DVector::from_element(x.nrows(), 1.0).column(0));
    }
    Ok(design)
}

fn check_shape(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if y.len() != design.nrows() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} targets",
            design.nrows(),
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "target vector contains a non-finite value".into(),
        ));
    }
    if design.nrows() < design.ncols() {
        return Err(Error::InvalidInput(format!(
            "{} rows cannot identify {} parameters",
            design.nrows(),
            design.ncols()
        )));
    }
    Ok(())
}

/// Solves the (optionally row-weighted) normal equations. Unit weights take
/// the identical code path as no weights, so the `b = 1` rank-weighted fit
/// reproduces OLS bit for bit.
fn solve_wls(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    row_weights: Option<&[f64]>,
    ridge_epsilon: f64,
) -> Result<DVector<f64>> {
    if let Some(w) = row_weights {
        if let Some(i) = w.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "row weight {} at index {i} must be finite and nonnegative",
                w[i]
            )));
        }
    }
    let (gram, rhs) = match row_weights {
        None => (design.tr_mul(design), design.tr_mul(y)),
        Some(w) => {
            let mut scaled = design.clone();
            for (i, &wi) in w.iter().enumerate() {
                for j in 0..scaled.ncols() {
                    scaled[(i, j)] *= wi;
                }
            }
            let wy = DVector::from_iterator(y.len(), y.iter().zip(w).map(|(&yi, &wi)| wi * yi));
            (design.tr_mul(&scaled), design.tr_mul(&wy))
        }
    };

    if let Some(chol) = nalgebra::Cholesky::new(gram.clone()) {
        let solution = chol.solve(&rhs);
        if solution.iter().all(|v| v.is_finite()) {
            return Ok(solution);
        }
    }
    // numerically singular: nudge the diagonal once and retry
    let mut ridged = gram.clone();
    for j in 0..ridged.ncols() {
        ridged[(j, j)] += ridge_epsilon;
    }
    if let Some(chol) = nalgebra::Cholesky::new(ridged) {
        let solution = chol.solve(&rhs);
        if solution.iter().all(|v| v.is_finite()) {
            return Ok(solution);
        }
    }
    let sv = gram.svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    Err(Error::IllConditioned {
        context: format!(
            "normal equations stayed rank-deficient after adding ridge {ridge_epsilon:e}"
        ),
        condition,
    })
}

fn split_solution(
    solution: DVector<f64>,
    view: FeatureView,
    intercept: bool,
) -> Result<LinearPolicy> {
    let mut coefficients: Vec<f64> = solution.iter().copied().collect();
    let intercept_value = if intercept {
        coefficients.pop().expect("intercept column present")
    } else {
        0.0
    };
    LinearPolicy::new(view, coefficients, intercept_value)
}
