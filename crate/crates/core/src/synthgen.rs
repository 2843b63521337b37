//! Synthetic linear-Gaussian data generation and the two feature-access
//! manipulations used by the experiments.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Data-generating process: `x ~ N(0, I_dxd)`, `y = x' beta + eps` with
/// `eps ~ N(0, noise_sd^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    pub d: usize,
    pub noise_sd: f64,
    pub beta: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

impl DgpConfig {
    /// The default process: ten unit-coefficient features, unit noise.
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            d: 10,
            noise_sd: 1.0,
            beta: vec![1.0; 10],
            n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidConfig("d must be at least 1".into()));
        }
        if self.beta.len() != self.d {
            return Err(Error::InvalidConfig(format!(
                "beta has {} entries but d = {}",
                self.beta.len(),
                self.d
            )));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidConfig(
                "beta contains a non-finite entry".into(),
            ));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "noise_sd = {} must be nonnegative",
                self.noise_sd
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        Ok(())
    }

    /// Same process with a different sample size and seed; experiments derive
    /// per-replicate variants this way.
    pub fn with_n_seed(&self, n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            ..self.clone()
        }
    }
}

/// A sorted, duplicate-free set of feature column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureView {
    indices: Vec<usize>,
}

impl FeatureView {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        if indices.is_empty() {
            return Err(Error::InvalidConfig(
                "feature view must be non-empty".into(),
            ));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(
                "feature view contains duplicate indices".into(),
            ));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn max_index(&self) -> usize {
        *self.indices.last().expect("non-empty")
    }
}

/// Draws the feature matrix and targets for `cfg`. Deterministic given
/// `cfg.seed`: entries are drawn row-major, then the noise vector.
pub fn generate_dataset(cfg: &DgpConfig) -> Result<(DMatrix<f64>, DVector<f64>)> {
    cfg.validate()?;
    let mut rng = rng_from(cfg.seed);
    let mut data = Vec::with_capacity(cfg.n * cfg.d);
    for _ in 0..cfg.n * cfg.d {
        data.push(rng.sample::<f64, _>(StandardNormal));
    }
    let x = DMatrix::from_row_slice(cfg.n, cfg.d, &data);
    let beta = DVector::from_column_slice(&cfg.beta);
    let mut y = &x * beta;
    if cfg.noise_sd > 0.0 {
        for v in y.iter_mut() {
            *v += cfg.noise_sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok((x, y))
}

/// Splits `d` features so both views share `z` of them and each view gets
/// `(d - z) / 2` exclusive ones. The assignment is randomized by `seed`; the
/// union always covers all `d` features.
pub fn overlap_split(d: usize, z: usize, seed: u64) -> Result<(FeatureView, FeatureView)> {
    if z >= d {
        return Err(Error::InvalidConfig(format!(
            "z = {z} must be strictly less than d = {d} (full overlap leaves nothing to split)"
        )));
    }
    if !(d - z).is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "d - z = {} is odd: the non-shared features cannot be split evenly \
             between the two views (d - z must be even)",
            d - z
        )));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut rng_from(seed));
    let half = (d - z) / 2;
    let shared = &order[..z];
    let only_h = &order[z..z + half];
    let only_m = &order[z + half..];
    let view_h = FeatureView::new(shared.iter().chain(only_h).copied())?;
    let view_m = FeatureView::new(shared.iter().chain(only_m).copied())?;
    Ok((view_h, view_m))
}

/// Keeps each entry independently with probability `alpha`, zeroing the rest.
/// Kept entries are copied bit-exactly. Deterministic given `seed`.
pub fn alpha_mask(column: &[f64], alpha: f64, seed: u64) -> Result<Vec<f64>> {
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!(
            "alpha = {alpha} outside [0, 1]"
        )));
    }
    if let Some(i) = column.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite value in column at index {i}"
        )));
    }
    let mut rng = rng_from(seed);
    Ok(column
        .iter()
        .map(|&v| {
            // u in [0, 1): alpha = 1 keeps everything, alpha = 0 nothing
            if rng.random::<f64>() < alpha {
                v
            } else {
                0.0
            }
        })
        .collect())
}
