//! Gradient-boosted decision stumps with second-order split gain.
//!
//! Each round fits one depth-1 tree to the gradients and hessians of the
//! class-weighted logistic loss. Leaf weights and gains use L1
//! soft-thresholding and L2 shrinkage of the gradient sums, `gamma` prunes
//! any split whose gain does not clear it, and `min_child_weight` bounds the
//! hessian mass of each child.

mod model_io;
mod split;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng::{derive_seed, SplitMix64};

pub use model_io::{load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT_VERSION};
pub use split::{find_best_stump, SortedColumns, SplitCandidate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    /// Only 1 is supported.
    pub max_depth: usize,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub scale_pos_weight: f64,
    pub min_child_weight: f64,
    pub gamma: f64,
    pub reg_alpha: f64,
    pub reg_lambda: f64,
    pub decision_threshold: f64,
    pub seed: u64,
    /// Start from the weighted prior log-odds instead of margin 0.
    pub base_margin_from_prior: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            n_estimators: 227,
            learning_rate: 0.0674,
            max_depth: 1,
            subsample: 0.949,
            colsample_bytree: 0.413,
            scale_pos_weight: 10.0,
            min_child_weight: 14.0,
            gamma: 4.19,
            reg_alpha: 0.73,
            reg_lambda: 15.0,
            decision_threshold: 0.738,
            seed: 42,
            base_margin_from_prior: false,
        }
    }
}

fn check_fraction(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} is not in (0, 1]")))
    }
}

fn check_non_negative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} must be a finite value >= 0")))
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::param("n_estimators", "must be positive"));
        }
        if self.max_depth != 1 {
            return Err(Error::param("max_depth", "only stumps (max_depth = 1) are supported"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        if !(self.scale_pos_weight > 0.0 && self.scale_pos_weight.is_finite()) {
            return Err(Error::param("scale_pos_weight", "must be positive"));
        }
        check_fraction("subsample", self.subsample)?;
        check_fraction("colsample_bytree", self.colsample_bytree)?;
        check_non_negative("min_child_weight", self.min_child_weight)?;
        check_non_negative("gamma", self.gamma)?;
        check_non_negative("reg_alpha", self.reg_alpha)?;
        check_non_negative("reg_lambda", self.reg_lambda)?;
        if !(0.0..=1.0).contains(&self.decision_threshold) {
            return Err(Error::param("decision_threshold", "must be in [0, 1]"));
        }
        Ok(())
    }

    /// Rows drawn per round: `round(subsample * n)`, at least 1.
    pub fn rows_per_round(&self, n: usize) -> usize {
        ((self.subsample * n as f64).round() as usize).clamp(1, n.max(1))
    }

    /// Columns drawn per round: `ceil(colsample_bytree * p)`, at least 1.
    pub fn columns_per_round(&self, p: usize) -> usize {
        ((self.colsample_bytree * p as f64).ceil() as usize).clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature_index: usize,
    pub split_threshold: f64,
    /// Margin added when `x[feature] < threshold` (learning rate applied).
    pub left_value: f64,
    pub right_value: f64,
    /// Split gain before the `gamma` penalty; used for importance.
    pub gain: f64,
}

impl Stump {
    #[inline]
    pub fn contribution(&self, features: &[f64]) -> f64 {
        if features[self.feature_index] < self.split_threshold {
            self.left_value
        } else {
            self.right_value
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpEnsemble {
    pub feature_names: Vec<String>,
    pub hyperparams: HyperParams,
    pub base_margin: f64,
    pub decision_threshold: f64,
    pub stumps: Vec<Stump>,
}

impl StumpEnsemble {
    /// An ensemble with no stumps: every prediction is `sigmoid(base_margin)`.
    pub fn empty(feature_names: Vec<String>, hyperparams: HyperParams) -> Self {
        StumpEnsemble {
            feature_names,
            decision_threshold: hyperparams.decision_threshold,
            hyperparams,
            base_margin: 0.0,
            stumps: Vec::new(),
        }
    }

    pub fn margin(&self, features: &[f64]) -> f64 {
        self.stumps
            .iter()
            .fold(self.base_margin, |m, s| m + s.contribution(features))
    }

    pub fn predict_proba(&self, features: &[f64]) -> f64 {
        sigmoid(self.margin(features))
    }

    pub fn predict(&self, features: &[f64]) -> u8 {
        classify(self.predict_proba(features), self.decision_threshold)
    }

    pub fn predict_matrix(&self, matrix: &FeatureMatrix) -> Vec<f64> {
        (0..matrix.n_rows())
            .map(|i| self.predict_proba(matrix.row(i)))
            .collect()
    }
}

pub fn predict_proba(ensemble: &StumpEnsemble, features: &[f64]) -> f64 {
    ensemble.predict_proba(features)
}

/// 1 iff `prob >= threshold`.
pub fn classify(prob: f64, threshold: f64) -> u8 {
    u8::from(prob >= threshold)
}

#[inline]
pub fn sigmoid(margin: f64) -> f64 {
    if margin >= 0.0 {
        1.0 / (1.0 + (-margin).exp())
    } else {
        let e = margin.exp();
        e / (1.0 + e)
    }
}

/// Gradient and hessian of the class-weighted logistic loss at `margin`.
#[inline]
pub fn grad_hess(margin: f64, label: u8, pos_weight: f64) -> (f64, f64) {
    let p = sigmoid(margin);
    let (w, y) = if label == 1 { (pos_weight, 1.0) } else { (1.0, 0.0) };
    (w * (p - y), w * p * (1.0 - p))
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Class-weighted logistic loss of one example.
pub fn weighted_log_loss(margin: f64, label: u8, pos_weight: f64) -> f64 {
    if label == 1 {
        pos_weight * softplus(-margin)
    } else {
        softplus(margin)
    }
}

/// Mean weighted log-loss over a labeled matrix.
pub fn mean_log_loss(ensemble: &StumpEnsemble, matrix: &FeatureMatrix) -> Result<f64> {
    let labels = matrix.labels()?;
    let w = ensemble.hyperparams.scale_pos_weight;
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| weighted_log_loss(ensemble.margin(matrix.row(i)), y, w))
        .sum();
    Ok(total / labels.len().max(1) as f64)
}

/// `sign(g) * max(|g| - alpha, 0)`.
#[inline]
pub fn soft_threshold(g: f64, alpha: f64) -> f64 {
    g.signum() * (g.abs() - alpha).max(0.0)
}

/// Optimal leaf weight before the learning rate is applied.
pub fn leaf_value(grad_sum: f64, hess_sum: f64, params: &HyperParams) -> f64 {
    let denom = hess_sum + params.reg_lambda;
    if denom <= 0.0 {
        return 0.0;
    }
    let v = -soft_threshold(grad_sum, params.reg_alpha) / denom;
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

#[inline]
fn leaf_score(grad_sum: f64, hess_sum: f64, params: &HyperParams) -> f64 {
    let denom = hess_sum + params.reg_lambda;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = soft_threshold(grad_sum, params.reg_alpha);
    t * t / denom
}

/// Regularized second-order gain of splitting a node, net of `gamma`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, params: &HyperParams) -> f64 {
    0.5 * (leaf_score(gl, hl, params) + leaf_score(gr, hr, params) - leaf_score(gl + gr, hl + hr, params))
        - params.gamma
}

/// Per-round training trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Mean weighted log-loss on the training rows, before any round and
    /// after each round.
    pub losses: Vec<f64>,
}

pub fn train(matrix: &FeatureMatrix, params: &HyperParams) -> Result<StumpEnsemble> {
    train_inner(matrix, params, false).map(|(e, _)| e)
}

pub fn train_with_trace(matrix: &FeatureMatrix, params: &HyperParams) -> Result<(StumpEnsemble, TrainTrace)> {
    train_inner(matrix, params, true)
}

/// `k` sorted indices out of `n`; taking everything consumes no draws.
fn draw(rng: &mut SplitMix64, n: usize, k: usize) -> Vec<usize> {
    if k >= n {
        (0..n).collect()
    } else {
        rng.sample_indices(n, k)
    }
}

fn train_inner(matrix: &FeatureMatrix, params: &HyperParams, trace: bool) -> Result<(StumpEnsemble, TrainTrace)> {
    params.validate()?;
    let labels = matrix.labels()?;
    let n = matrix.n_rows();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if n < 2 || positives == 0 || positives == n {
        return Err(Error::DegenerateLabels);
    }

    let mut ensemble = StumpEnsemble::empty(matrix.names.clone(), params.clone());
    if params.base_margin_from_prior {
        ensemble.base_margin = (params.scale_pos_weight * positives as f64 / (n - positives) as f64).ln();
    }

    let sorted = SortedColumns::new(matrix);
    // Separate streams so the row draws do not depend on the column count.
    let mut row_rng = SplitMix64::new(derive_seed(params.seed, "boost-rows", 0));
    let mut col_rng = SplitMix64::new(derive_seed(params.seed, "boost-cols", 0));
    let mut margins = vec![ensemble.base_margin; n];
    let mut grads = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut in_rows = vec![false; n];
    let n_rows = params.rows_per_round(n);
    let p = matrix.n_cols();
    let n_cols = params.columns_per_round(p);

    let loss = |margins: &[f64]| -> f64 {
        margins
            .iter()
            .zip(labels)
            .map(|(&m, &y)| weighted_log_loss(m, y, params.scale_pos_weight))
            .sum::<f64>()
            / n as f64
    };
    let mut losses = Vec::new();
    if trace {
        losses.push(loss(&margins));
    }

    for _ in 0..params.n_estimators {
        let rows = draw(&mut row_rng, n, n_rows);
        let cols = draw(&mut col_rng, p, n_cols);
        in_rows.iter_mut().for_each(|f| *f = false);
        for &r in &rows {
            in_rows[r] = true;
            let (g, h) = grad_hess(margins[r], labels[r], params.scale_pos_weight);
            grads[r] = g;
            hess[r] = h;
        }

        let Some(best) = sorted.best_split(&grads, &hess, &rows, &in_rows, &cols, params) else {
            log::debug!(
                "no split clears gamma/min_child_weight after {} rounds",
                ensemble.stumps.len()
            );
            break;
        };
        let stump = Stump {
            feature_index: best.feature_index,
            split_threshold: best.split_threshold,
            left_value: params.learning_rate * leaf_value(best.grad_left, best.hess_left, params),
            right_value: params.learning_rate * leaf_value(best.grad_right, best.hess_right, params),
            gain: best.gain + params.gamma,
        };
        for (i, m) in margins.iter_mut().enumerate() {
            *m += stump.contribution(matrix.row(i));
        }
        ensemble.stumps.push(stump);
        if trace {
            losses.push(loss(&margins));
        }
    }
    Ok((ensemble, TrainTrace { losses }))
}

/// Share of total pre-gamma split gain per feature. Empty for an empty
/// ensemble; otherwise the shares sum to 1.
pub fn feature_importance(ensemble: &StumpEnsemble) -> BTreeMap<String, f64> {
    let mut by_feature: BTreeMap<usize, f64> = BTreeMap::new();
    for s in &ensemble.stumps {
        *by_feature.entry(s.feature_index).or_default() += s.gain;
    }
    let total: f64 = by_feature.values().sum();
    if total <= 0.0 {
        return BTreeMap::new();
    }
    by_feature
        .into_iter()
        .map(|(i, g)| (ensemble.feature_names[i].clone(), g / total))
        .collect()
}

/// Features ordered by descending share (ties by name), with 1-based ranks.
pub fn importance_ranking(importance: &BTreeMap<String, f64>) -> Vec<(usize, String, f64)> {
    let mut v: Vec<(&String, &f64)> = importance.iter().collect();
    v.sort_by(|a, b| b.1.total_cmp(a.1).then_with(|| a.0.cmp(b.0)));
    v.into_iter()
        .enumerate()
        .map(|(i, (name, share))| (i + 1, name.clone(), *share))
        .collect()
}
