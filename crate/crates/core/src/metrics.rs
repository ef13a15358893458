//! Confusion counts, precision/recall/F-beta, and stratified splitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const DEFAULT_BETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix::new(
            self.tp + other.tp,
            self.fp + other.fp,
            self.fn_ + other.fn_,
            self.tn + other.tn,
        )
    }
}

pub fn confusion(preds: &[u8], labels: &[u8]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: labels.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &y) in preds.iter().zip(labels) {
        match (p == 1, y == 1) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Zero-denominator conditions; the affected metric is reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricFlags {
    pub no_positive_predictions: bool,
    pub no_positive_labels: bool,
}

/// `(precision, recall, flags)`.
pub fn precision_recall(cm: &ConfusionMatrix) -> (f64, f64, MetricFlags) {
    let flags = MetricFlags {
        no_positive_predictions: cm.tp + cm.fp == 0,
        no_positive_labels: cm.tp + cm.fn_ == 0,
    };
    let p = if flags.no_positive_predictions {
        0.0
    } else {
        cm.tp as f64 / (cm.tp + cm.fp) as f64
    };
    let r = if flags.no_positive_labels {
        0.0
    } else {
        cm.tp as f64 / (cm.tp + cm.fn_) as f64
    };
    (p, r, flags)
}

/// `(1 + b^2) P R / (b^2 P + R)`, and 0 when the denominator vanishes.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom <= 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub beta: f64,
    pub confusion: ConfusionMatrix,
    pub flags: MetricFlags,
}

impl MetricBundle {
    pub fn from_confusion(cm: ConfusionMatrix, beta: f64) -> Self {
        let (precision, recall, flags) = precision_recall(&cm);
        MetricBundle {
            precision,
            recall,
            f_beta: f_beta(precision, recall, beta),
            beta,
            confusion: cm,
            flags,
        }
    }

    pub fn evaluate(preds: &[u8], labels: &[u8], beta: f64) -> Result<Self> {
        Ok(Self::from_confusion(confusion(preds, labels)?, beta))
    }

    pub fn to_text(&self) -> String {
        let cm = &self.confusion;
        let mut out = format!(
            "precision {:.4}  recall {:.4}  F{} {:.4}\nconfusion tp={} fp={} fn={} tn={}\n",
            self.precision, self.recall, self.beta, self.f_beta, cm.tp, cm.fp, cm.fn_, cm.tn
        );
        if self.flags.no_positive_predictions {
            out.push_str("note: no positive predictions (precision reported as 0)\n");
        }
        if self.flags.no_positive_labels {
            out.push_str("note: no positive labels (recall reported as 0)\n");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<MetricBundle>,
    pub mean_f_beta: f64,
    /// Sample (n - 1) standard deviation across folds.
    pub std_f_beta: f64,
}

impl CvSummary {
    pub fn from_folds(folds: Vec<MetricBundle>, seed: u64) -> Self {
        let scores: Vec<f64> = folds.iter().map(|f| f.f_beta).collect();
        let (mean_f_beta, std_f_beta) = mean_and_sample_std(&scores);
        CvSummary {
            k: folds.len(),
            seed,
            folds,
            mean_f_beta,
            std_f_beta,
        }
    }
}

pub fn mean_and_sample_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn class_indices(labels: &[u8]) -> [Vec<usize>; 2] {
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == 1 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    [neg, pos]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoldoutSplit {
    pub train: Vec<usize>,
    pub eval: Vec<usize>,
    /// Some class contributed no rows to one side of the split.
    pub degenerate: bool,
}

/// Per class, `round(count * holdout_fraction)` shuffled indices go to the
/// evaluation side. Both index lists come back sorted.
pub fn stratified_split(labels: &[u8], holdout_fraction: f64, seed: u64) -> Result<HoldoutSplit> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::param("holdout_fraction", "must be in (0, 1)"));
    }
    let classes = class_indices(labels);
    if classes.iter().any(Vec::is_empty) {
        return Err(Error::DegenerateLabels);
    }
    let mut rng = SplitMix64::new(seed);
    let mut train = Vec::new();
    let mut eval = Vec::new();
    let mut degenerate = false;
    for mut members in classes {
        rng.shuffle(&mut members);
        let n_eval = (members.len() as f64 * holdout_fraction).round() as usize;
        degenerate |= n_eval == 0 || n_eval == members.len();
        eval.extend_from_slice(&members[..n_eval]);
        train.extend_from_slice(&members[n_eval..]);
    }
    if degenerate {
        log::warn!("stratified split is degenerate: a class is missing from one side");
    }
    train.sort_unstable();
    eval.sort_unstable();
    Ok(HoldoutSplit {
        train,
        eval,
        degenerate,
    })
}

/// `k` disjoint folds covering every index. Each class is shuffled and dealt
/// round-robin, continuing the deal position across classes so fold sizes
/// also differ by at most one.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::param("k", "need at least 2 folds"));
    }
    let classes = class_indices(labels);
    if classes.iter().any(|c| c.len() < k) {
        return Err(Error::param("k", format!("every class needs at least {k} members")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for mut members in classes {
        rng.shuffle(&mut members);
        for i in members {
            folds[slot].push(i);
            slot = (slot + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}
