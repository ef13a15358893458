//! Rule layer + classifier assembled into one predictor, and the
//! cross-validation protocol that evaluates it.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::{self, HyperParams, StumpEnsemble};
use crate::error::{Error, Result};
use crate::features::{build_matrix, FeatureMatrix, FEATURE_NAMES, N_FEATURES};
use crate::metrics::{stratified_kfold, stratified_split, CvSummary, HoldoutSplit, MetricBundle};
use crate::record::FounderRecord;
use crate::rng::derive_seed;
use crate::rules::{apply_rules, RuleConfig};

/// Features introduced with the second feature-set revision; removing them
/// gives the 23-column v1 set.
pub const V2_ADDITIONS: [&str; 5] = [
    "exit_x_serial",
    "sacrifice_x_serial",
    "industry_prestige_penalty",
    "industry_alignment",
    "prestige_x_relevance",
];

pub fn v1_feature_names() -> Vec<&'static str> {
    FEATURE_NAMES
        .iter()
        .copied()
        .filter(|n| !V2_ADDITIONS.contains(n))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    ZeroShotStub,
    RuleOnly,
    StructV1,
    StructV2,
    StructV2PlusSide,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::ZeroShotStub,
        Variant::RuleOnly,
        Variant::StructV1,
        Variant::StructV2,
        Variant::StructV2PlusSide,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::ZeroShotStub => "zero_shot_stub",
            Variant::RuleOnly => "rule_only",
            Variant::StructV1 => "struct_v1",
            Variant::StructV2 => "struct_v2",
            Variant::StructV2PlusSide => "struct_v2_plus_side",
        }
    }

    /// Human-readable row label for comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            Variant::ZeroShotStub => "Zero-shot predictions (external)",
            Variant::RuleOnly => "Rule layer only (prior exit)",
            Variant::StructV1 => "Structured v1 (23 features)",
            Variant::StructV2 => "Structured v2 (28 features)",
            Variant::StructV2PlusSide => "Structured v2 + side features (37)",
        }
    }

    pub fn trains_model(self) -> bool {
        matches!(self, Variant::StructV1 | Variant::StructV2 | Variant::StructV2PlusSide)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_owned()))
    }
}

/// What to fit: which columns feed the classifier (all when `None`), whether
/// a classifier is used at all, and the rule set.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSpec {
    pub columns: Option<Vec<String>>,
    pub use_classifier: bool,
    pub rules: RuleConfig,
    pub params: HyperParams,
    pub beta: f64,
}

impl PipelineSpec {
    pub fn rules_only(rules: RuleConfig) -> Self {
        PipelineSpec {
            columns: None,
            use_classifier: false,
            rules,
            params: HyperParams::default(),
            beta: crate::metrics::DEFAULT_BETA,
        }
    }

    pub fn full(rules: RuleConfig, params: HyperParams) -> Self {
        PipelineSpec {
            columns: None,
            use_classifier: true,
            rules,
            params,
            beta: crate::metrics::DEFAULT_BETA,
        }
    }

    /// The spec a model-training variant runs with. The zero-shot stub has
    /// no pipeline.
    pub fn for_variant(variant: Variant, rules: RuleConfig, params: HyperParams) -> Option<Self> {
        match variant {
            Variant::ZeroShotStub => None,
            Variant::RuleOnly => Some(Self::rules_only(rules)),
            Variant::StructV1 => Some(PipelineSpec {
                columns: Some(v1_feature_names().into_iter().map(str::to_owned).collect()),
                ..Self::full(rules, params)
            }),
            Variant::StructV2 => Some(PipelineSpec {
                columns: Some(FEATURE_NAMES.iter().map(|s| (*s).to_owned()).collect()),
                ..Self::full(rules, params)
            }),
            Variant::StructV2PlusSide => Some(Self::full(rules, params)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub rules: RuleConfig,
    pub model: Option<StumpEnsemble>,
}

fn check_canonical_prefix(matrix: &FeatureMatrix) -> Result<()> {
    let ok = matrix.n_cols() >= N_FEATURES && matrix.names.iter().zip(FEATURE_NAMES).all(|(a, b)| a == b);
    if ok {
        Ok(())
    } else {
        Err(Error::param(
            "matrix",
            "the first 28 columns must be the canonical features",
        ))
    }
}

fn model_view(matrix: &FeatureMatrix, columns: &Option<Vec<String>>) -> Result<FeatureMatrix> {
    match columns {
        None => Ok(matrix.clone()),
        Some(cols) => {
            let names: Vec<&str> = cols.iter().map(String::as_str).collect();
            matrix.select_columns(&names)
        }
    }
}

impl FittedPipeline {
    /// Fits on a labeled matrix whose first 28 columns are the canonical
    /// features (side columns may follow).
    pub fn fit(matrix: &FeatureMatrix, spec: &PipelineSpec) -> Result<Self> {
        check_canonical_prefix(matrix)?;
        matrix.labels()?;
        let model = if spec.use_classifier {
            Some(boost::train(&model_view(matrix, &spec.columns)?, &spec.params)?)
        } else {
            None
        };
        Ok(FittedPipeline {
            rules: spec.rules,
            model,
        })
    }

    /// Rule overrides first, then the classifier (negative when absent).
    pub fn predict(&self, matrix: &FeatureMatrix) -> Result<Vec<u8>> {
        check_canonical_prefix(matrix)?;
        let model_cols: Option<Vec<usize>> = match &self.model {
            Some(m) => Some(
                m.feature_names
                    .iter()
                    .map(|n| {
                        matrix
                            .column_index(n)
                            .ok_or_else(|| Error::param("matrix", format!("missing model column `{n}`")))
                    })
                    .collect::<Result<_>>()?,
            ),
            None => None,
        };
        let mut buf = Vec::new();
        Ok((0..matrix.n_rows())
            .map(|i| {
                let row = matrix.row(i);
                if apply_rules(&self.rules, row).is_some() {
                    return 1;
                }
                match (&self.model, &model_cols) {
                    (Some(m), Some(cols)) => {
                        buf.clear();
                        buf.extend(cols.iter().map(|&c| row[c]));
                        m.predict(&buf)
                    }
                    _ => 0,
                }
            })
            .collect())
    }

    /// Classifier-only predictions (no rule overrides); all zero without a model.
    pub fn predict_classifier(&self, matrix: &FeatureMatrix) -> Result<Vec<u8>> {
        let without_rules = FittedPipeline {
            rules: RuleConfig::none(),
            model: self.model.clone(),
        };
        without_rules.predict(matrix)
    }
}

/// Fits on the training side of a stratified holdout split and scores the
/// evaluation side.
pub fn holdout_evaluate(
    matrix: &FeatureMatrix,
    spec: &PipelineSpec,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(MetricBundle, FittedPipeline, HoldoutSplit)> {
    let labels = matrix.labels()?;
    let split = stratified_split(labels, holdout_fraction, seed)?;
    let train = matrix.select_rows(&split.train);
    let eval = matrix.select_rows(&split.eval);
    let fitted = FittedPipeline::fit(&train, spec)?;
    let preds = fitted.predict(&eval)?;
    let metrics = MetricBundle::evaluate(&preds, eval.labels()?, spec.beta)?;
    Ok((metrics, fitted, split))
}

/// Stratified k-fold CV. Folds run in parallel; fold `i` trains with seed
/// `derive_seed(seed, "cv-fold", i)`, so results do not depend on the thread
/// count.
pub fn cross_validate_matrix(matrix: &FeatureMatrix, spec: &PipelineSpec, k: usize, seed: u64) -> Result<CvSummary> {
    let labels = matrix.labels()?;
    let folds = stratified_kfold(labels, k, seed)?;
    let bundles: Vec<MetricBundle> = (0..k)
        .into_par_iter()
        .map(|i| {
            let train_rows: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, f)| f.iter().copied())
                .collect();
            let mut fold_spec = spec.clone();
            fold_spec.params.seed = derive_seed(seed, "cv-fold", i as u64);
            let fitted = FittedPipeline::fit(&matrix.select_rows(&train_rows), &fold_spec)?;
            let held = matrix.select_rows(&folds[i]);
            let preds = fitted.predict(&held)?;
            MetricBundle::evaluate(&preds, held.labels()?, spec.beta)
        })
        .collect::<Result<_>>()?;
    Ok(CvSummary::from_folds(bundles, seed))
}

pub fn cross_validate(records: &[FounderRecord], spec: &PipelineSpec, k: usize, seed: u64) -> Result<CvSummary> {
    let matrix = build_matrix(records);
    if matrix.labels.is_none() {
        return Err(Error::Unlabeled);
    }
    cross_validate_matrix(&matrix, spec, k, seed)
}
