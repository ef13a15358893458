//! Ablation variants, diagnostic audits and comparison reports.

mod side;
mod synthetic;

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::boost::HyperParams;
use crate::boost::{feature_importance, importance_ranking, StumpEnsemble};
use crate::error::{Error, Result};
use crate::features::{idx, FeatureMatrix, FEATURE_NAMES, N_FEATURES};
use crate::metrics::{stratified_split, CvSummary, MetricBundle};
use crate::pipeline::{cross_validate_matrix, holdout_evaluate, FittedPipeline, PipelineSpec, Variant};
use crate::rules::{apply_rules, RuleConfig};

pub use side::{
    merge_side_features, simulate_side_features, MergeInfo, SideFeatureTable, N_SIDE_FEATURES, SIDE_FEATURE_NAMES,
};
pub use synthetic::{generate_synthetic, SignalSpec, SyntheticDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: Variant,
    pub label: String,
    pub n_features: Option<usize>,
    pub val: MetricBundle,
    pub cv: Option<CvSummary>,
    /// Val F-beta minus the baseline's, in percentage points.
    pub delta_vs_baseline_pp: Option<f64>,
    pub side_coverage: Option<f64>,
}

/// Everything a variant run needs besides the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantConfig {
    pub rules: RuleConfig,
    pub params: HyperParams,
    pub holdout_fraction: f64,
    pub k: usize,
    pub seed: u64,
    pub beta: f64,
    /// `row_id -> 0/1` for the zero-shot stub.
    pub external_predictions: Option<BTreeMap<String, u8>>,
    pub side_coverage: Option<f64>,
}

impl Default for VariantConfig {
    fn default() -> Self {
        VariantConfig {
            rules: RuleConfig::default(),
            params: HyperParams::default(),
            holdout_fraction: 0.2,
            k: 5,
            seed: 42,
            beta: crate::metrics::DEFAULT_BETA,
            external_predictions: None,
            side_coverage: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantRun {
    pub result: VariantResult,
    /// Model fitted on the training side of the holdout split.
    pub model: Option<StumpEnsemble>,
    /// Evaluation-side row indices of the holdout split.
    pub eval_rows: Vec<usize>,
}

/// Reads `row_id, prediction` (0/1).
pub fn read_external_predictions(input: impl Read) -> Result<BTreeMap<String, u8>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let (id_col, pred_col) = (col("row_id")?, col("prediction")?);
    let mut out = BTreeMap::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let id = rec.get(id_col).unwrap_or("").trim().to_owned();
        let pred = match rec.get(pred_col).map(str::trim) {
            Some("1" | "1.0" | "true") => 1,
            Some("0" | "0.0" | "false") => 0,
            other => {
                return Err(Error::MalformedRow {
                    line: line + 2,
                    message: format!("prediction `{}` is not 0/1", other.unwrap_or("")),
                })
            }
        };
        out.insert(id, pred);
    }
    Ok(out)
}

fn missing_input(variant: Variant, what: &'static str) -> Error {
    Error::MissingInput {
        variant: variant.to_string(),
        what,
    }
}

/// The columns a variant is fitted on: the canonical 28 for the structured
/// variants, all 37 for `struct_v2_plus_side`.
pub fn variant_view(variant: Variant, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    if variant == Variant::StructV2PlusSide {
        if matrix.n_cols() != N_FEATURES + N_SIDE_FEATURES {
            return Err(missing_input(variant, "a side-feature table merged into the matrix"));
        }
        return Ok(matrix.clone());
    }
    matrix.select_columns(&FEATURE_NAMES)
}

fn variant_spec(variant: Variant, config: &VariantConfig) -> Result<PipelineSpec> {
    let mut spec = PipelineSpec::for_variant(variant, config.rules, config.params.clone())
        .ok_or_else(|| missing_input(variant, "external predictions; it has no pipeline"))?;
    spec.beta = config.beta;
    Ok(spec)
}

fn result_for(variant: Variant, n_features: Option<usize>, val: MetricBundle, config: &VariantConfig) -> VariantResult {
    VariantResult {
        variant,
        label: variant.label().to_owned(),
        n_features,
        val,
        cv: None,
        delta_vs_baseline_pp: None,
        side_coverage: (variant == Variant::StructV2PlusSide)
            .then_some(config.side_coverage)
            .flatten(),
    }
}

/// Holdout half of [`run_variant`]: fits on the training side of the
/// stratified split and scores the evaluation side. The zero-shot stub
/// scores its external predictions on the same evaluation rows; rows
/// without a prediction count as negative.
pub fn run_variant_holdout(variant: Variant, matrix: &FeatureMatrix, config: &VariantConfig) -> Result<VariantRun> {
    let labels = matrix.labels()?;
    if variant == Variant::ZeroShotStub {
        let preds_by_id = config
            .external_predictions
            .as_ref()
            .ok_or_else(|| missing_input(variant, "an external predictions file"))?;
        let split = stratified_split(labels, config.holdout_fraction, config.seed)?;
        let mut missing = 0usize;
        let preds: Vec<u8> = split
            .eval
            .iter()
            .map(|&i| {
                preds_by_id.get(&matrix.row_ids[i]).copied().unwrap_or_else(|| {
                    missing += 1;
                    0
                })
            })
            .collect();
        if missing > 0 {
            log::warn!("zero-shot stub: {missing} evaluation rows have no external prediction (scored as 0)");
        }
        let eval_labels: Vec<u8> = split.eval.iter().map(|&i| labels[i]).collect();
        let val = MetricBundle::evaluate(&preds, &eval_labels, config.beta)?;
        return Ok(VariantRun {
            result: result_for(variant, None, val, config),
            model: None,
            eval_rows: split.eval,
        });
    }

    let view = variant_view(variant, matrix)?;
    let spec = variant_spec(variant, config)?;
    let (val, fitted, split) = holdout_evaluate(&view, &spec, config.holdout_fraction, config.seed)?;
    Ok(VariantRun {
        result: result_for(variant, n_model_features(&spec, &view), val, config),
        model: fitted.model,
        eval_rows: split.eval,
    })
}

fn n_model_features(spec: &PipelineSpec, matrix: &FeatureMatrix) -> Option<usize> {
    spec.use_classifier
        .then(|| spec.columns.as_ref().map_or(matrix.n_cols(), Vec::len))
}

/// Runs one comparison variant: holdout metrics on the stratified split plus
/// k-fold CV on the full matrix (the zero-shot stub gets holdout only).
///
/// `matrix` must start with the 28 canonical columns; `struct_v2_plus_side`
/// additionally needs the 9 merged side columns.
pub fn run_variant(variant: Variant, matrix: &FeatureMatrix, config: &VariantConfig) -> Result<VariantRun> {
    let mut run = run_variant_holdout(variant, matrix, config)?;
    if variant != Variant::ZeroShotStub {
        let view = variant_view(variant, matrix)?;
        let spec = variant_spec(variant, config)?;
        run.result.cv = Some(cross_validate_matrix(&view, &spec, config.k, config.seed)?);
    }
    Ok(run)
}

/// Fills `delta_vs_baseline_pp` relative to `results[baseline]`.
pub fn assign_deltas(results: &mut [VariantResult], baseline: usize) {
    let Some(base) = results.get(baseline).map(|r| r.val.f_beta) else {
        return;
    };
    for (i, r) in results.iter_mut().enumerate() {
        r.delta_vs_baseline_pp = (i != baseline).then_some((r.val.f_beta - base) * 100.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub beta: f64,
    pub results: Vec<VariantResult>,
}

fn format_beta(beta: f64) -> String {
    let s = format!("{beta}");
    s.trim_end_matches(".0").to_owned()
}

pub fn report_markdown(results: &[VariantResult]) -> String {
    let beta = format_beta(results.first().map_or(crate::metrics::DEFAULT_BETA, |r| r.val.beta));
    let mut out = format!("| Variant | CV F{beta} | Val F{beta} | Δ vs. Base |\n|---|---|---|---|\n");
    for r in results {
        let cv = r.cv.as_ref().map_or("—".to_owned(), |c| {
            format!("{:.4} ± {:.3}", c.mean_f_beta, c.std_f_beta)
        });
        let delta = r.delta_vs_baseline_pp.map_or("—".to_owned(), |d| format!("{d:+.1}pp"));
        out.push_str(&format!("| {} | {} | {:.4} | {} |\n", r.label, cv, r.val.f_beta, delta));
    }
    out
}

pub fn emit_report(results: &[VariantResult], format: ReportFormat) -> Result<String> {
    if results.is_empty() {
        return Err(Error::param("results", "need at least one variant result"));
    }
    Ok(match format {
        ReportFormat::Markdown => report_markdown(results),
        ReportFormat::Json => {
            let report = ComparisonReport {
                beta: results[0].val.beta,
                results: results.to_vec(),
            };
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            s
        }
    })
}

pub fn parse_json_report(text: &str) -> Result<ComparisonReport> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub rank: usize,
    pub name: String,
    pub share: f64,
    pub is_side: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareDelta {
    pub name: String,
    pub base_share: f64,
    pub extended_share: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedistributionReport {
    /// Total importance share held by columns absent from the base model.
    pub side_share_total: f64,
    pub extended_ranking: Vec<RankedFeature>,
    /// Per base-model column, its share in each model.
    pub base_deltas: Vec<ShareDelta>,
}

/// Compares gain-share importance between a base model and one trained with
/// extra columns.
pub fn importance_redistribution(base: &StumpEnsemble, extended: &StumpEnsemble) -> RedistributionReport {
    let base_imp = feature_importance(base);
    let ext_imp = feature_importance(extended);
    let is_side = |name: &str| !base.feature_names.iter().any(|n| n == name);
    let side_share_total = ext_imp.iter().filter(|(n, _)| is_side(n)).map(|(_, s)| s).sum();
    let extended_ranking = importance_ranking(&ext_imp)
        .into_iter()
        .map(|(rank, name, share)| RankedFeature {
            rank,
            is_side: is_side(&name),
            name,
            share,
        })
        .collect();
    let base_deltas = base
        .feature_names
        .iter()
        .map(|name| {
            let b = base_imp.get(name).copied().unwrap_or(0.0);
            let e = ext_imp.get(name).copied().unwrap_or(0.0);
            ShareDelta {
                name: name.clone(),
                base_share: b,
                extended_share: e,
                delta: e - b,
            }
        })
        .collect();
    RedistributionReport {
        side_share_total,
        extended_ranking,
        base_deltas,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separator {
    pub feature: String,
    /// Success rate above the population mean of the feature, divided by
    /// the rate at or below it.
    pub lift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationAudit {
    pub n_positive: usize,
    pub exit_positives: usize,
    pub non_exit_positives: usize,
    pub non_exit_share: f64,
    /// Positives forced positive by the enabled rules, over all positives.
    pub rule_capture_rate: f64,
    /// Classifier-only recall (rules excluded) within each population.
    pub model_recall_exit: f64,
    pub model_recall_non_exit: f64,
    pub best_non_exit_separator: Option<Separator>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Best single-feature success-rate lift among founders without exits.
fn best_separator(matrix: &FeatureMatrix, rows: &[usize], labels: &[u8]) -> Option<Separator> {
    let mut best: Option<Separator> = None;
    for (c, name) in matrix.names.iter().enumerate() {
        let mean = rows.iter().map(|&i| matrix.get(i, c)).sum::<f64>() / rows.len().max(1) as f64;
        let (mut hi_n, mut hi_pos, mut lo_n, mut lo_pos) = (0, 0, 0, 0);
        for &i in rows {
            let pos = usize::from(labels[i] == 1);
            if matrix.get(i, c) > mean {
                hi_n += 1;
                hi_pos += pos;
            } else {
                lo_n += 1;
                lo_pos += pos;
            }
        }
        if hi_n == 0 || lo_n == 0 || lo_pos == 0 {
            continue;
        }
        let lift = ratio(hi_pos, hi_n) / ratio(lo_pos, lo_n);
        if best.as_ref().is_none_or(|b| lift > b.lift) {
            best = Some(Separator {
                feature: name.clone(),
                lift,
            });
        }
    }
    best
}

/// Splits the positives into founders with and without prior exits and
/// reports how each population is served by the rules and the classifier.
pub fn two_population_audit(matrix: &FeatureMatrix, fitted: &FittedPipeline) -> Result<PopulationAudit> {
    let labels = matrix.labels()?;
    let classifier = fitted.predict_classifier(matrix)?;
    let has_exit = |i: usize| matrix.row(i)[idx::EXIT_COUNT] > 0.0;

    let (mut exit_pos, mut non_exit_pos, mut captured) = (0, 0, 0);
    let (mut hit_exit, mut hit_non_exit) = (0, 0);
    for i in (0..matrix.n_rows()).filter(|&i| labels[i] == 1) {
        if apply_rules(&fitted.rules, matrix.row(i)).is_some() {
            captured += 1;
        }
        if has_exit(i) {
            exit_pos += 1;
            hit_exit += usize::from(classifier[i] == 1);
        } else {
            non_exit_pos += 1;
            hit_non_exit += usize::from(classifier[i] == 1);
        }
    }
    let n_positive = exit_pos + non_exit_pos;
    let non_exit_rows: Vec<usize> = (0..matrix.n_rows()).filter(|&i| !has_exit(i)).collect();
    Ok(PopulationAudit {
        n_positive,
        exit_positives: exit_pos,
        non_exit_positives: non_exit_pos,
        non_exit_share: ratio(non_exit_pos, n_positive),
        rule_capture_rate: ratio(captured, n_positive),
        model_recall_exit: ratio(hit_exit, exit_pos),
        model_recall_non_exit: ratio(hit_non_exit, non_exit_pos),
        best_non_exit_separator: best_separator(matrix, &non_exit_rows, labels),
    })
}
