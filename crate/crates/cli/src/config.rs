use std::fs;
use std::path::{Path, PathBuf};

use founder_core::boost::HyperParams;
use founder_core::harness::{ReportFormat, SignalSpec};
use founder_core::pipeline::Variant;
use founder_core::record::DataFormat;
use founder_core::rules::RuleConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Effective settings for every command. Loaded from TOML (or JSON when the
/// file ends in `.json`); command-line flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: Option<PathBuf>,
    /// Inferred from the dataset extension when unset.
    pub dataset_format: Option<DataFormat>,
    pub out_dir: PathBuf,
    pub format: ReportFormat,
    /// Master seed. The holdout split and the fold assignment use it
    /// directly, model training uses it as the boosting seed, and CV fold
    /// `i` trains with `derive_seed(seed, "cv-fold", i)`.
    pub seed: u64,
    pub holdout_fraction: f64,
    pub k: usize,
    pub beta: f64,
    /// Variant for `train` and `cv`.
    pub variant: Variant,
    /// Variants for `ablate`, in report order; the first is the baseline.
    pub variants: Vec<Variant>,
    pub side_features: Option<PathBuf>,
    /// Simulate side features at this coverage when no side file is given.
    pub simulate_side_coverage: Option<f64>,
    pub external_predictions: Option<PathBuf>,
    /// Worker threads; the rayon default when unset. Results do not depend
    /// on it.
    pub threads: Option<usize>,
    pub rules: RuleConfig,
    pub hyperparams: HyperParams,
    pub synthetic: SignalSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: None,
            dataset_format: None,
            out_dir: PathBuf::from("out"),
            format: ReportFormat::Markdown,
            seed: 42,
            holdout_fraction: 0.2,
            k: 5,
            beta: founder_core::metrics::DEFAULT_BETA,
            variant: Variant::StructV2,
            variants: vec![Variant::RuleOnly, Variant::StructV1, Variant::StructV2],
            side_features: None,
            simulate_side_coverage: None,
            external_predictions: None,
            threads: None,
            rules: RuleConfig::default(),
            hyperparams: HyperParams::default(),
            synthetic: SignalSpec::default(),
        }
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        if is_json(path) {
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self).map_err(|e| CliError::internal(format!("cannot serialize config: {e}")))
    }

    pub fn dataset_path(&self) -> Result<&Path, CliError> {
        self.dataset
            .as_deref()
            .ok_or_else(|| CliError::usage("no dataset given (use --dataset or set `dataset` in the config)"))
    }

    pub fn dataset_format(&self, path: &Path) -> DataFormat {
        self.dataset_format.unwrap_or_else(|| DataFormat::from_path(path))
    }

    /// Boosting parameters with the master seed applied.
    pub fn train_params(&self) -> HyperParams {
        HyperParams {
            seed: self.seed,
            ..self.hyperparams.clone()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.hyperparams.validate()?;
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(CliError::usage("holdout_fraction must be in (0, 1)"));
        }
        if self.k < 2 {
            return Err(CliError::usage(format!("k must be at least 2 (got {})", self.k)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(CliError::usage("beta must be positive"));
        }
        if let Some(c) = self.simulate_side_coverage {
            if !(0.0..=1.0).contains(&c) {
                return Err(CliError::usage("simulate_side_coverage must be in [0, 1]"));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::usage("threads must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_toml_round_trip() {
        let c = PipelineConfig::default();
        let text = c.to_toml().unwrap();
        assert_eq!(toml::from_str::<PipelineConfig>(&text).unwrap(), c);
    }

    #[test]
    fn partial_toml() {
        let c: PipelineConfig = toml::from_str(
            "seed = 7\nvariants = [\"rule_only\", \"struct_v2\"]\n[hyperparams]\nn_estimators = 10\n[rules]\nrule2_elite_stem_founder_enabled = true\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.variants, [Variant::RuleOnly, Variant::StructV2]);
        assert_eq!(c.hyperparams.n_estimators, 10);
        assert_eq!(c.hyperparams.gamma, 4.19);
        assert!(c.rules.rule2_elite_stem_founder_enabled && c.rules.rule1_prior_exit_enabled);
        assert!(toml::from_str::<PipelineConfig>("sed = 7").is_err());
    }
}
