//! Deterministic positive-only rules applied before the classifier.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{idx, FeatureMatrix};
use crate::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub rule1_prior_exit_enabled: bool,
    pub rule2_elite_stem_founder_enabled: bool,
    pub rule3_clevel_serial_enabled: bool,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            rule1_prior_exit_enabled: true,
            rule2_elite_stem_founder_enabled: false,
            rule3_clevel_serial_enabled: false,
        }
    }
}

impl RuleConfig {
    pub fn none() -> Self {
        RuleConfig {
            rule1_prior_exit_enabled: false,
            rule2_elite_stem_founder_enabled: false,
            rule3_clevel_serial_enabled: false,
        }
    }

    pub fn all() -> Self {
        RuleConfig {
            rule1_prior_exit_enabled: true,
            rule2_elite_stem_founder_enabled: true,
            rule3_clevel_serial_enabled: true,
        }
    }

    pub fn is_enabled(&self, rule: Rule) -> bool {
        match rule {
            Rule::PriorExit => self.rule1_prior_exit_enabled,
            Rule::EliteStemFounder => self.rule2_elite_stem_founder_enabled,
            Rule::CLevelSerial => self.rule3_clevel_serial_enabled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    PriorExit,
    EliteStemFounder,
    CLevelSerial,
}

impl Rule {
    pub const ALL: [Rule; 3] = [Rule::PriorExit, Rule::EliteStemFounder, Rule::CLevelSerial];

    /// `features` must start with the 28 canonical columns.
    pub fn fires(self, features: &[f64]) -> bool {
        match self {
            Rule::PriorExit => rule_prior_exit(features),
            Rule::EliteStemFounder => rule_elite_stem_founder(features),
            Rule::CLevelSerial => rule_clevel_serial(features),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::PriorExit => "prior_exit",
            Rule::EliteStemFounder => "elite_stem_founder",
            Rule::CLevelSerial => "clevel_serial",
        })
    }
}

pub fn rule_prior_exit(features: &[f64]) -> bool {
    features[idx::EXIT_COUNT] > 0.0
}

pub fn rule_elite_stem_founder(features: &[f64]) -> bool {
    features[idx::EDU_PRESTIGE_TIER] == f64::from(vocab::TOP_PRESTIGE_TIER)
        && features[idx::STEM_FLAG] == 1.0
        && features[idx::FOUNDING_ROLE_COUNT] >= 1.0
}

pub fn rule_clevel_serial(features: &[f64]) -> bool {
    features[idx::MAX_SENIORITY_CODE] == f64::from(vocab::C_LEVEL) && features[idx::IS_SERIAL_FOUNDER] == 1.0
}

/// `Some(rule)` for the first enabled rule that fires: the row is forced
/// positive. `None` leaves the decision to the classifier.
pub fn apply_rules(config: &RuleConfig, features: &[f64]) -> Option<Rule> {
    Rule::ALL
        .into_iter()
        .find(|r| config.is_enabled(*r) && r.fires(features))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleStats {
    pub rule: Rule,
    pub enabled: bool,
    pub fire_count: usize,
    pub true_positive_count: usize,
    /// 0 when the rule never fires (see `no_fires`).
    pub precision: f64,
    /// precision / dataset positive rate; 0 when either is undefined.
    pub lift: f64,
    pub no_fires: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleAudit {
    pub n_rows: usize,
    pub positive_rate: f64,
    pub rules: Vec<RuleStats>,
}

impl RuleAudit {
    pub fn stats(&self, rule: Rule) -> &RuleStats {
        self.rules
            .iter()
            .find(|s| s.rule == rule)
            .expect("every rule is audited")
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| rule | enabled | fires | TP | precision | lift |\n|---|---|---|---|---|---|\n");
        for s in &self.rules {
            let precision = if s.no_fires {
                "— (no fires)".to_owned()
            } else {
                format!("{:.4}", s.precision)
            };
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {:.2}x |\n",
                s.rule, s.enabled, s.fire_count, s.true_positive_count, precision, s.lift
            ));
        }
        out
    }
}

/// Audits every rule, enabled or not, against the matrix labels.
pub fn audit_rules(matrix: &FeatureMatrix, config: &RuleConfig) -> Result<RuleAudit> {
    let labels = matrix.labels.as_deref().ok_or(Error::Unlabeled)?;
    let n = matrix.n_rows();
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let positive_rate = if n == 0 { 0.0 } else { positives as f64 / n as f64 };

    let rules = Rule::ALL
        .into_iter()
        .map(|rule| {
            let (mut fires, mut tp) = (0usize, 0usize);
            for (i, &label) in labels.iter().enumerate() {
                if rule.fires(matrix.row(i)) {
                    fires += 1;
                    tp += usize::from(label == 1);
                }
            }
            let precision = if fires == 0 { 0.0 } else { tp as f64 / fires as f64 };
            let lift = if positive_rate > 0.0 {
                precision / positive_rate
            } else {
                0.0
            };
            RuleStats {
                rule,
                enabled: config.is_enabled(rule),
                fire_count: fires,
                true_positive_count: tp,
                precision,
                lift,
                no_fires: fires == 0,
            }
        })
        .collect();
    Ok(RuleAudit {
        n_rows: n,
        positive_rate,
        rules,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FEATURE_NAMES, N_FEATURES};

    fn fv(set: &[(usize, f64)]) -> Vec<f64> {
        let mut v = vec![0.0; N_FEATURES];
        for &(i, x) in set {
            v[i] = x;
        }
        v
    }

    #[test]
    fn prior_exit() {
        assert!(!rule_prior_exit(&fv(&[])));
        assert!(rule_prior_exit(&fv(&[(idx::EXIT_COUNT, 1.0)])));
        assert!(rule_prior_exit(&fv(&[(idx::EXIT_COUNT, 3.0)])));
    }

    #[test]
    fn elite_stem_founder() {
        let base = [(idx::STEM_FLAG, 1.0), (idx::FOUNDING_ROLE_COUNT, 1.0)];
        assert!(rule_elite_stem_founder(&fv(&[
            base[0],
            base[1],
            (idx::EDU_PRESTIGE_TIER, 4.0)
        ])));
        assert!(!rule_elite_stem_founder(&fv(&[
            base[0],
            base[1],
            (idx::EDU_PRESTIGE_TIER, 3.0)
        ])));
        assert!(!rule_elite_stem_founder(&fv(&[base[1], (idx::EDU_PRESTIGE_TIER, 4.0)])));
    }

    #[test]
    fn clevel_serial() {
        assert!(rule_clevel_serial(&fv(&[
            (idx::MAX_SENIORITY_CODE, 6.0),
            (idx::IS_SERIAL_FOUNDER, 1.0)
        ])));
        assert!(!rule_clevel_serial(&fv(&[
            (idx::MAX_SENIORITY_CODE, 5.0),
            (idx::IS_SERIAL_FOUNDER, 1.0)
        ])));
        assert!(!rule_clevel_serial(&fv(&[(idx::MAX_SENIORITY_CODE, 6.0)])));
    }

    #[test]
    fn apply_respects_config() {
        let exit = fv(&[(idx::EXIT_COUNT, 2.0)]);
        assert_eq!(apply_rules(&RuleConfig::default(), &exit), Some(Rule::PriorExit));

        let elite = fv(&[
            (idx::EDU_PRESTIGE_TIER, 4.0),
            (idx::STEM_FLAG, 1.0),
            (idx::FOUNDING_ROLE_COUNT, 1.0),
        ]);
        assert_eq!(apply_rules(&RuleConfig::default(), &elite), None);
        assert_eq!(apply_rules(&RuleConfig::all(), &elite), Some(Rule::EliteStemFounder));
        assert_eq!(apply_rules(&RuleConfig::none(), &exit), None);
    }

    fn matrix(rows: &[Vec<f64>], labels: Option<Vec<u8>>) -> FeatureMatrix {
        FeatureMatrix::new(
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            (0..rows.len()).map(|i| i.to_string()).collect(),
            rows.concat(),
            labels,
        )
        .unwrap()
    }

    #[test]
    fn audit_no_fires_is_flagged() {
        let m = matrix(&[fv(&[]), fv(&[])], Some(vec![1, 0]));
        let audit = audit_rules(&m, &RuleConfig::default()).unwrap();
        let s = audit.stats(Rule::PriorExit);
        assert_eq!(s.fire_count, 0);
        assert_eq!(s.precision, 0.0);
        assert!(s.no_fires);
    }

    #[test]
    fn audit_all_positive() {
        let exit = fv(&[(idx::EXIT_COUNT, 1.0)]);
        let m = matrix(&[exit.clone(), exit, fv(&[])], Some(vec![1, 1, 1]));
        let s = audit_rules(&m, &RuleConfig::default())
            .unwrap()
            .stats(Rule::PriorExit)
            .clone();
        assert_eq!(s.fire_count, 2);
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.lift, 1.0);
    }

    #[test]
    fn audit_requires_labels() {
        let m = matrix(&[fv(&[])], None);
        assert!(matches!(audit_rules(&m, &RuleConfig::default()), Err(Error::Unlabeled)));
    }
}
