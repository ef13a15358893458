//! The 28-feature structured set, in four tiers.
//!
//! Every feature is total: missing information was already mapped to 0 at
//! parse time, so no imputation happens here and every value is finite.
//! Formulas are documented per feature in `docs/data_dictionary.md`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{Education, ExitHistory, FounderRecord, Job};
use crate::vocab;

pub const N_FEATURES: usize = 28;

/// Bumped whenever a name, position or formula changes.
pub const FEATURE_SET_VERSION: u32 = 2;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    // Tier 1: exits
    "has_prior_ipo",
    "has_prior_acquisition",
    "exit_count",
    // Tier 2: sacrifice
    "max_company_size_before_founding",
    "prestige_sacrifice_score",
    "years_in_large_company",
    "comfort_index",
    "founding_timing",
    "is_serial_founder",
    "persistence_score",
    // Tier 3: education x relevance
    "edu_prestige_tier",
    "field_relevance_score",
    "prestige_x_relevance",
    "degree_level",
    "stem_flag",
    "best_degree_prestige",
    // Tier 4: trajectory
    "seniority_monotonic",
    "company_size_slope",
    "industry_pivot_count",
    "founding_role_count",
    "exit_x_serial",
    "sacrifice_x_serial",
    "industry_prestige_penalty",
    "industry_alignment",
    "job_count",
    "mean_tenure_years",
    "max_seniority_code",
    "career_length_years",
];

/// Tier sizes in name order.
pub const TIER_SIZES: [usize; 4] = [3, 7, 6, 12];

/// Column indices used by the rule layer and the experiment harness.
pub mod idx {
    pub const HAS_PRIOR_IPO: usize = 0;
    pub const EXIT_COUNT: usize = 2;
    pub const PRESTIGE_SACRIFICE_SCORE: usize = 4;
    pub const IS_SERIAL_FOUNDER: usize = 8;
    pub const EDU_PRESTIGE_TIER: usize = 10;
    pub const PRESTIGE_X_RELEVANCE: usize = 12;
    pub const STEM_FLAG: usize = 14;
    pub const FOUNDING_ROLE_COUNT: usize = 19;
    pub const EXIT_X_SERIAL: usize = 20;
    pub const SACRIFICE_X_SERIAL: usize = 21;
    pub const INDUSTRY_PRESTIGE_PENALTY: usize = 22;
    pub const INDUSTRY_ALIGNMENT: usize = 23;
    pub const MAX_SENIORITY_CODE: usize = 26;
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; N_FEATURES],
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }

    pub fn names() -> &'static [&'static str; N_FEATURES] {
        &FEATURE_NAMES
    }
}

pub fn tier1_exit(exits: &ExitHistory) -> [f64; 3] {
    [
        f64::from(u8::from(exits.ipo_count > 0)),
        f64::from(u8::from(exits.acquisition_count > 0)),
        f64::from(exits.total()),
    ]
}

/// Reference year for ongoing jobs: the latest year mentioned anywhere in
/// the job list. Keeps features independent of the wall clock.
fn reference_year(jobs: &[Job]) -> Option<i32> {
    jobs.iter().flat_map(|j| [j.start_year, j.end_year]).flatten().max()
}

/// Years spent in a job; `None` when the start year is unknown.
fn tenure(job: &Job, reference: Option<i32>) -> Option<f64> {
    let start = job.start_year?;
    let end = job.end_year.or(reference)?;
    Some(f64::from((end - start).max(0)))
}

fn first_founding(jobs: &[Job]) -> Option<usize> {
    jobs.iter().position(|j| j.is_founding_role)
}

/// Jobs that precede the first founding role. With no founding role in the
/// history, the whole history precedes the company being predicted.
fn pre_founding(jobs: &[Job]) -> &[Job] {
    &jobs[..first_founding(jobs).unwrap_or(jobs.len())]
}

pub fn tier2_sacrifice(jobs: &[Job]) -> [f64; 7] {
    let reference = reference_year(jobs);
    let before = pre_founding(jobs);

    // Largest pre-founding company; ties go to the more senior role.
    let peak = before
        .iter()
        .max_by_key(|j| (j.company_size_bucket, j.seniority_code))
        .map_or((0, 0), |j| (j.company_size_bucket, j.seniority_code));
    let max_size = f64::from(peak.0);
    let sacrifice = (f64::from(peak.0) * f64::from(peak.1) - 1.0).max(0.0);

    let years_large: f64 = jobs
        .iter()
        .filter(|j| j.company_size_bucket >= vocab::LARGE_COMPANY_BUCKET)
        .filter_map(|j| tenure(j, reference))
        .sum();
    let max_pre_seniority = before.iter().map(|j| j.seniority_code).max().unwrap_or(0);
    let comfort = years_large * f64::from(max_pre_seniority);

    let career_start = jobs.iter().filter_map(|j| j.start_year).min();
    let founding_timing = match (first_founding(jobs).and_then(|i| jobs[i].start_year), career_start) {
        (Some(f), Some(s)) => f64::from((f - s).max(0)),
        _ => 0.0,
    };

    let founding_roles = jobs.iter().filter(|j| j.is_founding_role).count() as f64;
    let long_tenures = jobs
        .iter()
        .filter(|j| tenure(j, reference).is_some_and(|t| t >= 4.0))
        .count() as f64;

    [
        max_size,
        sacrifice,
        years_large,
        comfort,
        founding_timing,
        f64::from(u8::from(founding_roles >= 2.0)),
        founding_roles + long_tenures,
    ]
}

pub fn tier3_education(edus: &[Education], founding_industry: &str) -> [f64; 6] {
    if edus.is_empty() {
        return [0.0; 6];
    }
    let prestige = edus.iter().map(|e| e.institution_prestige_tier).max().unwrap_or(0);
    let relevance = edus
        .iter()
        .map(|e| vocab::field_relevance(&e.field, founding_industry))
        .fold(0.0, f64::max);
    let degree = edus.iter().map(|e| e.degree_level).max().unwrap_or(0);
    let stem = edus.iter().any(|e| e.is_stem);
    let best_degree_prestige = edus
        .iter()
        .max_by_key(|e| (e.degree_level, e.institution_prestige_tier))
        .map_or(0, |e| e.institution_prestige_tier);
    [
        f64::from(prestige),
        relevance,
        f64::from(prestige) * relevance,
        f64::from(degree),
        f64::from(u8::from(stem)),
        f64::from(best_degree_prestige),
    ]
}

fn sign(x: i32) -> f64 {
    f64::from(x.signum())
}

pub fn tier4_trajectory(
    jobs: &[Job],
    tier1: &[f64; 3],
    tier2: &[f64; 7],
    tier3: &[f64; 6],
    founding_industry: &str,
) -> [f64; 12] {
    let reference = reference_year(jobs);

    let seniorities: Vec<u8> = jobs.iter().map(|j| j.seniority_code).filter(|&c| c > 0).collect();
    let monotonic = !seniorities.is_empty() && seniorities.windows(2).all(|w| w[0] <= w[1]);

    let sizes: Vec<u8> = jobs.iter().map(|j| j.company_size_bucket).filter(|&b| b > 0).collect();
    let size_slope = match (sizes.first(), sizes.last()) {
        (Some(&a), Some(&b)) if sizes.len() >= 2 => sign(i32::from(b) - i32::from(a)),
        _ => 0.0,
    };

    let industries: Vec<&str> = jobs
        .iter()
        .map(|j| j.industry.as_str())
        .filter(|i| *i != vocab::UNKNOWN)
        .collect();
    let pivots = industries.windows(2).filter(|w| w[0] != w[1]).count();

    let founding_roles = jobs.iter().filter(|j| j.is_founding_role).count();
    let exit_count = tier1[2];
    let sacrifice = tier2[1];
    let serial = tier2[5];
    let edu_prestige = tier3[0];

    let penalized = vocab::PENALIZED_INDUSTRIES.contains(&founding_industry);
    let penalty = if penalized { edu_prestige } else { 0.0 };

    let tenures: Vec<(f64, &Job)> = jobs
        .iter()
        .filter_map(|j| tenure(j, reference).map(|t| (t, j)))
        .collect();
    let total_years: f64 = tenures.iter().map(|(t, _)| t).sum();
    let alignment = if total_years > 0.0 && founding_industry != vocab::UNKNOWN {
        tenures
            .iter()
            .filter(|(_, j)| j.industry == founding_industry)
            .map(|(t, _)| t)
            .sum::<f64>()
            / total_years
    } else {
        0.0
    };
    let mean_tenure = if tenures.is_empty() {
        0.0
    } else {
        total_years / tenures.len() as f64
    };
    let max_seniority = jobs.iter().map(|j| j.seniority_code).max().unwrap_or(0);
    let career_length = match (jobs.iter().filter_map(|j| j.start_year).min(), reference) {
        (Some(s), Some(r)) => f64::from((r - s).max(0)),
        _ => 0.0,
    };

    [
        f64::from(u8::from(monotonic)),
        size_slope,
        pivots as f64,
        founding_roles as f64,
        exit_count * serial,
        sacrifice * serial,
        penalty,
        alignment,
        jobs.len() as f64,
        mean_tenure,
        f64::from(max_seniority),
        career_length,
    ]
}

pub fn featurize(record: &FounderRecord) -> FeatureVector {
    let t1 = tier1_exit(&record.exits);
    let t2 = tier2_sacrifice(&record.jobs);
    let t3 = tier3_education(&record.educations, &record.founding_industry);
    let t4 = tier4_trajectory(&record.jobs, &t1, &t2, &t3, &record.founding_industry);

    let mut values = [0.0; N_FEATURES];
    for (dst, src) in values.iter_mut().zip(t1.iter().chain(&t2).chain(&t3).chain(&t4)) {
        *dst = *src;
    }
    debug_assert!(values.iter().all(|v| v.is_finite()));
    FeatureVector { values }
}

/// Row-major dense matrix with named columns and optional 0/1 labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub row_ids: Vec<String>,
    pub data: Vec<f64>,
    pub labels: Option<Vec<u8>>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, row_ids: Vec<String>, data: Vec<f64>, labels: Option<Vec<u8>>) -> Result<Self> {
        let n_cols = names.len();
        if n_cols == 0 || data.len() != row_ids.len() * n_cols {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: row_ids.len() * n_cols,
            });
        }
        if let Some(l) = &labels {
            if l.len() != row_ids.len() {
                return Err(Error::LengthMismatch {
                    left: l.len(),
                    right: row_ids.len(),
                });
            }
        }
        Ok(FeatureMatrix {
            names,
            row_ids,
            data,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.n_cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols() + col]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn labels(&self) -> Result<&[u8]> {
        self.labels.as_deref().ok_or(Error::Unlabeled)
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols());
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            names: self.names.clone(),
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
            data,
            labels: self.labels.as_ref().map(|l| rows.iter().map(|&r| l[r]).collect()),
        }
    }

    /// Keeps the named columns, in the given order.
    pub fn select_columns(&self, names: &[&str]) -> Result<FeatureMatrix> {
        let cols: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::param("columns", format!("unknown column `{n}`")))
            })
            .collect::<Result<_>>()?;
        let mut data = Vec::with_capacity(self.n_rows() * cols.len());
        for i in 0..self.n_rows() {
            let row = self.row(i);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(FeatureMatrix {
            names: names.iter().map(|n| (*n).to_owned()).collect(),
            row_ids: self.row_ids.clone(),
            data,
            labels: self.labels.clone(),
        })
    }

    /// Appends columns; `column_values[k][i]` is row `i` of new column `k`.
    pub fn append_columns(&self, names: &[String], column_values: &[Vec<f64>]) -> Result<FeatureMatrix> {
        if names.len() != column_values.len() {
            return Err(Error::LengthMismatch {
                left: names.len(),
                right: column_values.len(),
            });
        }
        if let Some(bad) = column_values.iter().find(|c| c.len() != self.n_rows()) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: self.n_rows(),
            });
        }
        let mut data = Vec::with_capacity(self.n_rows() * (self.n_cols() + names.len()));
        for i in 0..self.n_rows() {
            data.extend_from_slice(self.row(i));
            data.extend(column_values.iter().map(|c| c[i]));
        }
        let mut all_names = self.names.clone();
        all_names.extend(names.iter().cloned());
        Ok(FeatureMatrix {
            names: all_names,
            row_ids: self.row_ids.clone(),
            data,
            labels: self.labels.clone(),
        })
    }

    /// Writes `row_id, <features...>[, label]` with a header row.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = vec!["row_id"];
        header.extend(self.names.iter().map(String::as_str));
        if self.labels.is_some() {
            header.push("label");
        }
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec: Vec<String> = vec![self.row_ids[i].clone()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            if let Some(l) = &self.labels {
                rec.push(l[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Featurizes records in parallel. Labels are kept only when every record
/// has one.
pub fn build_matrix(records: &[FounderRecord]) -> FeatureMatrix {
    let vectors: Vec<FeatureVector> = records.par_iter().map(featurize).collect();
    let labels: Option<Vec<u8>> = if records.is_empty() {
        None
    } else {
        records.iter().map(|r| r.label).collect()
    };
    FeatureMatrix {
        names: FEATURE_NAMES.iter().map(|n| (*n).to_owned()).collect(),
        row_ids: records.iter().map(|r| r.row_id.clone()).collect(),
        data: vectors.iter().flat_map(|v| v.values).collect(),
        labels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(size: u8, seniority: u8, start: Option<i32>, end: Option<i32>, industry: &str, founding: bool) -> Job {
        Job {
            company_size_bucket: size,
            seniority_code: seniority,
            start_year: start,
            end_year: end,
            industry: industry.into(),
            is_founding_role: founding,
        }
    }

    #[test]
    fn names_are_unique_and_tiered() {
        let mut sorted = FEATURE_NAMES.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), N_FEATURES);
        assert_eq!(TIER_SIZES.iter().sum::<usize>(), N_FEATURES);
        assert_eq!(FEATURE_NAMES[idx::EXIT_COUNT], "exit_count");
        assert_eq!(FEATURE_NAMES[idx::INDUSTRY_ALIGNMENT], "industry_alignment");
        assert_eq!(FEATURE_NAMES[idx::MAX_SENIORITY_CODE], "max_seniority_code");
        assert_eq!(FEATURE_NAMES[idx::FOUNDING_ROLE_COUNT], "founding_role_count");
    }

    #[test]
    fn dropped_feature_is_absent() {
        assert!(feature_index("repeat_founding_gap").is_none());
    }

    #[test]
    fn tier1_examples() {
        assert_eq!(tier1_exit(&ExitHistory::new(0, 0)), [0.0, 0.0, 0.0]);
        assert_eq!(tier1_exit(&ExitHistory::new(1, 1)), [1.0, 1.0, 2.0]);
        assert_eq!(tier1_exit(&ExitHistory::new(0, 3)), [0.0, 1.0, 3.0]);
    }

    #[test]
    fn tier2_examples() {
        assert_eq!(tier2_sacrifice(&[]), [0.0; 7]);

        let single = tier2_sacrifice(&[job(0, 6, Some(2018), None, "ai", true)]);
        assert_eq!(single[5], 0.0);
        assert_eq!(single[4], 0.0);

        let jobs = [
            job(7, 2, Some(2005), Some(2012), "software", false),
            job(0, 0, Some(2012), None, "software", true),
        ];
        let t2 = tier2_sacrifice(&jobs);
        assert_eq!(t2[0], 7.0);
        assert_eq!(t2[2], 7.0);
        assert_eq!(t2[4], 7.0);
    }

    #[test]
    fn tier3_examples() {
        assert_eq!(tier3_education(&[], "software"), [0.0; 6]);
        let phd = Education {
            institution_prestige_tier: 4,
            field: "computer science".into(),
            degree_level: 4,
            is_stem: true,
        };
        assert_eq!(tier3_education(&[phd], "software"), [4.0, 1.0, 4.0, 4.0, 1.0, 4.0]);

        let materials = Education {
            institution_prestige_tier: 3,
            field: "materials science".into(),
            degree_level: 4,
            is_stem: true,
        };
        let t3 = tier3_education(&[materials], "fintech");
        assert_eq!(t3[1], 0.0);
        assert_eq!(t3[2], 0.0);
    }

    #[test]
    fn best_degree_prestige_tie_prefers_prestige() {
        let a = Education {
            institution_prestige_tier: 1,
            degree_level: 3,
            ..Education::default()
        };
        let b = Education {
            institution_prestige_tier: 3,
            degree_level: 3,
            ..Education::default()
        };
        let c = Education {
            institution_prestige_tier: 4,
            degree_level: 2,
            ..Education::default()
        };
        assert_eq!(tier3_education(&[a, b, c], "x")[5], 3.0);
    }

    #[test]
    fn tier4_examples() {
        let zeros3 = [0.0; 3];
        let zeros7 = [0.0; 7];
        let zeros6 = [0.0; 6];
        assert_eq!(tier4_trajectory(&[], &zeros3, &zeros7, &zeros6, "unknown"), [0.0; 12]);

        let jobs = [
            job(0, 2, None, None, "unknown", false),
            job(0, 3, None, None, "unknown", false),
            job(0, 4, None, None, "unknown", false),
        ];
        assert_eq!(tier4_trajectory(&jobs, &zeros3, &zeros7, &zeros6, "unknown")[0], 1.0);

        let t1 = [1.0, 1.0, 2.0];
        let mut t2 = [0.0; 7];
        t2[5] = 1.0;
        assert_eq!(tier4_trajectory(&[], &t1, &t2, &zeros6, "unknown")[4], 2.0);
    }

    #[test]
    fn empty_record_is_all_zero() {
        let fv = featurize(&FounderRecord::empty("r0"));
        assert_eq!(fv.values, [0.0; N_FEATURES]);
    }

    #[test]
    fn matrix_shapes() {
        let m = build_matrix(&[]);
        assert_eq!(m.n_rows(), 0);
        assert!(m.labels.is_none());

        let mut a = FounderRecord::empty("a");
        let b = FounderRecord::empty("b");
        a.label = Some(1);
        let m = build_matrix(&[a.clone(), b]);
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.data.len(), 2 * N_FEATURES);
        assert!(m.labels.is_none());

        let mut c = FounderRecord::empty("c");
        c.label = Some(0);
        let m = build_matrix(&[a, c]);
        assert_eq!(m.labels, Some(vec![1, 0]));
    }
}
