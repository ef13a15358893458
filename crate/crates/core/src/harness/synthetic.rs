//! Calibrated synthetic founder datasets.
//!
//! Labels depend on exactly two things: the number of prior exits, and (for
//! founders without exits) whether the career was spent in the founding
//! industry. Everything else in a record is drawn independently of the
//! label, so the only learnable structure is a strong, rare exit signal and
//! a weak alignment signal for everyone else.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{Education, ExitHistory, FounderRecord, Job};
use crate::rng::{derive_seed, SplitMix64};
use crate::vocab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSpec {
    pub n_rows: usize,
    pub base_positive_rate: f64,
    /// Population fraction with exactly one prior exit.
    pub p_one_exit: f64,
    /// Population fraction with two prior exits.
    pub p_two_exit: f64,
    pub success_rate_no_exit: f64,
    pub success_rate_one_exit: f64,
    pub success_rate_two_exit: f64,
    /// Fraction of founders whose career is concentrated in the founding
    /// industry.
    pub aligned_fraction: f64,
    /// Success-rate ratio of aligned vs. unaligned founders without exits.
    pub alignment_lift: f64,
    /// Fraction of rows whose jobs field is written as broken JSON.
    pub malformed_fraction: f64,
    pub seed: u64,
}

impl Default for SignalSpec {
    fn default() -> Self {
        SignalSpec {
            n_rows: 4500,
            base_positive_rate: 0.09,
            p_one_exit: 0.0561,
            p_two_exit: 0.0027,
            success_rate_no_exit: 0.080,
            success_rate_one_exit: 0.228,
            success_rate_two_exit: 0.600,
            aligned_fraction: 0.35,
            alignment_lift: 1.38,
            malformed_fraction: 0.0,
            seed: 42,
        }
    }
}

const MARGINAL_TOLERANCE: f64 = 0.005;

impl SignalSpec {
    pub fn exit_fraction(&self) -> f64 {
        self.p_one_exit + self.p_two_exit
    }

    /// Positive rate implied by the planted conditionals.
    pub fn implied_positive_rate(&self) -> f64 {
        (1.0 - self.exit_fraction()) * self.success_rate_no_exit
            + self.p_one_exit * self.success_rate_one_exit
            + self.p_two_exit * self.success_rate_two_exit
    }

    /// Expected P(success | at least one exit).
    pub fn implied_exit_precision(&self) -> f64 {
        let q = self.exit_fraction();
        if q == 0.0 {
            return 0.0;
        }
        (self.p_one_exit * self.success_rate_one_exit + self.p_two_exit * self.success_rate_two_exit) / q
    }

    /// Expected share of positives that have no exit.
    pub fn implied_non_exit_share(&self) -> f64 {
        let rate = self.implied_positive_rate();
        if rate == 0.0 {
            return 0.0;
        }
        (1.0 - self.exit_fraction()) * self.success_rate_no_exit / rate
    }

    /// Success rates (aligned, unaligned) for founders without exits, chosen
    /// so their mixture equals `success_rate_no_exit`.
    pub fn alignment_rates(&self) -> (f64, f64) {
        let a = self.aligned_fraction;
        let unaligned = self.success_rate_no_exit / (a * self.alignment_lift + 1.0 - a);
        (unaligned * self.alignment_lift, unaligned)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::InvalidSpec("n_rows must be positive".into()));
        }
        let probabilities = [
            ("base_positive_rate", self.base_positive_rate),
            ("p_one_exit", self.p_one_exit),
            ("p_two_exit", self.p_two_exit),
            ("success_rate_no_exit", self.success_rate_no_exit),
            ("success_rate_one_exit", self.success_rate_one_exit),
            ("success_rate_two_exit", self.success_rate_two_exit),
            ("aligned_fraction", self.aligned_fraction),
            ("malformed_fraction", self.malformed_fraction),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidSpec(format!("{name} = {p} is not a probability")));
            }
        }
        if self.exit_fraction() > 1.0 {
            return Err(Error::InvalidSpec("p_one_exit + p_two_exit exceeds 1".into()));
        }
        if self.alignment_lift.is_nan() || self.alignment_lift <= 0.0 {
            return Err(Error::InvalidSpec("alignment_lift must be positive".into()));
        }
        if self.alignment_rates().0 > 1.0 {
            return Err(Error::InvalidSpec("aligned success rate exceeds 1".into()));
        }
        let implied = self.implied_positive_rate();
        if (implied - self.base_positive_rate).abs() > MARGINAL_TOLERANCE {
            return Err(Error::InvalidSpec(format!(
                "implied positive rate {implied:.4} is more than {MARGINAL_TOLERANCE} from base_positive_rate {}",
                self.base_positive_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub records: Vec<FounderRecord>,
    /// Broken jobs text for rows chosen as malformed; their parsed records
    /// carry no jobs.
    pub malformed_jobs: BTreeMap<String, String>,
}

const INDUSTRIES: [&str; 12] = [
    "software",
    "ai",
    "fintech",
    "biotech",
    "healthcare",
    "vc/pe",
    "ecommerce",
    "hardware",
    "energy",
    "media",
    "consulting",
    "education",
];
const INDUSTRY_WEIGHTS: [f64; 12] = [0.22, 0.12, 0.12, 0.08, 0.09, 0.04, 0.09, 0.06, 0.04, 0.05, 0.05, 0.04];

const FIELDS: [&str; 12] = [
    "computer science",
    "electrical engineering",
    "mathematics",
    "physics",
    "biology",
    "chemistry",
    "materials science",
    "business",
    "economics",
    "finance",
    "law",
    "design",
];

const SIZE_WEIGHTS: [f64; 7] = [0.10, 0.16, 0.17, 0.14, 0.12, 0.16, 0.15];
const PRESTIGE_WEIGHTS: [f64; 5] = [0.10, 0.35, 0.25, 0.18, 0.12];

fn other_industry(rng: &mut SplitMix64, not: &str) -> String {
    loop {
        let pick = INDUSTRIES[rng.categorical(&INDUSTRY_WEIGHTS)];
        if pick != not {
            return pick.to_owned();
        }
    }
}

fn career(rng: &mut SplitMix64, founding_industry: &str, aligned: bool, has_exit: bool) -> Vec<Job> {
    let in_industry = if aligned { 0.8 } else { 0.1 };
    let n_prior = rng.range_inclusive(1, 5) as usize;
    let serial = rng.bernoulli(if has_exit { 0.6 } else { 0.2 });
    let serial_slot = rng.below(n_prior as u64) as usize;

    let mut year = rng.range_inclusive(1988, 2014) as i32;
    let mut seniority = rng.range_inclusive(1, 3) as u8;
    let mut jobs = Vec::with_capacity(n_prior + 1);
    for k in 0..n_prior {
        let duration = rng.range_inclusive(1, 8) as i32;
        let industry = if rng.bernoulli(in_industry) {
            founding_industry.to_owned()
        } else {
            other_industry(rng, founding_industry)
        };
        let founding = serial && k == serial_slot;
        let mut job = Job {
            company_size_bucket: if founding {
                rng.range_inclusive(1, 2) as u8
            } else {
                1 + rng.categorical(&SIZE_WEIGHTS) as u8
            },
            seniority_code: if founding { vocab::C_LEVEL } else { seniority },
            start_year: Some(year),
            end_year: Some(year + duration),
            industry,
            is_founding_role: founding,
        };
        if rng.bernoulli(0.05) {
            job.company_size_bucket = 0;
        }
        if rng.bernoulli(0.05) {
            job.start_year = None;
            job.end_year = None;
        }
        jobs.push(job);
        year += duration;
        if rng.bernoulli(0.55) {
            seniority = (seniority + 1).min(vocab::C_LEVEL);
        }
    }
    jobs.push(Job {
        company_size_bucket: 1,
        seniority_code: vocab::C_LEVEL,
        start_year: Some(year),
        end_year: None,
        industry: founding_industry.to_owned(),
        is_founding_role: true,
    });
    jobs
}

fn educations(rng: &mut SplitMix64) -> Vec<Education> {
    let count = rng.categorical(&[0.1, 0.6, 0.3]);
    (0..count)
        .map(|k| {
            let field = (*rng.choose(&FIELDS)).to_owned();
            let degree_level = if k == 0 { 2 } else { rng.range_inclusive(3, 4) as u8 };
            Education {
                institution_prestige_tier: rng.categorical(&PRESTIGE_WEIGHTS) as u8,
                is_stem: vocab::is_stem_field(&field),
                field,
                degree_level,
            }
        })
        .collect()
}

fn prose(jobs: &[Job], exits: &ExitHistory, industry: &str) -> String {
    let mut s = format!(
        "Founder building in {industry} after {} earlier roles.",
        jobs.len().saturating_sub(1)
    );
    if let Some(top) = jobs.iter().map(|j| j.seniority_code).max() {
        if top >= 5 {
            s.push_str(" Has held senior executive positions.");
        }
    }
    if exits.total() > 0 {
        s.push_str(" Previously led a company to an exit.");
    }
    s
}

/// Generates `spec.n_rows` records; identical `(spec, seed)` give identical
/// output.
pub fn generate_synthetic(spec: &SignalSpec, seed: u64) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut rng = SplitMix64::new(derive_seed(seed, "synthetic", 0));
    let (aligned_rate, unaligned_rate) = spec.alignment_rates();

    let mut records = Vec::with_capacity(spec.n_rows);
    let mut malformed_jobs = BTreeMap::new();
    for i in 0..spec.n_rows {
        let u = rng.next_f64();
        let n_exits = if u < spec.p_two_exit {
            2
        } else if u < spec.exit_fraction() {
            1
        } else {
            0
        };
        let aligned = rng.bernoulli(spec.aligned_fraction);
        let success_rate = match n_exits {
            0 if aligned => aligned_rate,
            0 => unaligned_rate,
            1 => spec.success_rate_one_exit,
            _ => spec.success_rate_two_exit,
        };
        let label = u8::from(rng.bernoulli(success_rate));

        let ipo_count = (0..n_exits).filter(|_| rng.bernoulli(0.25)).count() as u32;
        let exits = ExitHistory::new(ipo_count, n_exits - ipo_count);
        let founding_industry = INDUSTRIES[rng.categorical(&INDUSTRY_WEIGHTS)].to_owned();
        let mut jobs = career(&mut rng, &founding_industry, aligned, n_exits > 0);
        let educations = educations(&mut rng);
        let prose = prose(&jobs, &exits, &founding_industry);

        let row_id = format!("syn{i:05}");
        if rng.bernoulli(spec.malformed_fraction) {
            let text = crate::record::jobs_to_json(&jobs);
            malformed_jobs.insert(row_id.clone(), text[..text.len() / 2].to_owned());
            jobs.clear();
        }
        records.push(FounderRecord {
            row_id,
            prose,
            jobs,
            educations,
            exits,
            founding_industry,
            label: Some(label),
        });
    }
    Ok(SyntheticDataset {
        records,
        malformed_jobs,
    })
}
