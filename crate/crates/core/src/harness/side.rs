//! Externally extracted per-row side features (e.g. signals pulled from the
//! prose field by another system), merged onto the structured matrix by
//! `row_id`.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{idx, FeatureMatrix};
use crate::rng::{derive_seed, SplitMix64};

pub const N_SIDE_FEATURES: usize = 9;

pub const SIDE_FEATURE_NAMES: [&str; N_SIDE_FEATURES] = [
    "domain_expertise_depth",
    "conviction_score",
    "narrative_type_code",
    "highest_seniority_reached",
    "prior_founding_attempts",
    "side_slot_6",
    "side_slot_7",
    "side_slot_8",
    "side_slot_9",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SideFeatureTable {
    pub rows: BTreeMap<String, [f64; N_SIDE_FEATURES]>,
}

impl SideFeatureTable {
    /// Fraction of `row_ids` that have side features.
    pub fn coverage(&self, row_ids: &[String]) -> f64 {
        if row_ids.is_empty() {
            return 0.0;
        }
        row_ids.iter().filter(|id| self.rows.contains_key(*id)).count() as f64 / row_ids.len() as f64
    }

    /// Reads `row_id, <up to 9 feature columns>`. Missing trailing columns
    /// are zero-padded and non-finite cells become 0, each with a warning.
    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.get(0).map(str::trim) != Some("row_id") {
            return Err(Error::MissingColumn("row_id".into()));
        }
        let n_given = headers.len() - 1;
        if n_given < N_SIDE_FEATURES {
            log::warn!("side features: {n_given} columns given, zero-padding to {N_SIDE_FEATURES}");
        } else if n_given > N_SIDE_FEATURES {
            log::warn!("side features: ignoring {} extra columns", n_given - N_SIDE_FEATURES);
        }
        let mut rows = BTreeMap::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec?;
            let id = rec.get(0).unwrap_or("").trim().to_owned();
            if id.is_empty() {
                return Err(Error::MalformedRow {
                    line: line + 2,
                    message: "empty row_id".into(),
                });
            }
            let mut values = [0.0; N_SIDE_FEATURES];
            for (k, v) in values.iter_mut().enumerate() {
                let cell = rec.get(k + 1).unwrap_or("").trim();
                if cell.is_empty() {
                    continue;
                }
                match cell.parse::<f64>() {
                    Ok(x) if x.is_finite() => *v = x,
                    _ => log::warn!("side features: row {id}: bad value `{cell}` set to 0"),
                }
            }
            rows.insert(id, values);
        }
        Ok(SideFeatureTable { rows })
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["row_id"];
        header.extend(SIDE_FEATURE_NAMES);
        w.write_record(&header)?;
        for (id, values) in &self.rows {
            let mut rec = vec![id.clone()];
            rec.extend(values.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeInfo {
    pub coverage: f64,
    /// Side rows whose id is not in the matrix (ignored).
    pub unmatched_side_rows: usize,
}

/// Appends the 9 side columns; rows without side features are zero-filled.
pub fn merge_side_features(matrix: &FeatureMatrix, side: &SideFeatureTable) -> Result<(FeatureMatrix, MergeInfo)> {
    let ids: HashSet<&str> = matrix.row_ids.iter().map(String::as_str).collect();
    let unmatched = side.rows.keys().filter(|k| !ids.contains(k.as_str())).count();
    if unmatched > 0 {
        log::warn!("side features: {unmatched} rows do not match any dataset row_id");
    }
    let columns: Vec<Vec<f64>> = (0..N_SIDE_FEATURES)
        .map(|k| {
            matrix
                .row_ids
                .iter()
                .map(|id| side.rows.get(id).map_or(0.0, |v| v[k]))
                .collect()
        })
        .collect();
    let names: Vec<String> = SIDE_FEATURE_NAMES.iter().map(|s| (*s).to_owned()).collect();
    let merged = matrix.append_columns(&names, &columns)?;
    Ok((
        merged,
        MergeInfo {
            coverage: side.coverage(&matrix.row_ids),
            unmatched_side_rows: unmatched,
        },
    ))
}

/// Simulated prose-derived side features: noisy re-encodings of the
/// structured features, present for `round(coverage * n)` randomly chosen
/// rows. Stands in for an external extraction run.
pub fn simulate_side_features(matrix: &FeatureMatrix, coverage: f64, seed: u64) -> Result<SideFeatureTable> {
    if !(0.0..=1.0).contains(&coverage) {
        return Err(Error::param("coverage", "must be in [0, 1]"));
    }
    let n = matrix.n_rows();
    let mut rng = SplitMix64::new(derive_seed(seed, "side-features", 0));
    let chosen = rng.sample_indices(n, (coverage * n as f64).round() as usize);
    let mut rows = BTreeMap::new();
    for i in chosen {
        let f = matrix.row(i);
        let mut noise = |scale: f64| (rng.next_f64() - 0.5) * scale;
        let values = [
            ((f[idx::INDUSTRY_ALIGNMENT] * 4.0).round() / 4.0 + noise(0.3)).clamp(0.0, 1.0),
            (f[idx::PRESTIGE_SACRIFICE_SCORE] / 10.0 + noise(1.0)).max(0.0),
            f64::from(u8::from(f[idx::SACRIFICE_X_SERIAL] > 0.0)) + f64::from(u8::from(f[idx::EXIT_COUNT] > 0.0)),
            (f[idx::MAX_SENIORITY_CODE] + noise(1.5)).round().clamp(0.0, 6.0),
            (f[idx::FOUNDING_ROLE_COUNT] - 1.0).max(0.0),
            f64::from(u8::from(f[idx::EXIT_COUNT] > 0.0)),
            noise(1.0),
            noise(1.0),
            noise(1.0),
        ];
        rows.insert(matrix.row_ids[i].clone(), values);
    }
    Ok(SideFeatureTable { rows })
}
