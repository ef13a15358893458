//! Founder records and the tolerant parser for their embedded-JSON career
//! fields.
//!
//! Career columns (`jobs_json`, `educations_json`, `ipos`, `acquisitions`)
//! hold JSON text. Parsing never fails on their content: malformed entries
//! are skipped, unknown vocabulary maps to the 0/absent sentinels, and each
//! problem bumps a warning counter. Only structural problems with the file
//! itself (missing columns, missing labels in labeled mode, duplicate ids)
//! are fatal.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::vocab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    /// 0 = unknown, 1..=7 per [`vocab::SIZE_BUCKET_LABELS`].
    pub company_size_bucket: u8,
    /// 0 = unknown, 1..=6 per [`vocab::SENIORITY_LABELS`].
    pub seniority_code: u8,
    pub start_year: Option<i32>,
    /// `None` means ongoing (or unknown).
    pub end_year: Option<i32>,
    pub industry: String,
    pub is_founding_role: bool,
}

impl Default for Job {
    fn default() -> Self {
        Job {
            company_size_bucket: 0,
            seniority_code: 0,
            start_year: None,
            end_year: None,
            industry: vocab::UNKNOWN.to_owned(),
            is_founding_role: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Education {
    /// 0 = unknown, 4 = top-10 global.
    pub institution_prestige_tier: u8,
    pub field: String,
    /// 0 = unknown, 1 associate, 2 bachelor, 3 master, 4 doctorate.
    pub degree_level: u8,
    pub is_stem: bool,
}

impl Default for Education {
    fn default() -> Self {
        Education {
            institution_prestige_tier: 0,
            field: vocab::UNKNOWN.to_owned(),
            degree_level: 0,
            is_stem: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitHistory {
    pub ipo_count: u32,
    pub acquisition_count: u32,
}

impl ExitHistory {
    pub fn new(ipo_count: u32, acquisition_count: u32) -> Self {
        ExitHistory {
            ipo_count,
            acquisition_count,
        }
    }

    pub fn total(&self) -> u32 {
        self.ipo_count + self.acquisition_count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FounderRecord {
    pub row_id: String,
    pub prose: String,
    pub jobs: Vec<Job>,
    pub educations: Vec<Education>,
    pub exits: ExitHistory,
    pub founding_industry: String,
    pub label: Option<u8>,
}

impl FounderRecord {
    /// A record with no career information at all.
    pub fn empty(row_id: impl Into<String>) -> Self {
        FounderRecord {
            row_id: row_id.into(),
            prose: String::new(),
            jobs: Vec::new(),
            educations: Vec::new(),
            exits: ExitHistory::default(),
            founding_industry: vocab::UNKNOWN.to_owned(),
            label: None,
        }
    }
}

const MAX_KEPT_MESSAGES: usize = 64;

/// Counts parse warnings and keeps the first few messages for reporting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseLog {
    pub count: usize,
    pub messages: Vec<String>,
}

impl ParseLog {
    pub fn warn(&mut self, message: impl Into<String>) {
        self.count += 1;
        if self.messages.len() < MAX_KEPT_MESSAGES {
            self.messages.push(message.into());
        }
    }

    pub fn absorb(&mut self, other: ParseLog) {
        self.count += other.count;
        let room = MAX_KEPT_MESSAGES.saturating_sub(self.messages.len());
        self.messages.extend(other.messages.into_iter().take(room));
    }
}

enum Embedded {
    Null,
    Malformed(String),
    Value(Value),
}

fn is_null_sentinel(s: &str) -> bool {
    let t = s.trim();
    t.is_empty()
        || ["null", "none", "nan", "n/a", "na"]
            .iter()
            .any(|n| t.eq_ignore_ascii_case(n))
}

fn decode_embedded(raw: &str) -> Embedded {
    if is_null_sentinel(raw) {
        return Embedded::Null;
    }
    match serde_json::from_str::<Value>(raw.trim()) {
        Ok(v) => unwrap_string_layer(v),
        Err(e) => Embedded::Malformed(e.to_string()),
    }
}

// Some dumps double-encode: the JSON value is itself a string of JSON.
fn unwrap_string_layer(v: Value) -> Embedded {
    match v {
        Value::Null => Embedded::Null,
        Value::String(inner) => {
            if is_null_sentinel(&inner) {
                return Embedded::Null;
            }
            match serde_json::from_str::<Value>(inner.trim()) {
                Ok(Value::Null) => Embedded::Null,
                Ok(v @ (Value::Array(_) | Value::Object(_) | Value::Number(_))) => Embedded::Value(v),
                Ok(_) | Err(_) => Embedded::Malformed(format!("unexpected string `{}`", truncate(&inner))),
            }
        }
        other => Embedded::Value(other),
    }
}

fn truncate(s: &str) -> String {
    s.chars().take(40).collect()
}

fn lookup<'a>(obj: &'a Map<String, Value>, keys: &[&'static str]) -> Option<(&'static str, &'a Value)> {
    for key in keys {
        for (k, v) in obj {
            if k.trim().eq_ignore_ascii_case(key) && !v.is_null() {
                return Some((key, v));
            }
        }
    }
    None
}

fn as_u64(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n
            .as_u64()
            .or_else(|| n.as_f64().filter(|f| *f >= 0.0 && f.fract() == 0.0).map(|f| f as u64)),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn as_bool(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        Value::Number(n) => n.as_f64().map(|f| f != 0.0),
        Value::String(s) => match vocab::normalize_token(s).as_str() {
            "true" | "yes" | "y" | "1" => Some(true),
            "false" | "no" | "n" | "0" => Some(false),
            _ => None,
        },
        _ => None,
    }
}

fn as_year(v: &Value) -> Option<i32> {
    let year = match v {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
        Value::String(s) => {
            let digits: String = s.trim().chars().take(4).collect();
            if digits.len() == 4 && digits.chars().all(|c| c.is_ascii_digit()) {
                digits.parse().ok()
            } else {
                None
            }
        }
        _ => None,
    }?;
    (1900..=2100).contains(&year).then_some(year as i32)
}

const SIZE_KEYS: &[&str] = &[
    "size",
    "company_size",
    "employees",
    "headcount",
    "size_bucket",
    "company_size_bucket",
];
const SIZE_CODE_KEYS: &[&str] = &["size_bucket", "company_size_bucket"];
const SENIORITY_KEYS: &[&str] = &["seniority", "seniority_code", "level", "title", "role", "position"];
const START_KEYS: &[&str] = &["start", "start_year", "started", "from", "start_date"];
const END_KEYS: &[&str] = &["end", "end_year", "ended", "to", "end_date"];
const INDUSTRY_KEYS: &[&str] = &["industry", "sector", "domain"];
const FOUNDING_KEYS: &[&str] = &["founding", "is_founding_role", "founding_role", "founder", "is_founder"];

fn parse_job_object(obj: &Map<String, Value>, log: &mut ParseLog) -> Job {
    let mut job = Job::default();

    if let Some((key, v)) = lookup(obj, SIZE_KEYS) {
        job.company_size_bucket = match v {
            Value::String(s) => vocab::size_bucket_from_label(s).unwrap_or(0),
            _ if SIZE_CODE_KEYS.contains(&key) => as_u64(v).filter(|b| *b <= 7).unwrap_or(0) as u8,
            _ => as_u64(v).map_or(0, vocab::size_bucket_for_headcount),
        };
    }

    let mut title_says_founder = false;
    if let Some((_, v)) = lookup(obj, SENIORITY_KEYS) {
        job.seniority_code = match v {
            Value::String(s) => {
                let t = vocab::normalize_token(s);
                title_says_founder = t.contains("founder") || t.contains("founding");
                vocab::seniority_code(s)
            }
            _ => as_u64(v).filter(|c| *c <= 6).unwrap_or(0) as u8,
        };
    }

    job.start_year = lookup(obj, START_KEYS).and_then(|(_, v)| as_year(v));
    job.end_year = lookup(obj, END_KEYS).and_then(|(_, v)| as_year(v));
    if let (Some(s), Some(e)) = (job.start_year, job.end_year) {
        if e < s {
            log.warn(format!("job ends before it starts ({s}-{e}); years dropped"));
            job.start_year = None;
            job.end_year = None;
        }
    }

    if let Some((_, Value::String(s))) = lookup(obj, INDUSTRY_KEYS) {
        job.industry = vocab::normalize_industry(s);
    }

    job.is_founding_role = lookup(obj, FOUNDING_KEYS)
        .and_then(|(_, v)| as_bool(v))
        .unwrap_or(false)
        || title_says_founder;
    job
}

const PRESTIGE_KEYS: &[&str] = &["prestige", "prestige_tier", "institution_prestige_tier", "tier"];
const RANK_KEYS: &[&str] = &["qs_rank", "rank", "qs"];
const FIELD_KEYS: &[&str] = &["field", "field_of_study", "major", "subject"];
const DEGREE_KEYS: &[&str] = &["degree", "degree_level", "degree_type"];
const STEM_KEYS: &[&str] = &["stem", "is_stem"];

fn parse_education_object(obj: &Map<String, Value>) -> Education {
    let mut edu = Education::default();

    if let Some((_, v)) = lookup(obj, PRESTIGE_KEYS) {
        edu.institution_prestige_tier = match v {
            Value::String(s) => vocab::prestige_tier_from_label(s).unwrap_or(0),
            _ => as_u64(v).filter(|t| *t <= 4).unwrap_or(0) as u8,
        };
    } else if let Some((_, v)) = lookup(obj, RANK_KEYS) {
        edu.institution_prestige_tier = as_u64(v).map_or(0, vocab::prestige_tier_for_rank);
    }

    if let Some((_, Value::String(s))) = lookup(obj, FIELD_KEYS) {
        edu.field = vocab::normalize_field(s);
    }

    if let Some((_, v)) = lookup(obj, DEGREE_KEYS) {
        edu.degree_level = match v {
            Value::String(s) => vocab::degree_level(s),
            _ => as_u64(v).filter(|d| *d <= 4).unwrap_or(0) as u8,
        };
    }

    edu.is_stem = lookup(obj, STEM_KEYS)
        .and_then(|(_, v)| as_bool(v))
        .unwrap_or_else(|| vocab::is_stem_field(&edu.field));
    edu
}

fn parse_object_list<T>(
    what: &str,
    embedded: Embedded,
    log: &mut ParseLog,
    mut parse_one: impl FnMut(&Map<String, Value>, &mut ParseLog) -> T,
) -> Vec<T> {
    match embedded {
        Embedded::Null => {
            log.warn(format!("{what}: empty field"));
            Vec::new()
        }
        Embedded::Malformed(e) => {
            log.warn(format!("{what}: malformed JSON ({e})"));
            Vec::new()
        }
        Embedded::Value(Value::Object(obj)) => vec![parse_one(&obj, log)],
        Embedded::Value(Value::Array(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                match item {
                    Value::Object(obj) => out.push(parse_one(obj, log)),
                    other => log.warn(format!(
                        "{what}[{i}]: expected object, got `{}`",
                        truncate(&other.to_string())
                    )),
                }
            }
            out
        }
        Embedded::Value(other) => {
            log.warn(format!(
                "{what}: expected a list, got `{}`",
                truncate(&other.to_string())
            ));
            Vec::new()
        }
    }
}

/// Parses the embedded `jobs_json` text. Source order is preserved and is
/// read as chronological (oldest first).
pub fn parse_jobs(raw: &str, log: &mut ParseLog) -> Vec<Job> {
    parse_object_list("jobs", decode_embedded(raw), log, parse_job_object)
}

pub fn parse_jobs_value(v: &Value, log: &mut ParseLog) -> Vec<Job> {
    parse_object_list("jobs", unwrap_string_layer(v.clone()), log, parse_job_object)
}

pub fn parse_educations(raw: &str, log: &mut ParseLog) -> Vec<Education> {
    parse_object_list("educations", decode_embedded(raw), log, |o, _| {
        parse_education_object(o)
    })
}

pub fn parse_educations_value(v: &Value, log: &mut ParseLog) -> Vec<Education> {
    parse_object_list("educations", unwrap_string_layer(v.clone()), log, |o, _| {
        parse_education_object(o)
    })
}

fn count_events(what: &str, embedded: Embedded, log: &mut ParseLog) -> u32 {
    match embedded {
        // An empty exit field is the "no exits" signal, not a problem.
        Embedded::Null => 0,
        Embedded::Malformed(e) => {
            log.warn(format!("{what}: malformed JSON ({e})"));
            0
        }
        Embedded::Value(Value::Array(items)) => items.len() as u32,
        Embedded::Value(Value::Object(_)) => 1,
        Embedded::Value(v @ Value::Number(_)) => match as_u64(&v) {
            Some(n) => n.min(u64::from(u32::MAX)) as u32,
            None => {
                log.warn(format!("{what}: invalid count `{v}`"));
                0
            }
        },
        Embedded::Value(other) => {
            log.warn(format!("{what}: unexpected value `{}`", truncate(&other.to_string())));
            0
        }
    }
}

pub fn parse_exits(ipos_raw: &str, acquisitions_raw: &str, log: &mut ParseLog) -> ExitHistory {
    ExitHistory {
        ipo_count: count_events("ipos", decode_embedded(ipos_raw), log),
        acquisition_count: count_events("acquisitions", decode_embedded(acquisitions_raw), log),
    }
}

fn parse_exits_values(ipos: &Value, acquisitions: &Value, log: &mut ParseLog) -> ExitHistory {
    ExitHistory {
        ipo_count: count_events("ipos", unwrap_string_layer(ipos.clone()), log),
        acquisition_count: count_events("acquisitions", unwrap_string_layer(acquisitions.clone()), log),
    }
}

fn opt_year(v: Option<i32>) -> Value {
    v.map_or(Value::Null, Value::from)
}

/// Canonical JSON object for a job; unknown sentinels are omitted.
pub fn job_to_value(job: &Job) -> Value {
    let mut obj = Map::new();
    if job.company_size_bucket > 0 {
        obj.insert(
            "size".into(),
            vocab::SIZE_BUCKET_LABELS[job.company_size_bucket as usize].into(),
        );
    }
    if job.seniority_code > 0 {
        obj.insert(
            "seniority".into(),
            vocab::SENIORITY_LABELS[job.seniority_code as usize].into(),
        );
    }
    if job.start_year.is_some() {
        obj.insert("start".into(), opt_year(job.start_year));
    }
    if job.end_year.is_some() {
        obj.insert("end".into(), opt_year(job.end_year));
    }
    if job.industry != vocab::UNKNOWN {
        obj.insert("industry".into(), job.industry.clone().into());
    }
    obj.insert("founding".into(), job.is_founding_role.into());
    Value::Object(obj)
}

pub fn education_to_value(edu: &Education) -> Value {
    let mut obj = Map::new();
    if edu.institution_prestige_tier > 0 {
        obj.insert(
            "prestige".into(),
            vocab::PRESTIGE_LABELS[edu.institution_prestige_tier as usize].into(),
        );
    }
    if edu.field != vocab::UNKNOWN {
        obj.insert("field".into(), edu.field.clone().into());
    }
    if edu.degree_level > 0 {
        obj.insert("degree".into(), vocab::DEGREE_LABELS[edu.degree_level as usize].into());
    }
    obj.insert("stem".into(), edu.is_stem.into());
    Value::Object(obj)
}

pub fn jobs_to_json(jobs: &[Job]) -> String {
    Value::Array(jobs.iter().map(job_to_value).collect()).to_string()
}

pub fn educations_to_json(edus: &[Education]) -> String {
    Value::Array(edus.iter().map(education_to_value).collect()).to_string()
}

fn exit_events_json(count: u32) -> String {
    if count == 0 {
        return String::new();
    }
    Value::Array((0..count).map(|_| Value::Object(Map::new())).collect()).to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    /// `.jsonl`/`.ndjson` are JSON lines, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") => DataFormat::Jsonl,
            _ => DataFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Every row must carry a 0/1 label.
    Labeled,
    /// Labels are optional.
    Inference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_rows: usize,
    pub n_labeled: usize,
    pub n_positive: usize,
    /// `n_positive / n_rows`.
    pub positive_rate: f64,
    pub parse_warning_count: usize,
    /// Fraction of rows whose raw column is empty or a null literal.
    pub null_rates: BTreeMap<String, f64>,
}

pub const CSV_COLUMNS: [&str; 8] = [
    "row_id",
    "anonymised_prose",
    "jobs_json",
    "educations_json",
    "ipos",
    "acquisitions",
    "founding_industry",
    "label",
];

const NULLABLE_COLUMNS: [&str; 6] = [
    "anonymised_prose",
    "jobs_json",
    "educations_json",
    "ipos",
    "acquisitions",
    "founding_industry",
];

struct RawRow {
    line: usize,
    row_id: String,
    fields: [Value; 6],
    label: Option<Value>,
}

fn field_is_null(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::String(s) => is_null_sentinel(s),
        _ => false,
    }
}

fn parse_label(row_id: &str, v: Option<&Value>, mode: LabelMode) -> Result<Option<u8>> {
    let label = match v {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s.trim().is_empty() => None,
        Some(v) => {
            let parsed = match v {
                Value::Bool(b) => Some(u8::from(*b)),
                Value::Number(n) => match n.as_f64() {
                    Some(0.0) => Some(0),
                    Some(1.0) => Some(1),
                    _ => None,
                },
                Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
                    "0" | "0.0" | "false" => Some(0),
                    "1" | "1.0" | "true" => Some(1),
                    _ => None,
                },
                _ => None,
            };
            match parsed {
                Some(l) => Some(l),
                None => {
                    return Err(Error::InvalidLabel {
                        row: row_id.to_owned(),
                        value: v.to_string(),
                    })
                }
            }
        }
    };
    if label.is_none() && mode == LabelMode::Labeled {
        return Err(Error::MissingLabel { row: row_id.to_owned() });
    }
    Ok(label)
}

fn text_of(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn build_record(raw: &RawRow, mode: LabelMode) -> Result<(FounderRecord, ParseLog)> {
    let mut log = ParseLog::default();
    let [prose, jobs, edus, ipos, acqs, industry] = &raw.fields;
    let record = FounderRecord {
        row_id: raw.row_id.clone(),
        prose: text_of(prose),
        jobs: parse_jobs_value(jobs, &mut log),
        educations: parse_educations_value(edus, &mut log),
        exits: parse_exits_values(ipos, acqs, &mut log),
        founding_industry: vocab::normalize_industry(&text_of(industry)),
        label: parse_label(&raw.row_id, raw.label.as_ref(), mode)?,
    };
    for m in &log.messages {
        log::debug!("row {} (line {}): {m}", raw.row_id, raw.line);
    }
    Ok((record, log))
}

fn read_csv_rows(path: &Path, mode: LabelMode) -> Result<Vec<RawRow>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    let position = |name: &str| headers.iter().position(|h| h == name);
    let id_col = position("row_id").ok_or_else(|| Error::MissingColumn("row_id".into()))?;
    let label_col = position("label");
    if label_col.is_none() && mode == LabelMode::Labeled {
        return Err(Error::MissingColumn("label".into()));
    }
    let field_cols: Vec<Option<usize>> = NULLABLE_COLUMNS.iter().map(|c| position(c)).collect();

    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let cell = |col: Option<usize>| -> Value {
            col.and_then(|c| rec.get(c))
                .map_or(Value::Null, |s| Value::String(s.to_owned()))
        };
        let fields: [Value; 6] = std::array::from_fn(|k| cell(field_cols[k]));
        rows.push(RawRow {
            line: i + 2,
            row_id: rec.get(id_col).unwrap_or("").trim().to_owned(),
            fields,
            label: label_col.map(|c| cell(Some(c))),
        });
    }
    Ok(rows)
}

fn read_jsonl_rows(path: &Path, mode: LabelMode) -> Result<Vec<RawRow>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Map<String, Value> = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            line: i + 1,
            message: e.to_string(),
        })?;
        let row_id = match obj.get("row_id") {
            Some(Value::String(s)) => s.trim().to_owned(),
            Some(v @ Value::Number(_)) => v.to_string(),
            _ => return Err(Error::MissingColumn("row_id".into())),
        };
        if mode == LabelMode::Labeled && !obj.contains_key("label") {
            return Err(Error::MissingLabel { row: row_id });
        }
        let fields: [Value; 6] = std::array::from_fn(|k| obj.get(NULLABLE_COLUMNS[k]).cloned().unwrap_or(Value::Null));
        rows.push(RawRow {
            line: i + 1,
            row_id,
            fields,
            label: obj.get("label").cloned(),
        });
    }
    Ok(rows)
}

/// Loads a dataset, parsing rows in parallel; output order follows the file.
pub fn load_dataset(path: &Path, format: DataFormat, mode: LabelMode) -> Result<(Vec<FounderRecord>, DatasetStats)> {
    if !path.is_file() {
        return Err(Error::DatasetNotFound(path.to_path_buf()));
    }
    let rows = match format {
        DataFormat::Csv => read_csv_rows(path, mode)?,
        DataFormat::Jsonl => read_jsonl_rows(path, mode)?,
    };
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut seen = HashSet::with_capacity(rows.len());
    for row in &rows {
        if row.row_id.is_empty() {
            return Err(Error::MalformedRow {
                line: row.line,
                message: "empty row_id".into(),
            });
        }
        if !seen.insert(row.row_id.as_str()) {
            return Err(Error::DuplicateRowId(row.row_id.clone()));
        }
    }

    let parsed: Vec<(FounderRecord, ParseLog)> =
        rows.par_iter().map(|r| build_record(r, mode)).collect::<Result<_>>()?;

    let n = rows.len();
    let null_rates = NULLABLE_COLUMNS
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let nulls = rows.iter().filter(|r| field_is_null(&r.fields[k])).count();
            ((*name).to_owned(), nulls as f64 / n as f64)
        })
        .collect();

    let mut log = ParseLog::default();
    let mut records = Vec::with_capacity(n);
    for (rec, l) in parsed {
        log.absorb(l);
        records.push(rec);
    }
    if log.count > 0 {
        log::warn!("{}: {} parse warnings", path.display(), log.count);
    }
    let mut stats = dataset_stats(&records);
    stats.parse_warning_count = log.count;
    stats.null_rates = null_rates;
    Ok((records, stats))
}

/// Label statistics for in-memory records (warning count and null rates
/// are only known at load time and are left empty here).
pub fn dataset_stats(records: &[FounderRecord]) -> DatasetStats {
    let n_rows = records.len();
    let n_labeled = records.iter().filter(|r| r.label.is_some()).count();
    let n_positive = records.iter().filter(|r| r.label == Some(1)).count();
    DatasetStats {
        n_rows,
        n_labeled,
        n_positive,
        positive_rate: if n_rows == 0 {
            0.0
        } else {
            n_positive as f64 / n_rows as f64
        },
        parse_warning_count: 0,
        null_rates: BTreeMap::new(),
    }
}

/// Writes records in the canonical CSV layout with embedded-JSON career
/// columns. `raw_jobs` overrides the jobs column for rows that should carry
/// deliberately malformed text.
pub fn write_dataset_csv(
    records: &[FounderRecord],
    raw_jobs: &BTreeMap<String, String>,
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        let jobs = raw_jobs
            .get(&r.row_id)
            .cloned()
            .unwrap_or_else(|| jobs_to_json(&r.jobs));
        let industry = if r.founding_industry == vocab::UNKNOWN {
            String::new()
        } else {
            r.founding_industry.clone()
        };
        w.write_record([
            r.row_id.as_str(),
            r.prose.as_str(),
            jobs.as_str(),
            educations_to_json(&r.educations).as_str(),
            exit_events_json(r.exits.ipo_count).as_str(),
            exit_events_json(r.exits.acquisition_count).as_str(),
            industry.as_str(),
            r.label.map(|l| l.to_string()).unwrap_or_default().as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
