use std::collections::BTreeMap;
use std::io::Write;

use founder_core::features::{build_matrix, featurize, N_FEATURES};
use founder_core::harness::{generate_synthetic, SignalSpec};
use founder_core::record::{
    load_dataset, parse_educations, parse_exits, parse_jobs, write_dataset_csv, DataFormat, FounderRecord, LabelMode,
    ParseLog,
};
use founder_core::Error;
use proptest::prelude::*;

fn write_temp(suffix: &str, text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f.flush().unwrap();
    f
}

fn small_spec(n_rows: usize) -> SignalSpec {
    SignalSpec {
        n_rows,
        ..SignalSpec::default()
    }
}

// Strings that look a bit like career JSON, so the parser gets past the
// first character more often than with uniform noise.
fn jsonish() -> impl Strategy<Value = String> {
    prop_oneof![
        any::<String>(),
        "[\\[\\]{}\":,0-9a-z .\\-+eE]{0,60}",
        Just(r#"[{"size": "501-1000", "seniority": 99, "start": "x"}]"#.to_owned()),
        Just(r#""[{\"title\": \"CTO & Founder\"}]""#.to_owned()),
        Just("null".to_owned()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parsers_are_total(jobs in jsonish(), edus in jsonish(), ipos in jsonish(), acqs in jsonish()) {
        let mut log = ParseLog::default();
        let mut r = FounderRecord::empty("r");
        r.jobs = parse_jobs(&jobs, &mut log);
        r.educations = parse_educations(&edus, &mut log);
        r.exits = parse_exits(&ipos, &acqs, &mut log);
        for j in &r.jobs {
            prop_assert!(j.company_size_bucket <= 7);
            prop_assert!(j.seniority_code <= 6);
        }
        for e in &r.educations {
            prop_assert!(e.institution_prestige_tier <= 4);
            prop_assert!(e.degree_level <= 4);
        }
        let v = featurize(&r);
        prop_assert!(v.values.iter().all(|x| x.is_finite()));
    }
}

#[test]
fn synthetic_csv_round_trip() {
    let data = generate_synthetic(&small_spec(300), 7).unwrap();
    let file = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
    write_dataset_csv(&data.records, &BTreeMap::new(), file.as_file()).unwrap();
    let (loaded, stats) = load_dataset(file.path(), DataFormat::Csv, LabelMode::Labeled).unwrap();
    assert_eq!(loaded, data.records);
    assert_eq!(stats.n_rows, 300);
    assert_eq!(stats.parse_warning_count, 0);
    assert_eq!(build_matrix(&loaded), build_matrix(&data.records));
}

#[test]
fn malformed_rows_warn_but_load() {
    let spec = SignalSpec {
        malformed_fraction: 0.1,
        ..small_spec(400)
    };
    let data = generate_synthetic(&spec, 3).unwrap();
    assert!(!data.malformed_jobs.is_empty());
    let file = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
    write_dataset_csv(&data.records, &data.malformed_jobs, file.as_file()).unwrap();
    let (loaded, stats) = load_dataset(file.path(), DataFormat::Csv, LabelMode::Labeled).unwrap();
    assert_eq!(loaded.len(), 400);
    assert!(stats.parse_warning_count >= data.malformed_jobs.len());
    for r in &loaded {
        if data.malformed_jobs.contains_key(&r.row_id) {
            assert!(r.jobs.is_empty());
        }
    }
}

#[test]
fn missing_file_is_reported() {
    let err = load_dataset(
        "/nonexistent/founders.csv".as_ref(),
        DataFormat::Csv,
        LabelMode::Labeled,
    )
    .unwrap_err();
    assert!(matches!(err, Error::DatasetNotFound(_)));
    assert!(err.to_string().contains("dataset not found"));
}

#[test]
fn header_only_is_empty() {
    let f = write_temp(".csv", "row_id,jobs_json,label\n");
    let err = load_dataset(f.path(), DataFormat::Csv, LabelMode::Labeled).unwrap_err();
    assert!(matches!(err, Error::EmptyDataset));
}

#[test]
fn mandatory_columns() {
    let f = write_temp(".csv", "id,label\na,1\n");
    let err = load_dataset(f.path(), DataFormat::Csv, LabelMode::Labeled).unwrap_err();
    assert!(matches!(err, Error::MissingColumn(ref c) if c == "row_id"));

    let f = write_temp(".csv", "row_id,jobs_json\na,[]\n");
    let err = load_dataset(f.path(), DataFormat::Csv, LabelMode::Labeled).unwrap_err();
    assert!(matches!(err, Error::MissingColumn(ref c) if c == "label"));
    let (recs, _) = load_dataset(f.path(), DataFormat::Csv, LabelMode::Inference).unwrap();
    assert_eq!(recs[0].label, None);
}

#[test]
fn duplicate_ids_rejected() {
    let f = write_temp(".csv", "row_id,label\na,1\nb,0\na,0\n");
    let err = load_dataset(f.path(), DataFormat::Csv, LabelMode::Labeled).unwrap_err();
    assert!(matches!(err, Error::DuplicateRowId(ref id) if id == "a"));
}

#[test]
fn labels() {
    let f = write_temp(".csv", "row_id,label\na,1\nb,\n");
    let err = load_dataset(f.path(), DataFormat::Csv, LabelMode::Labeled).unwrap_err();
    assert!(matches!(err, Error::MissingLabel { ref row } if row == "b"));

    let f = write_temp(".csv", "row_id,label\na,yes\n");
    let err = load_dataset(f.path(), DataFormat::Csv, LabelMode::Inference).unwrap_err();
    assert!(matches!(err, Error::InvalidLabel { .. }));
    assert!(err.is_input_error());

    let f = write_temp(".csv", "row_id,label\na,1.0\nb,false\nc,0\n");
    let (recs, stats) = load_dataset(f.path(), DataFormat::Csv, LabelMode::Labeled).unwrap();
    let got: Vec<_> = recs.iter().map(|r| r.label).collect();
    assert_eq!(got, vec![Some(1), Some(0), Some(0)]);
    assert_eq!(stats.n_positive, 1);
}

#[test]
fn all_null_row_featurizes() {
    let f = write_temp(
        ".csv",
        "row_id,anonymised_prose,jobs_json,educations_json,ipos,acquisitions,founding_industry,label\n\
         a,,null,NaN,None,[],,0\n\
         b,x,{not json,\"[{\"\"degree\"\": 7}]\",-3,\"[{}, {}]\",Quantum Widgets,1\n",
    );
    let (recs, stats) = load_dataset(f.path(), DataFormat::Csv, LabelMode::Labeled).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(stats.parse_warning_count > 0);
    assert_eq!(stats.null_rates["jobs_json"], 0.5);
    assert_eq!(stats.null_rates["founding_industry"], 0.5);
    assert_eq!(recs[1].exits.acquisition_count, 2);
    let m = build_matrix(&recs);
    assert_eq!(m.n_cols(), N_FEATURES);
    assert!(m.data.iter().all(|x| x.is_finite()));
    assert!(m.row(0).iter().all(|&x| x == 0.0));
}

#[test]
fn jsonl_matches_csv() {
    let csv = write_temp(
        ".csv",
        "row_id,jobs_json,educations_json,ipos,acquisitions,founding_industry,label\n\
         a,\"[{\"\"size\"\":\"\"51-200\"\",\"\"seniority\"\":\"\"vp\"\",\"\"start\"\":2012,\"\"end\"\":2016}]\",\"[{\"\"prestige\"\":\"\"top10\"\",\"\"field\"\":\"\"computer science\"\",\"\"degree\"\":\"\"phd\"\"}]\",[{}],,software,1\n",
    );
    let jsonl = write_temp(
        ".jsonl",
        r#"{"row_id":"a","jobs_json":[{"size":"51-200","seniority":"vp","start":2012,"end":2016}],"educations_json":"[{\"prestige\":\"top10\",\"field\":\"computer science\",\"degree\":\"phd\"}]","ipos":[{}],"founding_industry":"software","label":1}
"#,
    );
    let (a, _) = load_dataset(csv.path(), DataFormat::Csv, LabelMode::Labeled).unwrap();
    let (b, _) = load_dataset(jsonl.path(), DataFormat::from_path(jsonl.path()), LabelMode::Labeled).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].jobs[0].company_size_bucket, 3);
    assert_eq!(a[0].educations[0].institution_prestige_tier, 4);
    assert!(a[0].educations[0].is_stem);
}
