//! End-to-end acceptance checks. Each test prints one `[PASS]`/`[FAIL]`
//! line (to stderr, so it shows up without `--nocapture`) and then asserts.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use founder_core::boost::{feature_importance, find_best_stump, grad_hess, train, HyperParams};
use founder_core::features::{build_matrix, idx, FeatureMatrix, N_FEATURES};
use founder_core::harness::{generate_synthetic, run_variant, two_population_audit, SignalSpec, VariantConfig};
use founder_core::metrics::{f_beta, precision_recall, stratified_kfold, stratified_split, ConfusionMatrix};
use founder_core::pipeline::{FittedPipeline, Variant};
use founder_core::record::{load_dataset, DataFormat, LabelMode};
use founder_core::rng::SplitMix64;
use founder_core::rules::{audit_rules, Rule, RuleConfig};

fn verdict(n: u32, name: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let line = format!("[{tag}] criterion {n:2} {name}: {detail}\n");
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

fn founder() -> Command {
    Command::new(env!("CARGO_BIN_EXE_founder"))
}

#[test]
fn c01_metric_oracle() {
    let fixtures = [
        (0.3333, 0.2222, 0.3030),
        (0.3133, 0.1926, 0.2784),
        (0.3594, 0.1704, 0.2941),
        (0.3117, 0.1778, 0.2709),
    ];
    let mut worst: f64 = 0.0;
    for (p, r, want) in fixtures {
        worst = worst.max((f_beta(p, r, 0.5) - want).abs());
    }
    verdict(
        1,
        "metric oracle",
        worst <= 0.0005,
        &format!("max |error| = {worst:.6}"),
    );
}

#[test]
fn c02_confusion_fixture() {
    let cm = ConfusionMatrix::new(73, 151, 332, 3944);
    let (p, r, _) = precision_recall(&cm);
    let ok = (r - 0.1802).abs() <= 0.0001 && p == 73.0 / 224.0;
    verdict(2, "confusion fixture", ok, &format!("precision {p:.6}, recall {r:.6}"));
}

#[test]
fn c03_split_protocol() {
    let mut labels = vec![0u8; 4500];
    let mut rng = SplitMix64::new(7);
    for i in rng.sample_indices(4500, 405) {
        labels[i] = 1;
    }
    let s = stratified_split(&labels, 0.2, 42).unwrap();
    let pos = |rows: &[usize]| rows.iter().filter(|&&i| labels[i] == 1).count();
    let folds = stratified_kfold(&labels, 5, 42).unwrap();
    let fold_pos: Vec<usize> = folds.iter().map(|f| pos(f)).collect();
    let ok = s.train.len() == 3600
        && s.eval.len() == 900
        && pos(&s.train) == 324
        && pos(&s.eval) == 81
        && fold_pos.iter().all(|&p| p == 81);
    verdict(
        3,
        "split protocol",
        ok,
        &format!(
            "train {}/{} pos, eval {}/{} pos, fold positives {fold_pos:?}",
            s.train.len(),
            pos(&s.train),
            s.eval.len(),
            pos(&s.eval)
        ),
    );
}

fn soft(g: f64, a: f64) -> f64 {
    (g.abs() - a).max(0.0) * g.signum()
}

fn node_score(g: f64, h: f64, p: &HyperParams) -> f64 {
    soft(g, p.reg_alpha).powi(2) / (h + p.reg_lambda)
}

/// Every (feature, midpoint) pair, best gain first, ties to the lowest
/// feature then the lowest threshold.
fn exhaustive(g: &[f64], h: &[f64], cols: &[Vec<f64>], p: &HyperParams) -> Option<(usize, f64, f64)> {
    let (gt, ht): (f64, f64) = (g.iter().sum(), h.iter().sum());
    let mut best: Option<(usize, f64, f64)> = None;
    for (c, col) in cols.iter().enumerate() {
        let mut vals = col.clone();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let left: Vec<usize> = (0..col.len()).filter(|&i| col[i] < t).collect();
            let gl: f64 = left.iter().map(|&i| g[i]).sum();
            let hl: f64 = left.iter().map(|&i| h[i]).sum();
            if hl < p.min_child_weight || ht - hl < p.min_child_weight {
                continue;
            }
            let gain =
                0.5 * (node_score(gl, hl, p) + node_score(gt - gl, ht - hl, p) - node_score(gt, ht, p)) - p.gamma;
            if gain > 0.0 && best.is_none_or(|b| gain > b.2 + 1e-12) {
                best = Some((c, t, gain));
            }
        }
    }
    best
}

#[test]
fn c04_boosting_oracle() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(2024);
    let (mut agree, mut with_split) = (0, 0);
    let instances = 200;
    for _ in 0..instances {
        let n = 2 + rng.below(19) as usize;
        let p = 1 + rng.below(3) as usize;
        // quarter-integer values keep every sum exact, so ties are genuine
        let q = |rng: &mut SplitMix64, lo: i64, hi: i64| rng.range_inclusive(lo, hi) as f64 / 4.0;
        let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| q(&mut rng, 0, 12)).collect()).collect();
        let g: Vec<f64> = (0..n).map(|_| q(&mut rng, -8, 8)).collect();
        let h: Vec<f64> = (0..n).map(|_| q(&mut rng, 1, 8)).collect();
        let params = HyperParams {
            reg_lambda: q(&mut rng, 0, 8),
            reg_alpha: q(&mut rng, 0, 2),
            gamma: q(&mut rng, 0, 1) / 4.0,
            min_child_weight: q(&mut rng, 0, 4),
            ..HyperParams::default()
        };
        let data = (0..n).flat_map(|r| cols.iter().map(move |c| c[r])).collect();
        let m = FeatureMatrix::new(
            (0..p).map(|i| format!("x{i}")).collect(),
            (0..n).map(|i| i.to_string()).collect(),
            data,
            None,
        )
        .unwrap();
        let rows: Vec<usize> = (0..n).collect();
        let all_cols: Vec<usize> = (0..p).collect();
        let got = find_best_stump(&g, &h, &m, &rows, &all_cols, &params);
        let want = exhaustive(&g, &h, &cols, &params);
        let same = match (&got, want) {
            (None, None) => true,
            (Some(s), Some((c, t, gain))) => {
                with_split += 1;
                s.feature_index == c && s.split_threshold == t && (s.gain - gain).abs() <= 1e-12
            }
            _ => false,
        };
        agree += usize::from(same);
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        4,
        "boosting oracle",
        agree == instances && with_split >= 50 && secs < 10.0,
        &format!("{agree}/{instances} agree ({with_split} with a split) in {secs:.3}s"),
    );
}

#[test]
fn c05_gradient_check() {
    let w = 10.0;
    // written out independently of the library's softplus form
    let loss = |m: f64, y: u8| {
        if y == 1 {
            w * (1.0 + (-m).exp()).ln()
        } else {
            (1.0 + m.exp()).ln()
        }
    };
    let mut rng = SplitMix64::new(99);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let m = rng.next_f64() * 8.0 - 4.0;
        for y in [0u8, 1] {
            let (g, h) = grad_hess(m, y, w);
            let e = 1e-5;
            let fd_g = (loss(m + e, y) - loss(m - e, y)) / (2.0 * e);
            let e2 = 1e-3;
            let fd_h = (loss(m + e2, y) - 2.0 * loss(m, y) + loss(m - e2, y)) / (e2 * e2);
            worst = worst.max(((g - fd_g) / fd_g).abs()).max(((h - fd_h) / fd_h).abs());
        }
    }
    verdict(
        5,
        "gradient check",
        worst < 1e-6,
        &format!("max relative error {worst:.2e}"),
    );
}

fn files_in(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

/// Output files by name, plus stdout.
type AblateRun = (BTreeMap<String, Vec<u8>>, Vec<u8>);

fn ablate(config: &Path, out: &Path, threads: Option<usize>) -> AblateRun {
    let mut cmd = founder();
    cmd.arg("--config").arg(config).arg("--out").arg(out);
    if let Some(t) = threads {
        cmd.arg("--threads").arg(t.to_string());
    }
    let output = cmd.arg("ablate").output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    (files_in(out), output.stdout)
}

#[test]
fn c06_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("synthetic.csv");
    let status = founder()
        .args(["--quiet", "--seed", "42", "generate", "-o"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());
    let config = tmp.path().join("pipeline.toml");
    fs::write(
        &config,
        format!(
            "dataset = {:?}\nseed = 42\nvariants = [\"rule_only\", \"struct_v1\", \"struct_v2\", \"struct_v2_plus_side\"]\nsimulate_side_coverage = 0.45\n",
            data.to_str().unwrap()
        ),
    )
    .unwrap();

    let runs: Vec<AblateRun> = [("a", None), ("b", None), ("t1", Some(1)), ("t3", Some(3))]
        .into_iter()
        .map(|(name, threads)| ablate(&config, &tmp.path().join(name), threads))
        .collect();
    let (first_files, first_stdout) = &runs[0];
    let has_models = first_files.keys().filter(|k| k.starts_with("model_")).count();
    let identical = runs.iter().all(|(f, s)| f == first_files && s == first_stdout);
    verdict(
        6,
        "determinism",
        identical && has_models == 3 && first_files.len() >= 6,
        &format!(
            "{} output files ({has_models} models) byte-identical across 2 runs and --threads 1/3: {identical}",
            first_files.len()
        ),
    );
}

#[test]
fn c07_synthetic_calibration() {
    let spec = SignalSpec::default();
    let (mut rate_ok, mut prec_ok, mut lift_ok) = (0, 0, 0);
    let mut rates = Vec::new();
    for seed in 1..=20u64 {
        let data = generate_synthetic(&spec, seed).unwrap();
        assert_eq!(data.records.len(), 4500);
        let n_pos = data.records.iter().filter(|r| r.label == Some(1)).count();
        let rate = n_pos as f64 / 4500.0;
        // P(success | exit >= 1) straight from the records
        let exits: Vec<_> = data.records.iter().filter(|r| r.exits.total() >= 1).collect();
        let prec = exits.iter().filter(|r| r.label == Some(1)).count() as f64 / exits.len() as f64;
        let audit = audit_rules(&build_matrix(&data.records), &RuleConfig::default()).unwrap();
        let lift = audit.stats(Rule::PriorExit).lift;
        rate_ok += usize::from((0.08..=0.10).contains(&rate));
        prec_ok += usize::from((0.18..=0.32).contains(&prec));
        lift_ok += usize::from(lift >= 2.0);
        rates.push(rate);
    }
    let lo = rates.iter().cloned().fold(f64::MAX, f64::min);
    let hi = rates.iter().cloned().fold(f64::MIN, f64::max);
    verdict(
        7,
        "synthetic calibration",
        rate_ok >= 19 && prec_ok >= 19 && lift_ok >= 19,
        &format!(
            "rate in band {rate_ok}/20 (range {lo:.4}..{hi:.4}), P(success|exit) {prec_ok}/20, lift >= 2 {lift_ok}/20"
        ),
    );
}

/// Pre-measured on seeds 1..=20 (see the core crate's ceiling_study test).
const CEILING_BAND: f64 = 0.01;

#[test]
fn c08_ceiling() {
    let mut max_delta = f64::MIN;
    let (mut share_ok, mut shares) = (0, Vec::new());
    let (mut exit_hit, mut exit_n, mut non_hit, mut non_n) = (0.0, 0usize, 0.0, 0usize);
    for seed in 1..=20u64 {
        let matrix = build_matrix(&generate_synthetic(&SignalSpec::default(), seed).unwrap().records);
        let config = VariantConfig {
            seed,
            params: HyperParams {
                seed,
                ..HyperParams::default()
            },
            ..VariantConfig::default()
        };
        let rule = run_variant(Variant::RuleOnly, &matrix, &config).unwrap();
        let v2 = run_variant(Variant::StructV2, &matrix, &config).unwrap();
        max_delta = max_delta.max(v2.result.cv.unwrap().mean_f_beta - rule.result.cv.unwrap().mean_f_beta);

        let fitted = FittedPipeline {
            rules: RuleConfig::default(),
            model: v2.model,
        };
        let full = two_population_audit(&matrix, &fitted).unwrap();
        share_ok += usize::from((0.75..=0.92).contains(&full.non_exit_share));
        shares.push(full.non_exit_share);
        // recall is measured on held-out rows only
        let held = two_population_audit(&matrix.select_rows(&v2.eval_rows), &fitted).unwrap();
        exit_hit += held.model_recall_exit * held.exit_positives as f64;
        exit_n += held.exit_positives;
        non_hit += held.model_recall_non_exit * held.non_exit_positives as f64;
        non_n += held.non_exit_positives;
    }
    let recall_exit = exit_hit / exit_n as f64;
    let recall_non_exit = non_hit / non_n as f64;
    let lo = shares.iter().cloned().fold(f64::MAX, f64::min);
    let hi = shares.iter().cloned().fold(f64::MIN, f64::max);
    verdict(
        8,
        "ceiling phenomenon",
        max_delta <= CEILING_BAND && share_ok == 20 && recall_non_exit < recall_exit,
        &format!(
            "max CV delta {max_delta:+.4} (band {CEILING_BAND:+.2}), non-exit share {lo:.3}..{hi:.3}, \
             pooled recall non-exit {recall_non_exit:.3} < exit {recall_exit:.3}"
        ),
    );
}

#[test]
fn c09_redistribution() {
    let matrix = build_matrix(&generate_synthetic(&SignalSpec::default(), 42).unwrap().records);
    let params = HyperParams {
        colsample_bytree: 1.0,
        ..HyperParams::default()
    };
    let exit_col: Vec<f64> = (0..matrix.n_rows()).map(|i| matrix.get(i, idx::EXIT_COUNT)).collect();
    let extended = matrix
        .append_columns(
            &["exit_count_dup1".into(), "exit_count_dup2".into()],
            &[exit_col.clone(), exit_col],
        )
        .unwrap();
    let base = train(&matrix, &params).unwrap();
    let ext = train(&extended, &params).unwrap();
    let identical = (0..matrix.n_rows())
        .all(|i| base.predict_proba(matrix.row(i)).to_bits() == ext.predict_proba(extended.row(i)).to_bits());
    let total: f64 = feature_importance(&ext).values().sum();
    verdict(
        9,
        "redistribution",
        identical && (total - 1.0).abs() <= 1e-9 && !ext.stumps.is_empty(),
        &format!(
            "{} stumps, predictions bit-identical: {identical}, importance total {total:.12}",
            ext.stumps.len()
        ),
    );
}

fn adversarial_cell(rng: &mut SplitMix64) -> String {
    const CELLS: [&str; 16] = [
        "",
        "null",
        "None",
        "NaN",
        "[",
        "{\"size\":",
        "[{}]",
        "[null, 3, \"x\"]",
        "[{\"size\": \"huge\", \"seniority\": -4, \"start\": \"soon\", \"end\": 1e308}]",
        "[{\"start\": 2020, \"end\": 1999, \"industry\": 42}]",
        "[{\"prestige\": 99, \"degree\": [], \"field\": null}]",
        "\"[{\\\"title\\\": \\\"Founder\\\"}]\"",
        "{\"not\": \"a list\"}",
        "-7",
        "1e400",
        "\u{1F680} émoji \u{0}",
    ];
    let mut s = rng.choose(&CELLS).to_string();
    if rng.bernoulli(0.2) {
        s.push_str(rng.choose(&CELLS));
    }
    s
}

#[test]
fn c10_null_rate_invariant() {
    let mut rng = SplitMix64::new(10);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "row_id",
        "anonymised_prose",
        "jobs_json",
        "educations_json",
        "ipos",
        "acquisitions",
        "founding_industry",
        "label",
    ])
    .unwrap();
    for i in 0..1000 {
        let cells: Vec<String> = (0..6).map(|_| adversarial_cell(&mut rng)).collect();
        let mut rec = vec![format!("adv{i}")];
        rec.extend(cells);
        rec.push(String::new());
        w.write_record(&rec).unwrap();
    }
    let mut file = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
    file.write_all(&w.into_inner().unwrap()).unwrap();
    file.flush().unwrap();

    let result = std::panic::catch_unwind(|| {
        let (records, stats) = load_dataset(file.path(), DataFormat::Csv, LabelMode::Inference).unwrap();
        let m = build_matrix(&records);
        (records.len(), m, stats.parse_warning_count)
    });
    let (ok, detail) = match result {
        Ok((n, m, warnings)) => {
            let finite =
                (0..m.n_rows()).all(|i| m.row(i).len() == N_FEATURES && m.row(i).iter().all(|x| x.is_finite()));
            (
                n == 1000 && m.n_rows() == 1000 && finite,
                format!(
                    "{n} rows x {} columns, all finite: {finite}, {warnings} parse warnings",
                    m.n_cols()
                ),
            )
        }
        Err(_) => (false, "featurization panicked".to_owned()),
    };
    verdict(10, "null-rate invariant", ok, &detail);
}

#[test]
fn c11_performance() {
    let matrix = build_matrix(&generate_synthetic(&SignalSpec::default(), 42).unwrap().records);
    // gamma = 0 keeps every round's split, so all 227 stumps are built
    let params = HyperParams {
        gamma: 0.0,
        ..HyperParams::default()
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let model = pool.install(|| train(&matrix, &params)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        11,
        "performance",
        model.stumps.len() == 227 && secs < 5.0,
        &format!(
            "{} x {} matrix, {} rounds in {secs:.3}s",
            matrix.n_rows(),
            matrix.n_cols(),
            model.stumps.len()
        ),
    );
}
