use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use founder_core::boost::{load_model, model_to_json, StumpEnsemble};
use founder_core::features::{build_matrix, FeatureMatrix};
use founder_core::harness;
use founder_core::harness::{
    assign_deltas, emit_report, importance_redistribution, merge_side_features, parse_json_report,
    read_external_predictions, run_variant, run_variant_holdout, simulate_side_features, two_population_audit,
    variant_view, ReportFormat, SideFeatureTable, SignalSpec, VariantConfig, VariantResult, SIDE_FEATURE_NAMES,
};
use founder_core::metrics::MetricBundle;
use founder_core::pipeline::{cross_validate_matrix, FittedPipeline, PipelineSpec, Variant};
use founder_core::record::{load_dataset, write_dataset_csv, DataFormat, DatasetStats, FounderRecord, LabelMode};
use founder_core::rules::audit_rules;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Cli, Command};
use crate::config::PipelineConfig;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Resolves the configuration and runs the requested command.
pub fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.global.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let g = &cli.global;
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    if let Some(out) = &g.out {
        config.out_dir = out.clone();
    }
    if let Some(f) = g.format {
        config.format = f.into();
    }
    if let Some(d) = &g.dataset {
        config.dataset = Some(d.clone());
    }
    if g.threads.is_some() {
        config.threads = g.threads;
    }
    if let Some(cmd) = &cli.command {
        apply_command_overrides(&mut config, cmd, g.seed.is_some())?;
    }
    config.validate()?;

    if g.print_config {
        print!("{}", config.to_toml()?);
        return Ok(());
    }
    let command = cli
        .command
        .ok_or_else(|| CliError::usage("no command given (try --help)"))?;
    let ctx = Ctx { config, quiet: g.quiet };
    match ctx.config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::internal(format!("cannot start thread pool: {e}")))?
            .install(|| ctx.dispatch(command)),
        None => ctx.dispatch(command),
    }
}

fn apply_command_overrides(config: &mut PipelineConfig, cmd: &Command, seed_given: bool) -> Result<()> {
    match cmd {
        Command::Generate { spec, n, .. } => {
            if let Some(path) = spec {
                config.synthetic = load_signal_spec(path)?;
            }
            if let Some(n) = n {
                config.synthetic.n_rows = *n;
            }
            // An explicit --seed wins over the spec's own noise seed.
            if seed_given {
                config.synthetic.seed = config.seed;
            }
        }
        Command::Train { variant } => {
            if let Some(v) = variant {
                config.variant = *v;
            }
        }
        Command::Cv { variant, k } => {
            if let Some(v) = variant {
                config.variant = *v;
            }
            if let Some(k) = k {
                config.k = *k;
            }
        }
        Command::Ablate {
            variants,
            side_features,
            predictions,
        } => {
            if let Some(v) = variants {
                config.variants = v.clone();
            }
            if side_features.is_some() {
                config.side_features = side_features.clone();
            }
            if predictions.is_some() {
                config.external_predictions = predictions.clone();
            }
        }
        Command::Featurize { .. } | Command::AuditRules | Command::Evaluate { .. } | Command::Report { .. } => {}
    }
    Ok(())
}

fn load_signal_spec(path: &Path) -> Result<SignalSpec> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read spec {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::input(format!("spec {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn stats_line(stats: &DatasetStats) -> String {
    format!(
        "rows {}  labeled {}  positives {}  positive rate {:.4}  parse warnings {}",
        stats.n_rows, stats.n_labeled, stats.n_positive, stats.positive_rate, stats.parse_warning_count
    )
}

struct Ctx {
    config: PipelineConfig,
    quiet: bool,
}

impl Ctx {
    fn dispatch(&self, command: Command) -> Result<()> {
        match command {
            Command::Generate { output, .. } => self.generate(output),
            Command::Featurize { output } => self.featurize(output),
            Command::AuditRules => self.audit_rules(),
            Command::Train { .. } => self.train(),
            Command::Evaluate { model } => self.evaluate(&model),
            Command::Cv { .. } => self.cv(),
            Command::Ablate { .. } => self.ablate(),
            Command::Report { inputs } => self.report(&inputs),
        }
    }

    fn say(&self, text: &str) {
        if !self.quiet {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
    }

    fn json_out(&self) -> bool {
        self.config.format == ReportFormat::Json
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.config.out_dir.join(name)
    }

    fn seed(&self) -> u64 {
        self.config.seed
    }

    fn load(&self, mode: LabelMode) -> Result<(Vec<FounderRecord>, DatasetStats)> {
        let path = self.config.dataset_path()?;
        Ok(load_dataset(path, self.config.dataset_format(path), mode)?)
    }

    fn labeled_matrix(&self) -> Result<FeatureMatrix> {
        let (records, _) = self.load(LabelMode::Labeled)?;
        Ok(build_matrix(&records))
    }

    /// Side features from the configured file, or simulated at the
    /// configured coverage.
    fn side_table(&self, matrix: &FeatureMatrix) -> Result<SideFeatureTable> {
        if let Some(path) = &self.config.side_features {
            let file = File::open(path).map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
            return Ok(SideFeatureTable::read_csv(BufReader::new(file))?);
        }
        if let Some(coverage) = self.config.simulate_side_coverage {
            return Ok(simulate_side_features(matrix, coverage, self.seed())?);
        }
        Err(CliError::usage(
            "struct_v2_plus_side needs side features (--side-features or simulate_side_coverage)",
        ))
    }

    fn with_side(&self, matrix: FeatureMatrix) -> Result<(FeatureMatrix, f64)> {
        let table = self.side_table(&matrix)?;
        let (merged, info) = merge_side_features(&matrix, &table)?;
        Ok((merged, info.coverage))
    }

    fn variant_config(&self, side_coverage: Option<f64>, need_predictions: bool) -> Result<VariantConfig> {
        let external_predictions = match (&self.config.external_predictions, need_predictions) {
            (Some(path), true) => {
                let file =
                    File::open(path).map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
                Some(read_external_predictions(BufReader::new(file))?)
            }
            (None, true) => return Err(CliError::usage("zero_shot_stub needs an external predictions file")),
            (_, false) => None,
        };
        Ok(VariantConfig {
            rules: self.config.rules,
            params: self.config.train_params(),
            holdout_fraction: self.config.holdout_fraction,
            k: self.config.k,
            seed: self.seed(),
            beta: self.config.beta,
            external_predictions,
            side_coverage,
        })
    }

    fn generate(&self, output: Option<PathBuf>) -> Result<()> {
        let spec = &self.config.synthetic;
        if spec.n_rows == 0 {
            return Err(CliError::usage("n must be at least 1"));
        }
        let seed = spec.seed;
        let data = harness::generate_synthetic(spec, seed)?;
        let path = output.unwrap_or_else(|| self.out_path(&format!("synthetic_seed{seed}.csv")));
        let mut buf = Vec::new();
        write_dataset_csv(&data.records, &data.malformed_jobs, &mut buf)?;
        write_file(&path, std::str::from_utf8(&buf).expect("csv output is utf-8"))?;
        // Re-read so the reported statistics are exactly what a consumer sees.
        let (_, stats) = load_dataset(&path, DataFormat::Csv, LabelMode::Labeled)?;
        if self.json_out() {
            self.say(&to_json(&stats)?);
        } else {
            self.say(&format!("wrote {}\n{}", path.display(), stats_line(&stats)));
        }
        Ok(())
    }

    fn featurize(&self, output: Option<PathBuf>) -> Result<()> {
        let (records, stats) = self.load(LabelMode::Inference)?;
        let matrix = build_matrix(&records);
        let path = output.unwrap_or_else(|| self.out_path("features.csv"));
        let mut buf = Vec::new();
        matrix.write_csv(&mut buf)?;
        write_file(&path, std::str::from_utf8(&buf).expect("csv output is utf-8"))?;
        if self.json_out() {
            self.say(&to_json(&stats)?);
        } else {
            let mut text = format!(
                "wrote {} ({} rows x {} features)\n{}\n",
                path.display(),
                matrix.n_rows(),
                matrix.n_cols(),
                stats_line(&stats)
            );
            for (col, rate) in &stats.null_rates {
                text.push_str(&format!("null rate {col}: {rate:.4}\n"));
            }
            self.say(&text);
        }
        Ok(())
    }

    fn audit_rules(&self) -> Result<()> {
        let matrix = self.labeled_matrix()?;
        let audit = audit_rules(&matrix, &self.config.rules)?;
        let md = audit.to_markdown();
        let json = to_json(&audit)?;
        write_file(&self.out_path("rule_audit.md"), &md)?;
        write_file(&self.out_path("rule_audit.json"), &json)?;
        self.say(if self.json_out() { &json } else { &md });
        Ok(())
    }

    fn matrix_for(&self, variants: &[Variant]) -> Result<(FeatureMatrix, Option<f64>)> {
        let matrix = self.labeled_matrix()?;
        if variants.contains(&Variant::StructV2PlusSide) {
            let (merged, coverage) = self.with_side(matrix)?;
            Ok((merged, Some(coverage)))
        } else {
            Ok((matrix, None))
        }
    }

    fn write_model(&self, variant: Variant, model: &StumpEnsemble) -> Result<PathBuf> {
        let path = self.out_path(&format!("model_{variant}_seed{}.json", self.seed()));
        write_file(&path, &model_to_json(model)?)?;
        Ok(path)
    }

    fn train(&self) -> Result<()> {
        let variant = self.config.variant;
        let (matrix, coverage) = self.matrix_for(&[variant])?;
        let vc = self.variant_config(coverage, variant == Variant::ZeroShotStub)?;
        let run = run_variant_holdout(variant, &matrix, &vc)?;
        let seed = self.seed();

        let results = [run.result.clone()];
        let row = emit_report(&results, ReportFormat::Markdown)?;
        let json = to_json(&run.result)?;
        write_file(&self.out_path(&format!("metrics_{variant}_seed{seed}.json")), &json)?;
        write_file(&self.out_path(&format!("report_{variant}_seed{seed}.md")), &row)?;
        if let Some(model) = &run.model {
            self.write_model(variant, model)?;
        }
        if variant != Variant::ZeroShotStub {
            let fitted = FittedPipeline {
                rules: self.config.rules,
                model: run.model.clone(),
            };
            let eval = variant_view(variant, &matrix)?.select_rows(&run.eval_rows);
            let audit = two_population_audit(&eval, &fitted)?;
            write_file(
                &self.out_path(&format!("audit_{variant}_seed{seed}.json")),
                &to_json(&audit)?,
            )?;
        }

        if self.json_out() {
            self.say(&json);
        } else {
            self.say(&format!("{row}\n{}", run.result.val.to_text()));
        }
        Ok(())
    }

    fn evaluate(&self, model_path: &Path) -> Result<()> {
        let model = load_model(model_path)?;
        let (records, _) = self.load(LabelMode::Inference)?;
        let mut matrix = build_matrix(&records);
        if model
            .feature_names
            .iter()
            .any(|n| SIDE_FEATURE_NAMES.contains(&n.as_str()))
        {
            matrix = self.with_side(matrix)?.0;
        }
        let fitted = FittedPipeline {
            rules: self.config.rules,
            model: Some(model),
        };
        let preds = fitted.predict(&matrix)?;
        let probs = fitted.model.as_ref().map(|m| {
            let cols: Vec<usize> = m
                .feature_names
                .iter()
                .map(|n| matrix.column_index(n).expect("checked by predict"))
                .collect();
            (0..matrix.n_rows())
                .map(|i| {
                    let row: Vec<f64> = cols.iter().map(|&c| matrix.get(i, c)).collect();
                    m.predict_proba(&row)
                })
                .collect::<Vec<f64>>()
        });
        let mut csv = String::from("row_id,probability,prediction\n");
        for (i, id) in matrix.row_ids.iter().enumerate() {
            let p = probs.as_ref().map_or(0.0, |p| p[i]);
            csv.push_str(&format!("{id},{p},{}\n", preds[i]));
        }
        write_file(&self.out_path("predictions.csv"), &csv)?;

        match &matrix.labels {
            Some(labels) => {
                let metrics = MetricBundle::evaluate(&preds, labels, self.config.beta)?;
                let json = to_json(&metrics)?;
                write_file(&self.out_path("evaluation.json"), &json)?;
                let text = if self.json_out() { json } else { metrics.to_text() };
                self.say(&text);
            }
            None => self.say(&format!(
                "scored {} rows ({} positive); dataset is not fully labeled, no metrics",
                preds.len(),
                preds.iter().filter(|&&p| p == 1).count()
            )),
        }
        Ok(())
    }

    fn cv(&self) -> Result<()> {
        let variant = self.config.variant;
        if variant == Variant::ZeroShotStub {
            return Err(CliError::usage("zero_shot_stub cannot be cross-validated"));
        }
        let (matrix, _) = self.matrix_for(&[variant])?;
        let view = variant_view(variant, &matrix)?;
        let mut spec = PipelineSpec::for_variant(variant, self.config.rules, self.config.train_params())
            .expect("every variant but the stub has a pipeline");
        spec.beta = self.config.beta;
        let summary = cross_validate_matrix(&view, &spec, self.config.k, self.seed())?;
        let json = to_json(&summary)?;
        write_file(&self.out_path(&format!("cv_{variant}_seed{}.json", self.seed())), &json)?;
        if self.json_out() {
            self.say(&json);
        } else {
            let mut text = format!("{variant}: {}-fold CV, seed {}\n", summary.k, summary.seed);
            for (i, f) in summary.folds.iter().enumerate() {
                text.push_str(&format!(
                    "fold {}: precision {:.4}  recall {:.4}  F{} {:.4}\n",
                    i + 1,
                    f.precision,
                    f.recall,
                    f.beta,
                    f.f_beta
                ));
            }
            text.push_str(&format!(
                "mean F{} {:.4} ± {:.3}\n",
                self.config.beta, summary.mean_f_beta, summary.std_f_beta
            ));
            self.say(&text);
        }
        Ok(())
    }

    fn ablate(&self) -> Result<()> {
        let variants = &self.config.variants;
        if variants.is_empty() {
            return Err(CliError::usage("no variants to run"));
        }
        if variants.iter().collect::<BTreeSet<_>>().len() != variants.len() {
            return Err(CliError::usage("variant list contains duplicates"));
        }
        let (matrix, coverage) = self.matrix_for(variants)?;
        let vc = self.variant_config(coverage, variants.contains(&Variant::ZeroShotStub))?;

        let runs = variants
            .par_iter()
            .map(|&v| run_variant(v, &matrix, &vc))
            .collect::<founder_core::Result<Vec<_>>>()?;

        let seed = self.seed();
        let mut results: Vec<VariantResult> = runs.iter().map(|r| r.result.clone()).collect();
        assign_deltas(&mut results, 0);
        let md = emit_report(&results, ReportFormat::Markdown)?;
        let json = emit_report(&results, ReportFormat::Json)?;
        write_file(&self.out_path(&format!("ablation_seed{seed}.md")), &md)?;
        write_file(&self.out_path(&format!("ablation_seed{seed}.json")), &json)?;
        for run in &runs {
            if let Some(model) = &run.model {
                self.write_model(run.result.variant, model)?;
            }
        }
        let model_of = |v: Variant| {
            runs.iter()
                .find(|r| r.result.variant == v)
                .and_then(|r| r.model.as_ref())
        };
        if let (Some(base), Some(ext)) = (model_of(Variant::StructV2), model_of(Variant::StructV2PlusSide)) {
            let report = importance_redistribution(base, ext);
            write_file(
                &self.out_path(&format!("redistribution_seed{seed}.json")),
                &to_json(&report)?,
            )?;
        }
        self.say(if self.json_out() { &json } else { &md });
        Ok(())
    }

    fn report(&self, inputs: &[PathBuf]) -> Result<()> {
        let mut results = Vec::new();
        for path in inputs {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            let report = parse_json_report(&text)
                .map_err(|e| CliError::input(format!("{}: not a comparison report: {e}", path.display())))?;
            results.extend(report.results);
        }
        assign_deltas(&mut results, 0);
        let text = emit_report(&results, self.config.format)?;
        let ext = if self.json_out() { "json" } else { "md" };
        write_file(&self.out_path(&format!("report.{ext}")), &text)?;
        self.say(&text);
        Ok(())
    }
}
