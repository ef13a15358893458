use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use founder_core::harness::ReportFormat;
use founder_core::pipeline::Variant;

#[derive(Debug, Parser)]
#[command(
    name = "founder",
    version,
    about = "Founder-success prediction pipeline and experiment harness"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Pipeline config (TOML, or JSON with a .json extension)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every random stage
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report format on stdout
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Dataset (CSV or JSONL)
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Only print errors
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// Print the resolved configuration and exit
    #[arg(long, global = true)]
    pub print_config: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Markdown,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Markdown => ReportFormat::Markdown,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a calibrated synthetic dataset in the canonical CSV layout
    Generate {
        /// SignalSpec file (TOML or JSON); overrides the config's [synthetic] table
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Number of rows
        #[arg(long)]
        n: Option<usize>,
        /// Output file (default: <out>/synthetic_seed<seed>.csv)
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Featurize a dataset into the 28-column matrix
    Featurize {
        /// Output CSV (default: <out>/features.csv)
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Fire counts, precision and lift for every rule
    AuditRules,
    /// Fit one variant on the holdout split and write metrics, report row and model
    Train {
        #[arg(long, value_parser = parse_variant)]
        variant: Option<Variant>,
    },
    /// Score a dataset with a saved model plus the configured rules
    Evaluate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Stratified k-fold cross-validation of one variant
    Cv {
        #[arg(long, value_parser = parse_variant)]
        variant: Option<Variant>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run several variants on the same split and emit the comparison table
    Ablate {
        /// Comma-separated variant names, first is the baseline
        #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
        variants: Option<Vec<Variant>>,
        /// Side-feature CSV for struct_v2_plus_side
        #[arg(long)]
        side_features: Option<PathBuf>,
        /// External predictions CSV for zero_shot_stub
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Re-render one or more JSON comparison reports
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.trim().parse().map_err(|e: founder_core::Error| e.to_string())
}
