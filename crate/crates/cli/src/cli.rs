use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Classification trees with surrogate splits, tree-driven predictor
/// selection for logistic models, and repeated-split evaluation on nested
/// student/class/school data.
///
/// Settings come from an optional TOML file (`--config`); flags given on
/// the command line take precedence. Every command writes `manifest.json`
/// into its output directory. Exit status: 0 success, 1 usage error,
/// 2 data or model error.
#[derive(Debug, Parser)]
#[command(name = "mlcart", version, propagate_version = true)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory (created if absent) [default: out].
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Upper bound on worker threads.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic nested dataset with its schema and true parameters.
    Generate(GenerateArgs),
    /// Merge questionnaire pairs, dichotomize the response and add group means.
    Preprocess(PreprocessArgs),
    /// Grow a classification tree at a fixed cp.
    Grow(GrowArgs),
    /// Grow a tree and cross-validate its cp table.
    Cv(CvArgs),
    /// Prune a stored tree at a cp value.
    Prune(PruneArgs),
    /// Predict class probabilities with a stored tree.
    Predict(PredictArgs),
    /// Derive regression predictors from a stored tree.
    SelectVars(TreeArg),
    /// Fit a fixed-effect logistic regression.
    FitGlm(FitArgs),
    /// Fit a logistic regression with class and school random intercepts.
    FitGlmm(FitGlmmArgs),
    /// Score predicted probabilities against observed outcomes.
    Evaluate(EvaluateArgs),
    /// Run the repeated train/test comparison of all models.
    Experiment(ExperimentArgs),
    /// Cross-validated error over a grid of cp values.
    CpSweep(CpSweepArgs),
    /// Render a stored tree as text, DOT or JSON.
    ExportTree(ExportArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV file.
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    /// Schema sidecar (TOML).
    #[arg(long, value_name = "TOML")]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictorArgs {
    /// Named predictor set: Edu, Ind, IndAgg, IndMeta or IndMetaAgg.
    #[arg(long, value_name = "NAME")]
    pub set: Option<String>,
    /// Explicit comma-separated predictor list (overrides --set).
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub predictors: Vec<String>,
    /// Comma-separated predictors of the Edu set.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub edu: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GrowFlags {
    /// Complexity parameter.
    #[arg(long)]
    pub cp: Option<f64>,
    /// Smallest node that may be split.
    #[arg(long, value_name = "N")]
    pub min_split: Option<usize>,
    /// Smallest allowed child node.
    #[arg(long, value_name = "N")]
    pub min_bucket: Option<usize>,
    /// Maximum depth (root = 0).
    #[arg(long, value_name = "N")]
    pub max_depth: Option<usize>,
    /// Surrogates kept per split.
    #[arg(long, value_name = "N")]
    pub max_surrogate: Option<usize>,
    /// Random seed (fold assignment).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_name = "N")]
    pub n_students: Option<usize>,
    #[arg(long, value_name = "N")]
    pub n_schools: Option<usize>,
    #[arg(long, value_name = "N")]
    pub classes_per_school: Option<usize>,
    /// Share of positive outcomes.
    #[arg(long, value_name = "RATE")]
    pub target_rate: Option<f64>,
    /// Generate data without any effects.
    #[arg(long)]
    pub null: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Merge a parent/student pair: PARENT:STUDENT:OUTPUT (repeatable).
    #[arg(long = "merge", value_name = "SPEC")]
    pub merges: Vec<String>,
    /// Nominal column to turn into the binary response.
    #[arg(long, value_name = "COLUMN")]
    pub response_source: Option<String>,
    /// Level of the response source coded as 1.
    #[arg(long, value_name = "LEVEL")]
    pub positive: Option<String>,
    /// Add group means at `class` and/or `school` level (repeatable).
    #[arg(long = "aggregate", value_name = "LEVEL")]
    pub aggregates: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GrowArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub predictors: PredictorArgs,
    #[command(flatten)]
    pub grow: GrowFlags,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub predictors: PredictorArgs,
    #[command(flatten)]
    pub grow: GrowFlags,
    /// Number of cross-validation folds.
    #[arg(long, value_name = "K")]
    pub folds: Option<usize>,
    /// Select the smallest tree within one standard error of the minimum.
    #[arg(long)]
    pub one_se: bool,
}

#[derive(Debug, Args)]
pub struct TreeArg {
    /// Tree file written by `grow`, `cv` or `prune` (JSON).
    #[arg(long, value_name = "JSON")]
    pub tree: PathBuf,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[command(flatten)]
    pub tree: TreeArg,
    /// Complexity parameter to prune at.
    #[arg(long)]
    pub cp: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub tree: TreeArg,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub predictors: PredictorArgs,
    /// Use the predictors of a `select-vars` result (JSON).
    #[arg(long, value_name = "JSON")]
    pub selection: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitGlmmArgs {
    #[command(flatten)]
    pub fit: FitArgs,
    /// Grouping factors with random intercepts: class, school or both.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub groups: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// CSV with a probability and a 0/1 outcome column.
    #[arg(long, value_name = "CSV")]
    pub predictions: PathBuf,
    #[arg(long, value_name = "COLUMN", default_value = "prob")]
    pub prob_column: String,
    #[arg(long, value_name = "COLUMN", default_value = "truth")]
    pub truth_column: String,
    /// Classification threshold (probability ≥ threshold → 1).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// ROC axes: fpr-tpr or specificity-sensitivity.
    #[arg(long, value_name = "AXES")]
    pub axes: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Input CSV; without it a synthetic dataset is generated.
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "TOML")]
    pub schema: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "N")]
    pub repetitions: Option<usize>,
    #[arg(long, value_name = "N")]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub cp: Option<f64>,
    /// Comma-separated model names (default: all ten).
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub roster: Vec<String>,
    /// Comma-separated predictors of the Edu baselines.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub edu: Vec<String>,
    /// Partition within schools.
    #[arg(long)]
    pub group_stratified: bool,
    /// Recompute group means on each training set.
    #[arg(long)]
    pub recompute_aggregates: bool,
    /// ROC axes: fpr-tpr or specificity-sensitivity.
    #[arg(long, value_name = "AXES")]
    pub axes: Option<String>,
}

#[derive(Debug, Args)]
pub struct CpSweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub predictors: PredictorArgs,
    #[command(flatten)]
    pub grow: GrowFlags,
    /// Largest cp of the grid.
    #[arg(long)]
    pub max: Option<f64>,
    /// Grid spacing.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, value_name = "K")]
    pub folds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub tree: TreeArg,
    /// text, dot or json.
    #[arg(long, default_value = "text")]
    pub format: String,
}
