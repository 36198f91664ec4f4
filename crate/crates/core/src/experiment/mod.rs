//! Repeated train/test evaluation of trees and tree-selected regression
//! models, split-variable importance, and a synthetic data generator.

mod report;
mod runner;
mod selection;
mod synthetic;

pub use report::{
    write_reports, CONFUSION_FILE, IMPORTANCE_FILE, METRICS_FILE, ROC_FILE, SELECTED_FILE, SUMMARY_FILE,
};
pub use runner::{
    ensure_aggregates, repetition_seed, run_experiment, ExperimentConfig, ExperimentOutput, ExperimentSummary,
    MaskedRows, ModelMetrics, ModelName, ModelResult, ModelSummary, Quartiles, RepetitionResult, DEFAULT_TRAIN_SHARE,
    SYNTHETIC_EDU,
};
pub use selection::{
    aggregate_source, count_split_variables, group_stratified_partition, random_partition, tree_select_predictors,
    ImportanceRow, Partition, TreeSelection,
};
pub use synthetic::{generate_synthetic, SyntheticData, SyntheticSpec, SyntheticTruth, DOMINANT, RESPONSE};
