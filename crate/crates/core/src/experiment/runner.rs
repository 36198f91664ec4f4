use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::selection::{
    count_split_variables, group_stratified_partition, random_partition, tree_select_predictors, ImportanceRow,
    Partition,
};
use crate::cart::{grow_tree, split_variable_profile, GrowControls, SplitProfile, Tree};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{
    aggregate_roc, auc, brier_score, confusion_matrix, error_rate, roc_curve, ConfusionMatrix, RocCurve,
    DEFAULT_THRESHOLD,
};
use crate::par;
use crate::preprocess::{aggregate_columns, aggregate_means, select_variable_set, strip_aggregates, AggregateTarget, VariableSet};
use crate::regression::{
    encode_design, encode_intercept_only, fit_logistic_irls, fit_random_intercept_logistic, predict_glm,
    predict_glmm, GlmmOptions, GroupIds, GroupLevel, GroupPolicy, IrlsOptions, MaskedPredictions, MixedSpec,
};

/// Training share of the original protocol (5000 of 8520 cases).
pub const DEFAULT_TRAIN_SHARE: f64 = 5000.0 / 8520.0;

/// Predictors of the expert-knowledge baselines in data from
/// [`generate_synthetic`](super::generate_synthetic).
pub const SYNTHETIC_EDU: [&str; 4] = ["gender", "books", "aspiration-education", "points-communicating"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelName {
    TreeInd,
    TreeIndAgg,
    TreeIndMeta,
    TreeIndMetaAgg,
    #[serde(rename = "GLMInd")]
    GlmInd,
    #[serde(rename = "GLMMInd.I")]
    GlmmInd,
    #[serde(rename = "GLMIndMeta")]
    GlmIndMeta,
    #[serde(rename = "GLMMIndMeta.I")]
    GlmmIndMeta,
    #[serde(rename = "GLMedu")]
    GlmEdu,
    #[serde(rename = "GLMMedu.I")]
    GlmmEdu,
}

impl ModelName {
    pub const ALL: [ModelName; 10] = [
        ModelName::TreeInd,
        ModelName::TreeIndAgg,
        ModelName::TreeIndMeta,
        ModelName::TreeIndMetaAgg,
        ModelName::GlmInd,
        ModelName::GlmmInd,
        ModelName::GlmIndMeta,
        ModelName::GlmmIndMeta,
        ModelName::GlmEdu,
        ModelName::GlmmEdu,
    ];

    /// Variable set of the tree this model is, or takes its predictors
    /// from. `None` for the expert-knowledge baselines.
    pub fn tree_set(self) -> Option<VariableSet> {
        use ModelName::*;
        match self {
            TreeInd => Some(VariableSet::Ind),
            TreeIndAgg | GlmInd | GlmmInd => Some(VariableSet::IndAgg),
            TreeIndMeta => Some(VariableSet::IndMeta),
            TreeIndMetaAgg | GlmIndMeta | GlmmIndMeta => Some(VariableSet::IndMetaAgg),
            GlmEdu | GlmmEdu => None,
        }
    }

    pub fn is_tree(self) -> bool {
        matches!(
            self,
            ModelName::TreeInd | ModelName::TreeIndAgg | ModelName::TreeIndMeta | ModelName::TreeIndMetaAgg
        )
    }

    pub fn is_mixed(self) -> bool {
        matches!(self, ModelName::GlmmInd | ModelName::GlmmIndMeta | ModelName::GlmmEdu)
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ModelName::*;
        f.write_str(match self {
            TreeInd => "TreeInd",
            TreeIndAgg => "TreeIndAgg",
            TreeIndMeta => "TreeIndMeta",
            TreeIndMetaAgg => "TreeIndMetaAgg",
            GlmInd => "GLMInd",
            GlmmInd => "GLMMInd.I",
            GlmIndMeta => "GLMIndMeta",
            GlmmIndMeta => "GLMMIndMeta.I",
            GlmEdu => "GLMedu",
            GlmmEdu => "GLMMedu.I",
        })
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelName::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown model `{s}`")))
    }
}

/// What a regression model predicts for a test row it cannot encode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskedRows {
    /// The training positive rate, so every model scores the full test set.
    PriorFallback,
    /// Leave the row out of that model's scores.
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub repetitions: usize,
    /// Training rows per repetition; `None` scales the original 5000/8520
    /// share to the data.
    pub train_size: Option<usize>,
    pub cp: f64,
    pub roster: Vec<ModelName>,
    pub edu_list: Vec<String>,
    pub master_seed: u64,
    /// Tree controls; `cp` is replaced by the field above.
    pub grow: GrowControls,
    pub threshold: f64,
    /// Partition within schools instead of over all rows.
    pub group_stratified: bool,
    /// Recompute aggregated columns from the training rows of each
    /// repetition instead of once on the full data.
    pub recompute_aggregates: bool,
    pub masked_rows: MaskedRows,
    pub group_policy: GroupPolicy,
    pub irls: IrlsOptions,
    pub glmm: GlmmOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            repetitions: 50,
            train_size: None,
            cp: 0.004,
            roster: ModelName::ALL.to_vec(),
            edu_list: SYNTHETIC_EDU.iter().map(|s| s.to_string()).collect(),
            master_seed: 1,
            grow: GrowControls::default(),
            threshold: DEFAULT_THRESHOLD,
            group_stratified: false,
            recompute_aggregates: false,
            masked_rows: MaskedRows::PriorFallback,
            group_policy: GroupPolicy::Conditional,
            irls: IrlsOptions::default(),
            glmm: GlmmOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn train_size_for(&self, n: usize) -> usize {
        self.train_size
            .unwrap_or_else(|| ((n as f64 * DEFAULT_TRAIN_SHARE).round() as usize).clamp(1, n.saturating_sub(1)))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if self.roster.is_empty() {
            return Err(Error::invalid("model roster is empty"));
        }
        let t = self.train_size_for(n);
        if t == 0 || t >= n {
            return Err(Error::invalid(format!("training size {t} must lie strictly between 0 and {n}")));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid("threshold outside [0, 1]"));
        }
        self.grow.clone().with_cp(self.cp).validate()
    }
}

/// Seed of repetition `rep`: a SplitMix64 step from the master seed.
pub fn repetition_seed(master_seed: u64, rep: usize) -> u64 {
    let mut z = master_seed.wrapping_add((rep as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub error_rate: f64,
    pub brier: f64,
    /// `None` when the scored rows hold a single class.
    pub auc: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub n_scored: usize,
    /// Test rows the model could not encode.
    pub n_masked: usize,
    #[serde(skip)]
    pub roc: Option<RocCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub model: ModelName,
    pub metrics: Option<ModelMetrics>,
    pub failure: Option<String>,
    pub selected_predictors: Vec<String>,
    pub slope_candidates: Vec<String>,
    /// Regression fell back to an intercept-only model.
    pub fallback: bool,
    pub split_profile: Option<SplitProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub rep: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub models: Vec<ModelResult>,
    #[serde(skip)]
    pub trees: BTreeMap<VariableSet, Tree>,
}

impl RepetitionResult {
    pub fn model(&self, name: ModelName) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.model == name)
    }
}

/// Mean, median and quartiles (linear interpolation between order
/// statistics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Quartiles> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = (v.len() - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Some(Quartiles {
            n: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: q(0.5),
            q1: q(0.25),
            q3: q(0.75),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: ModelName,
    pub failures: usize,
    pub error_rate: Option<Quartiles>,
    pub brier: Option<Quartiles>,
    pub auc: Option<Quartiles>,
    pub confusion_total: ConfusionMatrix,
    pub roc: Option<RocCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub models: Vec<ModelSummary>,
    /// Split-variable frequencies per tree model over all repetitions.
    pub importance: BTreeMap<ModelName, Vec<ImportanceRow>>,
}

impl ExperimentSummary {
    pub fn model(&self, name: ModelName) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.model == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub n_rows: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub results: Vec<RepetitionResult>,
    pub summary: ExperimentSummary,
}

/// Adds class and school means of every eligible predictor unless the data
/// already carries aggregated columns.
pub fn ensure_aggregates(ds: &Dataset) -> Result<Dataset> {
    if ds.columns().iter().any(|c| c.level.is_aggregated()) {
        return Ok(ds.clone());
    }
    info!("no aggregated columns present; adding class and school means");
    let with_class = aggregate_means(ds, AggregateTarget::Class)?;
    aggregate_means(&with_class, AggregateTarget::School)
}

/// Rebuilds the aggregated columns of `ds` from the rows in `reference`.
fn recompute_aggregates(ds: &Dataset, reference: &[usize]) -> Result<Dataset> {
    let mut by_target: Vec<(AggregateTarget, Vec<String>)> = vec![
        (AggregateTarget::Class, Vec::new()),
        (AggregateTarget::School, Vec::new()),
    ];
    for c in ds.columns().iter().filter(|c| c.level.is_aggregated()) {
        let source = c
            .source
            .clone()
            .ok_or_else(|| Error::invalid(format!("aggregated column `{}` has no source", c.name)))?;
        let k = usize::from(c.level.rank() == 2);
        by_target[k].1.push(source);
    }
    let mut out = strip_aggregates(ds)?;
    for (target, names) in by_target {
        if !names.is_empty() {
            out = aggregate_columns(&out, target, &names, Some(reference))?;
        }
    }
    Ok(out)
}

/// Runs the repeated train/test protocol. Repetitions are independent and
/// run on the current rayon pool; results are identical to a sequential
/// run.
pub fn run_experiment(ds: &Dataset, config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ds = ensure_aggregates(ds)?;
    ds.response()?;
    let n = ds.n_rows();
    config.validate(n)?;
    let train_size = config.train_size_for(n);
    info!(
        "experiment: {} repetitions, {train_size}/{} split, cp {}",
        config.repetitions,
        n - train_size,
        config.cp
    );
    let results = par::map_indexed(config.repetitions, |rep| run_repetition(&ds, config, rep, train_size));
    let results: Vec<RepetitionResult> = results.into_iter().collect::<Result<_>>()?;
    let summary = summarize(config, &results)?;
    Ok(ExperimentOutput {
        config: config.clone(),
        n_rows: n,
        train_size,
        test_size: n - train_size,
        results,
        summary,
    })
}

fn run_repetition(ds: &Dataset, config: &ExperimentConfig, rep: usize, train_size: usize) -> Result<RepetitionResult> {
    let seed = repetition_seed(config.master_seed, rep);
    let Partition { train, test } = if config.group_stratified {
        group_stratified_partition(ds, train_size, seed)?
    } else {
        random_partition(ds.n_rows(), train_size, seed)?
    };
    let (train_ds, test_ds) = if config.recompute_aggregates {
        let local = recompute_aggregates(ds, &train)?;
        (local.select_rows(&train)?, local.select_rows(&test)?)
    } else {
        (ds.select_rows(&train)?, ds.select_rows(&test)?)
    };
    let (_, y_train) = train_ds.response()?;
    let (_, y_test) = test_ds.response()?;
    let prior = y_train.iter().map(|&v| f64::from(v)).sum::<f64>() / y_train.len() as f64;
    let controls = GrowControls {
        cp: config.cp,
        rng_seed: seed,
        ..config.grow.clone()
    };

    let mut sets: Vec<VariableSet> = config.roster.iter().filter_map(|m| m.tree_set()).collect();
    sets.sort();
    sets.dedup();
    let mut trees: BTreeMap<VariableSet, Tree> = BTreeMap::new();
    let mut tree_errors: BTreeMap<VariableSet, String> = BTreeMap::new();
    for set in sets {
        let grown = select_variable_set(&train_ds, set, &config.edu_list)
            .and_then(|preds| grow_tree(&train_ds, &preds, &controls));
        match grown {
            Ok(t) => {
                trees.insert(set, t);
            }
            Err(e) => {
                warn!("rep {rep}: tree on {set} failed: {e}");
                tree_errors.insert(set, e.to_string());
            }
        }
    }

    let mut models = Vec::with_capacity(config.roster.len());
    for &model in &config.roster {
        let mut result = ModelResult {
            model,
            metrics: None,
            failure: None,
            selected_predictors: Vec::new(),
            slope_candidates: Vec::new(),
            fallback: false,
            split_profile: None,
        };
        let outcome = fit_and_score(
            model, config, &train_ds, &test_ds, &y_test, prior, &trees, &tree_errors, &mut result,
        );
        match outcome {
            Ok(m) => result.metrics = Some(m),
            Err(e) => {
                warn!("rep {rep}: {model} failed: {e}");
                result.failure = Some(e.to_string());
            }
        }
        models.push(result);
    }
    Ok(RepetitionResult {
        rep,
        seed,
        train_size: train.len(),
        test_size: test.len(),
        models,
        trees,
    })
}

#[allow(clippy::too_many_arguments)]
fn fit_and_score(
    model: ModelName,
    config: &ExperimentConfig,
    train: &Dataset,
    test: &Dataset,
    y_test: &[u8],
    prior: f64,
    trees: &BTreeMap<VariableSet, Tree>,
    tree_errors: &BTreeMap<VariableSet, String>,
    result: &mut ModelResult,
) -> Result<ModelMetrics> {
    let tree_for = |set: VariableSet| -> Result<&Tree> {
        trees.get(&set).ok_or_else(|| {
            Error::Model(format!(
                "tree on {set} unavailable: {}",
                tree_errors.get(&set).map_or("not grown", String::as_str)
            ))
        })
    };
    if model.is_tree() {
        let set = model.tree_set().expect("tree model");
        let tree = tree_for(set)?;
        let profile = split_variable_profile(tree);
        result.selected_predictors = profile.variables.iter().map(|v| v.variable.clone()).collect();
        result.split_profile = Some(profile);
        let probs: Vec<f64> = tree.predict_dataset(test)?.iter().map(|p| p.prob).collect();
        return score(&probs, y_test, 0, config.threshold);
    }

    let (spec, fallback) = match model.tree_set() {
        Some(set) => {
            let sel = tree_select_predictors(tree_for(set)?);
            (sel.spec, sel.fallback)
        }
        None => {
            if config.edu_list.is_empty() {
                return Err(Error::invalid("empty edu list"));
            }
            let edu = select_variable_set(train, VariableSet::Edu, &config.edu_list)?;
            (
                MixedSpec {
                    fixed_predictors: edu,
                    intercept_groups: vec![GroupLevel::Class, GroupLevel::School],
                    slope_candidates: Vec::new(),
                },
                false,
            )
        }
    };
    result.selected_predictors = spec.fixed_predictors.clone();
    result.slope_candidates = spec.slope_candidates.clone();
    result.fallback = fallback;

    let design = if fallback {
        encode_intercept_only(train)?
    } else {
        encode_design(train, &spec.fixed_predictors)?
    };
    let predictions: MaskedPredictions = if model.is_mixed() {
        let groups = GroupIds::from_dataset(train, &design.retained_rows)?;
        let opts = GlmmOptions {
            irls: config.irls,
            ..config.glmm
        };
        let fit = fit_random_intercept_logistic(&design, &design.response, &groups, &spec, &opts)?;
        predict_glmm(&fit, test, config.group_policy)?
    } else {
        let fit = fit_logistic_irls(&design, &design.response, &config.irls)?;
        predict_glm(&fit, test)?
    };
    let n_masked = predictions.n_masked;
    match config.masked_rows {
        MaskedRows::PriorFallback => {
            let probs: Vec<f64> = predictions.probs.iter().map(|p| p.unwrap_or(prior)).collect();
            score(&probs, y_test, n_masked, config.threshold)
        }
        MaskedRows::Drop => {
            let (probs, truth): (Vec<f64>, Vec<u8>) = predictions
                .probs
                .iter()
                .zip(y_test)
                .filter_map(|(p, &y)| p.map(|p| (p, y)))
                .unzip();
            score(&probs, &truth, n_masked, config.threshold)
        }
    }
}

fn score(probs: &[f64], truth: &[u8], n_masked: usize, threshold: f64) -> Result<ModelMetrics> {
    let confusion = confusion_matrix(truth, probs, threshold)?;
    let roc = roc_curve(probs, truth).ok();
    Ok(ModelMetrics {
        error_rate: error_rate(&confusion),
        brier: brier_score(probs, truth)?,
        auc: roc.as_ref().map(auc),
        confusion,
        n_scored: probs.len(),
        n_masked,
        roc,
    })
}

fn summarize(config: &ExperimentConfig, results: &[RepetitionResult]) -> Result<ExperimentSummary> {
    let mut models = Vec::new();
    for &model in &config.roster {
        let entries: Vec<&ModelResult> = results.iter().filter_map(|r| r.model(model)).collect();
        let ok: Vec<&ModelMetrics> = entries.iter().filter_map(|m| m.metrics.as_ref()).collect();
        let mut confusion_total = ConfusionMatrix::default();
        for m in &ok {
            confusion_total.add(&m.confusion);
        }
        let curves: Vec<RocCurve> = ok.iter().filter_map(|m| m.roc.clone()).collect();
        let roc = if curves.is_empty() { None } else { Some(aggregate_roc(&curves)?) };
        let collect = |f: &dyn Fn(&ModelMetrics) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|m| f(m)).collect() };
        models.push(ModelSummary {
            model,
            failures: entries.len() - ok.len(),
            error_rate: Quartiles::of(&collect(&|m| Some(m.error_rate))),
            brier: Quartiles::of(&collect(&|m| Some(m.brier))),
            auc: Quartiles::of(&collect(&|m| m.auc)),
            confusion_total,
            roc,
        });
    }
    let mut importance = BTreeMap::new();
    for &model in config.roster.iter().filter(|m| m.is_tree()) {
        let set = model.tree_set().expect("tree model");
        importance.insert(model, count_split_variables(results.iter().filter_map(|r| r.trees.get(&set))));
    }
    Ok(ExperimentSummary { models, importance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_names_round_trip() {
        for m in ModelName::ALL {
            assert_eq!(m.to_string().parse::<ModelName>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{m}\""));
        }
    }

    #[test]
    fn quartiles_interpolate() {
        let q = Quartiles::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((q.mean, q.median, q.q1, q.q3), (2.5, 2.5, 1.75, 3.25));
        assert!(Quartiles::of(&[]).is_none());
    }

    #[test]
    fn seeds_differ_per_repetition() {
        let s: Vec<u64> = (0..50).map(|r| repetition_seed(7, r)).collect();
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 50);
        assert_eq!(repetition_seed(7, 3), s[3]);
    }

    #[test]
    fn scaled_train_size() {
        let c = ExperimentConfig::default();
        assert_eq!(c.train_size_for(8520), 5000);
        assert_eq!(c.train_size_for(2000), 1174);
    }
}
