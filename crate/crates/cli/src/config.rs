use std::path::{Path, PathBuf};

use mlcart::cart::GrowControls;
use mlcart::experiment::{ExperimentConfig, SyntheticSpec};
use mlcart::preprocess::MergePairSpec;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseConfig {
    /// Nominal column holding the raw answer.
    pub column: String,
    /// Level coded as 1.
    pub positive_level: String,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub merge: Vec<MergePairSpec>,
    pub response: Option<ResponseConfig>,
    /// `class` and/or `school`.
    pub aggregate: Vec<String>,
    pub variable_set: Option<String>,
    pub predictors: Vec<String>,
    pub edu_list: Vec<String>,
    pub grow: GrowControls,
    pub experiment: ExperimentConfig,
    pub synthetic: SyntheticSpec,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?;
        // relative paths are taken relative to the config file
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.dataset, &mut cfg.schema, &mut cfg.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}
