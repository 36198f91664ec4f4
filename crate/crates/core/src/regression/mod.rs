//! Logistic regression baselines: fixed effects by IRLS and nested random
//! intercepts (class within school) by Laplace approximation. Both use
//! complete cases only.

mod design;
mod glm;
mod glmm;

pub use design::{
    encode_design, encode_intercept_only, ColumnMap, DesignColumn, DesignMatrix, EncodedRows, Encoding,
    SourceVariable,
};
pub use glm::{coefficient_table, fit_logistic_irls, predict_glm, GlmFit, IrlsOptions, MaskedPredictions, SEPARATION_LIMIT};
pub use glmm::{
    fit_random_intercept_logistic, predict_glmm, GlmmFit, GlmmOptions, GroupIds, GroupLevel, GroupPolicy, MixedSpec,
};
