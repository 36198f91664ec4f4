use crate::dataset::{Dataset, Role, Scale};
use crate::error::{Error, Result};

use super::TreeVariable;

/// Column-major predictor values with `NaN` for missing cells. Ordered
/// predictors hold their value (ordinal: 1-based level code), nominal
/// predictors their 0-based level code.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub variables: Vec<TreeVariable>,
    pub columns: Vec<Vec<f64>>,
    n_rows: usize,
}

impl FeatureMatrix {
    pub fn new(variables: Vec<TreeVariable>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if variables.len() != columns.len() {
            return Err(Error::invalid("variable and column counts differ"));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::invalid("feature columns differ in length"));
        }
        Ok(FeatureMatrix {
            variables,
            columns,
            n_rows,
        })
    }

    pub fn from_dataset(ds: &Dataset, predictors: &[String]) -> Result<Self> {
        let mut variables = Vec::with_capacity(predictors.len());
        let mut columns = Vec::with_capacity(predictors.len());
        for name in predictors {
            let idx = ds.index_of(name)?;
            let c = &ds.columns()[idx];
            if matches!(c.role, Role::Id | Role::Response) || c.scale == Scale::Text {
                return Err(Error::invalid(format!("`{name}` cannot be a tree predictor")));
            }
            if variables.iter().any(|v: &TreeVariable| v.name == *name) {
                return Err(Error::invalid(format!("predictor `{name}` listed twice")));
            }
            variables.push(TreeVariable {
                name: name.clone(),
                scale: c.scale.clone(),
            });
            columns.push(
                (0..ds.n_rows())
                    .map(|r| ds.numeric_value(r, idx).unwrap_or(f64::NAN))
                    .collect(),
            );
        }
        FeatureMatrix::new(variables, columns)
    }

    /// Values for a fresh dataset laid out for `variables`; level lists must
    /// agree with the training schema.
    pub fn for_variables(ds: &Dataset, variables: &[TreeVariable]) -> Result<Self> {
        let names: Vec<String> = variables.iter().map(|v| v.name.clone()).collect();
        let fm = FeatureMatrix::from_dataset(ds, &names)?;
        for (want, got) in variables.iter().zip(&fm.variables) {
            if want.scale != got.scale {
                return Err(Error::invalid(format!(
                    "predictor `{}` has a different scale than at training time",
                    want.name
                )));
            }
        }
        Ok(fm)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[r]).collect()
    }
}

/// Predictors plus binary response.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub features: FeatureMatrix,
    pub response: Vec<u8>,
    pub response_name: String,
}

impl TrainingData {
    pub fn new(features: FeatureMatrix, response: Vec<u8>, response_name: impl Into<String>) -> Result<Self> {
        if features.n_rows() != response.len() {
            return Err(Error::invalid("response length differs from feature rows"));
        }
        if response.iter().any(|&y| y > 1) {
            return Err(Error::invalid("response must be 0/1"));
        }
        if response.is_empty() {
            return Err(Error::invalid("no observations"));
        }
        Ok(TrainingData {
            features,
            response,
            response_name: response_name.into(),
        })
    }

    pub fn from_dataset(ds: &Dataset, predictors: &[String]) -> Result<Self> {
        if predictors.is_empty() {
            return Err(Error::invalid("no predictors supplied"));
        }
        let (ri, y) = ds.response()?;
        let features = FeatureMatrix::from_dataset(ds, predictors)?;
        TrainingData::new(features, y, ds.columns()[ri].name.clone())
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }
}
