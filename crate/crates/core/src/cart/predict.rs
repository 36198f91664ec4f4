use serde::{Deserialize, Serialize};

use super::{Direction, FeatureMatrix, Tree, TreeNode};
use crate::dataset::Dataset;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Arena index of the leaf reached.
    pub leaf: usize,
    pub class: u8,
    /// Class-1 proportion of the leaf.
    pub prob: f64,
}

/// Direction at an internal node: primary split, then surrogates in rank
/// order, then the majority direction.
#[inline]
pub(crate) fn route(node: &TreeNode, value: impl Fn(usize) -> f64) -> Direction {
    let split = node.split.as_ref().expect("route called on a leaf");
    if let Some(d) = split.rule.direction(value(split.variable)) {
        return d;
    }
    for s in &node.surrogates {
        if let Some(d) = s.split.rule.direction(value(s.split.variable)) {
            return d;
        }
    }
    split.majority
}

impl Tree {
    /// Leaf reached by a row laid out like [`Tree::variables`]. Values past
    /// the end of the slice count as missing.
    pub fn leaf_for(&self, values: &[f64]) -> usize {
        let value = |v: usize| values.get(v).copied().unwrap_or(f64::NAN);
        let mut i = 0;
        while let Some((l, r)) = self.nodes[i].children {
            i = match route(&self.nodes[i], value) {
                Direction::Left => l,
                Direction::Right => r,
            };
        }
        i
    }

    /// Nodes visited from the root to the leaf.
    pub fn path_for(&self, values: &[f64]) -> Vec<usize> {
        let value = |v: usize| values.get(v).copied().unwrap_or(f64::NAN);
        let mut path = vec![0];
        let mut i = 0;
        while let Some((l, r)) = self.nodes[i].children {
            i = match route(&self.nodes[i], value) {
                Direction::Left => l,
                Direction::Right => r,
            };
            path.push(i);
        }
        path
    }

    pub fn predict_values(&self, values: &[f64]) -> Prediction {
        let leaf = self.leaf_for(values);
        let node = &self.nodes[leaf];
        Prediction {
            leaf,
            class: node.predicted_class(),
            prob: node.predicted_prob(),
        }
    }

    pub fn predict_matrix(&self, features: &FeatureMatrix) -> Vec<Prediction> {
        let mut row = vec![0.0; features.n_vars()];
        (0..features.n_rows())
            .map(|r| {
                for (v, col) in features.columns.iter().enumerate() {
                    row[v] = col[r];
                }
                self.predict_values(&row)
            })
            .collect()
    }

    /// One prediction per row of `ds`, which must contain the tree's
    /// predictors with the training scales.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<Prediction>> {
        let fm = FeatureMatrix::for_variables(ds, &self.variables)?;
        Ok(self.predict_matrix(&fm))
    }
}
