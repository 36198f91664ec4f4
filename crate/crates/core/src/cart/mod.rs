//! CART classification trees for a binary response.
//!
//! Split search uses the Gini index. Missing predictor values are handled by
//! surrogate splits and, failing those, by sending the observation in the
//! majority direction of the node, so every observation reaches a leaf.
//!
//! Two risk scales are in play and both are expressed relative to the root:
//!
//! * split goodness ([`Split::improvement`]) is the Gini decrease of the
//!   node, `n_t·I(t) − n_L·I(L) − n_R·I(R)`, divided by the root size, so a
//!   perfect split of a balanced root scores 0.5. A split is only accepted
//!   when its improvement exceeds `cp · I(root)`.
//! * pruning uses misclassification risk; complexity values `α` are
//!   `(R(t) − R(T_t)) / (|T_t| − 1)` divided by `R(root)`. After growth every
//!   link with `α ≤ cp` is collapsed.

mod cv;
mod export;
mod features;
mod grow;
mod predict;
mod profile;
mod prune;
mod split;
mod surrogate;

use serde::{Deserialize, Serialize};

use crate::dataset::Scale;
use crate::error::{Error, Result};

pub use cv::{cp_grid, cp_sweep, cross_validate_cp, cross_validate_on, CpSweepPoint, CvResult, FoldPlan};
pub use export::{export_tree, import_tree_json, ExportFormat, TREE_FORMAT, TREE_FORMAT_VERSION};
pub use features::{FeatureMatrix, TrainingData};
pub use grow::{grow_tree, grow_tree_on};
pub use predict::Prediction;
pub use profile::{split_variable_profile, SplitProfile, VariableUse};
pub use prune::{cost_complexity_sequence, prune, CostComplexitySequence, SubtreeMember};
pub use split::{best_split, SplitCandidate};
pub use surrogate::find_surrogates;

/// Upper cp bound recorded for the root-only row of a cp table. Relative
/// complexities never exceed 1, so any value above 1 stands for "infinity".
pub const CP_CAP: f64 = 1000.0;

/// Gini impurity `2p(1−p)` of a node with the given class counts.
pub fn gini_impurity(n0: usize, n1: usize) -> Result<f64> {
    let n = n0 + n1;
    if n == 0 {
        return Err(Error::invalid("gini impurity of an empty node"));
    }
    let p = n1 as f64 / n as f64;
    Ok(2.0 * p * (1.0 - p))
}

/// `n·I` for a node: the Gini risk in observation units.
#[inline]
pub(crate) fn gini_risk(n0: usize, n1: usize) -> f64 {
    let n = n0 + n1;
    if n == 0 {
        0.0
    } else {
        2.0 * n0 as f64 * n1 as f64 / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

/// How a predictor is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    /// Numeric, binary and ordinal predictors: thresholds on the value.
    Ordered,
    /// Nominal predictors: level subsets. Values are 0-based level codes.
    Categorical { n_levels: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeVariable {
    pub name: String,
    pub scale: Scale,
}

impl TreeVariable {
    pub fn kind(&self) -> VarKind {
        match &self.scale {
            Scale::Nominal(levels) => VarKind::Categorical {
                n_levels: levels.len() as u32,
            },
            _ => VarKind::Ordered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SplitRule {
    /// Values below `threshold` go left when `less_goes_left`, else right.
    Threshold { threshold: f64, less_goes_left: bool },
    /// Level codes in `left` go left, codes in `right` go right; levels in
    /// neither were not observed at the node and count as missing.
    Levels { left: Vec<u32>, right: Vec<u32> },
}

impl SplitRule {
    /// Direction for a value, or `None` when the value cannot be routed.
    #[inline]
    pub fn direction(&self, value: f64) -> Option<Direction> {
        if value.is_nan() {
            return None;
        }
        match self {
            SplitRule::Threshold {
                threshold,
                less_goes_left,
            } => Some(if (value < *threshold) == *less_goes_left {
                Direction::Left
            } else {
                Direction::Right
            }),
            SplitRule::Levels { left, right } => {
                if value < 0.0 || value.fract() != 0.0 {
                    return None;
                }
                let code = value as u32;
                if left.contains(&code) {
                    Some(Direction::Left)
                } else if right.contains(&code) {
                    Some(Direction::Right)
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    /// Index into [`Tree::variables`].
    pub variable: usize,
    pub rule: SplitRule,
    /// Gini decrease relative to the root size. Zero for surrogates.
    pub improvement: f64,
    /// Child receiving more non-missing observations (ties go left).
    pub majority: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub split: Split,
    /// Fraction of observations, non-missing on both variables, that this
    /// split sends the same way as the primary split.
    pub agreement: f64,
    /// Fraction of the same observations sent correctly by the primary
    /// split's majority direction.
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Observation counts per class `(n0, n1)`.
    pub counts: [usize; 2],
    pub depth: usize,
    pub split: Option<Split>,
    pub surrogates: Vec<Surrogate>,
    /// Arena indices of the (left, right) children.
    pub children: Option<(usize, usize)>,
    /// Relative complexity at which this node is collapsed; 0 for leaves.
    pub complexity: f64,
}

impl TreeNode {
    pub fn n(&self) -> usize {
        self.counts[0] + self.counts[1]
    }

    /// Majority class; a tie predicts class 0.
    pub fn predicted_class(&self) -> u8 {
        u8::from(self.counts[1] > self.counts[0])
    }

    pub fn predicted_prob(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            self.counts[1] as f64 / self.n() as f64
        }
    }

    /// Misclassification count.
    pub fn risk(&self) -> usize {
        self.counts[1 - self.predicted_class() as usize]
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowControls {
    /// Complexity parameter, a fraction of root risk.
    pub cp: f64,
    pub min_split: usize,
    pub min_bucket: usize,
    pub max_depth: usize,
    pub max_surrogate: usize,
    pub cv_folds: usize,
    pub rng_seed: u64,
}

impl Default for GrowControls {
    fn default() -> Self {
        GrowControls {
            cp: 0.01,
            min_split: 20,
            min_bucket: 7,
            max_depth: 30,
            max_surrogate: 5,
            cv_folds: 10,
            rng_seed: 0,
        }
    }
}

impl GrowControls {
    pub fn with_cp(mut self, cp: f64) -> Self {
        self.cp = cp;
        self
    }

    /// `min_split` with `min_bucket = round(min_split / 3)`.
    pub fn with_min_split(mut self, min_split: usize) -> Self {
        self.min_split = min_split;
        self.min_bucket = ((min_split as f64 / 3.0).round() as usize).max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cp) {
            return Err(Error::invalid(format!("cp {} outside [0, 1]", self.cp)));
        }
        if self.min_bucket == 0 || self.min_bucket > self.min_split {
            return Err(Error::invalid(format!(
                "min_bucket {} must be in 1..=min_split ({})",
                self.min_bucket, self.min_split
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max_depth must be positive"));
        }
        if self.cv_folds == 0 {
            return Err(Error::invalid("cv_folds must be positive"));
        }
        Ok(())
    }
}

/// One row of a cp table. Rows run from the root-only tree (cp =
/// [`CP_CAP`]) down to the full tree; `cp` is the complexity at which the
/// row's subtree is pruned to the next smaller one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpRow {
    pub cp: f64,
    pub n_splits: usize,
    pub rel_error: f64,
    pub x_error: Option<f64>,
    pub x_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub variables: Vec<TreeVariable>,
    pub response: String,
    /// Arena; `nodes[0]` is the root.
    pub nodes: Vec<TreeNode>,
    pub controls: GrowControls,
    pub cp_table: Vec<CpRow>,
}

impl Tree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn variable_name(&self, split: &Split) -> &str {
        &self.variables[split.variable].name
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    /// Node indices in breadth-first order (left before right).
    pub fn breadth_first(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            if let Some((l, r)) = self.nodes[i].children {
                queue.push_back(l);
                queue.push_back(r);
            }
        }
        order
    }

    /// Node indices in depth-first preorder (left before right).
    pub fn preorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            order.push(i);
            if let Some((l, r)) = self.nodes[i].children {
                stack.push(r);
                stack.push(l);
            }
        }
        order
    }

    /// Leaf indices in preorder.
    pub fn leaves(&self) -> Vec<usize> {
        self.preorder()
            .into_iter()
            .filter(|&i| self.nodes[i].is_leaf())
            .collect()
    }
}
