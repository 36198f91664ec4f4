use log::debug;

use super::predict::route;
use super::prune::{collapse_at, cp_table_for};
use super::split::search;
use super::surrogate::find_surrogates;
use super::{gini_risk, Direction, GrowControls, Split, Tree, TrainingData, TreeNode};
use crate::dataset::Dataset;
use crate::error::Result;

/// Grow a tree on `predictors` of `ds`, whose response column must be
/// binary without missing values.
pub fn grow_tree(ds: &Dataset, predictors: &[String], controls: &GrowControls) -> Result<Tree> {
    let data = TrainingData::from_dataset(ds, predictors)?;
    grow_tree_on(&data, None, controls)
}

/// Grow on a subset of rows (all rows when `rows` is `None`).
pub fn grow_tree_on(
    data: &TrainingData,
    rows: Option<&[usize]>,
    controls: &GrowControls,
) -> Result<Tree> {
    controls.validate()?;
    let rows: Vec<usize> = match rows {
        Some(r) => r.to_vec(),
        None => (0..data.n()).collect(),
    };
    if rows.is_empty() {
        return Err(crate::Error::invalid("cannot grow a tree on zero rows"));
    }
    let mut counts = [0usize; 2];
    for &r in &rows {
        counts[data.response[r] as usize] += 1;
    }
    let n_root = rows.len() as f64;
    let bar = controls.cp * gini_risk(counts[0], counts[1]) / n_root;
    let mut grower = Grower {
        data,
        controls,
        n_root,
        bar,
        nodes: Vec::new(),
        scratch: Vec::new(),
    };
    grower.grow(rows, 0);
    let mut tree = Tree {
        variables: data.features.variables.clone(),
        response: data.response_name.clone(),
        nodes: grower.nodes,
        controls: controls.clone(),
        cp_table: Vec::new(),
    };
    tree = collapse_at(&tree, controls.cp);
    tree.cp_table = cp_table_for(&tree);
    debug!(
        "grew tree: {} splits, {} leaves on {} rows",
        tree.n_splits(),
        tree.n_leaves(),
        n_root
    );
    Ok(tree)
}

struct Grower<'a> {
    data: &'a TrainingData,
    controls: &'a GrowControls,
    n_root: f64,
    bar: f64,
    nodes: Vec<TreeNode>,
    scratch: Vec<(f64, u8)>,
}

impl Grower<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let mut counts = [0usize; 2];
        for &r in &rows {
            counts[self.data.response[r] as usize] += 1;
        }
        let idx = self.nodes.len();
        self.nodes.push(TreeNode {
            counts,
            depth,
            split: None,
            surrogates: Vec::new(),
            children: None,
            complexity: 0.0,
        });
        if rows.len() < self.controls.min_split
            || depth >= self.controls.max_depth
            || counts[0] == 0
            || counts[1] == 0
        {
            return idx;
        }
        let Some(split) = self.best_split(&rows) else {
            return idx;
        };
        let features = &self.data.features;
        let surrogates = find_surrogates(features, &rows, &split, self.controls.max_surrogate);
        let node = TreeNode {
            counts,
            depth,
            split: Some(split),
            surrogates,
            children: None,
            complexity: 0.0,
        };
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &r in &rows {
            match route(&node, |v| features.columns[v][r]) {
                Direction::Left => left.push(r),
                Direction::Right => right.push(r),
            }
        }
        drop(rows);
        self.nodes[idx] = node;
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[idx].children = Some((l, r));
        idx
    }

    /// Best primary split over all predictors; ties keep the earliest
    /// predictor.
    fn best_split(&mut self, rows: &[usize]) -> Option<Split> {
        let mut best: Option<Split> = None;
        for (v, var) in self.data.features.variables.iter().enumerate() {
            let Some(cand) = search(
                &self.data.features.columns[v],
                &self.data.response,
                rows,
                var.kind(),
                self.controls.min_bucket,
                self.n_root,
                &mut self.scratch,
            ) else {
                continue;
            };
            if cand.improvement <= self.bar {
                continue;
            }
            if best.as_ref().is_none_or(|b| cand.improvement > b.improvement) {
                best = Some(Split {
                    variable: v,
                    majority: cand.majority(),
                    rule: cand.rule,
                    improvement: cand.improvement,
                });
            }
        }
        best
    }
}
