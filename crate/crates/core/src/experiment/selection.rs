use std::collections::BTreeMap;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cart::{split_variable_profile, Tree};
use crate::dataset::{DataLevel, Dataset};
use crate::error::{Error, Result};
use crate::preprocess::AggregateTarget;
use crate::regression::{GroupLevel, MixedSpec};

/// Row indices of a train/test split, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Uniform sample of `train_size` rows without replacement; the rest form
/// the test set.
pub fn random_partition(n: usize, train_size: usize, seed: u64) -> Result<Partition> {
    if train_size == 0 || train_size >= n {
        return Err(Error::invalid(format!(
            "training size {train_size} must lie strictly between 0 and {n}"
        )));
    }
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = rows[..train_size].to_vec();
    let mut test = rows[train_size..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Partition { train, test })
}

/// Like [`random_partition`], but every school contributes to the training
/// set in proportion to its size (largest remainders settle the rounding).
pub fn group_stratified_partition(ds: &Dataset, train_size: usize, seed: u64) -> Result<Partition> {
    let n = ds.n_rows();
    if train_size == 0 || train_size >= n {
        return Err(Error::invalid(format!(
            "training size {train_size} must lie strictly between 0 and {n}"
        )));
    }
    let schools = ds
        .id_column(DataLevel::School)
        .ok_or_else(|| Error::invalid("stratified partition needs a school id column"))?;
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (r, id) in schools.iter().enumerate() {
        groups.entry(id.as_deref().unwrap_or("")).or_default().push(r);
    }
    let share = train_size as f64 / n as f64;
    let mut quota: Vec<(usize, f64)> = groups
        .values()
        .map(|rows| {
            let exact = share * rows.len() as f64;
            (exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let mut left = train_size - quota.iter().map(|q| q.0).sum::<usize>();
    let mut order: Vec<usize> = (0..quota.len()).collect();
    order.sort_by(|&a, &b| quota[b].1.total_cmp(&quota[a].1).then(a.cmp(&b)));
    for k in order {
        if left == 0 {
            break;
        }
        quota[k].0 += 1;
        left -= 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (rows, (q, _)) in groups.into_values().zip(quota) {
        let mut rows = rows;
        rows.shuffle(&mut rng);
        train.extend_from_slice(&rows[..q]);
        test.extend_from_slice(&rows[q..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Partition { train, test })
}

/// Regression specification read off a tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSelection {
    pub spec: MixedSpec,
    /// The tree had no splits; callers fit an intercept-only model.
    pub fallback: bool,
}

/// Source column of an aggregated column name, if it carries one of the
/// aggregation suffixes.
pub fn aggregate_source(name: &str) -> Option<&str> {
    [AggregateTarget::Class, AggregateTarget::School]
        .into_iter()
        .find_map(|t| name.strip_suffix(t.suffix()))
}

/// Fixed predictors are the distinct primary-split variables; for an
/// aggregated split variable its source variable is added as well and
/// becomes a random-slope candidate. Random intercepts go on class and
/// school. Variables keep the tree's column order.
pub fn tree_select_predictors(tree: &Tree) -> TreeSelection {
    let profile = split_variable_profile(tree);
    let used: Vec<&str> = profile.variables.iter().map(|v| v.variable.as_str()).collect();
    let sources: Vec<&str> = used.iter().filter_map(|v| aggregate_source(v)).collect();
    let mut fixed: Vec<String> = Vec::new();
    let mut push = |name: &str| {
        if !fixed.iter().any(|f| f == name) {
            fixed.push(name.to_string());
        }
    };
    for var in &tree.variables {
        let name = var.name.as_str();
        if used.contains(&name) || sources.contains(&name) {
            push(name);
        }
    }
    // sources that were not candidate variables of the tree
    for s in &sources {
        push(s);
    }
    let mut slopes: Vec<String> = Vec::new();
    for s in sources {
        if !slopes.iter().any(|x| x == s) {
            slopes.push(s.to_string());
        }
    }
    let fallback = fixed.is_empty();
    if fallback {
        info!("tree has no splits; regression falls back to an intercept-only model");
    }
    TreeSelection {
        spec: MixedSpec {
            fixed_predictors: fixed,
            intercept_groups: vec![GroupLevel::Class, GroupLevel::School],
            slope_candidates: slopes,
        },
        fallback,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub variable: String,
    /// Primary splits on the variable summed over all trees.
    pub split_count: usize,
    /// Number of trees whose first, second and third split use it.
    pub first: usize,
    pub second: usize,
    pub third: usize,
}

/// Split-variable frequencies over a set of trees, most used first (ties
/// by name).
pub fn count_split_variables<'a>(trees: impl IntoIterator<Item = &'a Tree>) -> Vec<ImportanceRow> {
    let mut table: BTreeMap<String, ImportanceRow> = BTreeMap::new();
    for tree in trees {
        let profile = split_variable_profile(tree);
        for v in &profile.variables {
            let row = table.entry(v.variable.clone()).or_insert_with(|| ImportanceRow {
                variable: v.variable.clone(),
                split_count: 0,
                first: 0,
                second: 0,
                third: 0,
            });
            row.split_count += v.split_count;
            row.first += usize::from(v.positions[0]);
            row.second += usize::from(v.positions[1]);
            row.third += usize::from(v.positions[2]);
        }
    }
    let mut rows: Vec<ImportanceRow> = table.into_values().collect();
    rows.sort_by(|a, b| b.split_count.cmp(&a.split_count).then_with(|| a.variable.cmp(&b.variable)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_sized_split() {
        let p = random_partition(8520, 5000, 3).unwrap();
        assert_eq!(p.test.len(), 3520);
        assert_eq!(p, random_partition(8520, 5000, 3).unwrap());
        let q = random_partition(10, 9, 0).unwrap();
        assert_eq!(q.test.len(), 1);
        assert!(random_partition(10, 10, 0).is_err());
        assert!(random_partition(10, 0, 0).is_err());
    }

    #[test]
    fn suffix_mapping() {
        assert_eq!(aggregate_source("books-aggCL"), Some("books"));
        assert_eq!(aggregate_source("social-status-aggSL"), Some("social-status"));
        assert_eq!(aggregate_source("books"), None);
    }
}
