use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{grow_tree_on, GrowControls, Tree, TrainingData, CP_CAP};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par;

const MAX_REDRAWS: u64 = 100;

/// Seeded assignment of observations to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold of each observation (position in the row list used to build it).
    pub fold: Vec<usize>,
    /// Seed that produced the plan (differs from the requested one after a
    /// redraw).
    pub seed: u64,
}

impl FoldPlan {
    /// Shuffle `0..n` with `seed` and deal the observations round-robin into
    /// `k` folds. A plan where some fold's training part has a constant
    /// response is redrawn with the next seed.
    pub fn new(response: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
        let n = response.len();
        if k < 2 || k > n {
            return Err(Error::invalid(format!(
                "need 2 <= folds <= observations, got {k} folds for {n} observations"
            )));
        }
        let total1: usize = response.iter().map(|&y| y as usize).sum();
        for attempt in 0..MAX_REDRAWS {
            let s = seed.wrapping_add(attempt);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(s));
            let mut fold = vec![0; n];
            for (pos, &i) in perm.iter().enumerate() {
                fold[i] = pos % k;
            }
            let mut held = vec![[0usize; 2]; k];
            for (i, &f) in fold.iter().enumerate() {
                held[f][response[i] as usize] += 1;
            }
            let degenerate = held.iter().any(|h| {
                let n_train = n - h[0] - h[1];
                let ones = total1 - h[1];
                ones == 0 || ones == n_train
            });
            if !degenerate || total1 == 0 || total1 == n {
                return Ok(FoldPlan { k, fold, seed: s });
            }
            warn!("fold plan with seed {s} leaves a constant training response; redrawing");
        }
        Err(Error::invalid("could not draw folds with a non-constant training response"))
    }

    pub fn held_out(&self, f: usize) -> Vec<usize> {
        (0..self.fold.len()).filter(|&i| self.fold[i] == f).collect()
    }

    pub fn training(&self, f: usize) -> Vec<usize> {
        (0..self.fold.len()).filter(|&i| self.fold[i] != f).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// Tree grown on all rows, its cp table filled with `x_error`/`x_std`.
    pub tree: Tree,
    /// Index into `tree.cp_table` of the chosen row.
    pub selected_row: usize,
    /// Geometric midpoint of the chosen row's complexity interval.
    pub selected_cp: f64,
    pub one_se: bool,
    pub folds: FoldPlan,
}

impl CvResult {
    pub fn selected_tree(&self) -> Tree {
        super::prune(&self.tree, self.selected_cp)
    }
}

pub fn cross_validate_cp(
    ds: &Dataset,
    predictors: &[String],
    controls: &GrowControls,
    one_se: bool,
) -> Result<CvResult> {
    let data = TrainingData::from_dataset(ds, predictors)?;
    cross_validate_on(&data, controls, one_se)
}

/// Representative cp of each table row: the geometric midpoint of the
/// interval over which the row's subtree is optimal. The root row's open
/// upper end is capped at 1 and the full tree's lower end is the growing cp.
fn representative_cps(tree: &Tree) -> Vec<f64> {
    let t = &tree.cp_table;
    (0..t.len())
        .map(|j| {
            let hi = if t[j].cp >= CP_CAP { 1.0 } else { t[j].cp };
            let lo = if j + 1 < t.len() { t[j + 1].cp } else { tree.controls.cp };
            (lo * hi).sqrt()
        })
        .collect()
}

/// K-fold cross-validation of the cp table of a tree grown on `data`.
pub fn cross_validate_on(data: &TrainingData, controls: &GrowControls, one_se: bool) -> Result<CvResult> {
    let mut tree = grow_tree_on(data, None, controls)?;
    let folds = FoldPlan::new(&data.response, controls.cv_folds, controls.rng_seed)?;
    let betas = representative_cps(&tree);
    let root_risk = tree.root().risk() as f64;

    // per fold: (held-out row, misclassified at each beta)
    let per_fold: Vec<Result<Vec<(usize, Vec<u8>)>>> = par::map_indexed(folds.k, |f| {
        let train = folds.training(f);
        let fold_tree = grow_tree_on(data, Some(&train), controls)?;
        let mut row = vec![0.0; data.features.n_vars()];
        Ok(folds
            .held_out(f)
            .into_iter()
            .map(|i| {
                for (v, col) in data.features.columns.iter().enumerate() {
                    row[v] = col[i];
                }
                let path = fold_tree.path_for(&row);
                let errs = betas
                    .iter()
                    .map(|&b| {
                        let stop = path
                            .iter()
                            .copied()
                            .find(|&n| fold_tree.nodes[n].complexity <= b)
                            .expect("leaf complexity is 0");
                        u8::from(fold_tree.nodes[stop].predicted_class() != data.response[i])
                    })
                    .collect();
                (i, errs)
            })
            .collect())
    });
    let mut errors: Vec<Vec<u8>> = vec![Vec::new(); data.n()];
    for fold in per_fold {
        for (i, e) in fold? {
            errors[i] = e;
        }
    }

    let n = data.n() as f64;
    let scale = if root_risk > 0.0 { root_risk } else { 1.0 };
    for (j, row) in tree.cp_table.iter_mut().enumerate() {
        let sum: f64 = errors.iter().map(|e| f64::from(e[j])).sum();
        let mean = sum / n;
        let ss: f64 = errors.iter().map(|e| (f64::from(e[j]) - mean).powi(2)).sum();
        row.x_error = Some(sum / scale);
        row.x_std = Some(ss.sqrt() / scale);
    }

    let table = &tree.cp_table;
    let mut best = 0;
    for j in 1..table.len() {
        if table[j].x_error.unwrap() < table[best].x_error.unwrap() {
            best = j;
        }
    }
    let mut selected = best;
    if one_se {
        let bound = table[best].x_error.unwrap() + table[best].x_std.unwrap();
        selected = (0..table.len())
            .find(|&j| table[j].x_error.unwrap() <= bound)
            .unwrap_or(best);
    }
    let selected_cp = betas[selected];
    info!(
        "cv selected {} splits (cp {:.6}, xerror {:.4})",
        table[selected].n_splits,
        selected_cp,
        table[selected].x_error.unwrap()
    );
    Ok(CvResult {
        tree,
        selected_row: selected,
        selected_cp,
        one_se,
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpSweepPoint {
    pub cp: f64,
    /// Mean held-out misclassification rate.
    pub cv_error: f64,
    /// Standard error of that mean.
    pub cv_se: f64,
    /// Mean number of splits of the fold trees.
    pub mean_splits: f64,
}

/// Cross-validated error over a cp grid: every fold tree is grown afresh
/// with each cp, so pre-pruning takes part as it would in a real fit.
pub fn cp_sweep(data: &TrainingData, grid: &[f64], controls: &GrowControls) -> Result<Vec<CpSweepPoint>> {
    let folds = FoldPlan::new(&data.response, controls.cv_folds, controls.rng_seed)?;
    let k = folds.k;
    let jobs = grid.len() * k;
    let cells: Vec<Result<(usize, Vec<u8>)>> = par::map_indexed(jobs, |job| {
        let (g, f) = (job / k, job % k);
        let c = controls.clone().with_cp(grid[g]);
        let t = grow_tree_on(data, Some(&folds.training(f)), &c)?;
        let mut row = vec![0.0; data.features.n_vars()];
        let errs = folds
            .held_out(f)
            .into_iter()
            .map(|i| {
                for (v, col) in data.features.columns.iter().enumerate() {
                    row[v] = col[i];
                }
                u8::from(t.predict_values(&row).class != data.response[i])
            })
            .collect();
        Ok((t.n_splits(), errs))
    });
    let n = data.n() as f64;
    let mut out = Vec::with_capacity(grid.len());
    let mut cells = cells.into_iter();
    for &cp in grid {
        let mut errs: Vec<u8> = Vec::with_capacity(data.n());
        let mut splits = 0usize;
        for _ in 0..k {
            let (s, e) = cells.next().expect("one cell per fold")?;
            splits += s;
            errs.extend(e);
        }
        let mean = errs.iter().map(|&e| f64::from(e)).sum::<f64>() / n;
        let var = errs.iter().map(|&e| (f64::from(e) - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        out.push(CpSweepPoint {
            cp,
            cv_error: mean,
            cv_se: (var / n).sqrt(),
            mean_splits: splits as f64 / k as f64,
        });
    }
    Ok(out)
}

/// `0, step, 2·step, …, max` without accumulating rounding error.
pub fn cp_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step).round() as usize;
    (0..=n).map(|i| (i as f64 * step * 1e9).round() / 1e9).collect()
}
