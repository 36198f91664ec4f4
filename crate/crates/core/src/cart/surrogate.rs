use std::cmp::Ordering;

use super::{Direction, FeatureMatrix, Split, SplitRule, Surrogate, VarKind};

/// Ranked surrogates for `primary` among the node's `rows`.
///
/// For every other predictor the split that best reproduces the primary
/// routing is found, measured on observations that are non-missing for both
/// variables. Only surrogates that beat the primary's majority direction on
/// those same observations are kept, sorted by agreement (ties by predictor
/// order) and truncated to `max_surrogate`.
pub fn find_surrogates(
    features: &FeatureMatrix,
    rows: &[usize],
    primary: &Split,
    max_surrogate: usize,
) -> Vec<Surrogate> {
    if max_surrogate == 0 {
        return Vec::new();
    }
    let pcol = &features.columns[primary.variable];
    let routed: Vec<(usize, Direction)> = rows
        .iter()
        .filter_map(|&r| primary.rule.direction(pcol[r]).map(|d| (r, d)))
        .collect();
    if routed.is_empty() {
        return Vec::new();
    }

    let mut out: Vec<Surrogate> = Vec::new();
    let mut pairs: Vec<(f64, Direction)> = Vec::with_capacity(routed.len());
    for (v, var) in features.variables.iter().enumerate() {
        if v == primary.variable {
            continue;
        }
        let col = &features.columns[v];
        pairs.clear();
        pairs.extend(
            routed
                .iter()
                .filter(|(r, _)| !col[*r].is_nan())
                .map(|&(r, d)| (col[r], d)),
        );
        if pairs.len() < 2 {
            continue;
        }
        let baseline = pairs.iter().filter(|(_, d)| *d == primary.majority).count();
        let found = match var.kind() {
            VarKind::Ordered => best_threshold(&mut pairs),
            VarKind::Categorical { n_levels } => best_levels(&pairs, n_levels, primary.majority),
        };
        let Some((rule, agree)) = found else { continue };
        if agree <= baseline {
            continue;
        }
        let n = pairs.len() as f64;
        let n_left = pairs
            .iter()
            .filter(|(x, _)| rule.direction(*x) == Some(Direction::Left))
            .count();
        let majority = if 2 * n_left >= pairs.len() {
            Direction::Left
        } else {
            Direction::Right
        };
        out.push(Surrogate {
            split: Split {
                variable: v,
                rule,
                improvement: 0.0,
                majority,
            },
            agreement: agree as f64 / n,
            baseline: baseline as f64 / n,
        });
    }
    out.sort_by(|a, b| {
        b.agreement
            .partial_cmp(&a.agreement)
            .unwrap_or(Ordering::Equal)
            .then(a.split.variable.cmp(&b.split.variable))
    });
    out.truncate(max_surrogate);
    out
}

/// Threshold (either orientation) maximizing agreement with the directions.
fn best_threshold(pairs: &mut [(f64, Direction)]) -> Option<(SplitRule, usize)> {
    pairs.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let n = pairs.len();
    let total_right = pairs.iter().filter(|(_, d)| *d == Direction::Right).count();
    let mut left_below = 0usize;
    let mut right_below = 0usize;
    let mut best: Option<(usize, f64, bool)> = None;
    for k in 0..n - 1 {
        match pairs[k].1 {
            Direction::Left => left_below += 1,
            Direction::Right => right_below += 1,
        }
        if pairs[k].0 == pairs[k + 1].0 {
            continue;
        }
        // "below goes left" agrees on left-below and right-above
        let agree = left_below + (total_right - right_below);
        let (agree, less_left) = if n - agree > agree {
            (n - agree, false)
        } else {
            (agree, true)
        };
        if best.is_none_or(|(a, _, _)| agree > a) {
            best = Some((agree, 0.5 * (pairs[k].0 + pairs[k + 1].0), less_left));
        }
    }
    best.map(|(agree, threshold, less_goes_left)| {
        (
            SplitRule::Threshold {
                threshold,
                less_goes_left,
            },
            agree,
        )
    })
}

/// Each level goes where most of its observations went.
fn best_levels(
    pairs: &[(f64, Direction)],
    n_levels: u32,
    tie: Direction,
) -> Option<(SplitRule, usize)> {
    let mut counts = vec![[0usize; 2]; n_levels as usize];
    for &(x, d) in pairs {
        counts[x as usize][usize::from(d == Direction::Right)] += 1;
    }
    let (mut left, mut right) = (Vec::new(), Vec::new());
    let mut agree = 0;
    for (code, c) in counts.iter().enumerate() {
        if c[0] + c[1] == 0 {
            continue;
        }
        let dir = match c[0].cmp(&c[1]) {
            Ordering::Greater => Direction::Left,
            Ordering::Less => Direction::Right,
            Ordering::Equal => tie,
        };
        agree += c[0].max(c[1]);
        match dir {
            Direction::Left => left.push(code as u32),
            Direction::Right => right.push(code as u32),
        }
    }
    if left.is_empty() || right.is_empty() {
        return None;
    }
    Some((SplitRule::Levels { left, right }, agree))
}
