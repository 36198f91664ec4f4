use std::cmp::Ordering;

use super::{gini_risk, Direction, SplitRule, VarKind};
use crate::error::{Error, Result};

/// Gini decreases at or below this many observation units count as zero.
pub(crate) const MIN_GAIN: f64 = 1e-9;

/// Nominal predictors with at most this many observed levels at a node get
/// an exhaustive subset search.
const EXHAUSTIVE_LEVELS: usize = 12;

/// Best partition of one predictor at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub rule: SplitRule,
    /// Gini decrease divided by the root size.
    pub improvement: f64,
    /// Non-missing observations sent left / right.
    pub n_left: usize,
    pub n_right: usize,
}

impl SplitCandidate {
    pub fn majority(&self) -> Direction {
        if self.n_left >= self.n_right {
            Direction::Left
        } else {
            Direction::Right
        }
    }
}

/// Best Gini split of `values` (NaN = missing) against a binary response,
/// treating the slice as the root. Observations with a missing value are
/// left out of the goodness computation, which is then scaled by the
/// observed fraction. `Ok(None)` when no partition with positive
/// improvement respects `min_bucket` (e.g. a constant column).
pub fn best_split(
    values: &[f64],
    response: &[u8],
    kind: VarKind,
    min_bucket: usize,
) -> Result<Option<SplitCandidate>> {
    if values.len() != response.len() {
        return Err(Error::invalid("values and response differ in length"));
    }
    if values.iter().all(|v| v.is_nan()) {
        return Err(Error::invalid("all values are missing"));
    }
    let rows: Vec<usize> = (0..values.len()).collect();
    let mut scratch = Vec::new();
    Ok(search(
        values,
        response,
        &rows,
        kind,
        min_bucket.max(1),
        values.len() as f64,
        &mut scratch,
    ))
}

/// Split search restricted to `rows`; improvements are divided by `n_root`.
pub(crate) fn search(
    values: &[f64],
    response: &[u8],
    rows: &[usize],
    kind: VarKind,
    min_bucket: usize,
    n_root: f64,
    scratch: &mut Vec<(f64, u8)>,
) -> Option<SplitCandidate> {
    match kind {
        VarKind::Ordered => search_ordered(values, response, rows, min_bucket, n_root, scratch),
        VarKind::Categorical { n_levels } => {
            search_levels(values, response, rows, n_levels, min_bucket, n_root)
        }
    }
}

fn search_ordered(
    values: &[f64],
    response: &[u8],
    rows: &[usize],
    min_bucket: usize,
    n_root: f64,
    pairs: &mut Vec<(f64, u8)>,
) -> Option<SplitCandidate> {
    pairs.clear();
    pairs.extend(
        rows.iter()
            .map(|&r| (values[r], response[r]))
            .filter(|(x, _)| !x.is_nan()),
    );
    let m = pairs.len();
    if m < 2 * min_bucket {
        return None;
    }
    pairs.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    let mut total = [0usize; 2];
    for &(_, y) in pairs.iter() {
        total[y as usize] += 1;
    }
    let parent = gini_risk(total[0], total[1]);
    let mut left = [0usize; 2];
    let mut best: Option<(f64, usize, f64)> = None; // (gain, n_left, threshold)
    for k in 0..m - 1 {
        left[pairs[k].1 as usize] += 1;
        if pairs[k].0 == pairs[k + 1].0 {
            continue;
        }
        let nl = k + 1;
        if nl < min_bucket {
            continue;
        }
        if m - nl < min_bucket {
            break;
        }
        let gain = parent
            - gini_risk(left[0], left[1])
            - gini_risk(total[0] - left[0], total[1] - left[1]);
        if gain > MIN_GAIN && best.is_none_or(|(g, _, _)| gain > g) {
            best = Some((gain, nl, 0.5 * (pairs[k].0 + pairs[k + 1].0)));
        }
    }
    best.map(|(gain, nl, threshold)| SplitCandidate {
        rule: SplitRule::Threshold {
            threshold,
            less_goes_left: true,
        },
        improvement: gain / n_root,
        n_left: nl,
        n_right: m - nl,
    })
}

fn search_levels(
    values: &[f64],
    response: &[u8],
    rows: &[usize],
    n_levels: u32,
    min_bucket: usize,
    n_root: f64,
) -> Option<SplitCandidate> {
    let mut counts = vec![[0usize; 2]; n_levels as usize];
    for &r in rows {
        let x = values[r];
        if x.is_nan() {
            continue;
        }
        counts[x as usize][response[r] as usize] += 1;
    }
    let mut present: Vec<u32> = (0..n_levels)
        .filter(|&l| counts[l as usize][0] + counts[l as usize][1] > 0)
        .collect();
    if present.len() < 2 {
        return None;
    }
    // ascending class-1 proportion; exact comparison n1_a·n_b vs n1_b·n_a
    present.sort_by(|&a, &b| {
        let (ca, cb) = (counts[a as usize], counts[b as usize]);
        let lhs = ca[1] as u128 * (cb[0] + cb[1]) as u128;
        let rhs = cb[1] as u128 * (ca[0] + ca[1]) as u128;
        lhs.cmp(&rhs).then(a.cmp(&b))
    });
    let mut total = [0usize; 2];
    for &l in &present {
        total[0] += counts[l as usize][0];
        total[1] += counts[l as usize][1];
    }
    let m = total[0] + total[1];
    let parent = gini_risk(total[0], total[1]);
    let mut left = [0usize; 2];
    let mut best: Option<(f64, usize)> = None; // (gain, prefix length)
    for k in 0..present.len() - 1 {
        let c = counts[present[k] as usize];
        left[0] += c[0];
        left[1] += c[1];
        let nl = left[0] + left[1];
        if nl < min_bucket || m - nl < min_bucket {
            continue;
        }
        let gain = parent
            - gini_risk(left[0], left[1])
            - gini_risk(total[0] - left[0], total[1] - left[1]);
        if gain > MIN_GAIN && best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, k + 1));
        }
    }
    let mut l: Vec<u32>;
    let mut r: Vec<u32>;
    let mut gain;
    match best {
        Some((g, k)) => {
            gain = g;
            l = present[..k].to_vec();
            r = present[k..].to_vec();
        }
        None => {
            gain = 0.0;
            l = Vec::new();
            r = Vec::new();
        }
    }
    // The ordering shortcut is only guaranteed optimal without the bucket
    // constraint, so small level sets are searched exhaustively as well.
    if present.len() <= EXHAUSTIVE_LEVELS {
        let last = present.len() - 1;
        for mask in 1u32..(1 << last) {
            let mut left = [0usize; 2];
            for (i, &lv) in present[..last].iter().enumerate() {
                if mask & (1 << i) != 0 {
                    left[0] += counts[lv as usize][0];
                    left[1] += counts[lv as usize][1];
                }
            }
            let nl = left[0] + left[1];
            if nl < min_bucket || m - nl < min_bucket {
                continue;
            }
            let g = parent - gini_risk(left[0], left[1]) - gini_risk(total[0] - left[0], total[1] - left[1]);
            if g > MIN_GAIN && g > gain + 1e-12 * parent.max(1.0) {
                gain = g;
                l.clear();
                r.clear();
                for (i, &lv) in present.iter().enumerate() {
                    if i < last && mask & (1 << i) != 0 {
                        l.push(lv);
                    } else {
                        r.push(lv);
                    }
                }
            }
        }
    }
    if l.is_empty() {
        return None;
    }
    l.sort_unstable();
    r.sort_unstable();
    let n_left: usize = l.iter().map(|&c| counts[c as usize][0] + counts[c as usize][1]).sum();
    Some(SplitCandidate {
        rule: SplitRule::Levels { left: l, right: r },
        improvement: gain / n_root,
        n_left,
        n_right: m - n_left,
    })
}
