//! Brute-force or textbook implementations written without reference to the
//! library code they check.

/// Gauss–Hermite nodes and weights for `∫ e^{−x²} f(x) dx`, by Newton
/// iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j as f64 - 1.0) / j as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn log_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

/// `−2 log L` of a random-intercept logistic model with one grouping
/// factor, each group's integral done by adaptive Gauss–Hermite quadrature
/// with `points` nodes centred at the mode of the integrand.
pub fn agq_deviance(eta_fixed: &[f64], y: &[u8], group: &[usize], sigma2: f64, points: usize) -> f64 {
    let n_groups = group.iter().max().map_or(0, |g| g + 1);
    let (nodes, weights) = gauss_hermite(points);
    let mut total = 0.0;
    for g in 0..n_groups {
        let members: Vec<usize> = (0..y.len()).filter(|&i| group[i] == g).collect();
        // log integrand in b: Σ log p(y|η+b) − b²/(2σ²) − ½ log(2πσ²)
        let logf = |b: f64| {
            let ll: f64 = members
                .iter()
                .map(|&i| {
                    let e = eta_fixed[i] + b;
                    if y[i] == 1 {
                        log_sigmoid(e)
                    } else {
                        log_sigmoid(-e)
                    }
                })
                .sum();
            ll - b * b / (2.0 * sigma2) - 0.5 * (2.0 * std::f64::consts::PI * sigma2).ln()
        };
        // Newton for the mode
        let mut b = 0.0f64;
        let mut curv = 1.0 / sigma2;
        for _ in 0..200 {
            let mut d1 = -b / sigma2;
            let mut d2 = -1.0 / sigma2;
            for &i in &members {
                let p = 1.0 / (1.0 + (-(eta_fixed[i] + b)).exp());
                d1 += f64::from(y[i]) - p;
                d2 -= p * (1.0 - p);
            }
            curv = -d2;
            let step = d1 / curv;
            b += step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        let s = (1.0 / curv).sqrt();
        let lmax = logf(b);
        let sum: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&z, &w)| {
                let t = b + std::f64::consts::SQRT_2 * s * z;
                w * (z * z).exp() * (logf(t) - lmax).exp()
            })
            .sum();
        total += lmax + (std::f64::consts::SQRT_2 * s * sum).ln();
    }
    -2.0 * total
}

/// Logistic regression by plain damped Newton on the log-likelihood, with
/// its own Gaussian elimination. Returns the coefficients.
pub fn newton_logistic(x: &[Vec<f64>], y: &[u8]) -> Vec<f64> {
    let p = x[0].len();
    let mut beta = vec![0.0; p];
    let loglik = |b: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .map(|(row, &yi)| {
                let e: f64 = row.iter().zip(b).map(|(a, c)| a * c).sum();
                if yi == 1 {
                    log_sigmoid(e)
                } else {
                    log_sigmoid(-e)
                }
            })
            .sum()
    };
    for _ in 0..200 {
        let mut g = vec![0.0; p];
        let mut h = vec![vec![0.0; p]; p];
        for (row, &yi) in x.iter().zip(y) {
            let e: f64 = row.iter().zip(&beta).map(|(a, c)| a * c).sum();
            let mu = 1.0 / (1.0 + (-e).exp());
            for j in 0..p {
                g[j] += (f64::from(yi) - mu) * row[j];
                for k in 0..p {
                    h[j][k] += mu * (1.0 - mu) * row[j] * row[k];
                }
            }
        }
        if g.iter().all(|v| v.abs() < 1e-12) {
            break;
        }
        let step = gauss_solve(h, g);
        let base = loglik(&beta);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            // rounding noise in the log-likelihood must not stall the last steps
            if loglik(&cand) >= base - 1e-9 * base.abs() || t < 1e-10 {
                beta = cand;
                break;
            }
            t *= 0.5;
        }
    }
    beta
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// `n·I` Gini risk of a (n0, n1) node.
fn gini_risk(n0: f64, n1: f64) -> f64 {
    let n = n0 + n1;
    if n == 0.0 {
        0.0
    } else {
        2.0 * n0 * n1 / n
    }
}

/// Best Gini decrease over all thresholds between distinct observed values,
/// with both children holding at least `min_bucket` observed rows. Returns
/// (gain / n_total, left membership of observed rows) for every optimal
/// partition.
pub fn brute_force_ordered(values: &[f64], y: &[u8], min_bucket: usize) -> Option<(f64, Vec<Vec<bool>>)> {
    let obs: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
    let mut distinct: Vec<f64> = obs.iter().map(|&i| values[i]).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let mut cands = Vec::new();
    for w in distinct.windows(2) {
        let t = 0.5 * (w[0] + w[1]);
        let left: Vec<bool> = obs.iter().map(|&i| values[i] < t).collect();
        cands.push(left);
    }
    best_of(&obs, y, cands, min_bucket, values.len())
}

/// Same for a nominal column: every split of the observed levels into two
/// non-empty groups.
pub fn brute_force_nominal(values: &[f64], y: &[u8], min_bucket: usize) -> Option<(f64, Vec<Vec<bool>>)> {
    let obs: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
    let mut levels: Vec<u32> = obs.iter().map(|&i| values[i] as u32).collect();
    levels.sort();
    levels.dedup();
    let k = levels.len();
    let mut cands = Vec::new();
    if k >= 2 {
        for mask in 1u32..(1 << k) - 1 {
            let left: Vec<bool> = obs
                .iter()
                .map(|&i| {
                    let pos = levels.iter().position(|&l| l == values[i] as u32).unwrap();
                    mask & (1 << pos) != 0
                })
                .collect();
            cands.push(left);
        }
    }
    best_of(&obs, y, cands, min_bucket, values.len())
}

fn best_of(
    obs: &[usize],
    y: &[u8],
    cands: Vec<Vec<bool>>,
    min_bucket: usize,
    n_total: usize,
) -> Option<(f64, Vec<Vec<bool>>)> {
    let mut tot = [0.0f64; 2];
    for &i in obs {
        tot[y[i] as usize] += 1.0;
    }
    let parent = gini_risk(tot[0], tot[1]);
    let mut best: Option<(f64, Vec<Vec<bool>>)> = None;
    for left in cands {
        let mut l = [0.0f64; 2];
        let mut nl = 0;
        for (k, &i) in obs.iter().enumerate() {
            if left[k] {
                l[y[i] as usize] += 1.0;
                nl += 1;
            }
        }
        if nl < min_bucket || obs.len() - nl < min_bucket {
            continue;
        }
        let gain = parent - gini_risk(l[0], l[1]) - gini_risk(tot[0] - l[0], tot[1] - l[1]);
        if gain <= 1e-9 {
            continue;
        }
        let g = gain / n_total as f64;
        match &mut best {
            None => best = Some((g, vec![left])),
            Some((bg, parts)) => {
                if g > *bg + 1e-12 {
                    *bg = g;
                    *parts = vec![left];
                } else if (g - *bg).abs() <= 1e-12 {
                    parts.push(left);
                }
            }
        }
    }
    best
}

/// P(score₁ > score₀) + ½·P(tie) over all positive/negative pairs.
pub fn mann_whitney(scores: &[f64], y: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        if y[i] != 1 {
            continue;
        }
        for j in 0..scores.len() {
            if y[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / pairs
}
