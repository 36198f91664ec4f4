use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::{ColumnMap, DesignMatrix};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Coefficient magnitude (on the standard-deviation scale of its column)
/// taken as a sign of quasi-separation.
pub const SEPARATION_LIMIT: f64 = 15.0;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IrlsOptions {
    /// Convergence: largest score component below `tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        IrlsOptions {
            tol: 1e-8,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    pub coefficients: Vec<f64>,
    pub map: ColumnMap,
    pub deviance: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Deviance after each accepted iteration, starting with the initial
    /// value. Built from the per-iteration changes, which are computed term
    /// by term and are never positive.
    pub deviance_trace: Vec<f64>,
    /// Largest absolute score component at the returned coefficients.
    pub max_score: f64,
    pub separation: bool,
    pub n_obs: usize,
}

#[inline]
pub(crate) fn inv_logit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `−2·log p(y | η)` for one Bernoulli observation, stable for large |η|.
#[inline]
pub(crate) fn bernoulli_deviance(y: u8, eta: f64) -> f64 {
    // log(1 + e^η) − y·η
    let softplus = if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    };
    2.0 * (softplus - f64::from(y) * eta)
}

/// Change of the deviance between two linear predictors, summed term by
/// term so that the tiny decreases near the optimum are not lost to
/// rounding.
pub(crate) fn deviance_change(y: &[u8], eta0: &DVector<f64>, eta1: &DVector<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..y.len() {
        let (e0, e1) = (eta0[i], eta1[i]);
        let delta = e1 - e0;
        total += if delta.abs() <= 1.0 {
            // softplus(e1) − softplus(e0) = log1p(μ0·(e^δ − 1))
            2.0 * ((inv_logit(e0) * delta.exp_m1()).ln_1p() - f64::from(y[i]) * delta)
        } else {
            bernoulli_deviance(y[i], e1) - bernoulli_deviance(y[i], e0)
        };
    }
    total
}

pub(crate) fn deviance(x: &DMatrix<f64>, y: &[u8], beta: &DVector<f64>, offset: Option<&[f64]>) -> f64 {
    let eta = x * beta;
    eta.iter()
        .enumerate()
        .map(|(i, &e)| bernoulli_deviance(y[i], e + offset.map_or(0.0, |o| o[i])))
        .sum()
}

/// Fit a logistic regression by iteratively reweighted least squares.
///
/// Each step solves the weighted normal equations; a step that raises the
/// deviance is halved until it does not. Non-convergence and suspected
/// separation are flagged on the fit, not raised.
pub fn fit_logistic_irls(design: &DesignMatrix, y: &[u8], opts: &IrlsOptions) -> Result<GlmFit> {
    let x = &design.matrix;
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::invalid("response length differs from design rows"));
    }
    if n <= p {
        warn!("logistic fit with {n} observations and {p} coefficients");
    }
    let mut beta = DVector::zeros(p);
    let mut dev = deviance(x, y, &beta, None);
    let mut trace = vec![dev];
    let mut iterations = 0;
    let mut score_max = f64::INFINITY;
    let mut stalled = false;

    while iterations < opts.max_iter {
        let (score, info) = score_and_information(x, y, &beta);
        score_max = score.amax();
        if score_max < opts.tol {
            break;
        }
        iterations += 1;
        let Some(step) = info.clone().cholesky().map(|c| c.solve(&score)).or_else(|| info.lu().solve(&score)) else {
            warn!("singular information matrix after {iterations} iterations");
            stalled = true;
            break;
        };
        let eta = x * &beta;
        let mut t = 1.0;
        let mut candidate = &beta + &step;
        let mut change = deviance_change(y, &eta, &(x * &candidate));
        let mut halvings = 0;
        while !(change <= 0.0) && halvings < MAX_HALVINGS {
            t *= 0.5;
            candidate = &beta + &step * t;
            change = deviance_change(y, &eta, &(x * &candidate));
            halvings += 1;
        }
        if !(change <= 0.0) {
            debug!("no deviance decrease along the Newton direction; stopping");
            stalled = true;
            break;
        }
        beta = candidate;
        dev += change;
        trace.push(dev);
    }
    if iterations == opts.max_iter || stalled {
        let (score, _) = score_and_information(x, y, &beta);
        score_max = score.amax();
    }
    let converged = score_max < opts.tol;
    dev = deviance(x, y, &beta, None);
    if !converged {
        warn!("IRLS stopped after {iterations} iterations with max score {score_max:.3e}");
    }
    let separation = detect_separation(x, &beta);
    if separation {
        warn!("logistic fit shows signs of quasi-separation");
    }
    Ok(GlmFit {
        coefficients: beta.iter().copied().collect(),
        map: design.map.clone(),
        deviance: dev,
        converged,
        iterations,
        deviance_trace: trace,
        max_score: score_max,
        separation,
        n_obs: n,
    })
}

/// Score `Xᵀ(y − μ)` and Fisher information `XᵀWX`.
fn score_and_information(x: &DMatrix<f64>, y: &[u8], beta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eta = x * beta;
    let mut resid = DVector::zeros(x.nrows());
    let mut w = DVector::zeros(x.nrows());
    for i in 0..x.nrows() {
        let mu = inv_logit(eta[i]);
        resid[i] = f64::from(y[i]) - mu;
        w[i] = mu * (1.0 - mu);
    }
    let score = x.tr_mul(&resid);
    let mut xw = x.clone();
    for (mut col, _) in xw.column_iter_mut().zip(0..) {
        col.component_mul_assign(&w);
    }
    (score, x.tr_mul(&xw))
}

fn detect_separation(x: &DMatrix<f64>, beta: &DVector<f64>) -> bool {
    let n = x.nrows() as f64;
    (0..x.ncols()).any(|j| {
        let col = x.column(j);
        let mean = col.sum() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let scale = if sd > 0.0 { sd } else { 1.0 };
        (beta[j] * scale).abs() > SEPARATION_LIMIT
    })
}

/// Predicted probabilities; `None` for rows that cannot be encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedPredictions {
    pub probs: Vec<Option<f64>>,
    pub n_masked: usize,
}

pub fn predict_glm(fit: &GlmFit, ds: &Dataset) -> Result<MaskedPredictions> {
    let enc = fit.map.encode(ds)?;
    let probs = enc
        .rows
        .iter()
        .map(|r| {
            r.as_ref().map(|x| {
                inv_logit(x.iter().zip(&fit.coefficients).map(|(a, b)| a * b).sum())
            })
        })
        .collect();
    Ok(MaskedPredictions {
        probs,
        n_masked: enc.n_masked,
    })
}

/// Coefficient table rows: (name, estimate, encoding label).
pub fn coefficient_table(map: &ColumnMap, coefficients: &[f64]) -> Vec<(String, f64, String)> {
    map.columns
        .iter()
        .zip(coefficients)
        .map(|(c, &b)| {
            let enc = match &c.encoding {
                super::Encoding::Intercept => "intercept".to_string(),
                super::Encoding::Identity => "identity".to_string(),
                super::Encoding::OrdinalScore => "ordinal-score".to_string(),
                super::Encoding::Dummy { level, .. } => format!("dummy({level})"),
            };
            (c.name.clone(), b, enc)
        })
        .collect()
}
