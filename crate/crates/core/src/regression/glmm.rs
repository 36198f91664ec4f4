use std::collections::BTreeMap;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::{ColumnMap, DesignMatrix};
use super::glm::{bernoulli_deviance, fit_logistic_irls, inv_logit, IrlsOptions, MaskedPredictions};
use crate::dataset::{DataLevel, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupLevel {
    Class,
    School,
}

/// Regression specification derived from a tree (or supplied directly).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MixedSpec {
    pub fixed_predictors: Vec<String>,
    pub intercept_groups: Vec<GroupLevel>,
    /// Reported only; random slopes are not fitted.
    pub slope_candidates: Vec<String>,
}

/// Class and school identifier of every design row.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupIds {
    pub class: Vec<String>,
    pub school: Vec<String>,
}

impl GroupIds {
    /// Identifiers of `rows` of `ds`, taken from its class and school id
    /// columns.
    pub fn from_dataset(ds: &Dataset, rows: &[usize]) -> Result<GroupIds> {
        let get = |level: DataLevel, what: &str| -> Result<Vec<String>> {
            let col = ds
                .id_column(level)
                .ok_or_else(|| Error::invalid(format!("dataset has no {what} id column")))?;
            rows.iter()
                .map(|&r| {
                    col[r]
                        .clone()
                        .ok_or_else(|| Error::invalid(format!("row {r} has no {what} id")))
                })
                .collect()
        };
        Ok(GroupIds {
            class: get(DataLevel::Class, "class")?,
            school: get(DataLevel::School, "school")?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlmmOptions {
    pub irls: IrlsOptions,
    /// Upper bound for each random-intercept standard deviation.
    pub max_sd: f64,
    /// Stop the outer loop once a full cycle improves the deviance by less.
    pub outer_tol: f64,
    pub max_cycles: usize,
    /// Hold the variances `(class, school)` fixed instead of estimating them.
    pub fixed_variances: Option<(f64, f64)>,
}

impl Default for GlmmOptions {
    fn default() -> Self {
        GlmmOptions {
            irls: IrlsOptions::default(),
            max_sd: 5.0,
            outer_tol: 1e-6,
            max_cycles: 20,
            fixed_variances: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmmFit {
    pub fixed: Vec<f64>,
    pub map: ColumnMap,
    pub groups: Vec<GroupLevel>,
    pub sigma2_class: f64,
    pub sigma2_school: f64,
    /// Conditional modes on the linear-predictor scale, by group id.
    pub class_modes: BTreeMap<String, f64>,
    pub school_modes: BTreeMap<String, f64>,
    /// Laplace approximation of −2 log marginal likelihood.
    pub laplace_deviance: f64,
    pub converged: bool,
    /// Deviance evaluations of the outer loop.
    pub evaluations: usize,
    pub n_obs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupPolicy {
    /// Add the training conditional modes of known groups.
    Conditional,
    /// Random effects set to zero.
    MarginalZero,
}

/// Two nested grouping factors: every inner group lies in one outer group.
/// With a single factor the outer one is a lone group with its standard
/// deviation pinned to 0.
struct Problem<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [u8],
    inner: Vec<usize>,
    outer: Vec<usize>,
    outer_of_inner: Vec<usize>,
    n_inner: usize,
    n_outer: usize,
}

/// Conditional mode and the pieces of `H = ZᵀWZ + I` at it.
struct Mode {
    /// `Σ dev_i + ‖u‖²`
    penalized: f64,
    logdet: f64,
    mu: Vec<f64>,
    w: Vec<f64>,
    d: Vec<f64>,
    c: Vec<f64>,
    s: Vec<f64>,
    converged: bool,
}

impl Mode {
    fn laplace(&self) -> f64 {
        self.penalized + self.logdet
    }
}

#[derive(Clone)]
struct State {
    beta: DVector<f64>,
    u_in: Vec<f64>,
    u_out: Vec<f64>,
}

impl Problem<'_> {
    fn eta(&self, st: &State, theta: [f64; 2]) -> Vec<f64> {
        let xb = self.x * &st.beta;
        (0..self.y.len())
            .map(|i| xb[i] + theta[0] * st.u_in[self.inner[i]] + theta[1] * st.u_out[self.outer[i]])
            .collect()
    }

    fn penalized(&self, st: &State, theta: [f64; 2]) -> f64 {
        let eta = self.eta(st, theta);
        let dev: f64 = eta.iter().zip(self.y).map(|(&e, &y)| bernoulli_deviance(y, e)).sum();
        dev + st.u_in.iter().map(|u| u * u).sum::<f64>() + st.u_out.iter().map(|u| u * u).sum::<f64>()
    }

    /// Block pieces of H for weights `w`.
    fn blocks(&self, w: &[f64], theta: [f64; 2]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut win = vec![0.0; self.n_inner];
        let mut wout = vec![0.0; self.n_outer];
        for i in 0..w.len() {
            win[self.inner[i]] += w[i];
            wout[self.outer[i]] += w[i];
        }
        let d: Vec<f64> = win.iter().map(|&s| 1.0 + theta[0] * theta[0] * s).collect();
        let c: Vec<f64> = win.iter().map(|&s| theta[0] * theta[1] * s).collect();
        let mut s: Vec<f64> = wout.iter().map(|&t| 1.0 + theta[1] * theta[1] * t).collect();
        for g in 0..self.n_inner {
            s[self.outer_of_inner[g]] -= c[g] * c[g] / d[g];
        }
        (d, c, s)
    }

    /// Solve `H x = r` using the nested block structure.
    fn solve(&self, d: &[f64], c: &[f64], s: &[f64], r_in: &[f64], r_out: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut rhs = r_out.to_vec();
        for g in 0..self.n_inner {
            rhs[self.outer_of_inner[g]] -= c[g] * r_in[g] / d[g];
        }
        let x_out: Vec<f64> = rhs.iter().zip(s).map(|(r, s)| r / s).collect();
        let x_in = (0..self.n_inner)
            .map(|g| (r_in[g] - c[g] * x_out[self.outer_of_inner[g]]) / d[g])
            .collect();
        (x_in, x_out)
    }

    /// Newton iterations on the random effects with `beta` held fixed.
    fn mode(&self, st: &mut State, theta: [f64; 2]) -> Mode {
        let mut f = self.penalized(st, theta);
        let mut converged = false;
        for _ in 0..100 {
            let eta = self.eta(st, theta);
            let mut g_in: Vec<f64> = st.u_in.iter().map(|u| -u).collect();
            let mut g_out: Vec<f64> = st.u_out.iter().map(|u| -u).collect();
            let mut w = vec![0.0; eta.len()];
            for i in 0..eta.len() {
                let mu = inv_logit(eta[i]);
                let r = f64::from(self.y[i]) - mu;
                g_in[self.inner[i]] += theta[0] * r;
                g_out[self.outer[i]] += theta[1] * r;
                w[i] = mu * (1.0 - mu);
            }
            let gmax = g_in.iter().chain(&g_out).fold(0.0f64, |m, g| m.max(g.abs()));
            if gmax < 1e-10 {
                converged = true;
                break;
            }
            let (d, c, s) = self.blocks(&w, theta);
            let (dx_in, dx_out) = self.solve(&d, &c, &s, &g_in, &g_out);
            let mut t = 1.0;
            let base = st.clone();
            let mut accepted = false;
            for _ in 0..30 {
                for g in 0..self.n_inner {
                    st.u_in[g] = base.u_in[g] + t * dx_in[g];
                }
                for h in 0..self.n_outer {
                    st.u_out[h] = base.u_out[h] + t * dx_out[h];
                }
                let nf = self.penalized(st, theta);
                if nf <= f {
                    accepted = true;
                    let done = f - nf < 1e-13 * (1.0 + f.abs());
                    f = nf;
                    if done {
                        converged = true;
                    }
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                *st = base;
                converged = gmax < 1e-6;
                break;
            }
            if converged {
                break;
            }
        }
        let eta = self.eta(st, theta);
        let mu: Vec<f64> = eta.iter().map(|&e| inv_logit(e)).collect();
        let w: Vec<f64> = mu.iter().map(|m| m * (1.0 - m)).collect();
        let (d, c, s) = self.blocks(&w, theta);
        let logdet = d.iter().map(|v| v.ln()).sum::<f64>() + s.iter().map(|v| v.ln()).sum::<f64>();
        Mode {
            penalized: self.penalized(st, theta),
            logdet,
            mu,
            w,
            d,
            c,
            s,
            converged,
        }
    }

    /// Gradient of the Laplace deviance in `beta` and the profiled
    /// penalized-deviance Hessian `2(XᵀWX − XᵀWZ H⁻¹ ZᵀWX)`.
    fn beta_gradient(&self, m: &Mode, theta: [f64; 2]) -> (DVector<f64>, DMatrix<f64>) {
        let (n, p) = (self.x.nrows(), self.x.ncols());
        // ZᵀWX, one row per random effect
        let mut zwx_in = DMatrix::zeros(self.n_inner, p);
        let mut zwx_out = DMatrix::zeros(self.n_outer, p);
        for i in 0..n {
            let (g, h) = (self.inner[i], self.outer[i]);
            for j in 0..p {
                let v = m.w[i] * self.x[(i, j)];
                zwx_in[(g, j)] += theta[0] * v;
                zwx_out[(h, j)] += theta[1] * v;
            }
        }
        let mut v_in = DMatrix::zeros(self.n_inner, p);
        let mut v_out = DMatrix::zeros(self.n_outer, p);
        for j in 0..p {
            let rin: Vec<f64> = zwx_in.column(j).iter().copied().collect();
            let rout: Vec<f64> = zwx_out.column(j).iter().copied().collect();
            let (a, b) = self.solve(&m.d, &m.c, &m.s, &rin, &rout);
            v_in.set_column(j, &DVector::from_vec(a));
            v_out.set_column(j, &DVector::from_vec(b));
        }
        // diagonal of Z H⁻¹ Zᵀ
        let lev = |i: usize| {
            let (g, h) = (self.inner[i], self.outer[i]);
            let (d, c, s) = (m.d[g], m.c[g], m.s[h]);
            let hgg = 1.0 / d + c * c / (d * d * s);
            let hgh = -c / (d * s);
            let hhh = 1.0 / s;
            theta[0] * theta[0] * hgg + 2.0 * theta[0] * theta[1] * hgh + theta[1] * theta[1] * hhh
        };
        let mut grad = DVector::zeros(p);
        let mut xwx = DMatrix::zeros(p, p);
        for i in 0..n {
            let (g, h) = (self.inner[i], self.outer[i]);
            let r = f64::from(self.y[i]) - m.mu[i];
            let dw = m.w[i] * (1.0 - 2.0 * m.mu[i]) * lev(i);
            for j in 0..p {
                let deta = self.x[(i, j)] - theta[0] * v_in[(g, j)] - theta[1] * v_out[(h, j)];
                grad[j] += -2.0 * self.x[(i, j)] * r + dw * deta;
                for k in 0..=j {
                    xwx[(j, k)] += m.w[i] * self.x[(i, j)] * self.x[(i, k)];
                }
            }
        }
        for j in 0..p {
            for k in 0..j {
                xwx[(k, j)] = xwx[(j, k)];
            }
        }
        let hess = (xwx - zwx_in.tr_mul(&v_in) - zwx_out.tr_mul(&v_out)) * 2.0;
        (grad, hess)
    }

    /// Minimize the Laplace deviance over `beta` at fixed `theta`, starting
    /// from (and updating) `st`.
    fn profile(&self, st: &mut State, theta: [f64; 2], tol: f64) -> (Mode, bool) {
        let mut m = self.mode(st, theta);
        let mut inner_ok = m.converged;
        for _ in 0..100 {
            let (grad, hess) = self.beta_gradient(&m, theta);
            if grad.amax() < tol {
                return (m, inner_ok);
            }
            let Some(step) = hess.clone().cholesky().map(|c| c.solve(&grad)).or_else(|| hess.lu().solve(&grad)) else {
                return (m, false);
            };
            let base = st.clone();
            let f0 = m.laplace();
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                st.beta = &base.beta - &step * t;
                st.u_in.clone_from(&base.u_in);
                st.u_out.clone_from(&base.u_out);
                let nm = self.mode(st, theta);
                if nm.laplace() <= f0 {
                    let small = f0 - nm.laplace() < 1e-12 * (1.0 + f0.abs());
                    inner_ok = nm.converged;
                    m = nm;
                    accepted = true;
                    if small {
                        return (m, inner_ok);
                    }
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                *st = base;
                let m = self.mode(st, theta);
                let ok = self.beta_gradient(&m, theta).0.amax() < tol.sqrt();
                return (m, ok && inner_ok);
            }
        }
        (m, false)
    }
}

/// Fit a logistic model with Gaussian random intercepts for the groups in
/// `spec.intercept_groups` by maximizing the Laplace approximation of the
/// marginal likelihood.
///
/// The random effects are parametrized as `b = σ·u` with `u ~ N(0, I)`. For
/// fixed standard deviations the conditional modes come from Newton
/// iterations on `u` and the fixed effects from quasi-Newton steps on the
/// Laplace deviance itself; the standard deviations are then optimized one
/// at a time on `[0, max_sd]` by Brent's method, with the boundary value 0
/// checked explicitly.
pub fn fit_random_intercept_logistic(
    design: &DesignMatrix,
    y: &[u8],
    groups: &GroupIds,
    spec: &MixedSpec,
    opts: &GlmmOptions,
) -> Result<GlmmFit> {
    let n = design.n();
    if y.len() != n || groups.class.len() != n || groups.school.len() != n {
        return Err(Error::invalid("response, groups and design differ in length"));
    }
    if spec.intercept_groups.is_empty() {
        return Err(Error::invalid("a mixed model needs at least one grouping factor"));
    }
    let use_class = spec.intercept_groups.contains(&GroupLevel::Class);
    let use_school = spec.intercept_groups.contains(&GroupLevel::School);

    let index = |ids: &[String]| -> (Vec<usize>, Vec<String>) {
        let mut names: Vec<String> = ids.to_vec();
        names.sort();
        names.dedup();
        let idx = ids.iter().map(|s| names.binary_search(s).expect("present")).collect();
        (idx, names)
    };
    let (class_idx, class_names) = index(&groups.class);
    let (school_idx, school_names) = index(&groups.school);
    for (level, names, used) in [
        ("class", &class_names, use_class),
        ("school", &school_names, use_school),
    ] {
        if used && names.len() < 2 {
            return Err(Error::invalid(format!("random {level} intercepts need at least 2 groups")));
        }
    }

    let (inner, outer, n_inner, n_outer) = match (use_class, use_school) {
        (true, true) => (class_idx.clone(), school_idx.clone(), class_names.len(), school_names.len()),
        (true, false) => (class_idx.clone(), vec![0; n], class_names.len(), 1),
        (false, true) => (school_idx.clone(), vec![0; n], school_names.len(), 1),
        (false, false) => unreachable!(),
    };
    let mut outer_of_inner = vec![usize::MAX; n_inner];
    for i in 0..n {
        let o = &mut outer_of_inner[inner[i]];
        if *o == usize::MAX {
            *o = outer[i];
        } else if *o != outer[i] {
            return Err(Error::invalid(format!(
                "class `{}` appears in more than one school",
                class_names[inner[i]]
            )));
        }
    }
    let prob = Problem {
        x: &design.matrix,
        y,
        inner,
        outer,
        outer_of_inner,
        n_inner,
        n_outer,
    };
    let active = [true, use_class && use_school];

    let glm = fit_logistic_irls(design, y, &opts.irls)?;
    let mut st = State {
        beta: DVector::from_vec(glm.coefficients.clone()),
        u_in: vec![0.0; n_inner],
        u_out: vec![0.0; n_outer],
    };
    let tol = opts.irls.tol;
    let to_theta = |(vc, vs): (f64, f64)| -> [f64; 2] {
        match (use_class, use_school) {
            (true, true) => [vc.max(0.0).sqrt(), vs.max(0.0).sqrt()],
            (true, false) => [vc.max(0.0).sqrt(), 0.0],
            _ => [vs.max(0.0).sqrt(), 0.0],
        }
    };

    let mut evaluations = 0usize;
    let (theta, outer_ok) = if let Some(v) = opts.fixed_variances {
        (to_theta(v), true)
    } else {
        let mut theta = [0.5f64.sqrt(), if active[1] { 0.5f64.sqrt() } else { 0.0 }];
        let mut best = {
            evaluations += 1;
            prob.profile(&mut st, theta, tol).0.laplace()
        };
        let mut ok = false;
        for cycle in 0..opts.max_cycles {
            let start = best;
            for k in 0..2 {
                if !active[k] {
                    continue;
                }
                let mut warm = st.clone();
                let mut eval = |t: f64| {
                    evaluations += 1;
                    let mut th = theta;
                    th[k] = t;
                    prob.profile(&mut warm, th, tol).0.laplace()
                };
                let (t_star, f_star) = brent_min(&mut eval, 0.0, opts.max_sd, 1e-6);
                let f_zero = eval(0.0);
                let (t_new, f_new) = if f_zero <= f_star { (0.0, f_zero) } else { (t_star, f_star) };
                if f_new < best {
                    theta[k] = t_new;
                    best = f_new;
                }
                prob.profile(&mut st, theta, tol);
            }
            debug!("glmm cycle {cycle}: theta {theta:?}, deviance {best:.8}");
            if start - best < opts.outer_tol {
                ok = true;
                break;
            }
        }
        (theta, ok)
    };

    let (mode, inner_ok) = prob.profile(&mut st, theta, tol);
    evaluations += 1;
    let converged = outer_ok && inner_ok;
    if !converged {
        warn!("random-intercept fit did not fully converge");
    }
    let modes = |u: &[f64], t: f64, names: &[String]| -> BTreeMap<String, f64> {
        names.iter().cloned().zip(u.iter().map(|v| v * t)).collect()
    };
    let (class_modes, school_modes, s2c, s2s) = match (use_class, use_school) {
        (true, true) => (
            modes(&st.u_in, theta[0], &class_names),
            modes(&st.u_out, theta[1], &school_names),
            theta[0] * theta[0],
            theta[1] * theta[1],
        ),
        (true, false) => (
            modes(&st.u_in, theta[0], &class_names),
            BTreeMap::new(),
            theta[0] * theta[0],
            0.0,
        ),
        _ => (
            BTreeMap::new(),
            modes(&st.u_in, theta[0], &school_names),
            0.0,
            theta[0] * theta[0],
        ),
    };
    let mut groups_used = spec.intercept_groups.clone();
    groups_used.sort();
    groups_used.dedup();
    Ok(GlmmFit {
        fixed: st.beta.iter().copied().collect(),
        map: design.map.clone(),
        groups: groups_used,
        sigma2_class: s2c,
        sigma2_school: s2s,
        class_modes,
        school_modes,
        laplace_deviance: mode.laplace(),
        converged,
        evaluations,
        n_obs: n,
    })
}

/// Bounded scalar minimization (Brent, 1973): golden-section steps with
/// parabolic interpolation when it behaves.
pub(crate) fn brent_min(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let golden = 0.5 * (3.0 - 5f64.sqrt());
    let (mut a, mut b) = (a, b);
    let mut x = a + golden * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol1 = 1.5e-8 * x.abs() + xtol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden_step = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_old = e;
            if p.abs() < (0.5 * q * e_old).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden_step = false;
            }
        }
        if golden_step {
            e = if x >= m { a - x } else { b - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Probabilities for the rows of `ds`; rows with missing predictors are
/// masked. Under [`GroupPolicy::Conditional`] a row gets the modes of its
/// class and school when those were seen in training.
pub fn predict_glmm(fit: &GlmmFit, ds: &Dataset, policy: GroupPolicy) -> Result<MaskedPredictions> {
    let enc = fit.map.encode(ds)?;
    let class_ids = ds.id_column(DataLevel::Class);
    let school_ids = ds.id_column(DataLevel::School);
    let lookup = |ids: Option<&[Option<String>]>, modes: &BTreeMap<String, f64>, r: usize| {
        ids.and_then(|c| c[r].as_ref())
            .and_then(|id| modes.get(id))
            .copied()
            .unwrap_or(0.0)
    };
    let probs = enc
        .rows
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.as_ref().map(|x| {
                let mut eta: f64 = x.iter().zip(&fit.fixed).map(|(a, b)| a * b).sum();
                if policy == GroupPolicy::Conditional {
                    eta += lookup(class_ids, &fit.class_modes, r);
                    eta += lookup(school_ids, &fit.school_modes, r);
                }
                inv_logit(eta)
            })
        })
        .collect();
    Ok(MaskedPredictions {
        probs,
        n_masked: enc.n_masked,
    })
}
