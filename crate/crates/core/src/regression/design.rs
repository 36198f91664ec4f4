use log::{info, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Role, Scale, Value};
use crate::error::{Error, Result};

/// Relative residual norm below which a column counts as a linear
/// combination of earlier ones.
const ALIAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Encoding {
    Intercept,
    Identity,
    /// Ordinal level code, 1 for the first declared level.
    OrdinalScore,
    /// Indicator of one nominal level (0-based code).
    Dummy { level: String, code: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignColumn {
    pub name: String,
    /// Dataset column the values come from; `None` for the intercept.
    pub source: Option<String>,
    pub encoding: Encoding,
}

/// Source variable of a design, with the nominal codes it can encode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceVariable {
    pub name: String,
    pub scale: Scale,
    /// Nominal only: reference code followed by the codes with a retained
    /// dummy column. Other levels cannot be scored.
    pub known_codes: Option<Vec<u32>>,
}

/// Encoding recipe learned on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub columns: Vec<DesignColumn>,
    pub sources: Vec<SourceVariable>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub matrix: DMatrix<f64>,
    pub map: ColumnMap,
    /// Dataset rows behind the matrix rows (complete cases).
    pub retained_rows: Vec<usize>,
    /// Response of the retained rows.
    pub response: Vec<u8>,
    /// Columns removed for zero variance or exact collinearity.
    pub dropped: Vec<String>,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn p(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Encode `predictors` with an intercept: numeric and binary as-is, ordinal
/// by level score, nominal by dummies against the first declared level seen
/// in the data. Rows with a missing predictor are dropped.
pub fn encode_design(ds: &Dataset, predictors: &[String]) -> Result<DesignMatrix> {
    if predictors.is_empty() {
        return Err(Error::invalid("empty predictor list"));
    }
    build(ds, predictors)
}

/// Intercept-only design over all rows.
pub fn encode_intercept_only(ds: &Dataset) -> Result<DesignMatrix> {
    build(ds, &[])
}

fn build(ds: &Dataset, predictors: &[String]) -> Result<DesignMatrix> {
    let (_, y) = ds.response()?;
    let mut sources = Vec::with_capacity(predictors.len());
    let mut idx = Vec::with_capacity(predictors.len());
    for name in predictors {
        let i = ds.index_of(name)?;
        let c = &ds.columns()[i];
        if matches!(c.role, Role::Id | Role::Response) || c.scale == Scale::Text {
            return Err(Error::invalid(format!("`{name}` cannot be a regression predictor")));
        }
        if idx.contains(&i) {
            return Err(Error::invalid(format!("predictor `{name}` listed twice")));
        }
        idx.push(i);
        sources.push(SourceVariable {
            name: name.clone(),
            scale: c.scale.clone(),
            known_codes: None,
        });
    }
    let retained: Vec<usize> = (0..ds.n_rows())
        .filter(|&r| idx.iter().all(|&i| !matches!(ds.value(r, i), Value::Missing)))
        .collect();
    if retained.is_empty() {
        return Err(Error::invalid("no complete cases among the predictors"));
    }
    if retained.len() < ds.n_rows() {
        info!(
            "design keeps {} of {} rows (complete cases)",
            retained.len(),
            ds.n_rows()
        );
    }

    let mut columns = vec![DesignColumn {
        name: "(Intercept)".into(),
        source: None,
        encoding: Encoding::Intercept,
    }];
    let mut values: Vec<Vec<f64>> = vec![vec![1.0; retained.len()]];
    for (src, &i) in sources.iter_mut().zip(&idx) {
        match &src.scale {
            Scale::Nominal(levels) => {
                let mut seen = vec![false; levels.len()];
                for &r in &retained {
                    if let Value::Level(c) = ds.value(r, i) {
                        seen[c as usize] = true;
                    }
                }
                let Some(reference) = seen.iter().position(|&s| s) else { continue };
                if reference != 0 {
                    warn!(
                        "`{}`: first level `{}` absent, using `{}` as reference",
                        src.name, levels[0], levels[reference]
                    );
                }
                for (code, level) in levels.iter().enumerate().skip(reference + 1) {
                    columns.push(DesignColumn {
                        name: format!("{}={}", src.name, level),
                        source: Some(src.name.clone()),
                        encoding: Encoding::Dummy {
                            level: level.clone(),
                            code: code as u32,
                        },
                    });
                    values.push(
                        retained
                            .iter()
                            .map(|&r| f64::from(ds.value(r, i) == Value::Level(code as u32)))
                            .collect(),
                    );
                }
            }
            scale => {
                let encoding = if matches!(scale, Scale::Ordinal(_)) {
                    Encoding::OrdinalScore
                } else {
                    Encoding::Identity
                };
                columns.push(DesignColumn {
                    name: src.name.clone(),
                    source: Some(src.name.clone()),
                    encoding,
                });
                values.push(
                    retained
                        .iter()
                        .map(|&r| ds.numeric_value(r, i).expect("complete case"))
                        .collect(),
                );
            }
        }
    }

    // drop constant and aliased columns (greedy Gram-Schmidt in column order)
    let mut keep = vec![true; columns.len()];
    let mut dropped = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for (j, col) in values.iter().enumerate() {
        if j > 0 && col.iter().all(|&v| v == col[0]) {
            keep[j] = false;
            dropped.push(columns[j].name.clone());
            warn!("dropping constant design column `{}`", columns[j].name);
            continue;
        }
        let norm0 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut resid = col.clone();
        for b in &basis {
            let dot: f64 = resid.iter().zip(b).map(|(a, b)| a * b).sum();
            for (r, bv) in resid.iter_mut().zip(b) {
                *r -= dot * bv;
            }
        }
        let norm = resid.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= ALIAS_TOL * norm0.max(1.0) {
            keep[j] = false;
            dropped.push(columns[j].name.clone());
            warn!("dropping design column `{}` (collinear with earlier columns)", columns[j].name);
            continue;
        }
        basis.push(resid.iter().map(|v| v / norm).collect());
    }
    let columns: Vec<DesignColumn> = columns
        .into_iter()
        .zip(&keep)
        .filter_map(|(c, &k)| k.then_some(c))
        .collect();
    let values: Vec<Vec<f64>> = values
        .into_iter()
        .zip(&keep)
        .filter_map(|(v, &k)| k.then_some(v))
        .collect();

    for src in &mut sources {
        if let Scale::Nominal(_) = src.scale {
            let codes: Vec<u32> = columns
                .iter()
                .filter(|c| c.source.as_deref() == Some(src.name.as_str()))
                .filter_map(|c| match c.encoding {
                    Encoding::Dummy { code, .. } => Some(code),
                    _ => None,
                })
                .collect();
            let i = ds.index_of(&src.name)?;
            let reference = retained
                .iter()
                .filter_map(|&r| match ds.value(r, i) {
                    Value::Level(c) => Some(c),
                    _ => None,
                })
                .min();
            let mut known: Vec<u32> = reference.into_iter().collect();
            known.extend(codes);
            src.known_codes = Some(known);
        }
    }

    let n = retained.len();
    let matrix = DMatrix::from_fn(n, columns.len(), |r, c| values[c][r]);
    if n <= columns.len() {
        warn!("design has {} rows for {} columns", n, columns.len());
    }
    Ok(DesignMatrix {
        matrix,
        map: ColumnMap { columns, sources },
        response: retained.iter().map(|&r| y[r]).collect(),
        retained_rows: retained,
        dropped,
    })
}

/// Rows of `ds` encoded with a learned map; `None` where a predictor is
/// missing or a nominal level has no coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedRows {
    pub rows: Vec<Option<Vec<f64>>>,
    pub n_masked: usize,
}

impl ColumnMap {
    pub fn encode(&self, ds: &Dataset) -> Result<EncodedRows> {
        let mut src_idx = Vec::with_capacity(self.sources.len());
        for s in &self.sources {
            let i = ds.index_of(&s.name)?;
            if ds.columns()[i].scale != s.scale {
                return Err(Error::invalid(format!(
                    "predictor `{}` has a different scale than at fitting time",
                    s.name
                )));
            }
            src_idx.push(i);
        }
        let mut rows = Vec::with_capacity(ds.n_rows());
        let mut n_masked = 0;
        let mut unseen = 0;
        for r in 0..ds.n_rows() {
            let mut ok = true;
            for (s, &i) in self.sources.iter().zip(&src_idx) {
                match ds.value(r, i) {
                    Value::Missing => ok = false,
                    Value::Level(c) => {
                        if let Some(known) = &s.known_codes {
                            if !known.contains(&c) {
                                ok = false;
                                unseen += 1;
                            }
                        }
                    }
                    _ => {}
                }
            }
            if !ok {
                n_masked += 1;
                rows.push(None);
                continue;
            }
            let x = self
                .columns
                .iter()
                .map(|c| {
                    let Some(src) = &c.source else { return 1.0 };
                    let i = src_idx[self.sources.iter().position(|s| &s.name == src).expect("known source")];
                    match &c.encoding {
                        Encoding::Dummy { code, .. } => f64::from(ds.value(r, i) == Value::Level(*code)),
                        _ => ds.numeric_value(r, i).expect("checked non-missing"),
                    }
                })
                .collect();
            rows.push(Some(x));
        }
        if unseen > 0 {
            warn!("{unseen} rows carry a nominal level without a fitted coefficient; masked");
        }
        Ok(EncodedRows { rows, n_masked })
    }
}
