//! Random tree-training instances.

use mlcart::cart::{FeatureMatrix, TrainingData, TreeVariable};
use mlcart::dataset::Scale;
use rand::Rng;

fn levels(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("l{i}")).collect()
}

/// A random predictor: numeric with ties, binary, ordinal or nominal with at
/// most `max_levels` levels.
pub fn random_variable<R: Rng>(rng: &mut R, name: String, max_levels: usize) -> TreeVariable {
    let scale = match rng.random_range(0..4) {
        0 => Scale::Numeric,
        1 => Scale::Binary,
        2 => Scale::Ordinal(levels(rng.random_range(2..=6))),
        _ => Scale::Nominal(levels(rng.random_range(2..=max_levels))),
    };
    TreeVariable { name, scale }
}

/// One value on the feature scale of `var` (NaN with probability `missing`).
pub fn random_value<R: Rng>(rng: &mut R, var: &TreeVariable, missing: f64) -> f64 {
    if rng.random::<f64>() < missing {
        return f64::NAN;
    }
    match &var.scale {
        Scale::Numeric => (rng.random_range(-2.0..2.0f64) * 4.0).round() / 4.0,
        Scale::Binary => f64::from(rng.random_range(0..2u8)),
        Scale::Ordinal(l) => rng.random_range(1..=l.len()) as f64,
        Scale::Nominal(l) => rng.random_range(0..l.len()) as f64,
        Scale::Text => unreachable!(),
    }
}

/// `n` rows of `p` random predictors; the response leans on the first two
/// columns so trees have something to find.
pub fn random_training<R: Rng>(rng: &mut R, n: usize, p: usize, max_levels: usize, missing: f64) -> TrainingData {
    let variables: Vec<TreeVariable> = (0..p).map(|j| random_variable(rng, format!("x{j}"), max_levels)).collect();
    let columns: Vec<Vec<f64>> = variables
        .iter()
        .map(|v| (0..n).map(|_| random_value(rng, v, missing)).collect())
        .collect();
    let signal = |v: f64| if v.is_nan() { 0.0 } else { v };
    let response: Vec<u8> = (0..n)
        .map(|i| {
            let mut eta = 0.8 * signal(columns[0][i]);
            if p > 1 {
                eta -= 0.5 * signal(columns[1][i]);
            }
            let pr = 1.0 / (1.0 + (-(eta - 0.5)).exp());
            u8::from(rng.random::<f64>() < pr)
        })
        .collect();
    TrainingData::new(FeatureMatrix::new(variables, columns).unwrap(), response, "y").unwrap()
}
