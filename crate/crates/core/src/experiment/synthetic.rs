//! Synthetic students-in-classes-in-schools data with a binary outcome
//! drawn from a random-intercept logistic model.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, ColumnSchema, DataLevel, Dataset, Role, Scale, Schema};
use crate::error::{Error, Result};

pub const RESPONSE: &str = "ahs";
/// Student-level variable carrying the strongest planted effect.
pub const DOMINANT: &str = "math-grade";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_students: usize,
    pub n_schools: usize,
    pub classes_per_school: usize,
    /// Multiplier on the planted student-level coefficients.
    pub student_effect: f64,
    /// Coefficient of the class mean of `books` (a contextual effect).
    pub class_effect: f64,
    /// Multiplier on the school mean of `social-status` and on `town-size`.
    pub school_effect: f64,
    /// Standard deviations of the class and school random intercepts.
    pub sd_class: f64,
    pub sd_school: f64,
    pub target_rate: f64,
    /// Per-column probability of a cell being missing, completely at random.
    pub missing: BTreeMap<String, f64>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        let missing = [
            ("math-grade", 0.02),
            ("points-calculating", 0.03),
            ("aspiration-education", 0.08),
            ("books", 0.05),
            ("social-status", 0.05),
            ("gender", 0.01),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        SyntheticSpec {
            n_students: 2000,
            n_schools: 100,
            classes_per_school: 2,
            student_effect: 1.0,
            class_effect: 1.0,
            school_effect: 1.0,
            sd_class: 0.5,
            sd_school: 0.5,
            target_rate: 0.40,
            missing,
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    /// No effects at any level: the outcome is independent of everything.
    pub fn null(n_students: usize, seed: u64) -> Self {
        SyntheticSpec {
            n_students,
            student_effect: 0.0,
            class_effect: 0.0,
            school_effect: 0.0,
            sd_class: 0.0,
            sd_school: 0.0,
            seed,
            ..SyntheticSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_rate > 0.0 && self.target_rate < 1.0) {
            return Err(Error::invalid(format!(
                "target positive rate {} outside (0, 1)",
                self.target_rate
            )));
        }
        if self.n_schools == 0 || self.classes_per_school == 0 {
            return Err(Error::invalid("need at least one school and one class per school"));
        }
        if self.n_students < self.n_schools * self.classes_per_school {
            return Err(Error::invalid("fewer students than classes"));
        }
        if self.sd_class < 0.0 || self.sd_school < 0.0 {
            return Err(Error::invalid("random-intercept standard deviations must be non-negative"));
        }
        for (col, &rate) in &self.missing {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::invalid(format!("missing rate {rate} for `{col}` outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// Parameters the outcome was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub intercept: f64,
    /// Coefficient per term of the linear predictor; aggregated terms use
    /// the names of the aggregated columns.
    pub coefficients: Vec<(String, f64)>,
    pub class_effects: BTreeMap<String, f64>,
    pub school_effects: BTreeMap<String, f64>,
    pub positive_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub truth: SyntheticTruth,
}

fn levels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn schema() -> Result<Schema> {
    use DataLevel::*;
    Schema::new(vec![
        ColumnSchema::id("student", Student),
        ColumnSchema::id("class", Class),
        ColumnSchema::id("school", School),
        ColumnSchema::new(RESPONSE, Scale::Binary, Student, Role::Response),
        ColumnSchema::predictor(DOMINANT, Scale::Ordinal(levels(&["1", "2", "3", "4", "5"])), Student),
        ColumnSchema::predictor("points-calculating", Scale::Numeric, Student),
        ColumnSchema::predictor("points-communicating", Scale::Numeric, Student),
        ColumnSchema::predictor(
            "aspiration-education",
            Scale::Ordinal(levels(&["compulsory", "apprenticeship", "matura", "university"])),
            Student,
        ),
        ColumnSchema::predictor(
            "books",
            Scale::Ordinal(levels(&["0-10", "11-25", "26-100", "101-200", "200+"])),
            Student,
        ),
        ColumnSchema::predictor("social-status", Scale::Numeric, Student),
        ColumnSchema::predictor("gender", Scale::Nominal(levels(&["female", "male"])), Student),
        ColumnSchema::predictor("noise-a", Scale::Numeric, Student),
        ColumnSchema::predictor("noise-b", Scale::Ordinal(levels(&["a", "b", "c", "d"])), Student),
        ColumnSchema::predictor("class-size", Scale::Numeric, Class),
        ColumnSchema::predictor(
            "town-size",
            Scale::Ordinal(levels(&["<2k", "2k-10k", "10k-50k", "50k-500k", "500k+"])),
            School,
        ),
        ColumnSchema::predictor("urban", Scale::Binary, School),
    ])
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn to_code(x: f64, n_levels: u32) -> u32 {
    x.round().clamp(0.0, f64::from(n_levels - 1)) as u32
}

fn logistic(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Draws a dataset.
///
/// Students are dealt round-robin to classes, classes to schools. The
/// outcome is `1[U < logistic(β₀ + η)]` with `η` the planted effects plus
/// the random intercepts; β₀ is then chosen so that the number of positives
/// is exactly `round(target_rate · n)`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let schema = schema()?;
    for col in spec.missing.keys() {
        let c = schema
            .index_of(col)
            .map(|i| &schema.columns[i])
            .ok_or_else(|| Error::UnknownColumn(col.clone()))?;
        if c.role != Role::Predictor {
            return Err(Error::invalid(format!("`{col}` is not a predictor and cannot be missing")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_students;
    let n_classes = spec.n_schools * spec.classes_per_school;

    // school and class attributes
    let school_ses: Vec<f64> = (0..spec.n_schools).map(|_| normal(&mut rng)).collect();
    let town: Vec<u32> = school_ses
        .iter()
        .map(|&s| to_code(2.0 + 0.8 * s + normal(&mut rng), 5))
        .collect();
    let urban: Vec<f64> = town
        .iter()
        .map(|&t| f64::from(u8::from(t >= 3 || (t == 2 && rng.random::<f64>() < 0.3))))
        .collect();
    let school_re: Vec<f64> = (0..spec.n_schools).map(|_| spec.sd_school * normal(&mut rng)).collect();
    let class_books: Vec<f64> = (0..n_classes).map(|_| normal(&mut rng)).collect();
    let class_size: Vec<f64> = (0..n_classes).map(|_| f64::from(rng.random_range(14u32..=28))).collect();
    let class_re: Vec<f64> = (0..n_classes).map(|_| spec.sd_class * normal(&mut rng)).collect();

    let class_of: Vec<usize> = (0..n).map(|i| i % n_classes).collect();
    let school_of_class = |c: usize| c % spec.n_schools;

    // students
    let mut grade = Vec::with_capacity(n);
    let mut calc = Vec::with_capacity(n);
    let mut comm = Vec::with_capacity(n);
    let mut aspiration = Vec::with_capacity(n);
    let mut books = Vec::with_capacity(n);
    let mut social = Vec::with_capacity(n);
    let mut gender = Vec::with_capacity(n);
    let mut noise_a = Vec::with_capacity(n);
    let mut noise_b = Vec::with_capacity(n);
    for &c in &class_of {
        let s = school_of_class(c);
        let ability = 0.3 * school_ses[s] + normal(&mut rng);
        let ses = school_ses[s] + normal(&mut rng);
        grade.push(to_code(1.6 - 1.1 * ability + 0.6 * normal(&mut rng), 5));
        calc.push((500.0 + 80.0 * (0.7 * ability + 0.7 * normal(&mut rng))).round());
        comm.push((500.0 + 80.0 * (0.5 * ability + 0.85 * normal(&mut rng))).round());
        aspiration.push(to_code(1.5 + 0.5 * ses + 0.4 * ability + 0.8 * normal(&mut rng), 4));
        books.push(to_code(2.0 + 0.5 * ses + 0.7 * class_books[c] + 0.8 * normal(&mut rng), 5));
        social.push((50.0 + 12.0 * ses).round());
        gender.push(u32::from(rng.random::<bool>()));
        noise_a.push(normal(&mut rng));
        noise_b.push(rng.random_range(0u32..4));
    }

    // group means of the complete values
    let mean_by = |values: &[f64], group: &dyn Fn(usize) -> usize, n_groups: usize| -> Vec<f64> {
        let mut sum = vec![0.0; n_groups];
        let mut cnt = vec![0.0; n_groups];
        for (i, v) in values.iter().enumerate() {
            sum[group(i)] += v;
            cnt[group(i)] += 1.0;
        }
        sum.iter().zip(&cnt).map(|(s, c)| s / c).collect()
    };
    let books_score: Vec<f64> = books.iter().map(|&b| f64::from(b) + 1.0).collect();
    let books_cl = mean_by(&books_score, &|i| class_of[i], n_classes);
    let social_sl = mean_by(&social, &|i| school_of_class(class_of[i]), spec.n_schools);
    let books_center = books_score.iter().sum::<f64>() / n as f64;
    let social_center = social.iter().sum::<f64>() / n as f64;

    let b_grade = -1.8 * spec.student_effect;
    let b_asp = 0.5 * spec.student_effect;
    let b_male = -0.15 * spec.student_effect;
    let b_books_cl = 1.0 * spec.class_effect;
    let b_social_sl = 0.035 * spec.school_effect;
    let b_town = 0.25 * spec.school_effect;
    let eta: Vec<f64> = (0..n)
        .map(|i| {
            let c = class_of[i];
            let s = school_of_class(c);
            b_grade * (f64::from(grade[i]) - 1.0)
                + b_asp * (f64::from(aspiration[i]) - 1.5)
                + b_male * f64::from(gender[i])
                + b_books_cl * (books_cl[c] - books_center)
                + b_social_sl * (social_sl[s] - social_center)
                + b_town * (f64::from(town[s]) - 2.0)
                + class_re[c]
                + school_re[s]
        })
        .collect();
    let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let wanted = (spec.target_rate * n as f64).round() as usize;
    let count = |b0: f64| (0..n).filter(|&i| u[i] < logistic(b0 + eta[i])).count();
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count(mid) >= wanted {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let intercept = hi;
    let y: Vec<f64> = (0..n)
        .map(|i| f64::from(u8::from(u[i] < logistic(intercept + eta[i]))))
        .collect();
    let positive_rate = y.iter().sum::<f64>() / n as f64;

    let ids = |prefix: &str, f: &dyn Fn(usize) -> usize| -> ColumnData {
        ColumnData::Text((0..n).map(|i| Some(format!("{prefix}{:04}", f(i)))).collect())
    };
    let num = |v: Vec<f64>| ColumnData::Numeric(v.into_iter().map(Some).collect());
    let coded = |v: Vec<u32>| ColumnData::Coded(v.into_iter().map(Some).collect());
    let mut columns = vec![
        ids("st", &|i| i),
        ids("cl", &|i| class_of[i]),
        ids("sc", &|i| school_of_class(class_of[i])),
        num(y),
        coded(grade),
        num(calc),
        num(comm),
        coded(aspiration),
        coded(books),
        num(social),
        coded(gender),
        num(noise_a),
        coded(noise_b),
        num(class_of.iter().map(|&c| class_size[c]).collect()),
        coded(class_of.iter().map(|&c| town[school_of_class(c)]).collect()),
        num(class_of.iter().map(|&c| urban[school_of_class(c)]).collect()),
    ];

    for (col, &rate) in &spec.missing {
        if rate == 0.0 {
            continue;
        }
        let idx = schema.index_of(col).expect("checked above");
        for i in 0..n {
            if rng.random::<f64>() < rate {
                match &mut columns[idx] {
                    ColumnData::Numeric(v) => v[i] = None,
                    ColumnData::Coded(v) => v[i] = None,
                    ColumnData::Text(v) => v[i] = None,
                }
            }
        }
    }

    let class_effects = (0..n_classes).map(|c| (format!("cl{c:04}"), class_re[c])).collect();
    let school_effects = (0..spec.n_schools).map(|s| (format!("sc{s:04}"), school_re[s])).collect();
    let truth = SyntheticTruth {
        intercept,
        coefficients: vec![
            (DOMINANT.into(), b_grade),
            ("aspiration-education".into(), b_asp),
            ("gender:male".into(), b_male),
            ("books-aggCL".into(), b_books_cl),
            ("social-status-aggSL".into(), b_social_sl),
            ("town-size".into(), b_town),
        ],
        class_effects,
        school_effects,
        positive_rate,
    };
    Ok(SyntheticData {
        dataset: Dataset::new(schema, columns)?,
        truth,
    })
}
