//! Questionnaire merging, response dichotomization, group-mean aggregation
//! and named predictor sets.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, ColumnSchema, DataLevel, Dataset, Role, Scale};
use crate::error::{Error, Result};

/// Combine a parent-questionnaire column with its student counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergePairSpec {
    pub parent_column: String,
    pub student_column: String,
    pub output_column: String,
}

/// Parent answer when present, else student answer, else missing. Both
/// source columns are marked excluded and the merged column inherits the
/// student column's role.
pub fn merge_parent_student(ds: &Dataset, spec: &MergePairSpec) -> Result<Dataset> {
    let pi = ds.index_of(&spec.parent_column)?;
    let si = ds.index_of(&spec.student_column)?;
    let (pc, sc) = (&ds.columns()[pi], &ds.columns()[si]);
    if pc.scale != sc.scale {
        return Err(Error::invalid(format!(
            "cannot merge `{}` and `{}`: scales differ",
            pc.name, sc.name
        )));
    }
    let merged = match (ds.data(pi), ds.data(si)) {
        (ColumnData::Numeric(p), ColumnData::Numeric(s)) => {
            ColumnData::Numeric(p.iter().zip(s).map(|(p, s)| p.or(*s)).collect())
        }
        (ColumnData::Coded(p), ColumnData::Coded(s)) => {
            ColumnData::Coded(p.iter().zip(s).map(|(p, s)| p.or(*s)).collect())
        }
        (ColumnData::Text(p), ColumnData::Text(s)) => ColumnData::Text(
            p.iter()
                .zip(s)
                .map(|(p, s)| p.clone().or_else(|| s.clone()))
                .collect(),
        ),
        _ => unreachable!("equal scales imply equal storage"),
    };
    let out_schema = ColumnSchema {
        name: spec.output_column.clone(),
        scale: sc.scale.clone(),
        level: sc.level,
        role: sc.role,
        source: None,
    };
    let mut out = ds.clone();
    out.set_role(&spec.parent_column, Role::Excluded)?;
    out.set_role(&spec.student_column, Role::Excluded)?;
    out.push_column(out_schema, merged)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DichotomizeReport {
    pub dropped_rows: usize,
    pub positives: usize,
    pub retained_rows: usize,
}

/// Replaces a nominal column by a binary response (`positive_level` → 1,
/// every other level → 0). Rows where the source is missing are dropped.
/// Any previously declared response column is demoted to excluded.
pub fn dichotomize_response(
    ds: &Dataset,
    column: &str,
    positive_level: &str,
) -> Result<(Dataset, DichotomizeReport)> {
    let idx = ds.index_of(column)?;
    let Scale::Nominal(levels) = &ds.columns()[idx].scale else {
        return Err(Error::invalid(format!("response source `{column}` is not nominal")));
    };
    let positive = levels
        .iter()
        .position(|l| l == positive_level)
        .ok_or_else(|| {
            Error::invalid(format!(
                "`{positive_level}` is not a declared level of `{column}`"
            ))
        })? as u32;
    let ColumnData::Coded(codes) = ds.data(idx) else {
        unreachable!("nominal columns are coded")
    };
    let keep: Vec<usize> = (0..ds.n_rows()).filter(|&r| codes[r].is_some()).collect();
    if keep.is_empty() {
        return Err(Error::invalid(format!("response `{column}` is missing in every row")));
    }
    let dropped = ds.n_rows() - keep.len();
    let binary: Vec<Option<f64>> = keep
        .iter()
        .map(|&r| Some(if codes[r] == Some(positive) { 1.0 } else { 0.0 }))
        .collect();
    let positives = binary.iter().filter(|b| **b == Some(1.0)).count();

    let kept = ds.select_rows(&keep)?;
    let token = kept.schema().missing_token.clone();
    let (mut schema, mut columns) = kept.into_parts();
    for c in schema.columns.iter_mut() {
        if c.role == Role::Response {
            c.role = Role::Excluded;
        }
    }
    schema.columns[idx].scale = Scale::Binary;
    schema.columns[idx].role = Role::Response;
    columns[idx] = ColumnData::Numeric(binary);
    let out = Dataset::rebuild(schema, columns, &token)?;
    if dropped > 0 {
        log::info!("dropped {dropped} rows with missing `{column}`");
    }
    Ok((
        out,
        DichotomizeReport {
            dropped_rows: dropped,
            positives,
            retained_rows: keep.len(),
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateTarget {
    Class,
    School,
}

impl AggregateTarget {
    fn level(self) -> DataLevel {
        match self {
            AggregateTarget::Class => DataLevel::Class,
            AggregateTarget::School => DataLevel::School,
        }
    }

    fn output_level(self) -> DataLevel {
        match self {
            AggregateTarget::Class => DataLevel::AggregatedClass,
            AggregateTarget::School => DataLevel::AggregatedSchool,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            AggregateTarget::Class => "-aggCL",
            AggregateTarget::School => "-aggSL",
        }
    }
}

pub fn aggregated_name(source: &str, target: AggregateTarget) -> String {
    format!("{source}{}", target.suffix())
}

fn is_aggregable(c: &ColumnSchema, target: AggregateTarget) -> bool {
    c.role == Role::Predictor
        && !c.level.is_aggregated()
        && c.level.rank() < target.level().rank()
        && matches!(c.scale, Scale::Numeric | Scale::Binary | Scale::Ordinal(_))
}

/// Columns eligible for aggregation to `target`, in schema order.
pub fn aggregable_columns(ds: &Dataset, target: AggregateTarget) -> Vec<String> {
    ds.columns()
        .iter()
        .filter(|c| is_aggregable(c, target))
        .map(|c| c.name.clone())
        .collect()
}

/// Appends `var-aggCL` / `var-aggSL` for every eligible predictor: numeric,
/// binary (as a proportion) and ordinal (via 1-based level codes) columns
/// measured strictly below the target level. Nominal columns are skipped.
pub fn aggregate_means(ds: &Dataset, target: AggregateTarget) -> Result<Dataset> {
    let names = aggregable_columns(ds, target);
    aggregate_columns(ds, target, &names, None)
}

/// Aggregates the named columns. When `reference_rows` is given, group
/// means use only those rows and are broadcast to every row of the group;
/// groups without reference rows receive missing.
pub fn aggregate_columns(
    ds: &Dataset,
    target: AggregateTarget,
    names: &[String],
    reference_rows: Option<&[usize]>,
) -> Result<Dataset> {
    let groups = ds
        .id_column(target.level())
        .ok_or_else(|| Error::invalid(format!("no id column for {:?}", target.level())))?;
    if let Some(row) = groups.iter().position(Option::is_none) {
        return Err(Error::Cell {
            row,
            column: format!("{:?} id", target.level()),
            message: "missing group id".into(),
        });
    }
    let mut group_index: HashMap<&str, usize> = HashMap::new();
    let row_group: Vec<usize> = groups
        .iter()
        .map(|g| {
            let next = group_index.len();
            *group_index.entry(g.as_deref().expect("checked")).or_insert(next)
        })
        .collect();
    let n_groups = group_index.len();

    let mut in_reference = vec![reference_rows.is_none(); ds.n_rows()];
    if let Some(rows) = reference_rows {
        for &r in rows {
            in_reference[r] = true;
        }
    }

    let mut out = ds.clone();
    for name in names {
        let idx = ds.index_of(name)?;
        let c = &ds.columns()[idx];
        if !is_aggregable(c, target) {
            return Err(Error::invalid(format!(
                "`{name}` (level {:?}, scale {:?}) cannot be aggregated to {:?}",
                c.level, c.scale, target
            )));
        }
        let mut sum = vec![0.0; n_groups];
        let mut count = vec![0usize; n_groups];
        for row in 0..ds.n_rows() {
            if !in_reference[row] {
                continue;
            }
            if let Some(x) = ds.numeric_value(row, idx) {
                sum[row_group[row]] += x;
                count[row_group[row]] += 1;
            }
        }
        let means: Vec<Option<f64>> = sum
            .iter()
            .zip(&count)
            .map(|(s, &n)| (n > 0).then(|| s / n as f64))
            .collect();
        let values = row_group.iter().map(|&g| means[g]).collect();
        let schema = ColumnSchema {
            name: aggregated_name(name, target),
            scale: Scale::Numeric,
            level: target.output_level(),
            role: Role::Predictor,
            source: Some(name.clone()),
        };
        out.push_column(schema, ColumnData::Numeric(values))?;
    }
    Ok(out)
}

/// Removes every aggregated column.
pub fn strip_aggregates(ds: &Dataset) -> Result<Dataset> {
    let token = ds.schema().missing_token.clone();
    let (mut schema, columns) = ds.clone().into_parts();
    let (cols, data): (Vec<_>, Vec<_>) = std::mem::take(&mut schema.columns)
        .into_iter()
        .zip(columns)
        .filter(|(c, _)| !c.level.is_aggregated())
        .unzip();
    schema.columns = cols;
    Dataset::rebuild(schema, data, &token)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariableSet {
    Edu,
    Ind,
    IndAgg,
    IndMeta,
    IndMetaAgg,
}

impl VariableSet {
    pub const ALL: [VariableSet; 5] = [
        VariableSet::Edu,
        VariableSet::Ind,
        VariableSet::IndAgg,
        VariableSet::IndMeta,
        VariableSet::IndMetaAgg,
    ];
}

impl fmt::Display for VariableSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VariableSet::Edu => "Edu",
            VariableSet::Ind => "Ind",
            VariableSet::IndAgg => "IndAgg",
            VariableSet::IndMeta => "IndMeta",
            VariableSet::IndMetaAgg => "IndMetaAgg",
        })
    }
}

impl FromStr for VariableSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VariableSet::ALL
            .into_iter()
            .find(|v| v.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown variable set `{s}`")))
    }
}

/// Predictor names for a named set, in schema order.
///
/// * `Ind`: student-level predictors.
/// * `IndAgg`: `Ind` plus aggregations whose source is in `Ind`.
/// * `IndMeta`: `Ind` plus class- and school-level predictors.
/// * `IndMetaAgg`: `IndMeta` plus every aggregated predictor.
/// * `Edu`: exactly `edu_list`.
pub fn select_variable_set(
    ds: &Dataset,
    set: VariableSet,
    edu_list: &[String],
) -> Result<Vec<String>> {
    if set == VariableSet::Edu {
        for name in edu_list {
            let c = ds.column_schema(name)?;
            if c.role == Role::Id || c.role == Role::Response {
                return Err(Error::invalid(format!(
                    "`{name}` cannot be used as a predictor"
                )));
            }
        }
        return Ok(edu_list.to_vec());
    }
    let predictors = ds.columns().iter().filter(|c| c.role == Role::Predictor);
    let ind: HashSet<&str> = predictors
        .clone()
        .filter(|c| c.level == DataLevel::Student)
        .map(|c| c.name.as_str())
        .collect();
    let keep = |c: &ColumnSchema| -> bool {
        let is_ind = c.level == DataLevel::Student;
        let is_meta = matches!(c.level, DataLevel::Class | DataLevel::School);
        let agg_source = c.source.as_deref().filter(|_| c.level.is_aggregated());
        match set {
            VariableSet::Ind => is_ind,
            VariableSet::IndAgg => is_ind || agg_source.is_some_and(|s| ind.contains(s)),
            VariableSet::IndMeta => is_ind || is_meta,
            VariableSet::IndMetaAgg => is_ind || is_meta || agg_source.is_some(),
            VariableSet::Edu => unreachable!(),
        }
    };
    Ok(predictors
        .filter(|c| keep(c))
        .map(|c| c.name.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{read_dataset, Schema, Value};

    fn choice_levels() -> Scale {
        Scale::Nominal(vec!["AHS".into(), "NMS".into(), "other".into(), "unknown".into()])
    }

    fn schema() -> Schema {
        Schema::new(vec![
            ColumnSchema::id("student", DataLevel::Student),
            ColumnSchema::id("class", DataLevel::Class),
            ColumnSchema::id("school", DataLevel::School),
            ColumnSchema::new("choice_p", choice_levels(), DataLevel::Student, Role::Excluded),
            ColumnSchema::new("choice_s", choice_levels(), DataLevel::Student, Role::Excluded),
            ColumnSchema::predictor("score", Scale::Numeric, DataLevel::Student),
            ColumnSchema::predictor(
                "books",
                Scale::Ordinal(vec!["few".into(), "some".into(), "many".into()]),
                DataLevel::Student,
            ),
            ColumnSchema::predictor("size", Scale::Numeric, DataLevel::Class),
            ColumnSchema::predictor("urban", Scale::Binary, DataLevel::School),
        ])
        .unwrap()
    }

    const CSV: &str = "student,class,school,choice_p,choice_s,score,books,size,urban
s1,c1,S1,AHS,NMS,1,few,20,1
s2,c1,S1,,NMS,2,many,20,1
s3,c1,S1,,,3,,20,1
s4,c2,S1,other,AHS,4,some,25,1
s5,c2,S1,unknown,,,some,25,1
s6,c3,S2,NMS,NMS,,few,18,0
";

    fn ds() -> Dataset {
        read_dataset(CSV.as_bytes(), &schema()).unwrap()
    }

    fn merged() -> Dataset {
        merge_parent_student(
            &ds(),
            &MergePairSpec {
                parent_column: "choice_p".into(),
                student_column: "choice_s".into(),
                output_column: "choice".into(),
            },
        )
        .unwrap()
    }

    #[test]
    fn merge_prefers_parent_then_student() {
        let m = merged();
        let c = m.index_of("choice").unwrap();
        assert_eq!(m.value(0, c), Value::Level(0)); // parent AHS over student NMS
        assert_eq!(m.value(1, c), Value::Level(1)); // student NMS
        assert_eq!(m.value(2, c), Value::Missing); // both missing
        assert_eq!(m.column_schema("choice_p").unwrap().role, Role::Excluded);
        assert_eq!(m.column_schema("choice_s").unwrap().role, Role::Excluded);
    }

    #[test]
    fn merge_rejects_scale_mismatch() {
        let err = merge_parent_student(
            &ds(),
            &MergePairSpec {
                parent_column: "score".into(),
                student_column: "books".into(),
                output_column: "x".into(),
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn dichotomize_codes_and_drops() {
        let (d, report) = dichotomize_response(&merged(), "choice", "AHS").unwrap();
        assert_eq!(report.dropped_rows, 1);
        assert_eq!(report.retained_rows, 5);
        let (_, y) = d.response().unwrap();
        // AHS, NMS, other, unknown, NMS
        assert_eq!(y, vec![1, 0, 0, 0, 0]);
        assert_eq!(report.positives, 1);
    }

    #[test]
    fn dichotomize_rejects_unknown_level() {
        assert!(dichotomize_response(&merged(), "choice", "Gymnasium").is_err());
    }

    #[test]
    fn class_means_ignore_missing() {
        let a = aggregate_means(&ds(), AggregateTarget::Class).unwrap();
        let idx = a.index_of("score-aggCL").unwrap();
        // c1: {1,2,3}; c2: {4, missing}; c3: {missing}
        assert_eq!(a.numeric_value(0, idx), Some(2.0));
        assert_eq!(a.numeric_value(2, idx), Some(2.0));
        assert_eq!(a.numeric_value(3, idx), Some(4.0));
        assert_eq!(a.numeric_value(4, idx), Some(4.0));
        assert_eq!(a.numeric_value(5, idx), None);
        // ordinal codes: few=1, many=3 → c1 mean over {1,3} = 2
        let b = a.index_of("books-aggCL").unwrap();
        assert_eq!(a.numeric_value(0, b), Some(2.0));
        // class-level column is not aggregated to class level
        assert!(a.index_of("size-aggCL").is_err());
        assert_eq!(
            a.column_schema("score-aggCL").unwrap().level,
            DataLevel::AggregatedClass
        );
    }

    #[test]
    fn school_aggregation_includes_class_level_columns() {
        let a = aggregate_means(&ds(), AggregateTarget::School).unwrap();
        let idx = a.index_of("size-aggSL").unwrap();
        assert_eq!(a.numeric_value(0, idx), Some((20.0 * 3.0 + 25.0 * 2.0) / 5.0));
        assert!(a.index_of("urban-aggSL").is_err());
    }

    #[test]
    fn aggregating_aggregate_is_rejected() {
        let a = aggregate_means(&ds(), AggregateTarget::Class).unwrap();
        let err = aggregate_columns(
            &a,
            AggregateTarget::School,
            &["score-aggCL".to_string()],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        // automatic selection never picks aggregated columns
        let b = aggregate_means(&a, AggregateTarget::School).unwrap();
        assert!(b.index_of("score-aggCL-aggSL").is_err());
    }

    #[test]
    fn reference_rows_restrict_means() {
        let a = aggregate_columns(
            &ds(),
            AggregateTarget::Class,
            &["score".to_string()],
            Some(&[0, 1]),
        )
        .unwrap();
        let idx = a.index_of("score-aggCL").unwrap();
        assert_eq!(a.numeric_value(2, idx), Some(1.5));
        assert_eq!(a.numeric_value(3, idx), None);
    }

    #[test]
    fn variable_sets_follow_levels() {
        let a = aggregate_means(&ds(), AggregateTarget::Class).unwrap();
        let a = aggregate_means(&a, AggregateTarget::School).unwrap();
        let get = |s| select_variable_set(&a, s, &[]).unwrap();
        assert_eq!(get(VariableSet::Ind), vec!["score", "books"]);
        assert_eq!(get(VariableSet::IndMeta), vec!["score", "books", "size", "urban"]);
        assert_eq!(
            get(VariableSet::IndAgg),
            vec!["score", "books", "score-aggCL", "books-aggCL", "score-aggSL", "books-aggSL"]
        );
        assert_eq!(get(VariableSet::IndMetaAgg).len(), 4 + 5);
        assert!(get(VariableSet::IndMetaAgg).contains(&"size-aggSL".to_string()));
    }

    #[test]
    fn edu_set_is_the_supplied_list() {
        let edu = vec!["books".to_string(), "urban".to_string()];
        assert_eq!(select_variable_set(&ds(), VariableSet::Edu, &edu).unwrap(), edu);
        let bad = vec!["nope".to_string()];
        assert!(select_variable_set(&ds(), VariableSet::Edu, &bad).is_err());
    }

    #[test]
    fn variable_set_names_parse() {
        for v in VariableSet::ALL {
            assert_eq!(v.to_string().parse::<VariableSet>().unwrap(), v);
        }
    }
}
