//! Schema-driven tabular data with nested student/class/school identifiers.
//!
//! A [`Dataset`] is stored column-wise. Every column is declared up front in a
//! [`Schema`]: there is no type inference. Cells are either typed values or
//! missing (`None`). Ordinal and nominal cells are stored as 0-based indices
//! into the declared level list.
//!
//! The schema sidecar is a TOML document:
//!
//! ```toml
//! missing_token = "NA"          # optional, default "NA"
//!
//! [[column]]
//! name = "math_grade"
//! scale = "ordinal"             # numeric | ordinal | nominal | binary | text
//! levels = ["1", "2", "3", "4", "5"]
//! level = "student"             # student | class | school | aggregated-class | aggregated-school
//! role = "predictor"            # predictor | response | id | excluded
//! ```
//!
//! Identifier columns use `scale = "text"` with `role = "id"`; their `level`
//! says which hierarchy level they identify. Aggregated columns additionally
//! carry `source = "<column>"`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MISSING_TOKEN: &str = "NA";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "levels", rename_all = "lowercase")]
pub enum Scale {
    Numeric,
    Ordinal(Vec<String>),
    Nominal(Vec<String>),
    Binary,
    /// Opaque strings, used for identifier columns.
    Text,
}

impl Scale {
    pub fn levels(&self) -> Option<&[String]> {
        match self {
            Scale::Ordinal(l) | Scale::Nominal(l) => Some(l),
            _ => None,
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Scale::Numeric => "numeric",
            Scale::Ordinal(_) => "ordinal",
            Scale::Nominal(_) => "nominal",
            Scale::Binary => "binary",
            Scale::Text => "text",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataLevel {
    Student,
    Class,
    School,
    AggregatedClass,
    AggregatedSchool,
}

impl DataLevel {
    /// Position in the nesting hierarchy (student < class < school).
    pub fn rank(self) -> u8 {
        match self {
            DataLevel::Student => 0,
            DataLevel::Class | DataLevel::AggregatedClass => 1,
            DataLevel::School | DataLevel::AggregatedSchool => 2,
        }
    }

    pub fn is_aggregated(self) -> bool {
        matches!(self, DataLevel::AggregatedClass | DataLevel::AggregatedSchool)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Predictor,
    Response,
    Id,
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub scale: Scale,
    pub level: DataLevel,
    pub role: Role,
    /// Source column of an aggregated column.
    pub source: Option<String>,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, scale: Scale, level: DataLevel, role: Role) -> Self {
        ColumnSchema {
            name: name.into(),
            scale,
            level,
            role,
            source: None,
        }
    }

    pub fn predictor(name: impl Into<String>, scale: Scale, level: DataLevel) -> Self {
        Self::new(name, scale, level, Role::Predictor)
    }

    pub fn id(name: impl Into<String>, level: DataLevel) -> Self {
        Self::new(name, Scale::Text, level, Role::Id)
    }

    fn check(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Schema("empty column name".into()));
        }
        if let Some(levels) = self.scale.levels() {
            if levels.is_empty() {
                return Err(Error::Schema(format!(
                    "column `{}` declares an empty level list",
                    self.name
                )));
            }
            let mut seen = HashSet::new();
            for l in levels {
                if !seen.insert(l) {
                    return Err(Error::Schema(format!(
                        "column `{}` declares level `{l}` twice",
                        self.name
                    )));
                }
            }
        }
        if self.role == Role::Id && self.scale != Scale::Text {
            return Err(Error::Schema(format!(
                "id column `{}` must have scale `text`",
                self.name
            )));
        }
        if self.scale == Scale::Text && self.role != Role::Id && self.role != Role::Excluded {
            return Err(Error::Schema(format!(
                "text column `{}` can only be an id or excluded column",
                self.name
            )));
        }
        if self.level.is_aggregated() && self.source.is_none() {
            return Err(Error::Schema(format!(
                "aggregated column `{}` has no source column",
                self.name
            )));
        }
        if !self.level.is_aggregated() && self.source.is_some() {
            return Err(Error::Schema(format!(
                "column `{}` names a source but is not aggregated",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSchema>,
    pub missing_token: String,
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    missing_token: Option<String>,
    #[serde(default)]
    column: Vec<ColumnEntry>,
}

#[derive(Serialize, Deserialize)]
struct ColumnEntry {
    name: String,
    scale: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<String>>,
    level: DataLevel,
    role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSchema>) -> Result<Self> {
        let schema = Schema {
            columns,
            missing_token: DEFAULT_MISSING_TOKEN.to_string(),
        };
        schema.check()?;
        Ok(schema)
    }

    pub fn with_missing_token(mut self, token: impl Into<String>) -> Self {
        self.missing_token = token.into();
        self
    }

    fn check(&self) -> Result<()> {
        let mut names = HashSet::new();
        for c in &self.columns {
            c.check()?;
            if !names.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
        }
        let mut id_levels = HashSet::new();
        for c in self.columns.iter().filter(|c| c.role == Role::Id) {
            if c.level.is_aggregated() || !id_levels.insert(c.level) {
                return Err(Error::Schema(format!(
                    "id column `{}` duplicates or misuses level {:?}",
                    c.name, c.level
                )));
            }
        }
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SchemaFile =
            toml::from_str(text).map_err(|e| Error::Schema(format!("malformed schema: {e}")))?;
        let mut columns = Vec::with_capacity(file.column.len());
        for entry in file.column {
            let scale = match (entry.scale.as_str(), entry.levels) {
                ("numeric", None) => Scale::Numeric,
                ("binary", None) => Scale::Binary,
                ("text", None) => Scale::Text,
                ("ordinal", Some(l)) => Scale::Ordinal(l),
                ("nominal", Some(l)) => Scale::Nominal(l),
                ("ordinal" | "nominal", None) => {
                    return Err(Error::Schema(format!(
                        "column `{}` needs a `levels` list",
                        entry.name
                    )))
                }
                ("numeric" | "binary" | "text", Some(_)) => {
                    return Err(Error::Schema(format!(
                        "column `{}` of scale {} cannot declare levels",
                        entry.name, entry.scale
                    )))
                }
                (other, _) => {
                    return Err(Error::Schema(format!(
                        "column `{}` has unknown scale `{other}`",
                        entry.name
                    )))
                }
            };
            columns.push(ColumnSchema {
                name: entry.name,
                scale,
                level: entry.level,
                role: entry.role,
                source: entry.source,
            });
        }
        let mut schema = Schema::new(columns)?;
        if let Some(t) = file.missing_token {
            schema.missing_token = t;
        }
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let file = SchemaFile {
            missing_token: Some(self.missing_token.clone()),
            column: self
                .columns
                .iter()
                .map(|c| ColumnEntry {
                    name: c.name.clone(),
                    scale: c.scale.kind_name().to_string(),
                    levels: c.scale.levels().map(|l| l.to_vec()),
                    level: c.level,
                    role: c.role,
                    source: c.source.clone(),
                })
                .collect(),
        };
        toml::to_string(&file).expect("schema serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }
}

/// Cell storage for one column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    /// Numeric and binary columns.
    Numeric(Vec<Option<f64>>),
    /// Ordinal and nominal columns: 0-based index into the level list.
    Coded(Vec<Option<u32>>),
    Text(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Coded(v) => v.len(),
            ColumnData::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnData::Numeric(v) => v[row].is_none(),
            ColumnData::Coded(v) => v[row].is_none(),
            ColumnData::Text(v) => v[row].is_none(),
        }
    }

    fn empty_for(scale: &Scale, cap: usize) -> Self {
        match scale {
            Scale::Numeric | Scale::Binary => ColumnData::Numeric(Vec::with_capacity(cap)),
            Scale::Ordinal(_) | Scale::Nominal(_) => ColumnData::Coded(Vec::with_capacity(cap)),
            Scale::Text => ColumnData::Text(Vec::with_capacity(cap)),
        }
    }

    fn select(&self, rows: &[usize]) -> Self {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Coded(v) => ColumnData::Coded(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Text(v) => ColumnData::Text(rows.iter().map(|&r| v[r].clone()).collect()),
        }
    }

    fn matches_scale(&self, scale: &Scale) -> bool {
        matches!(
            (self, scale),
            (ColumnData::Numeric(_), Scale::Numeric | Scale::Binary)
                | (ColumnData::Coded(_), Scale::Ordinal(_) | Scale::Nominal(_))
                | (ColumnData::Text(_), Scale::Text)
        )
    }
}

/// Borrowed typed cell value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value<'a> {
    Missing,
    Number(f64),
    Level(u32),
    Text(&'a str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    columns: Vec<ColumnData>,
    n_rows: usize,
}

impl Dataset {
    /// Builds a dataset, checking arity, storage kind and level membership.
    pub fn new(schema: Schema, columns: Vec<ColumnData>) -> Result<Self> {
        schema.check()?;
        if schema.columns.len() != columns.len() {
            return Err(Error::invalid(format!(
                "schema has {} columns but {} were supplied",
                schema.columns.len(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, ColumnData::len);
        if n_rows == 0 {
            return Err(Error::invalid("dataset has no rows"));
        }
        for (c, data) in schema.columns.iter().zip(&columns) {
            if data.len() != n_rows {
                return Err(Error::invalid(format!(
                    "column `{}` has {} rows, expected {n_rows}",
                    c.name,
                    data.len()
                )));
            }
            if !data.matches_scale(&c.scale) {
                return Err(Error::invalid(format!(
                    "column `{}` storage does not match scale {}",
                    c.name,
                    c.scale.kind_name()
                )));
            }
            match (data, &c.scale) {
                (ColumnData::Coded(v), s) => {
                    let k = s.levels().map_or(0, <[String]>::len) as u32;
                    if let Some(row) = v.iter().position(|x| matches!(x, Some(code) if *code >= k))
                    {
                        return Err(Error::Cell {
                            row,
                            column: c.name.clone(),
                            message: "level code outside declared levels".into(),
                        });
                    }
                }
                (ColumnData::Numeric(v), Scale::Binary) => {
                    if let Some(row) =
                        v.iter().position(|x| matches!(x, Some(b) if *b != 0.0 && *b != 1.0))
                    {
                        return Err(Error::Cell {
                            row,
                            column: c.name.clone(),
                            message: "binary cell must be 0 or 1".into(),
                        });
                    }
                }
                (ColumnData::Numeric(v), _) => {
                    if let Some(row) = v.iter().position(|x| matches!(x, Some(f) if !f.is_finite()))
                    {
                        return Err(Error::Cell {
                            row,
                            column: c.name.clone(),
                            message: "non-finite numeric cell".into(),
                        });
                    }
                }
                _ => {}
            }
        }
        Ok(Dataset {
            schema,
            columns,
            n_rows,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[ColumnSchema] {
        &self.schema.columns
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.schema
            .index_of(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column_schema(&self, name: &str) -> Result<&ColumnSchema> {
        Ok(&self.schema.columns[self.index_of(name)?])
    }

    pub fn data(&self, idx: usize) -> &ColumnData {
        &self.columns[idx]
    }

    pub fn column(&self, name: &str) -> Result<&ColumnData> {
        Ok(&self.columns[self.index_of(name)?])
    }

    pub fn value(&self, row: usize, col: usize) -> Value<'_> {
        match &self.columns[col] {
            ColumnData::Numeric(v) => v[row].map_or(Value::Missing, Value::Number),
            ColumnData::Coded(v) => v[row].map_or(Value::Missing, Value::Level),
            ColumnData::Text(v) => v[row].as_deref().map_or(Value::Missing, Value::Text),
        }
    }

    /// Numeric view of a cell: numbers as-is, ordinal levels as 1-based
    /// codes, nominal levels as 0-based codes. `None` for missing or text.
    pub fn numeric_value(&self, row: usize, col: usize) -> Option<f64> {
        match (&self.columns[col], &self.schema.columns[col].scale) {
            (ColumnData::Numeric(v), _) => v[row],
            (ColumnData::Coded(v), Scale::Ordinal(_)) => v[row].map(|c| f64::from(c) + 1.0),
            (ColumnData::Coded(v), _) => v[row].map(f64::from),
            (ColumnData::Text(_), _) => None,
        }
    }

    /// The response column, if exactly one is declared and it is binary.
    pub fn response(&self) -> Result<(usize, Vec<u8>)> {
        let idx: Vec<usize> = (0..self.n_cols())
            .filter(|&i| self.schema.columns[i].role == Role::Response)
            .collect();
        let [idx] = idx[..] else {
            return Err(Error::invalid(format!(
                "expected exactly one response column, found {}",
                idx.len()
            )));
        };
        let c = &self.schema.columns[idx];
        let ColumnData::Numeric(v) = &self.columns[idx] else {
            return Err(Error::invalid(format!("response `{}` is not binary", c.name)));
        };
        if c.scale != Scale::Binary {
            return Err(Error::invalid(format!("response `{}` is not binary", c.name)));
        }
        let mut out = Vec::with_capacity(v.len());
        for (row, x) in v.iter().enumerate() {
            match x {
                Some(b) => out.push(*b as u8),
                None => {
                    return Err(Error::Cell {
                        row,
                        column: c.name.clone(),
                        message: "missing response".into(),
                    })
                }
            }
        }
        Ok((idx, out))
    }

    /// Identifier column for a hierarchy level, if declared.
    pub fn id_column(&self, level: DataLevel) -> Option<&[Option<String>]> {
        let idx = self
            .schema
            .columns
            .iter()
            .position(|c| c.role == Role::Id && c.level == level)?;
        match &self.columns[idx] {
            ColumnData::Text(v) => Some(v),
            _ => None,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::invalid("row selection is empty"));
        }
        if let Some(&r) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(Error::invalid(format!("row {r} out of range")));
        }
        Ok(Dataset {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            n_rows: rows.len(),
        })
    }

    pub fn push_column(&mut self, schema: ColumnSchema, data: ColumnData) -> Result<()> {
        if self.schema.index_of(&schema.name).is_some() {
            return Err(Error::Schema(format!("column `{}` already exists", schema.name)));
        }
        let mut columns = std::mem::take(&mut self.columns);
        let mut s = self.schema.clone();
        s.columns.push(schema);
        columns.push(data);
        *self = Dataset::new(s, columns)?;
        Ok(())
    }

    /// Replaces schema and storage wholesale; used by the transforms.
    pub(crate) fn rebuild(
        mut schema: Schema,
        columns: Vec<ColumnData>,
        missing_token: &str,
    ) -> Result<Dataset> {
        schema.missing_token = missing_token.to_string();
        Dataset::new(schema, columns)
    }

    pub(crate) fn into_parts(self) -> (Schema, Vec<ColumnData>) {
        (self.schema, self.columns)
    }

    pub fn set_role(&mut self, name: &str, role: Role) -> Result<()> {
        let idx = self.index_of(name)?;
        self.schema.columns[idx].role = role;
        self.schema.check()
    }

    /// Writes the dataset as CSV with a header row; missing cells are empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.columns.iter().map(|c| c.name.as_str()))?;
        let mut record = Vec::with_capacity(self.n_cols());
        for row in 0..self.n_rows {
            record.clear();
            for (c, data) in self.schema.columns.iter().zip(&self.columns) {
                record.push(format_cell(c, data, row));
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn format_cell(c: &ColumnSchema, data: &ColumnData, row: usize) -> String {
    match data {
        ColumnData::Numeric(v) => v[row].map_or_else(String::new, |x| x.to_string()),
        ColumnData::Coded(v) => match (v[row], c.scale.levels()) {
            (Some(code), Some(levels)) => levels[code as usize].clone(),
            _ => String::new(),
        },
        ColumnData::Text(v) => v[row].clone().unwrap_or_default(),
    }
}

/// Reads a CSV file against a schema.
pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(std::io::BufReader::new(file), schema)
}

/// Parses CSV text (header row required) against a schema. Header order may
/// differ from schema order; the names must match as a set.
pub fn read_dataset<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    schema.check()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let header_set: HashSet<&str> = header.iter().map(String::as_str).collect();
    if header_set.len() != header.len() {
        return Err(Error::HeaderMismatch("duplicate header names".into()));
    }
    let schema_set: HashSet<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
    if header_set != schema_set {
        let mut extra: Vec<_> = header_set.difference(&schema_set).collect();
        let mut absent: Vec<_> = schema_set.difference(&header_set).collect();
        extra.sort();
        absent.sort();
        return Err(Error::HeaderMismatch(format!(
            "not in schema: {extra:?}; missing from file: {absent:?}"
        )));
    }
    // position in file for each schema column
    let pos: Vec<usize> = schema
        .columns
        .iter()
        .map(|c| header.iter().position(|h| *h == c.name).expect("checked above"))
        .collect();
    let level_maps: Vec<Option<HashMap<&str, u32>>> = schema
        .columns
        .iter()
        .map(|c| {
            c.scale.levels().map(|l| {
                l.iter()
                    .enumerate()
                    .map(|(i, s)| (s.as_str(), i as u32))
                    .collect()
            })
        })
        .collect();

    let mut columns: Vec<ColumnData> = schema
        .columns
        .iter()
        .map(|c| ColumnData::empty_for(&c.scale, 1024))
        .collect();

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Cell {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (ci, c) in schema.columns.iter().enumerate() {
            let raw = &record[pos[ci]];
            let missing = raw.is_empty() || raw == schema.missing_token;
            let cell_err = |message: String| Error::Cell {
                row,
                column: c.name.clone(),
                message,
            };
            match &mut columns[ci] {
                ColumnData::Numeric(v) => {
                    if missing {
                        v.push(None);
                        continue;
                    }
                    let x: f64 = raw
                        .trim()
                        .parse()
                        .map_err(|_| cell_err(format!("cannot parse `{raw}` as a number")))?;
                    if !x.is_finite() {
                        return Err(cell_err(format!("non-finite number `{raw}`")));
                    }
                    if c.scale == Scale::Binary && x != 0.0 && x != 1.0 {
                        return Err(cell_err(format!("binary cell must be 0 or 1, got `{raw}`")));
                    }
                    v.push(Some(x));
                }
                ColumnData::Coded(v) => {
                    if missing {
                        v.push(None);
                        continue;
                    }
                    let map = level_maps[ci].as_ref().expect("coded column has levels");
                    let code = map
                        .get(raw)
                        .ok_or_else(|| cell_err(format!("`{raw}` is not a declared level")))?;
                    v.push(Some(*code));
                }
                ColumnData::Text(v) => {
                    v.push(if missing { None } else { Some(raw.to_string()) });
                }
            }
        }
    }
    Dataset::new(schema.clone(), columns)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueKind {
    BrokenNesting,
    DuplicateId,
    MissingId,
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IssueKind::BrokenNesting => "broken-nesting",
            IssueKind::DuplicateId => "duplicate-id",
            IssueKind::MissingId => "missing-id",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub row: usize,
    pub column: String,
    pub kind: IssueKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn from_issues(issues: Vec<Issue>) -> Self {
        ValidationReport {
            ok: issues.is_empty(),
            issues,
        }
    }
}

/// Checks that every class sits in exactly one school and that student ids
/// are unique. Problems are reported, never raised.
pub fn validate_hierarchy(ds: &Dataset) -> ValidationReport {
    let mut issues = Vec::new();
    let id_name = |level| {
        ds.columns()
            .iter()
            .find(|c| c.role == Role::Id && c.level == level)
            .map(|c| c.name.clone())
            .unwrap_or_default()
    };

    for level in [DataLevel::Student, DataLevel::Class, DataLevel::School] {
        if ds.id_column(level).is_none() {
            issues.push(Issue {
                row: 0,
                column: String::new(),
                kind: IssueKind::MissingId,
                message: format!("no id column declared for level {level:?}"),
            });
        }
    }

    if let Some(students) = ds.id_column(DataLevel::Student) {
        let col = id_name(DataLevel::Student);
        let mut first_seen: HashMap<&str, usize> = HashMap::new();
        for (row, id) in students.iter().enumerate() {
            match id {
                None => issues.push(Issue {
                    row,
                    column: col.clone(),
                    kind: IssueKind::MissingId,
                    message: "missing student id".into(),
                }),
                Some(id) => {
                    if let Some(first) = first_seen.insert(id, row) {
                        issues.push(Issue {
                            row,
                            column: col.clone(),
                            kind: IssueKind::DuplicateId,
                            message: format!("student `{id}` already appears in row {first}"),
                        });
                        first_seen.insert(id, first);
                    }
                }
            }
        }
    }

    if let (Some(classes), Some(schools)) =
        (ds.id_column(DataLevel::Class), ds.id_column(DataLevel::School))
    {
        let col = id_name(DataLevel::Class);
        let mut school_of: BTreeMap<&str, (&str, usize)> = BTreeMap::new();
        let mut reported: HashSet<(&str, &str)> = HashSet::new();
        for row in 0..ds.n_rows() {
            let (Some(class), Some(school)) = (classes[row].as_deref(), schools[row].as_deref())
            else {
                issues.push(Issue {
                    row,
                    column: if classes[row].is_none() {
                        col.clone()
                    } else {
                        id_name(DataLevel::School)
                    },
                    kind: IssueKind::MissingId,
                    message: "missing class or school id".into(),
                });
                continue;
            };
            match school_of.get(class) {
                None => {
                    school_of.insert(class, (school, row));
                }
                Some(&(first_school, first_row)) if first_school != school => {
                    if reported.insert((class, school)) {
                        issues.push(Issue {
                            row,
                            column: col.clone(),
                            kind: IssueKind::BrokenNesting,
                            message: format!(
                                "class `{class}` is under school `{school}` here but under `{first_school}` in row {first_row}"
                            ),
                        });
                    }
                }
                Some(_) => {}
            }
        }
    }
    ValidationReport::from_issues(issues)
}
