//! Typed, column-oriented tables.
//!
//! A [`Dataset`] is an ordered list of [`ColumnSpec`]s plus one storage
//! vector per column. Numeric cells are `Option<f64>`; categorical cells are
//! `Option<u32>` codes into the column vocabulary. `None` is a missing cell.
//!
//! On disk a dataset is a delimited text file (`;` by default) with a header
//! row, plus a schema sidecar with one line per column:
//!
//! ```text
//! # name = kind,role[,vocab|code1|code2...]
//! id = numeric,id
//! x1 = numeric,feature
//! sector = categorical,feature,vocab|C|F|G
//! inn = numeric,label
//! ```
//!
//! Missing values are read from an empty field or the literal `NA`, and
//! always written as an empty field.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Feature,
    Label,
    Duration,
    Event,
    Id,
    Strata,
}

impl Role {
    /// Columns with these roles are analysis targets and never dropped by
    /// cleansing.
    pub fn is_exempt(self) -> bool {
        matches!(self, Role::Label | Role::Duration | Role::Event | Role::Id)
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
        })
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Feature => "feature",
            Role::Label => "label",
            Role::Duration => "duration",
            Role::Event => "event",
            Role::Id => "id",
            Role::Strata => "strata",
        })
    }
}

impl FromStr for ColumnKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "numeric" => Ok(ColumnKind::Numeric),
            "categorical" => Ok(ColumnKind::Categorical),
            other => Err(Error::domain(format!("unknown column kind `{other}`"))),
        }
    }
}

impl FromStr for Role {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "feature" => Ok(Role::Feature),
            "label" => Ok(Role::Label),
            "duration" => Ok(Role::Duration),
            "event" => Ok(Role::Event),
            "id" => Ok(Role::Id),
            "strata" => Ok(Role::Strata),
            other => Err(Error::domain(format!("unknown column role `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub role: Role,
    /// Category codes in declaration order. Categorical `id` columns may be
    /// declared without a vocabulary; it then grows as values are read.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vocabulary: Vec<String>,
}

impl ColumnSpec {
    pub fn numeric(name: impl Into<String>, role: Role) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Numeric,
            role,
            vocabulary: Vec::new(),
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        role: Role,
        vocabulary: impl IntoIterator<Item = S>,
    ) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Categorical,
            role,
            vocabulary: vocabulary.into_iter().map(Into::into).collect(),
        }
    }

    pub fn feature(name: impl Into<String>) -> Self {
        Self::numeric(name, Role::Feature)
    }

    fn open_vocabulary(&self) -> bool {
        self.kind == ColumnKind::Categorical && self.role == Role::Id
    }

    pub fn code_of(&self, value: &str) -> Option<u32> {
        self.vocabulary.iter().position(|v| v == value).map(|i| i as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<u32>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnData::Numeric(v) => v[row].is_none(),
            ColumnData::Categorical(v) => v[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.iter().filter(|c| c.is_none()).count(),
            ColumnData::Categorical(v) => v.iter().filter(|c| c.is_none()).count(),
        }
    }

    fn take(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Categorical(v) => ColumnData::Categorical(rows.iter().map(|&r| v[r]).collect()),
        }
    }

    fn kind(&self) -> ColumnKind {
        match self {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
        }
    }
}

/// Immutable typed table. Cloning is the only way to derive a modified copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    specs: Vec<ColumnSpec>,
    columns: Vec<ColumnData>,
    n_rows: usize,
}

impl Dataset {
    /// Build a dataset, checking every schema and cell invariant.
    pub fn new(specs: Vec<ColumnSpec>, columns: Vec<ColumnData>) -> Result<Self> {
        validate_specs(&specs)?;
        if specs.len() != columns.len() {
            return Err(Error::domain(format!(
                "{} column specs but {} data columns",
                specs.len(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, ColumnData::len);
        for (spec, col) in specs.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(Error::domain(format!(
                    "column `{}` has {} cells, expected {n_rows}",
                    spec.name,
                    col.len()
                )));
            }
            if col.kind() != spec.kind {
                return Err(Error::domain(format!(
                    "column `{}` declared {} but holds {} data",
                    spec.name,
                    spec.kind,
                    col.kind()
                )));
            }
            validate_cells(spec, col)?;
        }
        Ok(Dataset { specs, columns, n_rows })
    }

    /// A dataset with the given schema and no rows.
    pub fn empty(specs: Vec<ColumnSpec>) -> Result<Self> {
        let columns = specs
            .iter()
            .map(|s| match s.kind {
                ColumnKind::Numeric => ColumnData::Numeric(Vec::new()),
                ColumnKind::Categorical => ColumnData::Categorical(Vec::new()),
            })
            .collect();
        Dataset::new(specs, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.specs.len()
    }

    pub fn specs(&self) -> &[ColumnSpec] {
        &self.specs
    }

    pub fn spec(&self, col: usize) -> &ColumnSpec {
        &self.specs[col]
    }

    pub fn column(&self, col: usize) -> &ColumnData {
        &self.columns[col]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn column_by_name(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::domain(format!("no column named `{name}`")))
    }

    pub fn role_index(&self, role: Role) -> Option<usize> {
        self.specs.iter().position(|s| s.role == role)
    }

    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.specs.len())
            .filter(|&i| self.specs[i].role == Role::Feature)
            .collect()
    }

    pub fn numeric(&self, col: usize) -> Option<&[Option<f64>]> {
        match &self.columns[col] {
            ColumnData::Numeric(v) => Some(v),
            ColumnData::Categorical(_) => None,
        }
    }

    pub fn categorical(&self, col: usize) -> Option<&[Option<u32>]> {
        match &self.columns[col] {
            ColumnData::Categorical(v) => Some(v),
            ColumnData::Numeric(_) => None,
        }
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.columns[col].is_missing(row)
    }

    /// Binary labels as `u8`; errors if there is no label column or any
    /// label is missing.
    pub fn labels(&self) -> Result<Vec<u8>> {
        let col = self
            .role_index(Role::Label)
            .ok_or_else(|| Error::domain("dataset has no label column"))?;
        let values = self
            .numeric(col)
            .ok_or_else(|| Error::domain("label column must be numeric 0/1"))?;
        values
            .iter()
            .enumerate()
            .map(|(i, v)| match v {
                Some(x) if *x == 0.0 || *x == 1.0 => Ok(*x as u8),
                Some(x) => Err(Error::domain(format!("label {x} at row {} is not 0/1", i + 1))),
                None => Err(Error::domain(format!("label missing at row {}", i + 1))),
            })
            .collect()
    }

    /// Rows in the given order (indices may repeat).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            specs: self.specs.clone(),
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
            n_rows: rows.len(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        Dataset {
            specs: cols.iter().map(|&c| self.specs[c].clone()).collect(),
            columns: cols.iter().map(|&c| self.columns[c].clone()).collect(),
            n_rows: self.n_rows,
        }
    }

    pub fn drop_columns_named(&self, names: &[String]) -> Dataset {
        let keep: Vec<usize> = (0..self.n_cols())
            .filter(|&i| !names.contains(&self.specs[i].name))
            .collect();
        self.select_columns(&keep)
    }

    /// Append a column, returning a new dataset.
    pub fn with_column(&self, spec: ColumnSpec, data: ColumnData) -> Result<Dataset> {
        let mut specs = self.specs.clone();
        let mut columns = self.columns.clone();
        if data.len() != self.n_rows && !(self.specs.is_empty()) {
            return Err(Error::domain(format!(
                "new column `{}` has {} cells, expected {}",
                spec.name,
                data.len(),
                self.n_rows
            )));
        }
        specs.push(spec);
        columns.push(data);
        Dataset::new(specs, columns)
    }

    /// Stack rows of datasets sharing an identical schema.
    pub fn concat(parts: &[&Dataset]) -> Result<Dataset> {
        let first = parts.first().ok_or_else(|| Error::domain("nothing to concatenate"))?;
        let mut columns = first.columns.clone();
        for part in &parts[1..] {
            if part.specs != first.specs {
                return Err(Error::domain("cannot concatenate datasets with different schemas"));
            }
            for (dst, src) in columns.iter_mut().zip(&part.columns) {
                match (dst, src) {
                    (ColumnData::Numeric(d), ColumnData::Numeric(s)) => d.extend_from_slice(s),
                    (ColumnData::Categorical(d), ColumnData::Categorical(s)) => d.extend_from_slice(s),
                    _ => unreachable!("schemas are equal"),
                }
            }
        }
        Dataset::new(first.specs.clone(), columns)
    }

    /// Number of missing cells in a row.
    pub fn row_missing(&self, row: usize) -> usize {
        self.columns.iter().filter(|c| c.is_missing(row)).count()
    }

    /// Text form of a cell as written to disk (`""` when missing).
    pub fn cell_text(&self, row: usize, col: usize) -> String {
        match &self.columns[col] {
            ColumnData::Numeric(v) => v[row].map(format_number).unwrap_or_default(),
            ColumnData::Categorical(v) => v[row]
                .map(|c| self.specs[col].vocabulary[c as usize].clone())
                .unwrap_or_default(),
        }
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x}")
}

fn validate_specs(specs: &[ColumnSpec]) -> Result<()> {
    let mut names = HashSet::new();
    let mut singleton_roles = HashMap::new();
    for spec in specs {
        if spec.name.is_empty() {
            return Err(Error::domain("column names must be non-empty"));
        }
        if !names.insert(spec.name.as_str()) {
            return Err(Error::domain(format!("duplicate column name `{}`", spec.name)));
        }
        if spec.kind == ColumnKind::Categorical && spec.vocabulary.is_empty() && !spec.open_vocabulary() {
            return Err(Error::domain(format!(
                "categorical column `{}` has an empty vocabulary",
                spec.name
            )));
        }
        if matches!(spec.role, Role::Label | Role::Duration | Role::Event) && spec.kind != ColumnKind::Numeric {
            return Err(Error::domain(format!(
                "column `{}` with role {} must be numeric",
                spec.name, spec.role
            )));
        }
        if matches!(spec.role, Role::Label | Role::Duration | Role::Event | Role::Id) {
            if let Some(prev) = singleton_roles.insert(spec.role, spec.name.as_str()) {
                return Err(Error::domain(format!(
                    "role {} assigned to both `{prev}` and `{}`",
                    spec.role, spec.name
                )));
            }
        }
        if let Some(v) = spec.vocabulary.iter().find(|v| v.is_empty() || *v == "NA") {
            return Err(Error::domain(format!(
                "category `{v}` in column `{}` would be read back as missing",
                spec.name
            )));
        }
        let mut seen = HashSet::new();
        for v in &spec.vocabulary {
            if !seen.insert(v) {
                return Err(Error::domain(format!(
                    "duplicate category `{v}` in column `{}`",
                    spec.name
                )));
            }
        }
    }
    Ok(())
}

fn validate_cells(spec: &ColumnSpec, col: &ColumnData) -> Result<()> {
    match col {
        ColumnData::Numeric(values) => {
            for (i, v) in values.iter().enumerate() {
                let Some(x) = v else { continue };
                let ok = match spec.role {
                    Role::Label | Role::Event => *x == 0.0 || *x == 1.0,
                    Role::Duration => *x > 0.0 && x.is_finite(),
                    _ => x.is_finite(),
                };
                if !ok {
                    return Err(Error::domain(format!(
                        "column `{}` (role {}) has invalid value {x} at row {}",
                        spec.name,
                        spec.role,
                        i + 1
                    )));
                }
            }
        }
        ColumnData::Categorical(values) => {
            let k = spec.vocabulary.len() as u32;
            if let Some((i, c)) = values
                .iter()
                .enumerate()
                .find_map(|(i, v)| v.filter(|&c| c >= k).map(|c| (i, c)))
            {
                return Err(Error::domain(format!(
                    "column `{}` has code {c} outside its vocabulary at row {}",
                    spec.name,
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Schema sidecar

pub fn parse_schema(text: &str) -> Result<Vec<ColumnSpec>> {
    let mut specs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            row: lineno + 1,
            message: format!("schema line `{line}`: {msg}"),
        };
        let (name, rhs) = line.split_once('=').ok_or_else(|| bad("expected `name = kind,role`"))?;
        let mut parts = rhs.splitn(3, ',');
        let kind: ColumnKind = parts
            .next()
            .ok_or_else(|| bad("missing kind"))?
            .parse()
            .map_err(|e: Error| bad(&e.to_string()))?;
        let role: Role = parts
            .next()
            .ok_or_else(|| bad("missing role"))?
            .parse()
            .map_err(|e: Error| bad(&e.to_string()))?;
        let vocabulary = match parts.next() {
            None => Vec::new(),
            Some(v) => {
                let mut codes = v.trim().split('|');
                if codes.next().map(str::trim) != Some("vocab") {
                    return Err(bad("vocabulary must start with `vocab|`"));
                }
                codes.map(|c| c.trim().to_string()).collect()
            }
        };
        specs.push(ColumnSpec {
            name: name.trim().to_string(),
            kind,
            role,
            vocabulary,
        });
    }
    validate_specs(&specs)?;
    Ok(specs)
}

pub fn format_schema(specs: &[ColumnSpec]) -> String {
    let mut out = String::new();
    for s in specs {
        out.push_str(&format!("{} = {},{}", s.name, s.kind, s.role));
        if !s.vocabulary.is_empty() {
            out.push_str(",vocab");
            for v in &s.vocabulary {
                out.push('|');
                out.push_str(v);
            }
        }
        out.push('\n');
    }
    out
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<ColumnSpec>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_schema(&text)
}

pub fn write_schema(specs: &[ColumnSpec], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), format_schema(specs).as_bytes())
}

/// Write `bytes` to a sibling temporary file and rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::domain(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// CSV

#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b';' }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &[ColumnSpec]) -> Result<Dataset> {
    load_csv_with(path, schema, CsvOptions::default())
}

pub fn load_csv_with(path: impl AsRef<Path>, schema: &[ColumnSpec], options: CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_csv(&bytes, schema, options)
}

/// Parse delimited text against a schema.
pub fn read_csv(bytes: &[u8], schema: &[ColumnSpec], options: CsvOptions) -> Result<Dataset> {
    validate_specs(schema)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let header = reader.headers().map_err(|e| Error::Parse {
        row: 0,
        message: e.to_string(),
    })?;
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let expected: Vec<&str> = schema.iter().map(|s| s.name.as_str()).collect();
    if names != expected {
        return Err(Error::Parse {
            row: 0,
            message: format!("header {names:?} does not match schema {expected:?}"),
        });
    }

    let mut specs = schema.to_vec();
    let mut columns: Vec<ColumnData> = specs
        .iter()
        .map(|s| match s.kind {
            ColumnKind::Numeric => ColumnData::Numeric(Vec::new()),
            ColumnKind::Categorical => ColumnData::Categorical(Vec::new()),
        })
        .collect();

    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != specs.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", specs.len(), record.len()),
            });
        }
        for ((field, spec), col) in record.iter().zip(specs.iter_mut()).zip(columns.iter_mut()) {
            let field = field.trim();
            let missing = field.is_empty() || field == "NA";
            match col {
                ColumnData::Numeric(v) => {
                    if missing {
                        v.push(None);
                    } else {
                        let x: f64 = field.parse().map_err(|_| Error::Parse {
                            row,
                            message: format!("column `{}`: `{field}` is not a number", spec.name),
                        })?;
                        v.push(Some(x));
                    }
                }
                ColumnData::Categorical(v) => {
                    if missing {
                        v.push(None);
                    } else if let Some(code) = spec.code_of(field) {
                        v.push(Some(code));
                    } else if spec.open_vocabulary() {
                        spec.vocabulary.push(field.to_string());
                        v.push(Some(spec.vocabulary.len() as u32 - 1));
                    } else {
                        return Err(Error::Domain(format!(
                            "row {row}: column `{}` value `{field}` is not in its vocabulary",
                            spec.name
                        )));
                    }
                }
            }
        }
    }
    Dataset::new(specs, columns)
}

pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv_with(data, path, CsvOptions::default())
}

pub fn write_csv_with(data: &Dataset, path: impl AsRef<Path>, options: CsvOptions) -> Result<()> {
    let path = path.as_ref();
    write_atomic(path, &to_csv_bytes(data, options)?)
}

pub fn to_csv_bytes(data: &Dataset, options: CsvOptions) -> Result<Vec<u8>> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(options.delimiter)
        .from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::domain(format!("csv encoding: {e}"));
    writer
        .write_record(data.specs.iter().map(|s| s.name.as_str()))
        .map_err(to_err)?;
    for row in 0..data.n_rows {
        writer
            .write_record((0..data.n_cols()).map(|c| data.cell_text(row, c)))
            .map_err(to_err)?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::domain(format!("csv encoding: {e}")))
}

// ---------------------------------------------------------------------------
// Summary

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnSummaryKind {
    /// `stats` is `None` when every cell is missing.
    Numeric {
        stats: Option<NumericStats>,
    },
    Categorical {
        frequencies: Vec<(String, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub role: Role,
    pub missing: usize,
    #[serde(flatten)]
    pub detail: ColumnSummaryKind,
}

pub fn summarize(data: &Dataset) -> Vec<ColumnSummary> {
    data.specs
        .iter()
        .zip(&data.columns)
        .map(|(spec, col)| {
            let detail = match col {
                ColumnData::Numeric(v) => {
                    let present: Vec<f64> = v.iter().flatten().copied().collect();
                    let stats = stats::quartiles(&present).map(|(q1, median, q3)| NumericStats {
                        min: present.iter().copied().fold(f64::INFINITY, f64::min),
                        q1,
                        median,
                        mean: stats::mean(&present),
                        q3,
                        max: present.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    });
                    ColumnSummaryKind::Numeric { stats }
                }
                ColumnData::Categorical(v) => {
                    let mut counts = vec![0usize; spec.vocabulary.len()];
                    for c in v.iter().flatten() {
                        counts[*c as usize] += 1;
                    }
                    ColumnSummaryKind::Categorical {
                        frequencies: spec.vocabulary.iter().cloned().zip(counts).collect(),
                    }
                }
            };
            ColumnSummary {
                name: spec.name.clone(),
                role: spec.role,
                missing: col.missing_count(),
                detail,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Vocabulary for the first synthetic categorical column (ATECO sections).
pub const SECTOR_LEVELS: [&str; 6] = ["C", "G", "M", "J", "F", "I"];
/// Vocabulary for the second synthetic categorical column (provinces).
pub const LOCATION_LEVELS: [&str; 6] = ["MI", "RM", "TO", "PA", "BO", "FI"];

/// Yearly failure rate of the reference (label 0) class.
pub const BASE_HAZARD: f64 = 0.0375;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_numeric: usize,
    pub n_categorical: usize,
    pub minority_fraction: f64,
    pub class_separation: f64,
    pub hazard_ratio_true: f64,
    pub censoring_horizon: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_rows: 10_000,
            n_numeric: 18,
            n_categorical: 2,
            minority_fraction: 0.05,
            class_separation: 1.0,
            hazard_ratio_true: 0.65,
            censoring_horizon: 10.0,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.minority_fraction > 0.0 && self.minority_fraction < 0.5) {
            return Err(Error::domain("minority_fraction must lie in (0, 0.5)"));
        }
        if !(self.hazard_ratio_true > 0.0 && self.hazard_ratio_true.is_finite()) {
            return Err(Error::domain("hazard_ratio_true must be positive"));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return Err(Error::domain("class_separation must be non-negative"));
        }
        if !(self.censoring_horizon > 0.0) {
            return Err(Error::domain("censoring_horizon must be positive"));
        }
        Ok(())
    }

    /// Numeric features `x1..=xk` with `k = ceil(n_numeric / 2)` carry the
    /// class shift; the rest are pure noise.
    pub fn informative_features(&self) -> usize {
        self.n_numeric.div_ceil(2)
    }
}

fn categorical_levels(index: usize) -> (String, Vec<String>) {
    match index {
        0 => ("sector".into(), SECTOR_LEVELS.iter().map(|s| s.to_string()).collect()),
        1 => (
            "location".into(),
            LOCATION_LEVELS.iter().map(|s| s.to_string()).collect(),
        ),
        k => (format!("cat{}", k + 1), (1..=4).map(|l| format!("L{l}")).collect()),
    }
}

/// Seeded stand-in for a firm register.
///
/// Columns: `id`, `x1..xN` (numeric features), categorical features
/// (`sector`, `location`, `cat3`...), `inn` (label), `duration`, `event`.
/// Exactly `round(minority_fraction * n)` rows carry label 1. Informative
/// features are `N(class_separation * label, 1)`; categorical features are
/// drawn independently of everything else with skewed level frequencies.
/// Survival times are exponential with yearly rate
/// `BASE_HAZARD * hazard_ratio_true^label`, censored at the horizon.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.n_rows;
    let mut specs = vec![ColumnSpec::numeric("id", Role::Id)];
    let mut columns = vec![ColumnData::Numeric((1..=n).map(|i| Some(i as f64)).collect())];

    let n_pos = (spec.minority_fraction * n as f64).round() as usize;
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n_pos)).collect();
    labels.shuffle(&mut rng::stream(spec.seed, "synthetic/label"));

    let informative = spec.informative_features();
    for j in 0..spec.n_numeric {
        let mut r = rng::indexed_stream(spec.seed, "synthetic/numeric", j as u64);
        let shift = if j < informative { spec.class_separation } else { 0.0 };
        let values = labels
            .iter()
            .map(|&y| {
                let z: f64 = StandardNormal.sample(&mut r);
                Some(z + shift * f64::from(y))
            })
            .collect();
        specs.push(ColumnSpec::feature(format!("x{}", j + 1)));
        columns.push(ColumnData::Numeric(values));
    }

    for j in 0..spec.n_categorical {
        let (name, vocab) = categorical_levels(j);
        let weights: Vec<f64> = (0..vocab.len()).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        let total: f64 = weights.iter().sum();
        let mut r = rng::indexed_stream(spec.seed, "synthetic/categorical", j as u64);
        let values = (0..n)
            .map(|_| {
                let mut u = r.random::<f64>() * total;
                let mut code = vocab.len() - 1;
                for (k, w) in weights.iter().enumerate() {
                    if u < *w {
                        code = k;
                        break;
                    }
                    u -= w;
                }
                Some(code as u32)
            })
            .collect();
        specs.push(ColumnSpec::categorical(name, Role::Feature, vocab));
        columns.push(ColumnData::Categorical(values));
    }

    let mut r = rng::stream(spec.seed, "synthetic/survival");
    let mut durations = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for &y in &labels {
        let rate = BASE_HAZARD * spec.hazard_ratio_true.powi(i32::from(y));
        let t: f64 = Exp::new(rate)
            .map_err(|e| Error::domain(format!("invalid hazard: {e}")))?
            .sample(&mut r);
        if t > spec.censoring_horizon {
            durations.push(Some(spec.censoring_horizon));
            events.push(Some(0.0));
        } else {
            durations.push(Some(t.max(1e-9)));
            events.push(Some(1.0));
        }
    }

    specs.push(ColumnSpec::numeric("inn", Role::Label));
    columns.push(ColumnData::Numeric(
        labels.iter().map(|&y| Some(f64::from(y))).collect(),
    ));
    specs.push(ColumnSpec::numeric("duration", Role::Duration));
    columns.push(ColumnData::Numeric(durations));
    specs.push(ColumnSpec::numeric("event", Role::Event));
    columns.push(ColumnData::Numeric(events));

    Dataset::new(specs, columns)
}

/// Blank out feature cells completely at random, independently of every
/// other column. `rates` maps column name to missing probability.
pub fn inject_missing(data: &Dataset, rates: &BTreeMap<String, f64>, seed: u64) -> Result<Dataset> {
    let mut columns = data.columns.clone();
    for (name, &rate) in rates {
        let col = data.column_by_name(name)?;
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::domain(format!(
                "missing rate {rate} for `{name}` outside [0, 1]"
            )));
        }
        let mut r = rng::stream(seed, &format!("missing/{name}"));
        match &mut columns[col] {
            ColumnData::Numeric(v) => v.iter_mut().for_each(|c| {
                if r.random::<f64>() < rate {
                    *c = None;
                }
            }),
            ColumnData::Categorical(v) => v.iter_mut().for_each(|c| {
                if r.random::<f64>() < rate {
                    *c = None;
                }
            }),
        }
    }
    Dataset::new(data.specs.clone(), columns)
}

/// Missing rates rising linearly from 0 to `max_rate` across feature columns.
pub fn ramp_missing_rates(data: &Dataset, max_rate: f64) -> BTreeMap<String, f64> {
    let features = data.feature_indices();
    let k = features.len().max(2) - 1;
    features
        .iter()
        .enumerate()
        .map(|(i, &c)| (data.spec(c).name.clone(), max_rate * i as f64 / k as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema3() -> Vec<ColumnSpec> {
        vec![
            ColumnSpec::categorical("firm", Role::Feature, ["A7", "B2"]),
            ColumnSpec::feature("assets"),
            ColumnSpec::feature("revenue"),
        ]
    }

    #[test]
    fn empty_file_gives_zero_rows() {
        let d = read_csv(b"firm;assets;revenue\n", &schema3(), CsvOptions::default()).unwrap();
        assert_eq!(d.n_rows(), 0);
        assert_eq!(d.n_cols(), 3);
    }

    #[test]
    fn empty_field_is_missing() {
        let d = read_csv(b"firm;assets;revenue\nA7;;1.5\n", &schema3(), CsvOptions::default()).unwrap();
        assert!(d.is_missing(0, 1));
        assert_eq!(d.numeric(2).unwrap()[0], Some(1.5));
        assert_eq!(d.categorical(0).unwrap()[0], Some(0));
    }

    #[test]
    fn label_with_na_counts_missing() {
        let schema = vec![ColumnSpec::feature("x"), ColumnSpec::numeric("y", Role::Label)];
        let d = read_csv(b"x;y\n1;1\n2;0\n3;NA\n", &schema, CsvOptions::default()).unwrap();
        assert_eq!(d.column(1).missing_count(), 1);
        assert!(d.labels().is_err());
    }

    #[test]
    fn malformed_width_reports_row() {
        let err = read_csv(
            b"firm;assets;revenue\nA7;1;2\nB2;3\n",
            &schema3(),
            CsvOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_category_is_domain_error_naming_value() {
        let err = read_csv(b"firm;assets;revenue\nZZ;1;2\n", &schema3(), CsvOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Domain(_)));
        assert!(msg.contains("firm") && msg.contains("ZZ"), "{msg}");
    }

    #[test]
    fn non_numeric_text_is_parse_error() {
        let err = read_csv(b"firm;assets;revenue\nA7;abc;2\n", &schema3(), CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
    }

    #[test]
    fn header_mismatch_is_rejected() {
        assert!(read_csv(b"firm;revenue;assets\n", &schema3(), CsvOptions::default()).is_err());
    }

    #[test]
    fn comma_delimiter() {
        let d = read_csv(
            b"firm,assets,revenue\nB2,1,NA\n",
            &schema3(),
            CsvOptions { delimiter: b',' },
        )
        .unwrap();
        assert_eq!(d.n_rows(), 1);
        assert!(d.is_missing(0, 2));
    }

    #[test]
    fn write_empty_and_missing() {
        let d = Dataset::empty(schema3()).unwrap();
        let text = String::from_utf8(to_csv_bytes(&d, CsvOptions::default()).unwrap()).unwrap();
        assert_eq!(text, "firm;assets;revenue\n");

        let d = read_csv(b"firm;assets;revenue\nA7;NA;1.5\n", &schema3(), CsvOptions::default()).unwrap();
        let text = String::from_utf8(to_csv_bytes(&d, CsvOptions::default()).unwrap()).unwrap();
        assert_eq!(text, "firm;assets;revenue\nA7;;1.5\n");
    }

    #[test]
    fn invariants_are_enforced() {
        let dup = vec![ColumnSpec::feature("a"), ColumnSpec::feature("a")];
        assert!(Dataset::empty(dup).is_err());
        let two_labels = vec![
            ColumnSpec::numeric("a", Role::Label),
            ColumnSpec::numeric("b", Role::Label),
        ];
        assert!(Dataset::empty(two_labels).is_err());
        let bad_duration = Dataset::new(
            vec![ColumnSpec::numeric("t", Role::Duration)],
            vec![ColumnData::Numeric(vec![Some(0.0)])],
        );
        assert!(bad_duration.is_err());
        let bad_event = Dataset::new(
            vec![ColumnSpec::numeric("e", Role::Event)],
            vec![ColumnData::Numeric(vec![Some(2.0)])],
        );
        assert!(bad_event.is_err());
        let no_vocab = vec![ColumnSpec::categorical("s", Role::Feature, Vec::<String>::new())];
        assert!(Dataset::empty(no_vocab).is_err());
        for marker in ["NA", ""] {
            let reserved = vec![ColumnSpec::categorical("s", Role::Feature, ["MI", marker])];
            assert!(Dataset::empty(reserved).is_err(), "{marker:?}");
        }
    }

    #[test]
    fn schema_sidecar_round_trip() {
        let text = "# comment\nid = categorical,id\nx = numeric,feature\nsector = categorical,feature,vocab|C|F|G\ninn = numeric,label\n";
        let specs = parse_schema(text).unwrap();
        assert_eq!(specs.len(), 4);
        assert_eq!(specs[2].vocabulary, vec!["C", "F", "G"]);
        assert_eq!(parse_schema(&format_schema(&specs)).unwrap(), specs);
        assert!(parse_schema("x = numeric").is_err());
        assert!(parse_schema("x = numeric,feature,C|F").is_err());
    }

    #[test]
    fn open_vocabulary_for_ids() {
        let schema = parse_schema("id = categorical,id\nx = numeric,feature").unwrap();
        let d = read_csv(b"id;x\nf-001;1\nf-002;2\nf-001;3\n", &schema, CsvOptions::default()).unwrap();
        assert_eq!(d.spec(0).vocabulary, vec!["f-001", "f-002"]);
        assert_eq!(d.categorical(0).unwrap(), &[Some(0), Some(1), Some(0)]);
    }

    #[test]
    fn summary_values() {
        let d = Dataset::new(
            vec![
                ColumnSpec::feature("x"),
                ColumnSpec::feature("gone"),
                ColumnSpec::categorical("c", Role::Feature, ["a", "b"]),
            ],
            vec![
                ColumnData::Numeric(vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)]),
                ColumnData::Numeric(vec![None; 4]),
                ColumnData::Categorical(vec![Some(0), Some(0), Some(1), None]),
            ],
        )
        .unwrap();
        let s = summarize(&d);
        match &s[0].detail {
            ColumnSummaryKind::Numeric { stats: Some(st) } => {
                assert_eq!((st.q1, st.median, st.q3), (1.75, 2.5, 3.25));
                assert_eq!((st.min, st.mean, st.max), (1.0, 2.5, 4.0));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(s[1].missing, 4);
        assert_eq!(s[1].detail, ColumnSummaryKind::Numeric { stats: None });
        assert_eq!(
            s[2].detail,
            ColumnSummaryKind::Categorical {
                frequencies: vec![("a".into(), 2), ("b".into(), 1)]
            }
        );
    }

    #[test]
    fn synthetic_is_deterministic_and_balanced() {
        let spec = SyntheticSpec {
            n_rows: 2_000,
            minority_fraction: 0.07,
            ..SyntheticSpec::default()
        };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        let y = a.labels().unwrap();
        let frac = y.iter().map(|&v| f64::from(v)).sum::<f64>() / y.len() as f64;
        assert!((frac - 0.07).abs() <= 0.02);
        let c = generate_synthetic(&SyntheticSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_censoring_rule() {
        let spec = SyntheticSpec {
            n_rows: 3_000,
            censoring_horizon: 5.0,
            ..SyntheticSpec::default()
        };
        let d = generate_synthetic(&spec).unwrap();
        let t = d.numeric(d.role_index(Role::Duration).unwrap()).unwrap();
        let e = d.numeric(d.role_index(Role::Event).unwrap()).unwrap();
        for (t, e) in t.iter().zip(e) {
            let (t, e) = (t.unwrap(), e.unwrap());
            assert!(t > 0.0 && t <= 5.0);
            if e == 0.0 {
                assert_eq!(t, 5.0);
            }
        }
    }

    #[test]
    fn zero_separation_gives_matching_class_means() {
        let spec = SyntheticSpec {
            n_rows: 20_000,
            n_numeric: 2,
            n_categorical: 0,
            minority_fraction: 0.3,
            class_separation: 0.0,
            ..SyntheticSpec::default()
        };
        let d = generate_synthetic(&spec).unwrap();
        let y = d.labels().unwrap();
        let x = d.numeric(d.column_by_name("x1").unwrap()).unwrap();
        let (mut s1, mut n1, mut s0, mut n0) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (v, &l) in x.iter().zip(&y) {
            if l == 1 {
                s1 += v.unwrap();
                n1 += 1.0;
            } else {
                s0 += v.unwrap();
                n0 += 1.0;
            }
        }
        // 4 standard errors of the difference
        let se = (1.0 / n1 + 1.0 / n0).sqrt();
        assert!((s1 / n1 - s0 / n0).abs() < 4.0 * se);
    }

    #[test]
    fn injected_missingness_hits_only_named_columns() {
        let d = generate_synthetic(&SyntheticSpec {
            n_rows: 500,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let rates = BTreeMap::from([("x1".to_string(), 0.5)]);
        let m = inject_missing(&d, &rates, 3).unwrap();
        let x1 = m.column_by_name("x1").unwrap();
        let miss = m.column(x1).missing_count();
        assert!(miss > 180 && miss < 320, "{miss}");
        assert_eq!(m.column(m.column_by_name("x2").unwrap()).missing_count(), 0);
    }
}
