//! Typed, content-addressed tabular datasets.
//!
//! A dataset is a CSV file plus a metadata sidecar declaring each column's
//! kind. Identity is the SHA-256 digest of the CSV bytes, so byte-identical
//! files always map to the same dataset id.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Count,
    /// 0/1 only.
    Binary,
    /// Integer codes `0..levels`.
    Ordinal,
    /// Free-form labels identifying a grouping unit (participant, item, study).
    Group,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<(f64, f64)>,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnMeta {
            name: name.into(),
            kind,
            levels: None,
            bounds: None,
        }
    }
}

/// Declares that `response` counts successes out of `trials` rowwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialsPair {
    pub response: String,
    pub trials: String,
}

/// The metadata sidecar (`<dataset>.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    pub columns: Vec<ColumnMeta>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trials: Vec<TrialsPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

fn schema_version() -> u32 {
    1
}

impl DatasetMeta {
    pub fn new(columns: Vec<ColumnMeta>) -> Self {
        DatasetMeta {
            schema_version: 1,
            digest: None,
            columns,
            trials: Vec::new(),
            provenance: None,
        }
    }

    pub fn column(&self, name: &str) -> Option<&ColumnMeta> {
        self.columns.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Labels(Vec<String>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Labels(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetTable {
    id: String,
    digest: String,
    meta: DatasetMeta,
    columns: BTreeMap<String, ColumnData>,
    order: Vec<String>,
    rows: usize,
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Dataset ids are the first 12 hex digits of the content digest.
pub fn id_from_digest(digest: &str) -> String {
    format!("d-{}", &digest[..12])
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

impl DatasetTable {
    /// Parses and validates CSV content against its metadata.
    pub fn from_csv_bytes(bytes: &[u8], meta: DatasetMeta) -> Result<Self> {
        let digest = digest_bytes(bytes);
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        for h in &headers {
            if meta.column(h).is_none() {
                return Err(Error::InvalidDataset(format!(
                    "column '{h}' is not declared in the metadata"
                )));
            }
        }
        for c in &meta.columns {
            if !headers.contains(&c.name) {
                return Err(Error::MissingColumn(c.name.clone()));
            }
        }
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for record in reader.records() {
            let record = record?;
            for (i, cell) in record.iter().enumerate() {
                raw[i].push(cell.to_string());
            }
        }
        let mut columns = BTreeMap::new();
        for (name, cells) in headers.iter().zip(raw) {
            let cm = meta.column(name).expect("checked above");
            let data = if cm.kind == ColumnKind::Group {
                for (row, cell) in cells.iter().enumerate() {
                    if cell.is_empty() {
                        return Err(Error::DataType {
                            row: row + 1,
                            column: name.clone(),
                            message: "empty group label".into(),
                        });
                    }
                }
                ColumnData::Labels(cells)
            } else {
                let mut values = Vec::with_capacity(cells.len());
                for (row, cell) in cells.iter().enumerate() {
                    let v: f64 = cell.parse().map_err(|_| Error::DataType {
                        row: row + 1,
                        column: name.clone(),
                        message: format!("'{cell}' is not a number"),
                    })?;
                    values.push(v);
                }
                ColumnData::Numeric(values)
            };
            columns.insert(name.clone(), data);
        }
        let table = DatasetTable {
            id: id_from_digest(&digest),
            digest: digest.clone(),
            rows: columns.values().next().map_or(0, ColumnData::len),
            meta: DatasetMeta {
                digest: Some(digest),
                ..meta
            },
            columns,
            order: headers,
        };
        table.validate()?;
        Ok(table)
    }

    /// Builds a table from in-memory columns (in the order given). The
    /// digest is that of the canonical CSV rendering.
    pub fn from_columns(meta: DatasetMeta, columns: Vec<(String, ColumnData)>) -> Result<Self> {
        let order: Vec<String> = columns.iter().map(|(n, _)| n.clone()).collect();
        let rows = columns.first().map_or(0, |(_, c)| c.len());
        if let Some((name, _)) = columns.iter().find(|(_, c)| c.len() != rows) {
            return Err(Error::InvalidDataset(format!(
                "column '{name}' has a different length"
            )));
        }
        let mut table = DatasetTable {
            id: String::new(),
            digest: String::new(),
            meta,
            columns: columns.into_iter().collect(),
            order,
            rows,
        };
        for c in &table.meta.columns {
            if !table.columns.contains_key(&c.name) {
                return Err(Error::MissingColumn(c.name.clone()));
            }
        }
        for name in &table.order {
            if table.meta.column(name).is_none() {
                return Err(Error::InvalidDataset(format!(
                    "column '{name}' is not declared in the metadata"
                )));
            }
        }
        table.validate()?;
        let digest = digest_bytes(table.to_csv().as_bytes());
        table.id = id_from_digest(&digest);
        table.meta.digest = Some(digest.clone());
        table.digest = digest;
        Ok(table)
    }

    /// Overrides the content-derived id (for fixtures and aliases).
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    fn validate(&self) -> Result<()> {
        for cm in &self.meta.columns {
            let Some(ColumnData::Numeric(values)) = self.columns.get(&cm.name) else {
                if cm.kind != ColumnKind::Group {
                    return Err(Error::InvalidDataset(format!(
                        "column '{}' must be numeric",
                        cm.name
                    )));
                }
                continue;
            };
            for (row, &v) in values.iter().enumerate() {
                let bad = |message: String| Error::DataType {
                    row: row + 1,
                    column: cm.name.clone(),
                    message,
                };
                if !v.is_finite() {
                    return Err(bad(format!("{v} is not finite")));
                }
                match cm.kind {
                    ColumnKind::Count if v < 0.0 || v.fract() != 0.0 => {
                        return Err(bad(format!("{v} is not a non-negative integer count")))
                    }
                    ColumnKind::Binary if v != 0.0 && v != 1.0 => {
                        return Err(bad(format!("{v} is not binary (0/1)")))
                    }
                    ColumnKind::Ordinal => {
                        let levels = cm.levels.unwrap_or(u32::MAX) as f64;
                        if v < 0.0 || v.fract() != 0.0 || v >= levels {
                            return Err(bad(format!("{v} is not an ordinal code below {levels}")));
                        }
                    }
                    _ => {}
                }
                if let Some((lo, hi)) = cm.bounds {
                    if v < lo || v > hi {
                        return Err(bad(format!("{v} outside bounds [{lo}, {hi}]")));
                    }
                }
            }
        }
        for pair in &self.meta.trials {
            let response = self.numeric(&pair.response)?;
            let trials = self.numeric(&pair.trials)?;
            for (row, (&y, &n)) in response.iter().zip(trials).enumerate() {
                if y > n {
                    return Err(Error::DataType {
                        row: row + 1,
                        column: pair.response.clone(),
                        message: format!("{y} exceeds the {n} trials in '{}'", pair.trials),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn column_names(&self) -> &[String] {
        &self.order
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn require_columns<'a>(&self, names: impl IntoIterator<Item = &'a String>) -> Result<()> {
        for name in names {
            if !self.has_column(name) {
                return Err(Error::MissingColumn(name.clone()));
            }
        }
        Ok(())
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.columns.get(name) {
            Some(ColumnData::Numeric(v)) => Ok(v),
            Some(ColumnData::Labels(_)) => Err(Error::InvalidInput(format!(
                "column '{name}' holds labels, not numbers"
            ))),
            None => Err(Error::MissingColumn(name.to_string())),
        }
    }

    /// Column values as grouping labels (numbers are formatted).
    pub fn labels(&self, name: &str) -> Result<Vec<String>> {
        match self.columns.get(name) {
            Some(ColumnData::Labels(v)) => Ok(v.clone()),
            Some(ColumnData::Numeric(v)) => Ok(v.iter().map(|&x| format_number(x)).collect()),
            None => Err(Error::MissingColumn(name.to_string())),
        }
    }

    pub fn column(&self, name: &str) -> Option<&ColumnData> {
        self.columns.get(name)
    }

    /// Canonical CSV rendering (header plus one line per row).
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.order).expect("in-memory write");
        for row in 0..self.rows {
            let record: Vec<String> = self
                .order
                .iter()
                .map(|name| match &self.columns[name] {
                    ColumnData::Numeric(v) => format_number(v[row]),
                    ColumnData::Labels(v) => v[row].clone(),
                })
                .collect();
            writer.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// Row-subset copy (keeps id and metadata).
    pub fn select_rows(&self, rows: &[usize]) -> DatasetTable {
        let columns = self
            .columns
            .iter()
            .map(|(name, data)| {
                let data = match data {
                    ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
                    ColumnData::Labels(v) => {
                        ColumnData::Labels(rows.iter().map(|&r| v[r].clone()).collect())
                    }
                };
                (name.clone(), data)
            })
            .collect();
        DatasetTable {
            id: self.id.clone(),
            digest: self.digest.clone(),
            meta: self.meta.clone(),
            columns,
            order: self.order.clone(),
            rows: rows.len(),
        }
    }

    /// Stacks tables that share the given columns, adding a `study_column`
    /// of labels `study_labels[i]` for rows from table `i`.
    pub fn concat(
        tables: &[&DatasetTable],
        columns: &[String],
        study_column: &str,
        study_labels: &[String],
    ) -> Result<DatasetTable> {
        let first = tables
            .first()
            .ok_or_else(|| Error::InvalidInput("no datasets to concatenate".into()))?;
        let mut metas = Vec::new();
        let mut data = Vec::new();
        for name in columns {
            let cm = first
                .meta
                .column(name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))?
                .clone();
            let mut merged = match first.column(name) {
                Some(ColumnData::Numeric(_)) => ColumnData::Numeric(Vec::new()),
                _ => ColumnData::Labels(Vec::new()),
            };
            for t in tables {
                match (&mut merged, t.column(name)) {
                    (ColumnData::Numeric(out), Some(ColumnData::Numeric(v))) => {
                        out.extend_from_slice(v)
                    }
                    (ColumnData::Labels(out), Some(_)) => out.extend(t.labels(name)?),
                    (_, None) => {
                        return Err(Error::InvalidDataset(format!(
                            "dataset {} lacks column '{name}'",
                            t.id()
                        )))
                    }
                    (_, Some(_)) => {
                        return Err(Error::InvalidDataset(format!(
                            "column '{name}' has mismatched types across datasets"
                        )))
                    }
                }
            }
            metas.push(cm);
            data.push((name.clone(), merged));
        }
        let mut labels = Vec::new();
        for (t, label) in tables.iter().zip(study_labels) {
            labels.extend(std::iter::repeat(label.clone()).take(t.n_rows()));
        }
        metas.push(ColumnMeta::new(study_column, ColumnKind::Group));
        data.push((study_column.to_string(), ColumnData::Labels(labels)));
        let mut meta = DatasetMeta::new(metas);
        meta.trials = first
            .meta
            .trials
            .iter()
            .filter(|p| columns.contains(&p.response) && columns.contains(&p.trials))
            .cloned()
            .collect();
        DatasetTable::from_columns(meta, data)
    }
}
