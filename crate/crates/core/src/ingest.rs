//! CSV loading and missing-value imputation.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{Kind, MissingPolicy, Role, Schema};

/// Category substituted for missing categorical cells.
pub const MISSING_TOKEN: &str = "MISSING";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Category(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    fn parse(raw: &str, kind: Kind) -> Cell {
        let raw = raw.trim();
        if raw.is_empty() {
            return Cell::Missing;
        }
        match kind {
            Kind::Numeric => match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Cell::Number(v),
                _ => Cell::Missing,
            },
            Kind::Categorical => Cell::Category(raw.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestMetadata {
    /// File columns absent from the schema, dropped while loading.
    pub dropped_columns: Vec<String>,
    /// Numeric columns that had no value at all and were filled with 0.
    pub all_missing_columns: Vec<String>,
    /// Whether the label column was present in the source file.
    pub label_present: bool,
}

impl IngestMetadata {
    pub fn dropped_count(&self) -> usize {
        self.dropped_columns.len()
    }
}

/// Column-oriented table; `columns[i]` follows `schema.columns()[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub schema: Schema,
    pub columns: Vec<Vec<Cell>>,
    pub row_count: usize,
    pub metadata: IngestMetadata,
}

impl RawTable {
    pub fn new(schema: Schema, columns: Vec<Vec<Cell>>) -> Result<Self> {
        if columns.len() != schema.columns().len() {
            return Err(Error::SchemaMismatch(format!(
                "{} column vectors for {} schema columns",
                columns.len(),
                schema.columns().len()
            )));
        }
        let row_count = columns.first().map_or(0, Vec::len);
        if let Some((i, _)) = columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.len() != row_count)
        {
            return Err(Error::SchemaMismatch(format!(
                "column {:?} has {} cells, expected {row_count}",
                schema.columns()[i].name,
                columns[i].len()
            )));
        }
        Ok(Self {
            schema,
            columns,
            row_count,
            metadata: IngestMetadata {
                label_present: true,
                ..Default::default()
            },
        })
    }

    pub fn column(&self, name: &str) -> Option<&[Cell]> {
        self.schema
            .position(name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn missing_count(&self) -> usize {
        self.columns
            .iter()
            .flatten()
            .filter(|c| c.is_missing())
            .count()
    }
}

/// Loads a CSV whose header must name every schema column.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<RawTable> {
    load_path(path.as_ref(), schema, true)
}

/// Like [`load_csv`] but tolerates an absent label column (prediction input).
pub fn load_unlabeled_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<RawTable> {
    load_path(path.as_ref(), schema, false)
}

fn load_path(path: &Path, schema: &Schema, require_label: bool) -> Result<RawTable> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, schema, require_label)
}

/// Parses CSV from any reader. Missing label columns are filled with
/// [`Cell::Missing`] when `require_label` is false.
pub fn read_csv<R: Read>(reader: R, schema: &Schema, require_label: bool) -> Result<RawTable> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let header = csv
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    if header.is_empty() {
        return Err(Error::Parse {
            row: 0,
            message: "missing header row".into(),
        });
    }

    let label_name = &schema.label().name;
    let mut source_index = Vec::with_capacity(schema.columns().len());
    let mut label_present = true;
    for spec in schema.columns() {
        match header.iter().position(|h| h.trim() == spec.name) {
            Some(i) => source_index.push(Some(i)),
            None if !require_label && &spec.name == label_name => {
                label_present = false;
                source_index.push(None);
            }
            None => {
                return Err(Error::SchemaMismatch(format!(
                    "header is missing column {:?}",
                    spec.name
                )))
            }
        }
    }
    let dropped_columns = header
        .iter()
        .filter(|h| schema.column(h.trim()).is_none())
        .map(str::to_string)
        .collect();

    let width = header.len();
    let mut columns: Vec<Vec<Cell>> = vec![Vec::new(); schema.columns().len()];
    let mut record = csv::StringRecord::new();
    let mut row = 0usize;
    loop {
        let more = csv.read_record(&mut record).map_err(|e| Error::Parse {
            row: row + 1,
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        row += 1;
        if record.len() != width {
            return Err(Error::Parse {
                row,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for ((spec, src), column) in schema.columns().iter().zip(&source_index).zip(&mut columns) {
            let cell = match src {
                Some(i) => Cell::parse(&record[*i], spec.kind),
                None => Cell::Missing,
            };
            column.push(cell);
        }
    }

    Ok(RawTable {
        schema: schema.clone(),
        columns,
        row_count: row,
        metadata: IngestMetadata {
            dropped_columns,
            all_missing_columns: Vec::new(),
            label_present,
        },
    })
}

/// Per-column fill values learned from a table.
///
/// Numeric columns store the mean of their non-missing cells (0 when none
/// exist). Stored in model files so prediction-time gaps are filled with
/// training statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Imputation {
    pub numeric_fill: BTreeMap<String, f64>,
    pub all_missing: Vec<String>,
}

impl Imputation {
    pub fn fit(table: &RawTable) -> Self {
        let mut out = Imputation::default();
        for (spec, column) in table.schema.columns().iter().zip(&table.columns) {
            if spec.role != Role::Feature || spec.missing_policy() != MissingPolicy::Mean {
                continue;
            }
            let (sum, n) = column
                .iter()
                .fold((0.0f64, 0usize), |(s, n), cell| match cell {
                    Cell::Number(v) => (s + v, n + 1),
                    _ => (s, n),
                });
            let fill = if n == 0 {
                out.all_missing.push(spec.name.clone());
                0.0
            } else {
                sum / n as f64
            };
            out.numeric_fill.insert(spec.name.clone(), fill);
        }
        out
    }

    /// Fills missing feature cells. Label and ignored columns are untouched.
    pub fn apply(&self, mut table: RawTable) -> RawTable {
        for (spec, column) in table.schema.columns().iter().zip(table.columns.iter_mut()) {
            if spec.role != Role::Feature {
                continue;
            }
            let fill = match spec.missing_policy() {
                MissingPolicy::Mean => {
                    Cell::Number(self.numeric_fill.get(&spec.name).copied().unwrap_or(0.0))
                }
                MissingPolicy::MissingCategory => Cell::Category(MISSING_TOKEN.to_string()),
            };
            for cell in column.iter_mut().filter(|c| c.is_missing()) {
                *cell = fill.clone();
            }
        }
        for name in &self.all_missing {
            if !table.metadata.all_missing_columns.contains(name) {
                table.metadata.all_missing_columns.push(name.clone());
            }
        }
        table
    }
}

/// Mean-fills numeric features and maps missing categorical features to
/// [`MISSING_TOKEN`], using statistics of the table itself.
pub fn impute(table: RawTable) -> RawTable {
    let stats = Imputation::fit(&table);
    stats.apply(table)
}
