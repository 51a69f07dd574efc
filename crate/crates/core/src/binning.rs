//! Fraction-of-max discretization and optional one-hot expansion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Cell, RawTable, MISSING_TOKEN};
use crate::schema::{Kind, Role};

pub const BIN_LOW: &str = "L25";
pub const BIN_LOWER_MID: &str = "B25_50";
pub const BIN_UPPER_MID: &str = "B50_75";
pub const BIN_HIGH: &str = "G75";

/// Bin fractions of the training maximum.
pub const BIN_FRACTIONS: [f64; 3] = [0.25, 0.50, 0.75];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinEdges {
    pub column: String,
    pub max_value: f64,
    pub thresholds: [f64; 3],
}

impl BinEdges {
    pub fn from_max(column: impl Into<String>, max_value: f64) -> Self {
        Self {
            column: column.into(),
            max_value,
            thresholds: BIN_FRACTIONS.map(|f| f * max_value),
        }
    }

    /// Lower-inclusive bins; the top bin is closed below and unbounded above.
    pub fn bin(&self, value: f64) -> &'static str {
        let [t1, t2, t3] = self.thresholds;
        if value < t1 {
            BIN_LOW
        } else if value < t2 {
            BIN_LOWER_MID
        } else if value < t3 {
            BIN_UPPER_MID
        } else {
            BIN_HIGH
        }
    }
}

/// Fits edges for every numeric feature column from its maximum value.
pub fn fit_bins(table: &RawTable) -> Vec<BinEdges> {
    table
        .schema
        .columns()
        .iter()
        .zip(&table.columns)
        .filter(|(spec, _)| spec.role == Role::Feature && spec.kind == Kind::Numeric)
        .map(|(spec, cells)| {
            let max = cells
                .iter()
                .filter_map(|c| match c {
                    Cell::Number(v) => Some(*v),
                    _ => None,
                })
                .fold(None, |acc: Option<f64>, v| {
                    Some(acc.map_or(v, |m| m.max(v)))
                })
                .unwrap_or(0.0);
            BinEdges::from_max(&spec.name, max)
        })
        .collect()
}

/// A fully categorical view of a table: feature attributes plus the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalTable {
    pub attributes: Vec<String>,
    /// `columns[j][row]` is the token of `attributes[j]`.
    pub columns: Vec<Vec<String>>,
    pub label_column: String,
    pub labels: Option<Vec<String>>,
    pub row_count: usize,
}

impl CategoricalTable {
    pub fn new(
        attributes: Vec<String>,
        columns: Vec<Vec<String>>,
        label_column: impl Into<String>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if attributes.len() != columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} attribute names for {} columns",
                attributes.len(),
                columns.len()
            )));
        }
        let row_count = columns
            .first()
            .map(Vec::len)
            .or_else(|| labels.as_ref().map(Vec::len))
            .unwrap_or(0);
        if columns.iter().any(|c| c.len() != row_count)
            || labels.as_ref().is_some_and(|l| l.len() != row_count)
        {
            return Err(Error::SchemaMismatch("ragged categorical columns".into()));
        }
        Ok(Self {
            attributes,
            columns,
            label_column: label_column.into(),
            labels,
            row_count,
        })
    }

    /// Builds a table from row-major tokens.
    pub fn from_rows<R, S>(
        attributes: Vec<String>,
        rows: impl IntoIterator<Item = R>,
        labels: Option<Vec<String>>,
    ) -> Result<Self>
    where
        R: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut columns = vec![Vec::new(); attributes.len()];
        for (i, row) in rows.into_iter().enumerate() {
            let row = row.as_ref();
            if row.len() != attributes.len() {
                return Err(Error::SchemaMismatch(format!(
                    "row {i} has {} tokens, expected {}",
                    row.len(),
                    attributes.len()
                )));
            }
            for (column, token) in columns.iter_mut().zip(row) {
                column.push(token.as_ref().to_string());
            }
        }
        Self::new(attributes, columns, "label", labels)
    }

    pub fn row(&self, index: usize) -> Vec<&str> {
        self.columns.iter().map(|c| c[index].as_str()).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<&str>> + '_ {
        (0..self.row_count).map(|i| self.row(i))
    }

    /// Distinct tokens of one attribute, sorted.
    pub fn categories(&self, attribute: usize) -> BTreeSet<&str> {
        self.columns[attribute].iter().map(String::as_str).collect()
    }

    /// Rows selected by index, preserving order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            attributes: self.attributes.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| indices.iter().map(|&i| c[i].clone()).collect())
                .collect(),
            label_column: self.label_column.clone(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
            row_count: indices.len(),
        }
    }
}

/// Bins numeric features with `edges`; categorical features pass through.
///
/// Ignored columns are dropped. The label is `None` when the source file had
/// no label column.
pub fn apply_bins(table: &RawTable, edges: &[BinEdges]) -> Result<CategoricalTable> {
    let by_column: BTreeMap<&str, &BinEdges> =
        edges.iter().map(|e| (e.column.as_str(), e)).collect();
    for edge in edges {
        match table.schema.column(&edge.column) {
            Some(spec) if spec.role == Role::Feature && spec.kind == Kind::Numeric => {}
            _ => {
                return Err(Error::SchemaMismatch(format!(
                    "bin edges reference unknown numeric feature {:?}",
                    edge.column
                )))
            }
        }
    }

    let mut attributes = Vec::new();
    let mut columns = Vec::new();
    for (spec, cells) in table.schema.columns().iter().zip(&table.columns) {
        if spec.role != Role::Feature {
            continue;
        }
        let tokens = match spec.kind {
            Kind::Numeric => {
                let edge = by_column.get(spec.name.as_str()).ok_or_else(|| {
                    Error::SchemaMismatch(format!(
                        "no bin edges for numeric feature {:?}",
                        spec.name
                    ))
                })?;
                cells
                    .iter()
                    .enumerate()
                    .map(|(row, cell)| match cell {
                        Cell::Number(v) => Ok(edge.bin(*v).to_string()),
                        _ => Err(Error::SchemaMismatch(format!(
                            "numeric feature {:?} has no value at row {}; impute before binning",
                            spec.name,
                            row + 1
                        ))),
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            Kind::Categorical => cells
                .iter()
                .map(|cell| match cell {
                    Cell::Category(s) => s.clone(),
                    Cell::Number(v) => v.to_string(),
                    Cell::Missing => MISSING_TOKEN.to_string(),
                })
                .collect(),
        };
        attributes.push(spec.name.clone());
        columns.push(tokens);
    }

    let label_spec = table.schema.label();
    let label_cells = &table.columns[table.schema.label_index()];
    let labels = if !table.metadata.label_present {
        None
    } else {
        let mut labels = Vec::with_capacity(label_cells.len());
        for (row, cell) in label_cells.iter().enumerate() {
            match cell {
                Cell::Category(s) => labels.push(s.clone()),
                Cell::Number(v) => labels.push(v.to_string()),
                Cell::Missing => {
                    return Err(Error::SchemaMismatch(format!(
                        "label {:?} is empty at row {}",
                        label_spec.name,
                        row + 1
                    )))
                }
            }
        }
        Some(labels)
    };

    Ok(CategoricalTable {
        attributes,
        columns,
        label_column: label_spec.name.clone(),
        labels,
        row_count: table.row_count,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Categorical,
    Onehot,
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "categorical" => Ok(Encoding::Categorical),
            "onehot" => Ok(Encoding::Onehot),
            other => Err(Error::Usage(format!(
                "unknown encoding {other:?} (expected onehot|categorical)"
            ))),
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Categorical => "categorical",
            Encoding::Onehot => "onehot",
        })
    }
}

/// One input attribute of a one-hot layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneHotAttribute {
    pub name: String,
    /// Categories expanded into `<name>_<category>` columns; `None` passes
    /// the attribute through unchanged.
    pub categories: Option<Vec<String>>,
}

/// Expansion plan learned from training data and replayed on new tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneHotLayout {
    pub expand_binary: bool,
    pub attributes: Vec<OneHotAttribute>,
}

impl OneHotLayout {
    /// Attributes with three or more categories are expanded; two-category
    /// attributes only when `expand_binary` is set.
    pub fn fit(table: &CategoricalTable, expand_binary: bool) -> Self {
        let attributes = table
            .attributes
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let cats = table.categories(j);
                let expand = cats.len() > 2 || (cats.len() == 2 && expand_binary);
                OneHotAttribute {
                    name: name.clone(),
                    categories: expand.then(|| cats.into_iter().map(str::to_string).collect()),
                }
            })
            .collect();
        Self {
            expand_binary,
            attributes,
        }
    }

    pub fn output_attributes(&self) -> Vec<String> {
        self.attributes
            .iter()
            .flat_map(|a| match &a.categories {
                Some(cats) => cats.iter().map(|c| format!("{}_{}", a.name, c)).collect(),
                None => vec![a.name.clone()],
            })
            .collect()
    }

    /// Expands `table`. Tokens not seen when fitting produce an all-zero group.
    pub fn apply(&self, table: &CategoricalTable) -> Result<CategoricalTable> {
        let names: Vec<&str> = self.attributes.iter().map(|a| a.name.as_str()).collect();
        if table
            .attributes
            .iter()
            .map(String::as_str)
            .ne(names.iter().copied())
        {
            return Err(Error::SchemaMismatch(format!(
                "one-hot layout expects attributes {:?}, table has {:?}",
                names, table.attributes
            )));
        }
        let attributes = self.output_attributes();
        let unique: BTreeSet<&String> = attributes.iter().collect();
        if unique.len() != attributes.len() {
            return Err(Error::SchemaMismatch(
                "one-hot expansion produces duplicate column names".into(),
            ));
        }
        let mut columns = Vec::with_capacity(attributes.len());
        for (spec, source) in self.attributes.iter().zip(&table.columns) {
            match &spec.categories {
                None => columns.push(source.clone()),
                Some(cats) => {
                    for cat in cats {
                        columns.push(
                            source
                                .iter()
                                .map(|t| if t == cat { "1" } else { "0" }.to_string())
                                .collect(),
                        );
                    }
                }
            }
        }
        Ok(CategoricalTable {
            attributes,
            columns,
            label_column: table.label_column.clone(),
            labels: table.labels.clone(),
            row_count: table.row_count,
        })
    }

    /// Inverse of [`apply`](Self::apply) for rows whose categories were seen at fit time.
    pub fn collapse(&self, expanded: &CategoricalTable) -> Result<CategoricalTable> {
        let mut columns = Vec::with_capacity(self.attributes.len());
        let mut offset = 0;
        for spec in &self.attributes {
            match &spec.categories {
                None => {
                    columns.push(expanded.columns[offset].clone());
                    offset += 1;
                }
                Some(cats) => {
                    let group = &expanded.columns[offset..offset + cats.len()];
                    let column = (0..expanded.row_count)
                        .map(|row| {
                            group
                                .iter()
                                .position(|c| c[row] == "1")
                                .map(|k| cats[k].clone())
                                .ok_or_else(|| {
                                    Error::SchemaMismatch(format!(
                                        "row {} has no active category for {:?}",
                                        row + 1,
                                        spec.name
                                    ))
                                })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    columns.push(column);
                    offset += cats.len();
                }
            }
        }
        Ok(CategoricalTable {
            attributes: self.attributes.iter().map(|a| a.name.clone()).collect(),
            columns,
            label_column: expanded.label_column.clone(),
            labels: expanded.labels.clone(),
            row_count: expanded.row_count,
        })
    }
}

/// Fits a layout on `table` and expands it.
pub fn one_hot_expand(table: &CategoricalTable, expand_binary: bool) -> Result<CategoricalTable> {
    OneHotLayout::fit(table, expand_binary).apply(table)
}
