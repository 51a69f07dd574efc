//! Column declarations for ingested tables.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Feature,
    Label,
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Numeric,
    Categorical,
}

/// How missing cells of a column are filled by [`impute`](crate::ingest::impute).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingPolicy {
    /// Arithmetic mean of the non-missing cells.
    Mean,
    /// The reserved [`MISSING_TOKEN`](crate::ingest::MISSING_TOKEN) category.
    MissingCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub role: Role,
    pub kind: Kind,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, role: Role, kind: Kind) -> Self {
        Self {
            name: name.into(),
            role,
            kind,
        }
    }

    pub fn feature(name: impl Into<String>, kind: Kind) -> Self {
        Self::new(name, Role::Feature, kind)
    }

    pub fn label(name: impl Into<String>) -> Self {
        Self::new(name, Role::Label, Kind::Categorical)
    }

    pub fn ignore(name: impl Into<String>, kind: Kind) -> Self {
        Self::new(name, Role::Ignore, kind)
    }

    pub fn missing_policy(&self) -> MissingPolicy {
        match self.kind {
            Kind::Numeric => MissingPolicy::Mean,
            Kind::Categorical => MissingPolicy::MissingCategory,
        }
    }
}

/// An ordered set of column declarations with exactly one label column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawSchema")]
pub struct Schema {
    columns: Vec<ColumnSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    columns: Vec<ColumnSpec>,
}

impl TryFrom<RawSchema> for Schema {
    type Error = Error;

    fn try_from(raw: RawSchema) -> Result<Self> {
        Schema::new(raw.columns)
    }
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for column in &columns {
            if !seen.insert(column.name.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate column name {:?}",
                    column.name
                )));
            }
        }
        let labels: Vec<&ColumnSpec> = columns.iter().filter(|c| c.role == Role::Label).collect();
        match labels.as_slice() {
            [label] if label.kind == Kind::Categorical => {}
            [label] => {
                return Err(Error::InvalidSchema(format!(
                    "label column {:?} must be categorical",
                    label.name
                )))
            }
            [] => return Err(Error::InvalidSchema("no column has role \"label\"".into())),
            _ => {
                return Err(Error::InvalidSchema(format!(
                    "expected exactly one label column, found {}",
                    labels.len()
                )))
            }
        }
        Ok(Self { columns })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSchema(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn label(&self) -> &ColumnSpec {
        self.columns
            .iter()
            .find(|c| c.role == Role::Label)
            .expect("validated schema has a label column")
    }

    pub fn label_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.role == Role::Label)
            .expect("validated schema has a label column")
    }

    /// Feature columns in declaration order.
    pub fn features(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(|c| c.role == Role::Feature)
    }

    /// Hex SHA-256 of the compact JSON form; stored in model files.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("schema serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
