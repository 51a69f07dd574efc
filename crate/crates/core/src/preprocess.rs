//! Training-time preprocessing state replayed on prediction inputs.

use serde::{Deserialize, Serialize};

use crate::binning::{apply_bins, fit_bins, BinEdges, CategoricalTable, Encoding, OneHotLayout};
use crate::error::{Error, Result};
use crate::ingest::{Imputation, RawTable};
use crate::schema::Schema;

/// Imputation fills, bin edges and one-hot layout learned from training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preprocessor {
    pub schema: Schema,
    pub imputation: Imputation,
    pub bin_edges: Vec<BinEdges>,
    pub encoding: Encoding,
    pub one_hot: Option<OneHotLayout>,
}

impl Preprocessor {
    /// Fits on a raw training table and returns the transformed table.
    pub fn fit(
        raw: RawTable,
        encoding: Encoding,
        expand_binary: bool,
    ) -> Result<(Self, CategoricalTable)> {
        let imputation = Imputation::fit(&raw);
        let imputed = imputation.apply(raw);
        let bin_edges = fit_bins(&imputed);
        let binned = apply_bins(&imputed, &bin_edges)?;
        let (one_hot, table) = match encoding {
            Encoding::Categorical => (None, binned),
            Encoding::Onehot => {
                let layout = OneHotLayout::fit(&binned, expand_binary);
                let expanded = layout.apply(&binned)?;
                (Some(layout), expanded)
            }
        };
        Ok((
            Self {
                schema: imputed.schema.clone(),
                imputation,
                bin_edges,
                encoding,
                one_hot,
            },
            table,
        ))
    }

    /// Applies training statistics to a new table; nothing is refit.
    pub fn transform(&self, raw: RawTable) -> Result<CategoricalTable> {
        if raw.schema.fingerprint() != self.schema.fingerprint() {
            return Err(Error::SchemaMismatch(
                "table schema differs from the training schema".into(),
            ));
        }
        let imputed = self.imputation.apply(raw);
        let binned = apply_bins(&imputed, &self.bin_edges)?;
        match &self.one_hot {
            Some(layout) => layout.apply(&binned),
            None => Ok(binned),
        }
    }
}
