//! Binary classification by Shannon-entropy perturbation of two class pools.
//!
//! Training rows are split by label into a positive pool (C+) and a negative
//! pool (C−), each summarised by per-attribute category counts. A candidate
//! row is inserted virtually into both pools; the pool whose summed attribute
//! entropy drops the most (largest `dem = alpha - beta`) wins.
//!
//! Pipeline: [`ingest`] CSV + [`schema`] → imputation → [`binning`] →
//! [`classifier`] → [`eval`]. Entropy math lives in [`entropy`] and is generic
//! over [`Scalar`] (`f32` or `f64`); the `*64` aliases below are what the CLI
//! uses.

pub mod binning;
pub mod classifier;
pub mod entropy;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod preprocess;
pub mod scalar;
pub mod schema;

pub use binning::{
    apply_bins, fit_bins, one_hot_expand, BinEdges, CategoricalTable, Encoding, OneHotLayout,
};
pub use classifier::{ClassifierModel, FitConfig, LabelMapping, Prediction, FORMAT_VERSION};
pub use entropy::{
    attribute_entropy, build_pool, dem, entropy_profile, global_profile, verify_incremental,
    CategoryCounts, ClassTag, DemEvaluation, DemTriple, EntropyProfile, PoolStats, TieBreak,
};
pub use error::{Error, Result};
pub use eval::{entropy_table, evaluate, export_plot_data, EvaluationReport, PlotKind};
pub use ingest::{impute, load_csv, load_unlabeled_csv, Cell, RawTable};
pub use preprocess::Preprocessor;
pub use scalar::Scalar;
pub use schema::{ColumnSpec, Kind, Role, Schema};

pub type Model = ClassifierModel<f64>;
pub type Model32 = ClassifierModel<f32>;
pub type Pool = PoolStats<f64>;
pub type Pool32 = PoolStats<f32>;
pub type Profile = EntropyProfile<f64>;
pub type Profile32 = EntropyProfile<f32>;
pub type Evaluation = DemEvaluation<f64>;
pub type Evaluation32 = DemEvaluation<f32>;
