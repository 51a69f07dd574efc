//! `entropy-dem` command line: fit, predict, evaluate, inspect.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use entropy_dem::eval::{format_value, parse_baselines};
use entropy_dem::{
    evaluate, export_plot_data, load_csv, load_unlabeled_csv, ClassTag, Encoding, Error,
    EvaluationReport, FitConfig, LabelMapping, Model, PlotKind, Preprocessor, Schema, TieBreak,
};
use serde::Deserialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNFITTABLE: i32 = 3;
pub const EXIT_MODEL_IO: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "entropy-dem",
    version,
    about = "Two-pool Shannon-entropy (DEM) classifier"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct GlobalArgs {
    /// Schema JSON declaring column roles and kinds (required by `fit`).
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,

    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for batch prediction (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Feature encoding: categorical or onehot.
    #[arg(long, global = true)]
    pub encoding: Option<String>,

    /// Class chosen when both DEMs tie: rejected or accepted.
    #[arg(long = "tie-break", global = true)]
    pub tie_break: Option<String>,

    /// Label token of the positive (non-defaulter / accepted) class.
    #[arg(long = "positive-label", global = true)]
    pub positive_label: Option<String>,

    /// Label token of the negative (defaulter / rejected) class.
    #[arg(long = "negative-label", global = true)]
    pub negative_label: Option<String>,

    /// Also one-hot expand two-category attributes (onehot encoding only).
    #[arg(long = "expand-binary", global = true)]
    pub expand_binary: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Preprocess a labeled CSV, build both class pools and save the model.
    Fit {
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify every row of a CSV and write the per-row DEM audit trail.
    Predict {
        model: PathBuf,
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a labeled CSV and report accuracy and the confusion matrix.
    Evaluate {
        model: PathBuf,
        test: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Emit the per-attribute entropy table or plot-ready series.
    Inspect {
        model: PathBuf,
        #[arg(
            long = "entropy-table",
            value_name = "OUT",
            conflicts_with = "plot_data"
        )]
        entropy_table: Option<PathBuf>,
        #[arg(long = "plot-data", num_args = 2, value_names = ["KIND", "OUT"])]
        plot_data: Option<Vec<String>>,
        /// Evaluation report JSON (for accuracy_bars).
        #[arg(long)]
        report: Option<PathBuf>,
        /// TSV of `name<TAB>accuracy` baselines merged into accuracy_bars.
        #[arg(long)]
        baselines: Option<PathBuf>,
    },
}

/// Settings read from `--config`. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: Option<PathBuf>,
    pub threads: Option<usize>,
    pub encoding: Option<Encoding>,
    pub tie_break: Option<TieBreak>,
    pub label_mapping: Option<LabelMapping>,
    pub expand_binary: Option<bool>,
}

/// Effective settings after merging flags, config file and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schema: Option<PathBuf>,
    pub encoding: Encoding,
    pub tie_break: Option<TieBreak>,
    pub label_mapping: LabelMapping,
    pub threads: usize,
    pub expand_binary: bool,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::SchemaMismatch(_)
        | Error::InvalidSchema(_)
        | Error::NonBinaryLabel { .. }
        | Error::UnknownLabel(_)
        | Error::EmptyEvaluation(_) => EXIT_INPUT,
        Error::EmptyPool(_)
        | Error::Unfittable { .. }
        | Error::UndefinedEntropy
        | Error::InvalidCounts(_) => EXIT_UNFITTABLE,
        Error::ModelFormat(_) | Error::ModelVersion { .. } | Error::ModelIo { .. } => EXIT_MODEL_IO,
        Error::Usage(_) => EXIT_USAGE,
    }
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        Self::new(exit_code(&error), error.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

impl RunConfig {
    pub fn resolve(global: &GlobalArgs) -> CliResult<Self> {
        let file = match &global.config {
            Some(path) => {
                require_file(path, EXIT_INPUT)?;
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::new(EXIT_INPUT, format!("config: {}: {e}", path.display()))
                })?;
                serde_json::from_str::<ConfigFile>(&text).map_err(|e| {
                    CliError::new(EXIT_INPUT, format!("config: {}: {e}", path.display()))
                })?
            }
            None => ConfigFile::default(),
        };
        let encoding = match &global.encoding {
            Some(s) => s.parse()?,
            None => file.encoding.unwrap_or_default(),
        };
        let tie_break = match &global.tie_break {
            Some(s) => Some(s.parse()?),
            None => file.tie_break,
        };
        let mut label_mapping = file.label_mapping.unwrap_or_default();
        if let Some(p) = &global.positive_label {
            label_mapping.positive = p.clone();
        }
        if let Some(n) = &global.negative_label {
            label_mapping.negative = n.clone();
        }
        if label_mapping.positive == label_mapping.negative {
            return Err(CliError::new(
                EXIT_USAGE,
                "usage: positive and negative labels must differ",
            ));
        }
        Ok(Self {
            schema: global.schema.clone().or(file.schema),
            encoding,
            tie_break,
            label_mapping,
            threads: global.threads.or(file.threads).unwrap_or(0),
            expand_binary: global.expand_binary || file.expand_binary.unwrap_or(false),
        })
    }

    fn thread_pool(&self) -> CliResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| CliError::new(EXIT_USAGE, format!("usage: cannot start thread pool: {e}")))
    }
}

fn require_file(path: &Path, code: i32) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::new(
            code,
            format!("no such file: {}", path.display()),
        ))
    }
}

fn write_output(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::new(EXIT_INPUT, format!("cannot write {}: {e}", path.display())))
}

fn load_model(path: &Path, config: &RunConfig) -> CliResult<Model> {
    require_file(path, EXIT_MODEL_IO)?;
    let mut model = Model::load(path)?;
    if let Some(tie_break) = config.tie_break {
        model.tie_break = tie_break;
    }
    Ok(model)
}

fn preprocessor(model: &Model) -> CliResult<&Preprocessor> {
    model.preprocessor.as_ref().ok_or_else(|| {
        CliError::new(
            EXIT_MODEL_IO,
            "model: file has no preprocessing state; refit with `fit`",
        )
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let config = RunConfig::resolve(&cli.global)?;
    match &cli.command {
        Command::Fit {
            train,
            out: model_path,
        } => cmd_fit(&config, train, model_path, out),
        Command::Predict {
            model,
            input,
            out: path,
        } => cmd_predict(&config, model, input, path, out),
        Command::Evaluate {
            model,
            test,
            report,
        } => cmd_evaluate(&config, model, test, report.as_deref(), out),
        Command::Inspect {
            model,
            entropy_table,
            plot_data,
            report,
            baselines,
        } => cmd_inspect(
            &config,
            model,
            entropy_table.as_deref(),
            plot_data.as_deref(),
            report.as_deref(),
            baselines.as_deref(),
            out,
        ),
    }
}

pub fn cmd_fit(
    config: &RunConfig,
    train: &Path,
    model_path: &Path,
    out: &mut dyn Write,
) -> CliResult<()> {
    let schema_path = config.schema.as_deref().ok_or_else(|| {
        CliError::new(
            EXIT_USAGE,
            "usage: fit needs --schema (or `schema` in --config)",
        )
    })?;
    require_file(schema_path, EXIT_INPUT)?;
    require_file(train, EXIT_INPUT)?;

    let schema = Schema::load(schema_path)?;
    let raw = load_csv(train, &schema)?;
    let dropped = raw.metadata.dropped_count();
    let (pre, table) = Preprocessor::fit(raw, config.encoding, config.expand_binary)?;
    let fit_config = FitConfig {
        label_mapping: config.label_mapping.clone(),
        tie_break: config.tie_break.unwrap_or_default(),
    };
    let model = Model::fit(&table, &fit_config)?.with_preprocessor(pre);
    model.save(model_path)?;

    let _ = writeln!(out, "attributes: {}", model.attributes().len());
    if dropped > 0 {
        let _ = writeln!(out, "dropped {dropped} column(s) not in the schema");
    }
    if let Some(pre) = &model.preprocessor {
        for name in &pre.imputation.all_missing {
            let _ = writeln!(
                out,
                "warning: numeric column {name:?} had no values; filled with 0"
            );
        }
    }
    for tag in ClassTag::ALL {
        let pool = model.pool(tag);
        let _ = writeln!(
            out,
            "{tag} pool ({:?}): {} rows, alpha = {}",
            model.label_mapping.token(tag),
            pool.n_rows(),
            format_value(pool.alpha())
        );
    }
    let _ = writeln!(out, "model written to {}", model_path.display());
    Ok(())
}

/// Per-row prediction CSV: index, label, both DEMs and the margin.
pub fn predictions_csv(
    model: &Model,
    predictions: &[entropy_dem::Prediction<f64>],
) -> CliResult<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err =
        |e: csv::Error| CliError::new(EXIT_INPUT, format!("cannot encode predictions: {e}"));
    writer
        .write_record([
            "row_index",
            "predicted_label",
            "dem_positive",
            "dem_negative",
            "decision_margin",
        ])
        .map_err(csv_err)?;
    for (i, p) in predictions.iter().enumerate() {
        let e = &p.evaluation;
        writer
            .write_record([
                i.to_string(),
                model.label_mapping.token(e.predicted_class).to_string(),
                format_value(e.positive.dem),
                format_value(e.negative.dem),
                format_value(e.decision_margin),
            ])
            .map_err(csv_err)?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::new(EXIT_INPUT, format!("cannot encode predictions: {e}")))
}

pub fn cmd_predict(
    config: &RunConfig,
    model_path: &Path,
    input: &Path,
    out_path: &Path,
    out: &mut dyn Write,
) -> CliResult<()> {
    require_file(model_path, EXIT_MODEL_IO)?;
    require_file(input, EXIT_INPUT)?;
    let model = load_model(model_path, config)?;
    let pre = preprocessor(&model)?;
    let raw = load_unlabeled_csv(input, &pre.schema)?;
    let table = pre.transform(raw)?;
    let predictions = config
        .thread_pool()?
        .install(|| model.predict_batch(&table))?;
    let bytes = predictions_csv(&model, &predictions)?;
    std::fs::write(out_path, bytes).map_err(|e| {
        CliError::new(
            EXIT_INPUT,
            format!("cannot write {}: {e}", out_path.display()),
        )
    })?;
    let _ = writeln!(
        out,
        "{} predictions written to {}",
        predictions.len(),
        out_path.display()
    );
    Ok(())
}

pub fn cmd_evaluate(
    config: &RunConfig,
    model_path: &Path,
    test: &Path,
    report_path: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<()> {
    require_file(model_path, EXIT_MODEL_IO)?;
    require_file(test, EXIT_INPUT)?;
    let model = load_model(model_path, config)?;
    let pre = preprocessor(&model)?;
    let raw = load_csv(test, &pre.schema)?;
    let table = pre.transform(raw)?;
    let report = config.thread_pool()?.install(|| evaluate(&model, &table))?;
    let _ = write!(out, "{report}");
    if let Some(path) = report_path {
        write_output(path, &report.to_json())?;
    }
    Ok(())
}

pub fn cmd_inspect(
    config: &RunConfig,
    model_path: &Path,
    entropy_table: Option<&Path>,
    plot_data: Option<&[String]>,
    report_path: Option<&Path>,
    baselines_path: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let plot = match plot_data {
        Some([kind, path]) => Some((kind.parse::<PlotKind>()?, PathBuf::from(path))),
        Some(_) => {
            return Err(CliError::new(
                EXIT_USAGE,
                "usage: --plot-data takes KIND OUT",
            ))
        }
        None => None,
    };
    if entropy_table.is_none() && plot.is_none() {
        return Err(CliError::new(
            EXIT_USAGE,
            "usage: inspect needs --entropy-table OUT or --plot-data KIND OUT",
        ));
    }
    require_file(model_path, EXIT_MODEL_IO)?;
    for path in report_path.iter().chain(baselines_path.iter()) {
        require_file(path, EXIT_INPUT)?;
    }
    let model = load_model(model_path, config)?;

    if let Some(path) = entropy_table {
        write_output(path, &entropy_dem::entropy_table(&model))?;
        let _ = writeln!(out, "entropy table written to {}", path.display());
    }
    if let Some((kind, path)) = plot {
        let report = match report_path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::new(EXIT_INPUT, format!("cannot read {}: {e}", p.display()))
                })?;
                Some(
                    serde_json::from_str::<EvaluationReport>(&text).map_err(|e| {
                        CliError::new(EXIT_INPUT, format!("report {}: {e}", p.display()))
                    })?,
                )
            }
            None => None,
        };
        let baselines = match baselines_path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::new(EXIT_INPUT, format!("cannot read {}: {e}", p.display()))
                })?;
                parse_baselines(&text)?
            }
            None => Vec::new(),
        };
        let tsv = export_plot_data(kind, Some(&model), report.as_ref(), &baselines)?;
        write_output(&path, &tsv)?;
        let _ = writeln!(out, "plot data written to {}", path.display());
    }
    Ok(())
}
