//! Accuracy reports, entropy tables and plot-ready TSV data.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::binning::CategoricalTable;
use crate::classifier::{label_classes, ClassifierModel};
use crate::entropy::ClassTag;
use crate::error::{Error, Result};
use crate::scalar::{clear_negative_zero, Scalar};

/// Attribute column value of the per-pool sum row in [`entropy_table`].
pub const SUM_ROW: &str = "__alpha__";

/// Name of this classifier in accuracy bar data.
pub const CLASSIFIER_NAME: &str = "entropy_based";

/// Shortest text that parses back to the same value, `-0.0` printed as `0.0`.
pub fn format_value<F: Scalar>(value: F) -> String {
    format!("{:?}", clear_negative_zero(value))
}

fn index(tag: ClassTag) -> usize {
    match tag {
        ClassTag::Positive => 0,
        ClassTag::Negative => 1,
    }
}

/// `cells[true][predicted]`, indexed positive = 0, negative = 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub cells: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: ClassTag, predicted: ClassTag) {
        self.cells[index(truth)][index(predicted)] += 1;
    }

    pub fn get(&self, truth: ClassTag, predicted: ClassTag) -> u64 {
        self.cells[index(truth)][index(predicted)]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        self.cells[0][0] + self.cells[1][1]
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.correct(), self.total()).unwrap_or(0.0)
    }

    /// `None` when nothing was predicted as `tag`.
    pub fn precision(&self, tag: ClassTag) -> Option<f64> {
        let predicted = self.get(tag, tag) + self.get(tag.other(), tag);
        ratio(self.get(tag, tag), predicted)
    }

    /// `None` when no row truly belongs to `tag`.
    pub fn recall(&self, tag: ClassTag) -> Option<f64> {
        let actual = self.get(tag, tag) + self.get(tag, tag.other());
        ratio(self.get(tag, tag), actual)
    }

    pub fn f1(&self, tag: ClassTag) -> f64 {
        let p = self.precision(tag).unwrap_or(0.0);
        let r = self.recall(tag).unwrap_or(0.0);
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den != 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: ClassTag,
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when the precision denominator was zero and 0 was reported.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    /// Mean decision margin (bits) over rows truly in this class.
    pub mean_decision_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_total: u64,
    pub n_correct: u64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
}

impl EvaluationReport {
    pub fn from_confusion(
        confusion: ConfusionMatrix,
        labels: [&str; 2],
        margins: [Option<f64>; 2],
    ) -> Self {
        let per_class = ClassTag::ALL
            .iter()
            .map(|&tag| {
                let precision = confusion.precision(tag);
                let recall = confusion.recall(tag);
                ClassMetrics {
                    class: tag,
                    label: labels[index(tag)].to_string(),
                    precision: precision.unwrap_or(0.0),
                    recall: recall.unwrap_or(0.0),
                    f1: confusion.f1(tag),
                    precision_undefined: precision.is_none(),
                    recall_undefined: recall.is_none(),
                    mean_decision_margin: margins[index(tag)],
                }
            })
            .collect();
        Self {
            n_total: confusion.total(),
            n_correct: confusion.correct(),
            accuracy: confusion.accuracy(),
            confusion,
            per_class,
        }
    }

    pub fn class(&self, tag: ClassTag) -> &ClassMetrics {
        &self.per_class[index(tag)]
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "accuracy: {:.4} ({}/{})",
            self.accuracy, self.n_correct, self.n_total
        )?;
        writeln!(f, "confusion (rows = true, columns = predicted):")?;
        let p = self.class(ClassTag::Positive);
        let n = self.class(ClassTag::Negative);
        let width = p.label.len().max(n.label.len()).max(8);
        writeln!(f, "  {:>width$}  {:>10}  {:>10}", "", p.label, n.label)?;
        for m in [p, n] {
            writeln!(
                f,
                "  {:>width$}  {:>10}  {:>10}",
                m.label,
                self.confusion.get(m.class, ClassTag::Positive),
                self.confusion.get(m.class, ClassTag::Negative)
            )?;
        }
        for m in [p, n] {
            write!(
                f,
                "{} ({}): precision {:.4}{} recall {:.4}{} f1 {:.4}",
                m.class,
                m.label,
                m.precision,
                if m.precision_undefined { "*" } else { "" },
                m.recall,
                if m.recall_undefined { "*" } else { "" },
                m.f1
            )?;
            if let Some(margin) = m.mean_decision_margin {
                write!(f, " mean margin {margin:.6e} bits")?;
            }
            writeln!(f)?;
        }
        if self
            .per_class
            .iter()
            .any(|m| m.precision_undefined || m.recall_undefined)
        {
            writeln!(f, "* denominator was zero; reported as 0")?;
        }
        Ok(())
    }
}

/// Predicts every row of a labeled table and tallies the outcome.
pub fn evaluate<F: Scalar>(
    model: &ClassifierModel<F>,
    test: &CategoricalTable,
) -> Result<EvaluationReport> {
    if test.row_count == 0 {
        return Err(Error::EmptyEvaluation("test set has no rows".into()));
    }
    let truth = label_classes(test, &model.label_mapping)?;
    let predictions = model.predict_batch(test)?;
    let mut confusion = ConfusionMatrix::default();
    let mut margin_sums = [0.0f64; 2];
    let mut margin_counts = [0u64; 2];
    for (tag, prediction) in truth.iter().zip(&predictions) {
        confusion.record(*tag, prediction.evaluation.predicted_class);
        margin_sums[index(*tag)] += prediction
            .evaluation
            .decision_margin
            .to_f64()
            .unwrap_or(f64::NAN);
        margin_counts[index(*tag)] += 1;
    }
    let margins = [0, 1].map(|i| ratio(1, margin_counts[i]).map(|inv| margin_sums[i] * inv));
    Ok(EvaluationReport::from_confusion(
        confusion,
        [&model.label_mapping.positive, &model.label_mapping.negative],
        margins,
    ))
}

/// TSV of per-attribute entropies for both pools, each followed by its sum row.
pub fn entropy_table<F: Scalar>(model: &ClassifierModel<F>) -> String {
    let mut out = String::from("pool\tattribute\tentropy\n");
    for tag in ClassTag::ALL {
        let profile = model.profile(tag);
        for (name, value) in &profile.per_attribute {
            let _ = writeln!(out, "{tag}\t{name}\t{}", format_value(*value));
        }
        let _ = writeln!(
            out,
            "{tag}\t{SUM_ROW}\t{}",
            format_value(profile.metric_sum)
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    AccuracyBars,
    EntropyPerAttribute,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy_bars" => Ok(PlotKind::AccuracyBars),
            "entropy_per_attribute" => Ok(PlotKind::EntropyPerAttribute),
            other => Err(Error::Usage(format!(
                "unknown plot kind {other:?} (expected accuracy_bars|entropy_per_attribute)"
            ))),
        }
    }
}

/// Bar data: this classifier's accuracy followed by user-supplied baselines.
pub fn accuracy_bars(report: &EvaluationReport, baselines: &[(String, f64)]) -> String {
    let mut out = String::from("classifier\taccuracy\n");
    let _ = writeln!(out, "{CLASSIFIER_NAME}\t{}", format_value(report.accuracy));
    for (name, accuracy) in baselines {
        let _ = writeln!(out, "{name}\t{}", format_value(*accuracy));
    }
    out
}

/// Per-pool series of (attribute index, attribute, entropy).
pub fn entropy_per_attribute<F: Scalar>(model: &ClassifierModel<F>) -> String {
    let mut out = String::from("pool\tattribute_index\tattribute\tentropy\n");
    for tag in ClassTag::ALL {
        for (i, (name, value)) in model.profile(tag).per_attribute.iter().enumerate() {
            let _ = writeln!(out, "{tag}\t{i}\t{name}\t{}", format_value(*value));
        }
    }
    out
}

/// Dispatches on `kind`; accuracy bars need a report.
pub fn export_plot_data<F: Scalar>(
    kind: PlotKind,
    model: Option<&ClassifierModel<F>>,
    report: Option<&EvaluationReport>,
    baselines: &[(String, f64)],
) -> Result<String> {
    match kind {
        PlotKind::AccuracyBars => report
            .map(|r| accuracy_bars(r, baselines))
            .ok_or_else(|| Error::Usage("accuracy_bars needs an evaluation report".into())),
        PlotKind::EntropyPerAttribute => model
            .map(entropy_per_attribute)
            .ok_or_else(|| Error::Usage("entropy_per_attribute needs a model".into())),
    }
}

/// Reads `name<TAB>accuracy` lines; a non-numeric first line is a header.
pub fn parse_baselines(text: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(name), Some(value), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                row: i + 1,
                message: "expected two tab-separated fields".into(),
            });
        };
        match value.trim().parse::<f64>() {
            Ok(v) => out.push((name.trim().to_string(), v)),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    row: i + 1,
                    message: format!("accuracy {value:?}: {e}"),
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{FitConfig, LabelMapping};
    use crate::entropy::TieBreak;

    fn model(rows: &[[&str; 2]], labels: &[&str]) -> ClassifierModel<f64> {
        let t = CategoricalTable::from_rows(
            vec!["x".into(), "y".into()],
            rows.iter(),
            Some(labels.iter().map(|s| s.to_string()).collect()),
        )
        .unwrap();
        ClassifierModel::fit(
            &t,
            &FitConfig {
                label_mapping: LabelMapping::new("1", "0"),
                tie_break: TieBreak::Rejected,
            },
        )
        .unwrap()
    }

    fn separable() -> ClassifierModel<f64> {
        model(
            &[["A", "k"], ["A", "k"], ["B", "j"], ["B", "j"]],
            &["1", "1", "0", "0"],
        )
    }

    #[test]
    fn perfect_predictions() {
        let m = separable();
        let test = CategoricalTable::from_rows(
            m.attributes().to_vec(),
            [["A", "k"], ["B", "j"]],
            Some(vec!["1".into(), "0".into()]),
        )
        .unwrap();
        let r = evaluate(&m, &test).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.confusion.get(ClassTag::Positive, ClassTag::Negative), 0);
        assert_eq!(r.confusion.get(ClassTag::Negative, ClassTag::Positive), 0);
        assert!(r.to_string().contains("accuracy: 1.0000"));
    }

    #[test]
    fn half_correct() {
        let m = separable();
        let test = CategoricalTable::from_rows(
            m.attributes().to_vec(),
            [["A", "k"], ["A", "k"]],
            Some(vec!["1".into(), "0".into()]),
        )
        .unwrap();
        let r = evaluate(&m, &test).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.confusion.total(), 2);
        assert!(r.class(ClassTag::Negative).precision_undefined);
        assert_eq!(r.class(ClassTag::Negative).precision, 0.0);
        assert_eq!(r.class(ClassTag::Positive).recall, 1.0);
        assert_eq!(r.class(ClassTag::Positive).precision, 0.5);
    }

    #[test]
    fn evaluate_errors() {
        let m = separable();
        let empty = CategoricalTable::from_rows(
            m.attributes().to_vec(),
            Vec::<[&str; 2]>::new(),
            Some(vec![]),
        )
        .unwrap();
        assert!(matches!(
            evaluate(&m, &empty),
            Err(Error::EmptyEvaluation(_))
        ));
        let unknown = CategoricalTable::from_rows(
            m.attributes().to_vec(),
            [["A", "k"]],
            Some(vec!["7".into()]),
        )
        .unwrap();
        assert!(matches!(evaluate(&m, &unknown), Err(Error::UnknownLabel(t)) if t == "7"));
    }

    #[test]
    fn entropy_table_rows() {
        let m = model(
            &[["A", "k"], ["B", "k"], ["A", "k"], ["A", "k"]],
            &["1", "1", "0", "0"],
        );
        let table = entropy_table(&m);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "pool\tattribute\tentropy");
        assert_eq!(lines[1], "positive\tx\t1.0");
        assert_eq!(lines[2], "positive\ty\t0.0");
        assert_eq!(lines[3], "positive\t__alpha__\t1.0");
        assert_eq!(lines[4], "negative\tx\t0.0");
        assert_eq!(lines.len(), 7);
        assert!(!table.contains("-0.0"));
    }

    #[test]
    fn plot_data() {
        let m = separable();
        let series = entropy_per_attribute(&m);
        assert_eq!(
            series
                .lines()
                .filter(|l| l.starts_with("positive\t"))
                .count(),
            2
        );

        let report = EvaluationReport::from_confusion(
            ConfusionMatrix {
                cells: [[4912, 0], [88, 0]],
            },
            ["1", "0"],
            [None, None],
        );
        assert_eq!(report.accuracy, 0.9824);
        let baselines = parse_baselines(
            "name\taccuracy\nrandom_forest\t0.85\nsvm\t0.73\nkernel_svm\t0.725\ndecision_trees\t0.79\n",
        )
        .unwrap();
        let bars = accuracy_bars(&report, &baselines);
        assert_eq!(bars.lines().nth(1), Some("entropy_based\t0.9824"));
        assert_eq!(bars.lines().count(), 6);

        assert!(matches!("pie".parse::<PlotKind>(), Err(Error::Usage(_))));
        assert!(export_plot_data::<f64>(PlotKind::AccuracyBars, Some(&m), None, &[]).is_err());
    }

    #[test]
    fn metrics_recomputable_from_confusion() {
        let c = ConfusionMatrix {
            cells: [[30, 5], [7, 58]],
        };
        let r = EvaluationReport::from_confusion(c, ["a", "b"], [None, None]);
        let back = EvaluationReport::from_confusion(r.confusion, ["a", "b"], [None, None]);
        assert_eq!(r, back);
        assert_eq!(r.accuracy, 88.0 / 100.0);
        assert_eq!(r.class(ClassTag::Positive).precision, 30.0 / 37.0);
        assert_eq!(r.class(ClassTag::Negative).recall, 58.0 / 65.0);
    }
}
