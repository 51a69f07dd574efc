//! Two-pool DEM classifier: fitting, prediction and model files.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::CategoricalTable;
use crate::entropy::{
    build_pool, dem, entropy_profile, CategoryCounts, ClassTag, DemEvaluation, EntropyProfile,
    PoolStats, TieBreak,
};
use crate::error::{Error, Result};
use crate::preprocess::Preprocessor;
use crate::scalar::Scalar;

/// Model file format written by this version.
pub const FORMAT_VERSION: u64 = 1;

/// Which label token denotes which class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelMapping {
    /// Token of C+ (non-defaulter / accepted).
    pub positive: String,
    /// Token of C− (defaulter / rejected).
    pub negative: String,
}

impl Default for LabelMapping {
    fn default() -> Self {
        Self {
            positive: "1".into(),
            negative: "0".into(),
        }
    }
}

impl LabelMapping {
    pub fn new(positive: impl Into<String>, negative: impl Into<String>) -> Self {
        Self {
            positive: positive.into(),
            negative: negative.into(),
        }
    }

    pub fn class_of(&self, token: &str) -> Option<ClassTag> {
        if token == self.positive {
            Some(ClassTag::Positive)
        } else if token == self.negative {
            Some(ClassTag::Negative)
        } else {
            None
        }
    }

    pub fn token(&self, tag: ClassTag) -> &str {
        match tag {
            ClassTag::Positive => &self.positive,
            ClassTag::Negative => &self.negative,
        }
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.negative.clone(), self.positive.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FitConfig {
    pub label_mapping: LabelMapping,
    pub tie_break: TieBreak,
}

/// Maps every label of `table` to its class, rejecting non-binary or
/// unmapped labels.
pub fn label_classes(table: &CategoricalTable, mapping: &LabelMapping) -> Result<Vec<ClassTag>> {
    let labels = table.labels.as_ref().ok_or_else(|| {
        Error::SchemaMismatch(format!("label column {:?} is missing", table.label_column))
    })?;
    let distinct: std::collections::BTreeSet<&str> = labels.iter().map(String::as_str).collect();
    if distinct.len() > 2 {
        return Err(Error::NonBinaryLabel {
            found: distinct.len(),
            tokens: distinct.into_iter().map(str::to_string).collect(),
        });
    }
    labels
        .iter()
        .map(|l| {
            mapping
                .class_of(l)
                .ok_or_else(|| Error::UnknownLabel(l.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel<F> {
    pub preprocessor: Option<Preprocessor>,
    pub label_mapping: LabelMapping,
    pub tie_break: TieBreak,
    pool_positive: PoolStats<F>,
    pool_negative: PoolStats<F>,
}

/// One row's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<F> {
    pub label: String,
    pub evaluation: DemEvaluation<F>,
}

impl<F: Scalar> ClassifierModel<F> {
    /// Splits `train` by label into the two pools. No resampling is done.
    pub fn fit(train: &CategoricalTable, config: &FitConfig) -> Result<Self> {
        let classes = label_classes(train, &config.label_mapping)?;
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for (i, class) in classes.iter().enumerate() {
            match class {
                ClassTag::Positive => positive.push(i),
                ClassTag::Negative => negative.push(i),
            }
        }
        for (tag, rows) in [
            (ClassTag::Positive, &positive),
            (ClassTag::Negative, &negative),
        ] {
            if rows.is_empty() {
                return Err(Error::Unfittable {
                    class: tag.to_string(),
                    token: config.label_mapping.token(tag).to_string(),
                });
            }
        }
        Self::from_pools(
            build_pool(train, &positive, ClassTag::Positive)?,
            build_pool(train, &negative, ClassTag::Negative)?,
            config.label_mapping.clone(),
            config.tie_break,
        )
    }

    pub fn from_pools(
        pool_positive: PoolStats<F>,
        pool_negative: PoolStats<F>,
        label_mapping: LabelMapping,
        tie_break: TieBreak,
    ) -> Result<Self> {
        if pool_positive.tag() != ClassTag::Positive || pool_negative.tag() != ClassTag::Negative {
            return Err(Error::InvalidCounts(
                "pools passed with the wrong class tags".into(),
            ));
        }
        if pool_positive.attributes() != pool_negative.attributes() {
            return Err(Error::SchemaMismatch(
                "pools have different attribute lists".into(),
            ));
        }
        Ok(Self {
            preprocessor: None,
            label_mapping,
            tie_break,
            pool_positive,
            pool_negative,
        })
    }

    pub fn with_preprocessor(mut self, preprocessor: Preprocessor) -> Self {
        self.preprocessor = Some(preprocessor);
        self
    }

    pub fn attributes(&self) -> &[String] {
        self.pool_positive.attributes()
    }

    pub fn pool(&self, tag: ClassTag) -> &PoolStats<F> {
        match tag {
            ClassTag::Positive => &self.pool_positive,
            ClassTag::Negative => &self.pool_negative,
        }
    }

    pub fn alpha(&self, tag: ClassTag) -> F {
        self.pool(tag).alpha()
    }

    pub fn profile(&self, tag: ClassTag) -> EntropyProfile<F> {
        entropy_profile(self.pool(tag))
    }

    /// Model with class tags, label mapping and tie-break all swapped.
    pub fn swapped(&self) -> Self {
        Self {
            preprocessor: self.preprocessor.clone(),
            label_mapping: self.label_mapping.swapped(),
            tie_break: self.tie_break.swapped(),
            pool_positive: self.pool_negative.clone().with_tag(ClassTag::Positive),
            pool_negative: self.pool_positive.clone().with_tag(ClassTag::Negative),
        }
    }

    pub fn predict_one<S: AsRef<str>>(&self, candidate: &[S]) -> Result<DemEvaluation<F>> {
        let positive = dem(&self.pool_positive, candidate)?;
        let negative = dem(&self.pool_negative, candidate)?;
        Ok(DemEvaluation::decide(positive, negative, self.tie_break))
    }

    fn check_table(&self, table: &CategoricalTable) -> Result<()> {
        if table.attributes == self.attributes() {
            return Ok(());
        }
        let missing: Vec<&String> = self
            .attributes()
            .iter()
            .filter(|a| !table.attributes.contains(a))
            .collect();
        Err(Error::SchemaMismatch(if missing.is_empty() {
            format!(
                "row 0: candidate attributes {:?} do not match the model's {:?}",
                table.attributes,
                self.attributes()
            )
        } else {
            format!("row 0: candidates are missing attributes {missing:?}")
        }))
    }

    /// Evaluates every row against the unchanged pools, in input order.
    ///
    /// Rows are processed in parallel on the current rayon pool; results do
    /// not depend on the thread count.
    pub fn predict_batch(&self, candidates: &CategoricalTable) -> Result<Vec<Prediction<F>>> {
        self.check_table(candidates)?;
        (0..candidates.row_count)
            .into_par_iter()
            .map(|i| {
                let evaluation = self.predict_one(&candidates.row(i)).map_err(|e| match e {
                    Error::SchemaMismatch(msg) => Error::SchemaMismatch(format!("row {i}: {msg}")),
                    other => other,
                })?;
                Ok(Prediction {
                    label: self
                        .label_mapping
                        .token(evaluation.predicted_class)
                        .to_string(),
                    evaluation,
                })
            })
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| Error::ModelIo {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::ModelIo {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let pools = ClassTag::ALL
            .iter()
            .map(|&tag| {
                let pool = self.pool(tag);
                PoolRecord {
                    tag,
                    n_rows: pool.n_rows(),
                    counts: pool
                        .attributes()
                        .iter()
                        .cloned()
                        .zip(pool.counts().iter().cloned())
                        .collect(),
                }
            })
            .collect();
        let profiles = ClassTag::ALL
            .iter()
            .map(|&tag| {
                let profile = self.profile(tag);
                ProfileRecord {
                    tag,
                    per_attribute: profile.per_attribute,
                    metric_sum: profile.metric_sum,
                }
            })
            .collect();
        let file = ModelFile {
            format: FORMAT_VERSION,
            scalar: F::NAME.to_string(),
            schema_fingerprint: self.preprocessor.as_ref().map(|p| p.schema.fingerprint()),
            preprocessor: self.preprocessor.clone(),
            label_mapping: self.label_mapping.clone(),
            tie_break: self.tie_break,
            attributes: self.attributes().to_vec(),
            pools,
            profiles,
        };
        let mut text = serde_json::to_string_pretty(&file).expect("model serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::ModelFormat(format!("corrupt model file: {e}")))?;
        let version = value
            .get("format")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| {
                Error::ModelFormat("model file has no numeric \"format\" field".into())
            })?;
        if version != FORMAT_VERSION {
            return Err(Error::ModelVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let file: ModelFile<F> = serde_json::from_value(value)
            .map_err(|e| Error::ModelFormat(format!("corrupt model file: {e}")))?;
        if file.scalar != F::NAME {
            return Err(Error::ModelFormat(format!(
                "model was saved with {} scalars, loading as {}",
                file.scalar,
                F::NAME
            )));
        }
        if let Some(pre) = &file.preprocessor {
            if file.schema_fingerprint.as_deref() != Some(pre.schema.fingerprint().as_str()) {
                return Err(Error::ModelFormat(
                    "schema fingerprint does not match".into(),
                ));
            }
        }

        let mut pools: BTreeMap<ClassTag, PoolStats<F>> = BTreeMap::new();
        for record in file.pools {
            let counts = file
                .attributes
                .iter()
                .map(|a| {
                    record.counts.get(a).cloned().ok_or_else(|| {
                        Error::ModelFormat(format!("{} pool has no counts for {a:?}", record.tag))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if record.counts.len() != file.attributes.len() {
                return Err(Error::ModelFormat(format!(
                    "{} pool has counts for attributes outside the model",
                    record.tag
                )));
            }
            let pool =
                PoolStats::from_counts(record.tag, file.attributes.clone(), counts, record.n_rows)
                    .map_err(|e| Error::ModelFormat(e.to_string()))?;
            if pools.insert(record.tag, pool).is_some() {
                return Err(Error::ModelFormat(format!("duplicate {} pool", record.tag)));
            }
        }
        let (Some(pool_positive), Some(pool_negative)) = (
            pools.remove(&ClassTag::Positive),
            pools.remove(&ClassTag::Negative),
        ) else {
            return Err(Error::ModelFormat(
                "model needs a positive and a negative pool".into(),
            ));
        };

        let mut model = Self::from_pools(
            pool_positive,
            pool_negative,
            file.label_mapping,
            file.tie_break,
        )
        .map_err(|e| Error::ModelFormat(e.to_string()))?;
        model.preprocessor = file.preprocessor;

        let tolerance = F::cache_tolerance();
        for cached in &file.profiles {
            let fresh = model.profile(cached.tag);
            let agrees = cached.per_attribute.len() == fresh.per_attribute.len()
                && cached
                    .per_attribute
                    .iter()
                    .zip(&fresh.per_attribute)
                    .all(|((na, a), (nb, b))| na == nb && (*a - *b).abs() <= tolerance)
                && (cached.metric_sum - fresh.metric_sum).abs() <= tolerance;
            if !agrees {
                return Err(Error::ModelFormat(format!(
                    "cached {} entropy profile disagrees with the stored counts",
                    cached.tag
                )));
            }
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolRecord {
    tag: ClassTag,
    n_rows: u64,
    counts: BTreeMap<String, CategoryCounts>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "F: Scalar")]
struct ProfileRecord<F> {
    tag: ClassTag,
    per_attribute: Vec<(String, F)>,
    metric_sum: F,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "F: Scalar")]
struct ModelFile<F> {
    format: u64,
    scalar: String,
    schema_fingerprint: Option<String>,
    preprocessor: Option<Preprocessor>,
    label_mapping: LabelMapping,
    tie_break: TieBreak,
    attributes: Vec<String>,
    pools: Vec<PoolRecord>,
    profiles: Vec<ProfileRecord<F>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[[&str; 1]], labels: &[&str]) -> CategoricalTable {
        CategoricalTable::from_rows(
            vec!["x".into()],
            rows.iter(),
            Some(labels.iter().map(|s| s.to_string()).collect()),
        )
        .unwrap()
    }

    fn config() -> FitConfig {
        FitConfig {
            label_mapping: LabelMapping::new("+", "-"),
            tie_break: TieBreak::Rejected,
        }
    }

    #[test]
    fn fit_partitions_rows() {
        let t = table(
            &[["A"], ["A"], ["B"], ["B"], ["B"], ["A"]],
            &["+", "+", "+", "-", "-", "-"],
        );
        let m = ClassifierModel::<f64>::fit(&t, &config()).unwrap();
        assert_eq!(m.pool(ClassTag::Positive).n_rows(), 3);
        assert_eq!(m.pool(ClassTag::Negative).n_rows(), 3);
        assert_eq!(
            m.alpha(ClassTag::Positive),
            m.profile(ClassTag::Positive).metric_sum
        );
    }

    #[test]
    fn fit_single_class_is_unfittable() {
        let t = table(&[["A"], ["B"]], &["+", "+"]);
        match ClassifierModel::<f64>::fit(&t, &config()) {
            Err(Error::Unfittable { class, token }) => {
                assert_eq!(class, "negative");
                assert_eq!(token, "-");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fit_label_errors() {
        let t = table(&[["A"], ["B"], ["C"]], &["+", "-", "?"]);
        assert!(matches!(
            ClassifierModel::<f64>::fit(&t, &config()),
            Err(Error::NonBinaryLabel { found: 3, .. })
        ));
        let t = table(&[["A"], ["B"]], &["+", "yes"]);
        assert!(matches!(
            ClassifierModel::<f64>::fit(&t, &config()),
            Err(Error::UnknownLabel(tok)) if tok == "yes"
        ));
    }

    #[test]
    fn predicts_with_pool_skew() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (tag, a_count) in [("+", 9), ("-", 1)] {
            for i in 0..10 {
                rows.push([if i < a_count { "A" } else { "B" }]);
                labels.push(tag);
            }
        }
        let m = ClassifierModel::<f64>::fit(&table(&rows, &labels), &config()).unwrap();
        let e = m.predict_one(&["A"]).unwrap();
        assert_eq!(e.predicted_class, ClassTag::Positive);
        assert!(e.positive.dem > 0.0 && e.negative.dem < 0.0);
        assert_eq!(
            m.predict_one(&["B"]).unwrap().predicted_class,
            ClassTag::Negative
        );
    }

    #[test]
    fn batch_is_stateless() {
        let t = table(&[["A"], ["B"], ["A"], ["B"]], &["+", "+", "-", "-"]);
        let m = ClassifierModel::<f64>::fit(&t, &config()).unwrap();
        let probe = CategoricalTable::from_rows(vec!["x".into()], [["A"], ["A"]], None).unwrap();
        let out = m.predict_batch(&probe).unwrap();
        assert_eq!(out[0], out[1]);
        let empty =
            CategoricalTable::from_rows(vec!["x".into()], Vec::<[&str; 1]>::new(), None).unwrap();
        assert!(m.predict_batch(&empty).unwrap().is_empty());
        let wrong = CategoricalTable::from_rows(vec!["y".into()], [["A"]], None).unwrap();
        let err = m.predict_batch(&wrong).unwrap_err();
        assert!(err.to_string().contains("\"x\""), "{err}");
    }

    #[test]
    fn model_json_round_trip() {
        let t = CategoricalTable::from_rows(
            vec!["x".into(), "y".into()],
            [["A", "p"], ["B", "q"], ["A", "q"], ["B", "p"], ["A", "p"]],
            Some(vec![
                "+".into(),
                "+".into(),
                "-".into(),
                "-".into(),
                "-".into(),
            ]),
        )
        .unwrap();
        let m = ClassifierModel::<f64>::fit(&t, &config()).unwrap();
        let back = ClassifierModel::<f64>::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            back.predict_one(&["A", "q"]).unwrap(),
            m.predict_one(&["A", "q"]).unwrap()
        );
    }

    #[test]
    fn model_load_errors() {
        let t = table(&[["A"], ["B"]], &["+", "-"]);
        let m = ClassifierModel::<f64>::fit(&t, &config()).unwrap();
        let json = m.to_json();
        assert!(matches!(
            ClassifierModel::<f64>::from_json(&json[..json.len() / 2]),
            Err(Error::ModelFormat(_))
        ));
        let newer = json.replacen("\"format\": 1", "\"format\": 2", 1);
        assert!(matches!(
            ClassifierModel::<f64>::from_json(&newer),
            Err(Error::ModelVersion {
                found: 2,
                supported: 1
            })
        ));
        assert!(matches!(
            ClassifierModel::<f32>::from_json(&json),
            Err(Error::ModelFormat(_))
        ));
        let tampered = json.replacen("\"n_rows\": 1", "\"n_rows\": 2", 1);
        assert!(ClassifierModel::<f64>::from_json(&tampered).is_err());
    }
}
