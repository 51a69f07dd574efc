//! Class pools, Shannon entropy profiles and the difference-of-entropy metric.
//!
//! A pool keeps, for every attribute, how often each category token occurs
//! among the rows of one class. Its reference metric `alpha` is the sum of
//! the per-attribute entropies. Classifying a candidate inserts it virtually:
//! the final metric `beta` is the same sum with the candidate's tokens added
//! once, and `dem = alpha - beta`. A pool is never mutated by evaluation.
//!
//! `beta` is computed incrementally. With `S = Σ c·log2(c)` over the counts of
//! an attribute, its entropy is `log2(n) - S/n`, so adding one token of count
//! `c` only replaces the term `c·log2(c)` by `(c+1)·log2(c+1)`. Cost is
//! therefore independent of the number of rows and categories.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::binning::CategoricalTable;
use crate::error::{Error, Result};
use crate::scalar::{clear_negative_zero, Scalar};

/// Category token → occurrence count for one attribute.
pub type CategoryCounts = BTreeMap<String, u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassTag {
    /// C+, non-defaulter / accepted.
    Positive,
    /// C−, defaulter / rejected.
    Negative,
}

impl ClassTag {
    pub const ALL: [ClassTag; 2] = [ClassTag::Positive, ClassTag::Negative];

    pub fn other(self) -> Self {
        match self {
            ClassTag::Positive => ClassTag::Negative,
            ClassTag::Negative => ClassTag::Positive,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassTag::Positive => "positive",
            ClassTag::Negative => "negative",
        }
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Class chosen when both DEMs are exactly equal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    #[default]
    Rejected,
    Accepted,
}

impl TieBreak {
    pub fn class(self) -> ClassTag {
        match self {
            TieBreak::Rejected => ClassTag::Negative,
            TieBreak::Accepted => ClassTag::Positive,
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            TieBreak::Rejected => TieBreak::Accepted,
            TieBreak::Accepted => TieBreak::Rejected,
        }
    }
}

impl FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rejected" => Ok(TieBreak::Rejected),
            "accepted" => Ok(TieBreak::Accepted),
            other => Err(Error::Usage(format!(
                "unknown tie-break {other:?} (expected rejected|accepted)"
            ))),
        }
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieBreak::Rejected => "rejected",
            TieBreak::Accepted => "accepted",
        })
    }
}

/// Shannon entropy in bits of a count distribution over `n` observations.
///
/// Zero counts contribute nothing (`0·log2 0 = 0`) and the result is never
/// `-0.0`.
pub fn attribute_entropy<F, I>(counts: I, n: u64) -> Result<F>
where
    F: Scalar,
    I: IntoIterator<Item = u64>,
{
    if n == 0 {
        return Err(Error::UndefinedEntropy);
    }
    let total = F::from_count(n);
    let mut sum = 0u64;
    let mut acc = F::zero();
    for c in counts {
        sum += c;
        if c == 0 {
            continue;
        }
        let p = F::from_count(c) / total;
        acc = acc + p * p.log2();
    }
    if sum != n {
        return Err(Error::InvalidCounts(format!(
            "counts sum to {sum}, expected {n}"
        )));
    }
    Ok(clear_negative_zero(-acc))
}

/// `c·log2(c)`, exactly zero for `c ≤ 1`.
#[inline]
fn count_log_term<F: Scalar>(c: u64) -> F {
    if c <= 1 {
        F::zero()
    } else {
        let c = F::from_count(c);
        c * c.log2()
    }
}

fn sequential_sum<F: Scalar>(values: impl IntoIterator<Item = F>) -> F {
    values.into_iter().fold(F::zero(), |acc, v| acc + v)
}

/// Per-attribute entropies and their sum (`alpha` or `beta`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct EntropyProfile<F> {
    pub per_attribute: Vec<(String, F)>,
    pub metric_sum: F,
}

impl<F: Scalar> EntropyProfile<F> {
    fn from_values(attributes: &[String], values: Vec<F>) -> Self {
        let metric_sum = sequential_sum(values.iter().copied());
        Self {
            per_attribute: attributes.iter().cloned().zip(values).collect(),
            metric_sum,
        }
    }

    pub fn values(&self) -> impl Iterator<Item = F> + '_ {
        self.per_attribute.iter().map(|(_, e)| *e)
    }
}

/// Category-count tables of one class pool, with cached entropy terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolStats<F> {
    tag: ClassTag,
    attributes: Vec<String>,
    counts: Vec<CategoryCounts>,
    n_rows: u64,
    entropies: Vec<F>,
    log_sums: Vec<F>,
    alpha: F,
}

impl<F: Scalar> PoolStats<F> {
    /// Builds a pool from per-attribute count tables.
    ///
    /// Every table must sum to `n_rows`, which must be at least one. Zero
    /// entries are dropped.
    pub fn from_counts(
        tag: ClassTag,
        attributes: Vec<String>,
        counts: Vec<CategoryCounts>,
        n_rows: u64,
    ) -> Result<Self> {
        if n_rows == 0 {
            return Err(Error::EmptyPool(tag.to_string()));
        }
        if attributes.len() != counts.len() {
            return Err(Error::InvalidCounts(format!(
                "{} attributes but {} count tables",
                attributes.len(),
                counts.len()
            )));
        }
        let mut counts = counts;
        for (name, table) in attributes.iter().zip(counts.iter_mut()) {
            table.retain(|_, c| *c > 0);
            let sum: u64 = table.values().sum();
            if sum != n_rows {
                return Err(Error::InvalidCounts(format!(
                    "attribute {name:?} counts sum to {sum}, pool has {n_rows} rows"
                )));
            }
        }
        let entropies = counts
            .iter()
            .map(|t| attribute_entropy(t.values().copied(), n_rows))
            .collect::<Result<Vec<F>>>()?;
        let log_sums = counts
            .iter()
            .map(|t| sequential_sum(t.values().map(|&c| count_log_term::<F>(c))))
            .collect();
        let alpha = sequential_sum(entropies.iter().copied());
        Ok(Self {
            tag,
            attributes,
            counts,
            n_rows,
            entropies,
            log_sums,
            alpha,
        })
    }

    /// Counts tokens of row-major records.
    pub fn from_rows<R, S>(
        tag: ClassTag,
        attributes: Vec<String>,
        rows: impl IntoIterator<Item = R>,
    ) -> Result<Self>
    where
        R: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut counts = vec![CategoryCounts::new(); attributes.len()];
        let mut n_rows = 0u64;
        for row in rows {
            let row = row.as_ref();
            check_candidate(&attributes, row.len())?;
            for (table, token) in counts.iter_mut().zip(row) {
                *table.entry(token.as_ref().to_string()).or_insert(0) += 1;
            }
            n_rows += 1;
        }
        Self::from_counts(tag, attributes, counts, n_rows)
    }

    pub fn tag(&self) -> ClassTag {
        self.tag
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn counts(&self) -> &[CategoryCounts] {
        &self.counts
    }

    pub fn n_rows(&self) -> u64 {
        self.n_rows
    }

    /// Reference entropy metric: the sum of per-attribute entropies.
    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn attribute_entropies(&self) -> &[F] {
        &self.entropies
    }

    /// Same pool with a different class tag.
    pub fn with_tag(mut self, tag: ClassTag) -> Self {
        self.tag = tag;
        self
    }

    /// Pool with every count multiplied by `factor` (row duplication).
    pub fn scaled(&self, factor: u64) -> Result<Self> {
        let counts = self
            .counts
            .iter()
            .map(|t| t.iter().map(|(k, c)| (k.clone(), c * factor)).collect())
            .collect();
        Self::from_counts(
            self.tag,
            self.attributes.clone(),
            counts,
            self.n_rows * factor,
        )
    }

    /// Entropy of attribute `index` after virtually adding `token`, plus the
    /// number of `c·log2(c)` terms that had to be evaluated.
    fn inserted_entropy(&self, index: usize, token: &str) -> (F, usize) {
        let count = self.counts[index].get(token).copied().unwrap_or(0);
        let n_after = self.n_rows + 1;
        let (removed, touched) = if count == 0 {
            (F::zero(), 1)
        } else {
            (count_log_term::<F>(count), 2)
        };
        if count + 1 == n_after {
            return (F::zero(), touched);
        }
        let log_sum = self.log_sums[index] - removed + count_log_term::<F>(count + 1);
        let n = F::from_count(n_after);
        let entropy = n.log2() - log_sum / n;
        (clear_negative_zero(entropy.max(F::zero())), touched)
    }
}

fn check_candidate(attributes: &[String], len: usize) -> Result<()> {
    match len.cmp(&attributes.len()) {
        std::cmp::Ordering::Equal => Ok(()),
        std::cmp::Ordering::Less => Err(Error::SchemaMismatch(format!(
            "candidate is missing attributes {:?}",
            &attributes[len..]
        ))),
        std::cmp::Ordering::Greater => Err(Error::SchemaMismatch(format!(
            "candidate has {len} tokens but the pool has {} attributes",
            attributes.len()
        ))),
    }
}

/// Counts the rows `indices` of `table` into a pool.
pub fn build_pool<F: Scalar>(
    table: &CategoricalTable,
    indices: &[usize],
    tag: ClassTag,
) -> Result<PoolStats<F>> {
    PoolStats::from_rows(
        tag,
        table.attributes.clone(),
        indices.iter().map(|&i| table.row(i)),
    )
}

/// Per-attribute entropies of the pool; `metric_sum` is `alpha`.
pub fn entropy_profile<F: Scalar>(pool: &PoolStats<F>) -> EntropyProfile<F> {
    EntropyProfile {
        per_attribute: pool
            .attributes
            .iter()
            .cloned()
            .zip(pool.entropies.iter().copied())
            .collect(),
        metric_sum: pool.alpha,
    }
}

/// Work done by one virtual insertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsertionTrace {
    /// Category terms evaluated per attribute (1 for an unseen token, else 2).
    pub touched_terms: Vec<usize>,
}

/// Entropy profile of the pool with `candidate` virtually appended; its
/// `metric_sum` is `beta`. The pool is not modified.
pub fn global_profile<F: Scalar, S: AsRef<str>>(
    pool: &PoolStats<F>,
    candidate: &[S],
) -> Result<EntropyProfile<F>> {
    global_profile_traced(pool, candidate).map(|(profile, _)| profile)
}

pub fn global_profile_traced<F: Scalar, S: AsRef<str>>(
    pool: &PoolStats<F>,
    candidate: &[S],
) -> Result<(EntropyProfile<F>, InsertionTrace)> {
    check_candidate(&pool.attributes, candidate.len())?;
    let (values, touched_terms): (Vec<F>, Vec<usize>) = candidate
        .iter()
        .enumerate()
        .map(|(j, token)| pool.inserted_entropy(j, token.as_ref()))
        .unzip();
    Ok((
        EntropyProfile::from_values(&pool.attributes, values),
        InsertionTrace { touched_terms },
    ))
}

/// Reference metric, final metric and their difference for one pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct DemTriple<F> {
    pub alpha: F,
    pub beta: F,
    pub dem: F,
}

pub fn dem<F: Scalar, S: AsRef<str>>(pool: &PoolStats<F>, candidate: &[S]) -> Result<DemTriple<F>> {
    let alpha = entropy_profile(pool).metric_sum;
    let beta = global_profile(pool, candidate)?.metric_sum;
    Ok(DemTriple {
        alpha,
        beta,
        dem: alpha - beta,
    })
}

/// Checks the incremental `beta` path against a full recount of the pool
/// with the candidate appended, per attribute within the scalar's tolerance.
pub fn verify_incremental<F: Scalar, S: AsRef<str>>(
    pool: &PoolStats<F>,
    candidate: &[S],
) -> Result<bool> {
    let incremental = global_profile(pool, candidate)?;
    let mut counts = pool.counts.clone();
    for (table, token) in counts.iter_mut().zip(candidate) {
        *table.entry(token.as_ref().to_string()).or_insert(0) += 1;
    }
    let rebuilt =
        PoolStats::<F>::from_counts(pool.tag, pool.attributes.clone(), counts, pool.n_rows + 1)?;
    let tolerance = F::oracle_tolerance();
    let agrees = incremental
        .values()
        .zip(rebuilt.attribute_entropies().iter().copied())
        .all(|(a, b)| (a - b).abs() <= tolerance);
    Ok(agrees)
}

/// DEM of a candidate against both pools and the resulting decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct DemEvaluation<F> {
    pub positive: DemTriple<F>,
    pub negative: DemTriple<F>,
    pub predicted_class: ClassTag,
    /// `dem(predicted) - dem(other)`; zero on a tie.
    pub decision_margin: F,
}

impl<F: Scalar> DemEvaluation<F> {
    /// Picks the class with the larger DEM; exact ties go to `tie_break`.
    pub fn decide(positive: DemTriple<F>, negative: DemTriple<F>, tie_break: TieBreak) -> Self {
        let predicted_class = if positive.dem > negative.dem {
            ClassTag::Positive
        } else if negative.dem > positive.dem {
            ClassTag::Negative
        } else {
            tie_break.class()
        };
        let mut out = Self {
            positive,
            negative,
            predicted_class,
            decision_margin: F::zero(),
        };
        out.decision_margin = clear_negative_zero(
            out.triple(predicted_class).dem - out.triple(predicted_class.other()).dem,
        );
        out
    }

    pub fn triple(&self, tag: ClassTag) -> &DemTriple<F> {
        match tag {
            ClassTag::Positive => &self.positive,
            ClassTag::Negative => &self.negative,
        }
    }
}
