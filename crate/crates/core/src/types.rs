//! Domain types shared by the estimators.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Crowd labels for `N` instances (rows) by `M` labelers (columns).
///
/// Entries are `+1`, `-1`, or `0` for "not labeled". Every row and every column carries at
/// least one observed label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMatrix {
    n_instances: usize,
    n_labelers: usize,
    entries: Vec<i8>,
}

impl LabelMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(n_instances: usize, n_labelers: usize, entries: Vec<i8>) -> Result<Self> {
        if n_instances == 0 || n_labelers == 0 {
            return Err(Error::invalid(format!(
                "label matrix must be at least 1x1, got {n_instances}x{n_labelers}"
            )));
        }
        if entries.len() != n_instances * n_labelers {
            return Err(Error::shape(format!(
                "expected {} entries for a {n_instances}x{n_labelers} matrix, got {}",
                n_instances * n_labelers,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|v| !matches!(v, -1..=1)) {
            return Err(Error::invalid(format!(
                "entry ({}, {}) is {}; labels must be -1, +1 or 0",
                pos / n_labelers,
                pos % n_labelers,
                entries[pos]
            )));
        }
        let matrix = Self {
            n_instances,
            n_labelers,
            entries,
        };
        if let Some(i) = (0..n_instances).find(|&i| matrix.row(i).iter().all(|&v| v == 0)) {
            return Err(Error::invalid(format!("instance {i} has no labels")));
        }
        let mut seen = vec![false; n_labelers];
        for row in matrix.rows() {
            for (j, &v) in row.iter().enumerate() {
                seen[j] |= v != 0;
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("labeler {j} has no labels")));
        }
        Ok(matrix)
    }

    /// Builds a matrix from one vector per instance.
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let n_labelers = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != n_labelers) {
            return Err(Error::shape(format!(
                "row {i} has {} labels, expected {n_labelers}",
                rows[i].len()
            )));
        }
        Self::new(rows.len(), n_labelers, rows.concat())
    }

    /// Builds a matrix from one vector per labeler.
    pub fn from_columns(columns: &[Vec<i8>]) -> Result<Self> {
        let n_labelers = columns.len();
        let n_instances = columns.first().map_or(0, Vec::len);
        if let Some(j) = columns.iter().position(|c| c.len() != n_instances) {
            return Err(Error::shape(format!(
                "column {j} has {} labels, expected {n_instances}",
                columns[j].len()
            )));
        }
        let mut entries = vec![0; n_instances * n_labelers];
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                entries[i * n_labelers + j] = v;
            }
        }
        Self::new(n_instances, n_labelers, entries)
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn n_labelers(&self) -> usize {
        self.n_labelers
    }

    #[inline]
    pub fn get(&self, instance: usize, labeler: usize) -> i8 {
        self.entries[instance * self.n_labelers + labeler]
    }

    #[inline]
    pub fn row(&self, instance: usize) -> &[i8] {
        let start = instance * self.n_labelers;
        &self.entries[start..start + self.n_labelers]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.entries.chunks_exact(self.n_labelers)
    }

    /// Observed `(labeler, label)` pairs of one instance.
    pub fn observed(&self, instance: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        self.row(instance)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(j, &v)| (j, v))
    }

    pub fn column(&self, labeler: usize) -> Vec<i8> {
        self.rows().map(|r| r[labeler]).collect()
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn is_complete(&self) -> bool {
        self.entries.iter().all(|&v| v != 0)
    }
}

/// Reference labels for a subset of instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertLabels {
    pairs: Vec<(usize, i8)>,
}

impl ExpertLabels {
    /// Validates `(instance, label)` pairs against a dataset of `n_instances` rows.
    pub fn new(pairs: Vec<(usize, i8)>, n_instances: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("expert label set is empty"));
        }
        if pairs.len() > n_instances {
            return Err(Error::invalid(format!(
                "{} expert labels for only {n_instances} instances",
                pairs.len()
            )));
        }
        let mut seen = vec![false; n_instances];
        for &(i, label) in &pairs {
            if i >= n_instances {
                return Err(Error::invalid(format!(
                    "expert instance {i} out of range (N = {n_instances})"
                )));
            }
            if label != 1 && label != -1 {
                return Err(Error::invalid(format!(
                    "expert label for instance {i} is {label}; must be -1 or +1"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("expert instance {i} listed twice")));
            }
        }
        Ok(Self { pairs })
    }

    /// Expert labels copied from a truth vector at the given instances.
    pub fn from_truth(indices: &[usize], truth: &[i8]) -> Result<Self> {
        let pairs = indices
            .iter()
            .map(|&i| {
                truth
                    .get(i)
                    .map(|&t| (i, t))
                    .ok_or_else(|| Error::invalid(format!("instance {i} has no truth label")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs, truth.len())
    }

    pub fn pairs(&self) -> &[(usize, i8)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Per-instance lookup table: `Some(label)` for expert instances.
    pub fn as_lookup(&self, n_instances: usize) -> Vec<Option<i8>> {
        let mut lookup = vec![None; n_instances];
        for &(i, label) in &self.pairs {
            lookup[i] = Some(label);
        }
        lookup
    }

    pub(crate) fn check_against(&self, labels: &LabelMatrix) -> Result<()> {
        match self.pairs.iter().find(|(i, _)| *i >= labels.n_instances()) {
            Some((i, _)) => Err(Error::invalid(format!(
                "expert instance {i} out of range (N = {})",
                labels.n_instances()
            ))),
            None => Ok(()),
        }
    }
}

/// Which estimator produced a score vector; it fixes the valid range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreKind {
    Elice1,
    Elice2,
    Elice3Refined,
}

/// One ability score per labeler.
#[derive(Debug, Clone, PartialEq)]
pub struct AbilityVector {
    values: Vec<f64>,
    kind: ScoreKind,
}

impl AbilityVector {
    pub fn new(values: Vec<f64>, kind: ScoreKind) -> Result<Self> {
        check_finite(&values, "ability")?;
        if matches!(kind, ScoreKind::Elice1 | ScoreKind::Elice2) {
            check_range(&values, -1.0, 1.0, "ability")?;
        }
        Ok(Self { values, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One difficulty score per instance (higher is easier).
#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyVector {
    values: Vec<f64>,
    kind: ScoreKind,
}

impl DifficultyVector {
    pub fn new(values: Vec<f64>, kind: ScoreKind) -> Result<Self> {
        check_finite(&values, "difficulty")?;
        match kind {
            ScoreKind::Elice1 => check_range(&values, 0.0, 1.0, "difficulty")?,
            ScoreKind::Elice2 => check_range(&values, 0.0, 2.0, "difficulty")?,
            ScoreKind::Elice3Refined => {}
        }
        Ok(Self { values, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::invalid(format!(
            "{what} score {k} is not finite ({})",
            values[k]
        ))),
        None => Ok(()),
    }
}

fn check_range(values: &[f64], lo: f64, hi: f64, what: &str) -> Result<()> {
    match values.iter().position(|v| !(lo..=hi).contains(v)) {
        Some(k) => Err(Error::invalid(format!(
            "{what} score {k} = {} outside [{lo}, {hi}]",
            values[k]
        ))),
        None => Ok(()),
    }
}

/// Pairwise or circular comparison design for the refined (ELICE 3) scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonMode {
    Pairwise,
    Circular,
}

impl ComparisonMode {
    /// Pairwise up to 2000 instances, circular beyond.
    pub fn default_for(n_instances: usize) -> Self {
        if n_instances > 2000 {
            ComparisonMode::Circular
        } else {
            ComparisonMode::Pairwise
        }
    }
}

impl fmt::Display for ComparisonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComparisonMode::Pairwise => "pairwise",
            ComparisonMode::Circular => "circular",
        })
    }
}

/// Aggregation method that produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Majority,
    DawidSkene,
    Karger,
    Elice1,
    Elice2,
    Elice3,
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodKind::Majority => "majority",
            MethodKind::DawidSkene => "dawid-skene",
            MethodKind::Karger => "karger",
            MethodKind::Elice1 => "elice1",
            MethodKind::Elice2 => "elice2",
            MethodKind::Elice3 => "elice3",
        })
    }
}

/// Parameters recorded alongside a result. Unused fields stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_scale_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ComparisonMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge_mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge_nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Final labels plus whatever per-labeler / per-instance scores the method estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationResult {
    pub labels: Vec<i8>,
    pub abilities: Option<AbilityVector>,
    pub difficulties: Option<DifficultyVector>,
    pub method: MethodKind,
    pub params: ResultParams,
    /// Labelers with no label on any expert instance; their ability was set to 0.
    pub unscored_labelers: Vec<usize>,
}

impl AggregationResult {
    pub(crate) fn new(labels: Vec<i8>, method: MethodKind) -> Self {
        debug_assert!(labels.iter().all(|&l| l == 1 || l == -1));
        Self {
            labels,
            abilities: None,
            difficulties: None,
            method,
            params: ResultParams::default(),
            unscored_labelers: Vec::new(),
        }
    }
}
