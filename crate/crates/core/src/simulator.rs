//! Synthetic ground truth and crowds of good, random and malicious labelers.
//!
//! A labeler with mistake rate `x` inverts exactly `round(x N)` truth labels at uniformly
//! chosen positions, so column accuracy is deterministic given the rate.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::FeatureMatrix;
use crate::seed::child_rng;
use crate::types::LabelMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Good,
    Random,
    Malicious,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Good, Category::Random, Category::Malicious];
}

/// Mistake-rate interval `[lo, hi)`, or `[lo, hi]` when `closed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub closed: bool,
}

impl Band {
    pub fn contains(&self, rate: f64) -> bool {
        rate >= self.lo && (rate < self.hi || (self.closed && rate == self.hi))
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.closed {
            rng.random_range(self.lo..=self.hi)
        } else {
            rng.random_range(self.lo..self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub good: Band,
    pub random: Band,
    pub malicious: Band,
}

impl Default for Bands {
    fn default() -> Self {
        Self {
            good: Band {
                lo: 0.0,
                hi: 0.35,
                closed: false,
            },
            random: Band {
                lo: 0.35,
                hi: 0.65,
                closed: false,
            },
            malicious: Band {
                lo: 0.65,
                hi: 1.0,
                closed: true,
            },
        }
    }
}

impl Bands {
    pub fn band(&self, category: Category) -> Band {
        match category {
            Category::Good => self.good,
            Category::Random => self.random,
            Category::Malicious => self.malicious,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.good, self.random, self.malicious];
        for b in all {
            if !(0.0 <= b.lo && b.lo < b.hi && b.hi <= 1.0) {
                return Err(Error::invalid(format!(
                    "band [{}, {}] must satisfy 0 <= lo < hi <= 1",
                    b.lo, b.hi
                )));
            }
        }
        if all.windows(2).any(|w| w[0].hi > w[1].lo) {
            return Err(Error::invalid("bands must be ordered and non-overlapping"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdSpec {
    pub n_instances: usize,
    pub n_labelers: usize,
    /// `(good, random, malicious)`, summing to one.
    pub fractions: [f64; 3],
    #[serde(default)]
    pub bands: Bands,
    #[serde(default = "half")]
    pub positive_fraction: f64,
    pub seed: u64,
}

fn half() -> f64 {
    0.5
}

impl CrowdSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_instances == 0 || self.n_labelers == 0 {
            return Err(Error::invalid("need at least one instance and one labeler"));
        }
        if self.fractions.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::invalid("crowd fractions must be non-negative"));
        }
        let sum: f64 = self.fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "crowd fractions sum to {sum}, not 1"
            )));
        }
        check_fraction(self.positive_fraction)?;
        self.bands.validate()
    }
}

fn check_fraction(f: f64) -> Result<()> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "positive fraction {f} outside [0, 1]"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub truth: Vec<i8>,
    pub labels: LabelMatrix,
    pub mistake_rates: Vec<f64>,
    pub categories: Vec<Category>,
    pub features: Option<FeatureMatrix>,
}

/// `round(f M)` per category, with the rounding surplus or shortfall absorbed by the category
/// with the largest fraction (the last one on ties).
pub fn category_counts(fractions: [f64; 3], m: usize) -> [usize; 3] {
    let mut counts = fractions.map(|f| (f * m as f64).round() as i64);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| fractions[b].total_cmp(&fractions[a]).then(b.cmp(&a)));
    let mut diff = m as i64 - counts.iter().sum::<i64>();
    for &c in &order {
        let adjusted = (counts[c] + diff).max(0);
        diff -= adjusted - counts[c];
        counts[c] = adjusted;
        if diff == 0 {
            break;
        }
    }
    counts.map(|c| c as usize)
}

/// `±1` truth with exactly `round(positive_fraction N)` positives.
pub fn generate_truth(n: usize, positive_fraction: f64, seed: u64) -> Result<Vec<i8>> {
    check_fraction(positive_fraction)?;
    let positives = (positive_fraction * n as f64).round() as usize;
    let mut truth = vec![-1i8; n];
    let mut rng = child_rng(seed, "truth", 0);
    for i in index::sample(&mut rng, n, positives) {
        truth[i] = 1;
    }
    Ok(truth)
}

/// Categories in good, random, malicious order, each with a rate drawn uniformly from its band.
pub fn generate_crowd(spec: &CrowdSpec) -> Result<Vec<(Category, f64)>> {
    spec.validate()?;
    let counts = category_counts(spec.fractions, spec.n_labelers);
    Ok(Category::ALL
        .iter()
        .zip(counts)
        .flat_map(|(&c, k)| std::iter::repeat_n(c, k))
        .enumerate()
        .map(|(j, c)| {
            let mut rng = child_rng(spec.seed, "crowd", j as u64);
            (c, spec.bands.band(c).draw(&mut rng))
        })
        .collect())
}

/// Complete label matrix where labeler `j` flips exactly `round(rates[j] N)` truth labels.
pub fn generate_labels(truth: &[i8], rates: &[f64], seed: u64) -> Result<LabelMatrix> {
    if let Some(r) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::domain(format!("mistake rate {r} outside [0, 1]")));
    }
    let n = truth.len();
    let columns: Vec<Vec<i8>> = rates
        .par_iter()
        .enumerate()
        .map(|(j, &rate)| {
            let mut column = truth.to_vec();
            let flips = (rate * n as f64).round() as usize;
            let mut rng = child_rng(seed, "labels", j as u64);
            for i in index::sample(&mut rng, n, flips) {
                column[i] = -column[i];
            }
            column
        })
        .collect();
    LabelMatrix::from_columns(&columns)
}

/// Two-dimensional unit-variance Gaussian features centred at `(2, 2)` for `+1` and
/// `(-2, -2)` for `-1`.
pub fn generate_features(truth: &[i8], seed: u64) -> Result<FeatureMatrix> {
    let mut rng = child_rng(seed, "features", 0);
    let noise = Normal::new(0.0, 1.0).expect("unit variance");
    let rows: Vec<Vec<f64>> = truth
        .iter()
        .map(|&t| {
            let centre = 2.0 * f64::from(t);
            vec![
                centre + noise.sample(&mut rng),
                centre + noise.sample(&mut rng),
            ]
        })
        .collect();
    FeatureMatrix::from_rows(&rows)
}

pub fn simulate(spec: &CrowdSpec, with_features: bool) -> Result<SimulatedDataset> {
    let crowd = generate_crowd(spec)?;
    let truth = generate_truth(spec.n_instances, spec.positive_fraction, spec.seed)?;
    let (categories, mistake_rates): (Vec<Category>, Vec<f64>) = crowd.into_iter().unzip();
    let labels = generate_labels(&truth, &mistake_rates, spec.seed)?;
    let features = if with_features {
        Some(generate_features(&truth, spec.seed)?)
    } else {
        None
    };
    Ok(SimulatedDataset {
        truth,
        labels,
        mistake_rates,
        categories,
        features,
    })
}
