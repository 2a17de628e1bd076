//! Entropy-discounted abilities and difficulties with flip-aware aggregation.
//!
//! For a rate `p` of agreement with a reference label the score is `(p - q)(1 - H(p))`,
//! `q = 1 - p`, `H` the base-2 binary entropy. Labelers get it directly as ability
//! (`α ∈ [-1, 1]`, `≈ 0` for random guessers, negative for adversaries). Instances get it
//! shifted by one (`β ∈ [0, 2]`, 2 = easy), scored against the expert label where known and
//! against the ability-weighted *hypothesized label* `W_i = sign(Σ_j α_j L_ij)` elsewhere.
//!
//! Aggregation weights each label by `σ(|c α_j β_i|)` and multiplies it by
//! `sign(α_j β_i)`, so labels from negative-ability labelers are inverted rather than
//! discarded.

use serde::{Deserialize, Serialize};

use crate::counts::{check_len, instance_agreement, labeler_expert_counts, reference_labels};
use crate::elice1::AbilityEstimate;
use crate::error::{Error, Result};
use crate::numeric::{entropy_discounted_score, logistic, sign, signf};
use crate::types::{
    AbilityVector, AggregationResult, DifficultyVector, ExpertLabels, LabelMatrix, MethodKind,
    ScoreKind,
};

pub const DEFAULT_SCALE_C: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Elice2Params {
    /// Multiplier inside the logistic; `α β ∈ [-2, 2]`, so 3 maps onto `[-6, 6]`.
    pub scale_c: f64,
}

impl Default for Elice2Params {
    fn default() -> Self {
        Self {
            scale_c: DEFAULT_SCALE_C,
        }
    }
}

impl Elice2Params {
    pub fn validate(&self) -> Result<()> {
        if self.scale_c > 0.0 && self.scale_c.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "scale c must be positive, got {}",
                self.scale_c
            )))
        }
    }
}

/// `α_j = (p_j - q_j)(1 - E_j)` with `p_j` the labeler's agreement rate on expert instances.
pub fn ability(labels: &LabelMatrix, expert: &ExpertLabels) -> Result<AbilityEstimate> {
    expert.check_against(labels)?;
    let mut unscored = Vec::new();
    let values = labeler_expert_counts(labels, expert)
        .into_iter()
        .enumerate()
        .map(|(j, (hits, seen))| {
            if seen == 0 {
                unscored.push(j);
                0.0
            } else {
                entropy_discounted_score(hits as f64 / seen as f64)
            }
        })
        .collect();
    Ok(AbilityEstimate {
        abilities: AbilityVector::new(values, ScoreKind::Elice2)?,
        unscored,
    })
}

fn shifted_score(labels: &LabelMatrix, instance: usize, reference: i8) -> f64 {
    entropy_discounted_score(instance_agreement(labels, instance, reference)) + 1.0
}

/// `β_i = (p'_i - q'_i)(1 - E'_i) + 1` for expert instances; `None` elsewhere.
pub fn difficulty_expert(labels: &LabelMatrix, expert: &ExpertLabels) -> Result<Vec<Option<f64>>> {
    expert.check_against(labels)?;
    let mut partial = vec![None; labels.n_instances()];
    for &(i, truth) in expert.pairs() {
        partial[i] = Some(shifted_score(labels, i, truth));
    }
    Ok(partial)
}

/// `W_i = sign(Σ_j α_j L_ij)` for every instance.
pub fn hypothesized_labels(labels: &LabelMatrix, abilities: &AbilityVector) -> Result<Vec<i8>> {
    check_len("abilities", abilities.len(), labels.n_labelers())?;
    let alpha = abilities.values();
    Ok((0..labels.n_instances())
        .map(|i| {
            sign(
                labels
                    .observed(i)
                    .map(|(j, l)| alpha[j] * f64::from(l))
                    .sum(),
            )
        })
        .collect())
}

/// Fills the `None` entries of `partial` by scoring against the hypothesized labels.
pub fn difficulty_rest(
    labels: &LabelMatrix,
    partial: &[Option<f64>],
    hypothesized: &[i8],
) -> Result<DifficultyVector> {
    check_len("partial difficulties", partial.len(), labels.n_instances())?;
    check_len(
        "hypothesized labels",
        hypothesized.len(),
        labels.n_instances(),
    )?;
    let values = partial
        .iter()
        .enumerate()
        .map(|(i, known)| known.unwrap_or_else(|| shifted_score(labels, i, hypothesized[i])))
        .collect();
    DifficultyVector::new(values, ScoreKind::Elice2)
}

/// `P(T_i = L_ij | α_j, β_i) = σ(c α_j β_i)`. Diagnostic only; aggregation goes through
/// [`flip_aware_labels`].
pub fn correctness_probability(alpha: f64, beta: f64, scale_c: f64) -> f64 {
    logistic(scale_c * alpha * beta)
}

/// `A_i = sign(Σ_j σ(|c α_j β_i|) L_ij sign(α_j β_i))`.
///
/// Also used with the refined ELICE 3 scores.
pub fn flip_aware_labels(
    labels: &LabelMatrix,
    alpha: &[f64],
    beta: &[f64],
    scale_c: f64,
) -> Result<Vec<i8>> {
    check_len("abilities", alpha.len(), labels.n_labelers())?;
    check_len("difficulties", beta.len(), labels.n_instances())?;
    Ok(beta
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let s: f64 = labels
                .observed(i)
                .map(|(j, l)| {
                    let ab = alpha[j] * b;
                    logistic((scale_c * ab).abs()) * f64::from(l) * signf(ab)
                })
                .sum();
            sign(s)
        })
        .collect())
}

pub fn aggregate(
    labels: &LabelMatrix,
    abilities: &AbilityVector,
    difficulties: &DifficultyVector,
    params: &Elice2Params,
) -> Result<AggregationResult> {
    params.validate()?;
    let out = flip_aware_labels(
        labels,
        abilities.values(),
        difficulties.values(),
        params.scale_c,
    )?;
    let mut result = AggregationResult::new(out, MethodKind::Elice2);
    result.abilities = Some(abilities.clone());
    result.difficulties = Some(difficulties.clone());
    result.params.scale_c = Some(params.scale_c);
    Ok(result)
}

/// Estimated scores before aggregation; ELICE 3 starts from these.
#[derive(Debug, Clone, PartialEq)]
pub struct Elice2Scores {
    pub abilities: AbilityVector,
    pub difficulties: DifficultyVector,
    pub unscored: Vec<usize>,
}

pub fn estimate(labels: &LabelMatrix, expert: &ExpertLabels) -> Result<Elice2Scores> {
    let AbilityEstimate {
        abilities,
        unscored,
    } = ability(labels, expert)?;
    let partial = difficulty_expert(labels, expert)?;
    let hypothesized = hypothesized_labels(labels, &abilities)?;
    let difficulties = difficulty_rest(labels, &partial, &reference_labels(expert, &hypothesized))?;
    Ok(Elice2Scores {
        abilities,
        difficulties,
        unscored,
    })
}

pub fn run(
    labels: &LabelMatrix,
    expert: &ExpertLabels,
    params: &Elice2Params,
) -> Result<AggregationResult> {
    params.validate()?;
    let scores = estimate(labels, expert)?;
    let mut result = aggregate(labels, &scores.abilities, &scores.difficulties, params)?;
    result.unscored_labelers = scores.unscored;
    Ok(result)
}
