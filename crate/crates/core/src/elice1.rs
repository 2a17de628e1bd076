//! Linear expert-agreement scores with logistic-weighted voting.
//!
//! Ability is `(agreements - disagreements) / n_j` over the expert instances labeler `j`
//! labeled; difficulty is the fraction of an instance's labels that agree with its
//! reference label (the expert label where known, the ability-weighted *expected label*
//! elsewhere). Final labels are `sign(Σ_j σ(α_j β_i) l_ij)`.

use crate::counts::{check_len, instance_agreement, labeler_expert_counts, reference_labels};
use crate::error::Result;
use crate::numeric::{logistic, sign};
use crate::types::{
    AbilityVector, AggregationResult, DifficultyVector, ExpertLabels, LabelMatrix, MethodKind,
    ScoreKind,
};

/// Abilities plus the labelers that had nothing to be scored on.
#[derive(Debug, Clone, PartialEq)]
pub struct AbilityEstimate {
    pub abilities: AbilityVector,
    /// Labelers with no label on any expert instance (ability fixed at 0).
    pub unscored: Vec<usize>,
}

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
                (2.0 * hits as f64 - seen as f64) / seen as f64
            }
        })
        .collect();
    Ok(AbilityEstimate {
        abilities: AbilityVector::new(values, ScoreKind::Elice1)?,
        unscored,
    })
}

/// Difficulty of the expert instances only; `None` elsewhere.
pub fn difficulty_expert(labels: &LabelMatrix, expert: &ExpertLabels) -> Result<Vec<Option<f64>>> {
    expert.check_against(labels)?;
    let mut partial = vec![None; labels.n_instances()];
    for &(i, truth) in expert.pairs() {
        partial[i] = Some(instance_agreement(labels, i, truth));
    }
    Ok(partial)
}

/// `EL_i = sign(Σ_j α_j l_ij)` for every instance.
pub fn expected_labels(labels: &LabelMatrix, abilities: &AbilityVector) -> Result<Vec<i8>> {
    check_len("abilities", abilities.len(), labels.n_labelers())?;
    let alpha = abilities.values();
    Ok((0..labels.n_instances())
        .map(|i| {
            let s: f64 = labels
                .observed(i)
                .map(|(j, l)| alpha[j] * f64::from(l))
                .sum();
            sign(s)
        })
        .collect())
}

/// Completes `partial` with the agreement fraction against `expected` where it is `None`.
pub fn difficulty_rest(
    labels: &LabelMatrix,
    partial: &[Option<f64>],
    expected: &[i8],
) -> Result<DifficultyVector> {
    check_len("partial difficulties", partial.len(), labels.n_instances())?;
    check_len("expected labels", expected.len(), labels.n_instances())?;
    let values = partial
        .iter()
        .enumerate()
        .map(|(i, known)| known.unwrap_or_else(|| instance_agreement(labels, i, expected[i])))
        .collect();
    DifficultyVector::new(values, ScoreKind::Elice1)
}

/// `IL_i = sign(Σ_j σ(α_j β_i) l_ij)` over every instance.
pub fn aggregate(
    labels: &LabelMatrix,
    abilities: &AbilityVector,
    difficulties: &DifficultyVector,
) -> Result<AggregationResult> {
    check_len("abilities", abilities.len(), labels.n_labelers())?;
    check_len("difficulties", difficulties.len(), labels.n_instances())?;
    let alpha = abilities.values();
    let out = difficulties
        .values()
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            let s: f64 = labels
                .observed(i)
                .map(|(j, l)| logistic(alpha[j] * beta) * f64::from(l))
                .sum();
            sign(s)
        })
        .collect();
    let mut result = AggregationResult::new(out, MethodKind::Elice1);
    result.abilities = Some(abilities.clone());
    result.difficulties = Some(difficulties.clone());
    Ok(result)
}

pub fn run(labels: &LabelMatrix, expert: &ExpertLabels) -> Result<AggregationResult> {
    let AbilityEstimate {
        abilities,
        unscored,
    } = ability(labels, expert)?;
    let partial = difficulty_expert(labels, expert)?;
    let expected = expected_labels(labels, &abilities)?;
    let difficulties = difficulty_rest(labels, &partial, &reference_labels(expert, &expected))?;
    let mut result = aggregate(labels, &abilities, &difficulties)?;
    result.unscored_labelers = unscored;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col_matrix(cols: &[Vec<i8>]) -> LabelMatrix {
        LabelMatrix::from_columns(cols).unwrap()
    }

    #[test]
    fn ability_examples() {
        let truth = vec![1, -1, 1, 1];
        let expert = ExpertLabels::from_truth(&[0, 1, 2, 3], &truth).unwrap();
        let perfect = truth.clone();
        let three_of_four = vec![1, -1, 1, -1];
        let inverted: Vec<i8> = truth.iter().map(|t| -t).collect();
        let m = col_matrix(&[perfect, three_of_four, inverted]);
        let a = ability(&m, &expert).unwrap();
        assert_eq!(a.abilities.values(), &[1.0, 0.5, -1.0]);
        assert!(a.unscored.is_empty());
    }

    #[test]
    fn labeler_without_expert_labels_is_flagged() {
        let m = LabelMatrix::from_rows(&[vec![1, 0], vec![1, 1]]).unwrap();
        let expert = ExpertLabels::new(vec![(0, 1)], 2).unwrap();
        let a = ability(&m, &expert).unwrap();
        assert_eq!(a.abilities.values(), &[1.0, 0.0]);
        assert_eq!(a.unscored, vec![1]);
        let r = run(&m, &expert).unwrap();
        assert_eq!(r.unscored_labelers, vec![1]);
    }

    #[test]
    fn expert_difficulty_examples() {
        let m = LabelMatrix::from_rows(&[
            vec![1, 1, 1, 1, 1],
            vec![-1, -1, -1, -1, -1],
            vec![1, 1, 1, -1, -1],
        ])
        .unwrap();
        let expert = ExpertLabels::new(vec![(0, 1), (1, 1), (2, 1)], 3).unwrap();
        let d = difficulty_expert(&m, &expert).unwrap();
        assert_eq!(d, vec![Some(1.0), Some(0.0), Some(0.6)]);
    }

    #[test]
    fn expected_label_examples() {
        let m = LabelMatrix::from_rows(&[vec![1, 1, -1]]).unwrap();
        let a = AbilityVector::new(vec![1.0, 0.5, -1.0], ScoreKind::Elice1).unwrap();
        assert_eq!(expected_labels(&m, &a).unwrap(), vec![1]);

        let m = LabelMatrix::from_rows(&[vec![-1, -1], vec![1, -1]]).unwrap();
        let zero = AbilityVector::new(vec![0.0, 0.0], ScoreKind::Elice1).unwrap();
        assert_eq!(expected_labels(&m, &zero).unwrap(), vec![1, 1]);

        let m = LabelMatrix::from_rows(&[vec![1]]).unwrap();
        let bad = AbilityVector::new(vec![-1.0], ScoreKind::Elice1).unwrap();
        assert_eq!(expected_labels(&m, &bad).unwrap(), vec![-1]);
    }

    #[test]
    fn rest_difficulty_examples() {
        let m = LabelMatrix::from_rows(&[vec![1, 1, 1, 1], vec![1, -1, 1, -1], vec![1, 1, 0, 0]])
            .unwrap();
        let d = difficulty_rest(&m, &[None, None, None], &[-1, 1, -1]).unwrap();
        // a unanimous crowd scores 1 against its own majority, here the EL disagrees
        assert_eq!(d.values(), &[0.0, 0.5, 0.0]);
        let d = difficulty_rest(&m, &[None, None, None], &[1, 1, -1]).unwrap();
        assert_eq!(d.values()[0], 1.0);
    }

    #[test]
    fn aggregate_examples() {
        let m = LabelMatrix::from_rows(&[vec![1]]).unwrap();
        let a = AbilityVector::new(vec![1.0], ScoreKind::Elice1).unwrap();
        let b = DifficultyVector::new(vec![1.0], ScoreKind::Elice1).unwrap();
        assert_eq!(aggregate(&m, &a, &b).unwrap().labels, vec![1]);
        assert!((logistic(1.0) - 0.731).abs() < 1e-3);

        let m = LabelMatrix::from_rows(&[vec![1, -1]]).unwrap();
        let a = AbilityVector::new(vec![0.9, -0.9], ScoreKind::Elice1).unwrap();
        assert_eq!(aggregate(&m, &a, &b).unwrap().labels, vec![1]);
        assert!((logistic(0.9) - logistic(-0.9) - (0.7109 - 0.2891)).abs() < 1e-4);
    }

    #[test]
    fn zero_abilities_reduce_to_majority() {
        let m = LabelMatrix::from_rows(&[vec![1, -1, -1], vec![1, -1, 0], vec![1, 1, -1]]).unwrap();
        let a = AbilityVector::new(vec![0.0; 3], ScoreKind::Elice1).unwrap();
        let b = DifficultyVector::new(vec![0.3, 0.9, 0.5], ScoreKind::Elice1).unwrap();
        assert_eq!(aggregate(&m, &a, &b).unwrap().labels, vec![-1, 1, 1]);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let m = LabelMatrix::from_rows(&[vec![1, -1]]).unwrap();
        let a = AbilityVector::new(vec![0.0], ScoreKind::Elice1).unwrap();
        assert!(expected_labels(&m, &a).is_err());
    }
}
