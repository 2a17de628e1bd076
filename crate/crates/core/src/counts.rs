//! Agreement counts over observed labels, shared by the ELICE estimators and the bound.

use crate::error::{Error, Result};
use crate::types::{ExpertLabels, LabelMatrix};

/// Per labeler: `(agreements with the expert, expert instances labeled)`.
pub(crate) fn labeler_expert_counts(
    labels: &LabelMatrix,
    expert: &ExpertLabels,
) -> Vec<(usize, usize)> {
    let mut counts = vec![(0, 0); labels.n_labelers()];
    for &(i, truth) in expert.pairs() {
        for (j, l) in labels.observed(i) {
            counts[j].1 += 1;
            if l == truth {
                counts[j].0 += 1;
            }
        }
    }
    counts
}

/// Fraction of an instance's observed labels equal to `reference`.
pub(crate) fn instance_agreement(labels: &LabelMatrix, instance: usize, reference: i8) -> f64 {
    let (hits, seen) = labels
        .observed(instance)
        .fold((0usize, 0usize), |(h, s), (_, l)| {
            (h + usize::from(l == reference), s + 1)
        });
    hits as f64 / seen as f64
}

/// Per-instance reference labels: the expert label where available, otherwise `fallback`.
pub(crate) fn reference_labels(expert: &ExpertLabels, fallback: &[i8]) -> Vec<i8> {
    let mut reference = fallback.to_vec();
    for &(i, l) in expert.pairs() {
        reference[i] = l;
    }
    reference
}

pub(crate) fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::shape(format!(
            "{what}: length {got}, expected {expected}"
        )))
    }
}
