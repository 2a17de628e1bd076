use crate::numeric::sign;
use crate::types::{AggregationResult, LabelMatrix, MethodKind};

/// Sign of the sum of observed labels per instance; ties go to +1.
pub fn majority_vote(labels: &LabelMatrix) -> AggregationResult {
    let out = labels
        .rows()
        .map(|row| sign(row.iter().map(|&l| f64::from(l)).sum()))
        .collect();
    AggregationResult::new(out, MethodKind::Majority)
}
