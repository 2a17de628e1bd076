//! How many expert labels are enough.
//!
//! With crowd quality `c` and dataset ease `d` in `(0, 1)` the error term is
//! `e = 1 / (1 + (c - 1/2)(d - 1/2))`, which ranges over `(a, b) = (4/5, 4/3)` on the open
//! unit square. Normalising to `ε = (e - a) / (b - a)` gives the lower bound
//! `n ≥ (1/ε) ln(1/δ)`.

use serde::Serialize;

use crate::counts::{instance_agreement, labeler_expert_counts};
use crate::error::{Error, Result};
use crate::types::{ExpertLabels, LabelMatrix};

/// Infimum of `e` over the open square.
pub const E_MIN: f64 = 0.8;
/// Supremum of `e` over the open square.
pub const E_MAX: f64 = 4.0 / 3.0;
/// Empirical `c`, `d` are clamped to `[CLAMP, 1 - CLAMP]`.
pub const CLAMP: f64 = 1e-6;

/// Slack when rounding the bound up, so values a hair above an integer do not round past it.
const CEIL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub c: f64,
    pub d: f64,
    pub delta: f64,
}

impl BoundInputs {
    pub fn new(c: f64, d: f64, delta: f64) -> Result<Self> {
        open_unit("crowd quality c", c)?;
        open_unit("dataset ease d", d)?;
        open_unit("confidence delta", delta)?;
        Ok(Self { c, d, delta })
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {v} must lie in (0, 1)")))
    }
}

fn denominator(c: f64, d: f64) -> f64 {
    1.0 + (c - 0.5) * (d - 0.5)
}

pub fn error_e(c: f64, d: f64) -> Result<f64> {
    open_unit("crowd quality c", c)?;
    open_unit("dataset ease d", d)?;
    Ok(1.0 / denominator(c, d))
}

pub fn normalized_epsilon(c: f64, d: f64) -> Result<f64> {
    Ok((error_e(c, d)? - E_MIN) / (E_MAX - E_MIN))
}

/// The unrounded bound `(b - a)(1 + (c-½)(d-½)) / (1 - a(1 + (c-½)(d-½))) · ln(1/δ)`,
/// which equals `(1/ε) ln(1/δ)`.
pub fn bound_value(inputs: &BoundInputs) -> Result<f64> {
    let BoundInputs { c, d, delta } = BoundInputs::new(inputs.c, inputs.d, inputs.delta)?;
    let g = denominator(c, d);
    let under = 1.0 - E_MIN * g;
    if !(under > 0.0) {
        return Err(Error::domain(format!(
            "bound is unbounded at c = {c}, d = {d}: 1 - a(1 + (c-1/2)(d-1/2)) = {under} <= 0"
        )));
    }
    let n = (E_MAX - E_MIN) * g / under * (1.0 / delta).ln();
    if !n.is_finite() || n > u64::MAX as f64 {
        return Err(Error::domain(format!(
            "bound at c = {c}, d = {d} is too large to represent"
        )));
    }
    Ok(n)
}

/// [`bound_value`] rounded up to a whole number of labels.
pub fn min_expert_labels(inputs: &BoundInputs) -> Result<u64> {
    let n = bound_value(inputs)?;
    Ok((n - CEIL_SLACK).ceil().max(0.0) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub c: f64,
    pub d: f64,
    pub delta: f64,
    pub e: f64,
    pub epsilon: f64,
    pub n: u64,
}

pub fn evaluate(inputs: &BoundInputs) -> Result<BoundReport> {
    Ok(BoundReport {
        c: inputs.c,
        d: inputs.d,
        delta: inputs.delta,
        e: error_e(inputs.c, inputs.d)?,
        epsilon: normalized_epsilon(inputs.c, inputs.d)?,
        n: min_expert_labels(inputs)?,
    })
}

/// Plug-in `(c, d)`: mean expert-set accuracy over labelers that saw an expert instance, and
/// mean crowd accuracy over expert instances, both clamped away from 0 and 1.
pub fn estimate_cd(labels: &LabelMatrix, expert: &ExpertLabels) -> Result<(f64, f64)> {
    expert.check_against(labels)?;
    let rates: Vec<f64> = labeler_expert_counts(labels, expert)
        .into_iter()
        .filter(|&(_, seen)| seen > 0)
        .map(|(hits, seen)| hits as f64 / seen as f64)
        .collect();
    let c = rates.iter().sum::<f64>() / rates.len() as f64;
    let d = expert
        .pairs()
        .iter()
        .map(|&(i, l)| instance_agreement(labels, i, l))
        .sum::<f64>()
        / expert.len() as f64;
    let clamp = |v: f64| v.clamp(CLAMP, 1.0 - CLAMP);
    Ok((clamp(c), clamp(d)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    #[test]
    fn error_examples() {
        assert_eq!(error_e(0.5, 0.3).unwrap(), 1.0);
        assert!(close(error_e(0.9, 0.9).unwrap(), 0.86207, 1e-5));
        assert!(close(error_e(0.9, 0.1).unwrap(), 1.19048, 1e-5));
        assert!(error_e(1.0, 0.5).is_err());
    }

    #[test]
    fn epsilon_examples() {
        assert!(close(normalized_epsilon(0.5, 0.5).unwrap(), 0.375, 1e-12));
        assert!(normalized_epsilon(1.0 - 1e-9, 1e-9).unwrap() > 0.999);
        assert!(normalized_epsilon(1.0 - 1e-9, 1.0 - 1e-9).unwrap() < 1e-6);
        assert!(close(normalized_epsilon(0.9, 0.1).unwrap(), 0.73214, 1e-5));
    }

    #[test]
    fn bound_examples() {
        let b = |c, d, delta| min_expert_labels(&BoundInputs::new(c, d, delta).unwrap()).unwrap();
        assert_eq!(b(0.5, 0.5, 0.05), 8);
        assert_eq!(b(0.5, 0.5, 1.0 - 1e-12), 0);
        assert_eq!(b(0.9, 0.1, 0.05), 5);
    }

    #[test]
    fn inputs_must_be_open_interval() {
        assert!(BoundInputs::new(0.0, 0.5, 0.05).is_err());
        assert!(BoundInputs::new(0.5, 1.0, 0.05).is_err());
        assert!(BoundInputs::new(0.5, 0.5, 1.0).is_err());
        let raw = BoundInputs {
            c: 1.0,
            d: 1.0,
            delta: 0.05,
        };
        assert!(matches!(min_expert_labels(&raw), Err(Error::Domain(_))));
    }

    #[test]
    fn estimate_examples() {
        let truth: Vec<i8> = vec![1, -1, 1, -1, 1, 1, -1, -1, 1, -1];
        let m = LabelMatrix::from_columns(&[truth.clone(), truth.clone()]).unwrap();
        let e = ExpertLabels::from_truth(&[0, 1, 2], &truth).unwrap();
        let (c, d) = estimate_cd(&m, &e).unwrap();
        assert_eq!((c, d), (1.0 - CLAMP, 1.0 - CLAMP));

        let mut half = truth.clone();
        for v in half.iter_mut().skip(5) {
            *v = -*v;
        }
        let mut ninety = truth.clone();
        ninety[9] = -ninety[9];
        let m = LabelMatrix::from_columns(&[ninety, half]).unwrap();
        let all: Vec<usize> = (0..10).collect();
        let e = ExpertLabels::from_truth(&all, &truth).unwrap();
        let (c, _) = estimate_cd(&m, &e).unwrap();
        assert!(close(c, 0.7, 1e-12));
    }
}
