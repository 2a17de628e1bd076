//! Binary Dawid-Skene: per-labeler 2×2 confusion matrices and a class prior fitted by EM.
//!
//! Class index 0 is `+1`, index 1 is `-1`. Counts in the M-step carry a `1e-6` pseudo-count
//! so that a labeler who never saw a class still has a proper confusion row. That makes each
//! M-step a MAP step, and the quantity EM provably never decreases is the log-likelihood
//! plus the matching log-prior term; [`DawidSkeneState::objective_history`] records it next
//! to the plain log-likelihood.

use crate::baselines::majority_vote;
use crate::error::{Error, Result};
use crate::types::{AggregationResult, LabelMatrix, MethodKind};

const PSEUDO_COUNT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DawidSkeneParams {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for DawidSkeneParams {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DawidSkeneState {
    /// Probability that an instance is `+1`.
    pub class_prior: f64,
    /// `confusion[j][t][l]`: probability labeler `j` answers class `l` when the truth is `t`.
    pub confusion: Vec<[[f64; 2]; 2]>,
    /// Posterior probability of `+1` per instance.
    pub posteriors: Vec<f64>,
    pub log_likelihood: f64,
    pub log_likelihood_history: Vec<f64>,
    pub objective_history: Vec<f64>,
    pub iterations: usize,
}

fn class_of(label: i8) -> usize {
    usize::from(label < 0)
}

fn m_step(labels: &LabelMatrix, posteriors: &[f64]) -> (f64, Vec<[[f64; 2]; 2]>) {
    let n = labels.n_instances() as f64;
    let positive: f64 = posteriors.iter().sum();
    let prior = (positive + PSEUDO_COUNT) / (n + 2.0 * PSEUDO_COUNT);
    let mut counts = vec![[[PSEUDO_COUNT; 2]; 2]; labels.n_labelers()];
    for (i, &t) in posteriors.iter().enumerate() {
        for (j, l) in labels.observed(i) {
            let c = class_of(l);
            counts[j][0][c] += t;
            counts[j][1][c] += 1.0 - t;
        }
    }
    for rows in &mut counts {
        for row in rows.iter_mut() {
            let total = row[0] + row[1];
            row[0] /= total;
            row[1] /= total;
        }
    }
    (prior, counts)
}

/// Returns `(posteriors, log-likelihood)`.
fn e_step(labels: &LabelMatrix, prior: f64, confusion: &[[[f64; 2]; 2]]) -> (Vec<f64>, f64) {
    let mut ll = 0.0;
    let posteriors = (0..labels.n_instances())
        .map(|i| {
            let mut lp = [prior.ln(), (1.0 - prior).ln()];
            for (j, l) in labels.observed(i) {
                let c = class_of(l);
                lp[0] += confusion[j][0][c].ln();
                lp[1] += confusion[j][1][c].ln();
            }
            let top = lp[0].max(lp[1]);
            let norm = top + ((lp[0] - top).exp() + (lp[1] - top).exp()).ln();
            ll += norm;
            (lp[0] - norm).exp()
        })
        .collect();
    (posteriors, ll)
}

fn log_prior(prior: f64, confusion: &[[[f64; 2]; 2]]) -> f64 {
    let mut s = prior.ln() + (1.0 - prior).ln();
    for rows in confusion {
        for row in rows {
            s += row[0].ln() + row[1].ln();
        }
    }
    PSEUDO_COUNT * s
}

pub fn fit(labels: &LabelMatrix, params: &DawidSkeneParams) -> Result<DawidSkeneState> {
    if params.max_iter == 0 {
        return Err(Error::domain("max_iter must be at least 1"));
    }
    if !(params.tol > 0.0) {
        return Err(Error::domain(format!(
            "tol must be positive, got {}",
            params.tol
        )));
    }
    let mut posteriors: Vec<f64> = majority_vote(labels)
        .labels
        .iter()
        .map(|&l| if l > 0 { 1.0 } else { 0.0 })
        .collect();
    let mut state = DawidSkeneState {
        class_prior: 0.5,
        confusion: Vec::new(),
        posteriors: Vec::new(),
        log_likelihood: f64::NEG_INFINITY,
        log_likelihood_history: Vec::new(),
        objective_history: Vec::new(),
        iterations: 0,
    };
    for iter in 1..=params.max_iter {
        let (prior, confusion) = m_step(labels, &posteriors);
        let (next, ll) = e_step(labels, prior, &confusion);
        let objective = ll + log_prior(prior, &confusion);
        let previous = state.objective_history.last().copied();
        if let Some(prev) = previous {
            debug_assert!(
                objective >= prev - 1e-9 * prev.abs().max(1.0),
                "EM objective fell from {prev} to {objective}"
            );
        }
        posteriors = next;
        state.class_prior = prior;
        state.confusion = confusion;
        state.log_likelihood = ll;
        state.log_likelihood_history.push(ll);
        state.objective_history.push(objective);
        state.iterations = iter;
        if previous.is_some_and(|prev| objective - prev < params.tol) {
            break;
        }
    }
    state.posteriors = posteriors;
    Ok(state)
}

/// EM from majority-vote hard labels; final label `+1` iff the posterior is at least 0.5.
pub fn dawid_skene(labels: &LabelMatrix, params: &DawidSkeneParams) -> Result<AggregationResult> {
    let state = fit(labels, params)?;
    let out = state
        .posteriors
        .iter()
        .map(|&p| if p >= 0.5 { 1 } else { -1 })
        .collect();
    let mut result = AggregationResult::new(out, MethodKind::DawidSkene);
    result.params.iterations = Some(params.max_iter);
    result.params.tolerance = Some(params.tol);
    Ok(result)
}
