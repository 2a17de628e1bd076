//! Karger-Oh-Shah iterative message passing on the bipartite instance/labeler graph.
//!
//! Messages live on the observed entries of the label matrix `A`:
//!
//! ```text
//! x_{i→j} = Σ_{j'≠j} A_ij' y_{j'→i}
//! y_{j→i} = Σ_{i'≠i} A_i'j x_{i'→j}
//! label_i = sign(Σ_j A_ij y_{j→i})
//! ```
//!
//! `y` starts i.i.d. from `N(1, 1)`. After each sweep `y` is divided by its largest absolute
//! value, which changes no sign but keeps the messages finite. If a sweep leaves every `y`
//! at zero (a single labeler, for one) the previous messages are kept.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numeric::sign;
use crate::seed::rng_from;
use crate::types::{AggregationResult, LabelMatrix, MethodKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KargerParams {
    pub iterations: usize,
    pub seed: u64,
}

impl Default for KargerParams {
    fn default() -> Self {
        Self {
            iterations: 10,
            seed: 0,
        }
    }
}

/// Messages indexed like [`KargerState::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct KargerState {
    /// `(instance, labeler, label)` for every observed entry, row-major.
    pub edges: Vec<(usize, usize, i8)>,
    pub x_messages: Vec<f64>,
    pub y_messages: Vec<f64>,
    pub iteration: usize,
    pub seed: u64,
}

impl KargerState {
    pub fn new(labels: &LabelMatrix, seed: u64) -> Self {
        let edges: Vec<(usize, usize, i8)> = (0..labels.n_instances())
            .flat_map(|i| labels.observed(i).map(move |(j, l)| (i, j, l)))
            .collect();
        let normal = Normal::new(1.0, 1.0).expect("unit variance");
        let mut rng = rng_from(seed);
        let y_messages = edges.iter().map(|_| normal.sample(&mut rng)).collect();
        Self {
            x_messages: vec![0.0; edges.len()],
            y_messages,
            edges,
            iteration: 0,
            seed,
        }
    }

    /// One `x` sweep followed by one `y` sweep.
    pub fn step(&mut self, n_instances: usize, n_labelers: usize) {
        let mut by_instance = vec![0.0; n_instances];
        for (&(i, _, a), y) in self.edges.iter().zip(&self.y_messages) {
            by_instance[i] += f64::from(a) * y;
        }
        for (e, &(i, _, a)) in self.edges.iter().enumerate() {
            self.x_messages[e] = by_instance[i] - f64::from(a) * self.y_messages[e];
        }

        let mut by_labeler = vec![0.0; n_labelers];
        for (&(_, j, a), x) in self.edges.iter().zip(&self.x_messages) {
            by_labeler[j] += f64::from(a) * x;
        }
        let next: Vec<f64> = self
            .edges
            .iter()
            .zip(&self.x_messages)
            .map(|(&(_, j, a), x)| by_labeler[j] - f64::from(a) * x)
            .collect();
        let scale = next.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale > 0.0 && scale.is_finite() {
            self.y_messages = next.into_iter().map(|v| v / scale).collect();
        }
        self.iteration += 1;
    }

    pub fn labels(&self, n_instances: usize) -> Vec<i8> {
        let mut sums = vec![0.0; n_instances];
        for (&(i, _, a), y) in self.edges.iter().zip(&self.y_messages) {
            sums[i] += f64::from(a) * y;
        }
        sums.into_iter().map(sign).collect()
    }
}

pub fn karger_iterative(labels: &LabelMatrix, params: &KargerParams) -> Result<AggregationResult> {
    if params.iterations == 0 {
        return Err(Error::domain("iterations must be at least 1"));
    }
    let mut state = KargerState::new(labels, params.seed);
    for _ in 0..params.iterations {
        state.step(labels.n_instances(), labels.n_labelers());
    }
    let mut result = AggregationResult::new(state.labels(labels.n_instances()), MethodKind::Karger);
    result.params.iterations = Some(params.iterations);
    result.params.seed = Some(params.seed);
    Ok(result)
}
