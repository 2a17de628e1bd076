//! Crowd-label aggregation anchored on a small set of expert labels.
//!
//! The ELICE estimators score every labeler's ability and every instance's difficulty
//! against expert labels, then aggregate crowd labels with those scores:
//!
//! * [`elice1`]: linear agreement scores, logistic-weighted vote.
//! * [`elice2`]: entropy-discounted scores and a vote that inverts adversarial labelers.
//! * [`elice3`]: ELICE 2 scores refined by ridge least squares over log score ratios.
//!
//! Also included are majority vote, Dawid-Skene and Karger baselines ([`baselines`]), a
//! simulator for crowds of good, random and malicious labelers ([`simulator`]), expert
//! subset selection ([`sampling`]), an expert-label budget bound ([`bound`]) and a seeded
//! experiment runner ([`experiment`]).
//!
//! ```
//! use crowdforge::{elice2, ExpertLabels, LabelMatrix};
//!
//! // labeler 1 always inverts the truth
//! let truth = vec![1, -1, -1, 1, 1];
//! let flipped: Vec<i8> = truth.iter().map(|t| -t).collect();
//! let labels = LabelMatrix::from_columns(&[truth.clone(), flipped]).unwrap();
//! let expert = ExpertLabels::from_truth(&[0], &truth).unwrap();
//! let result = elice2::run(&labels, &expert, &elice2::Elice2Params::default()).unwrap();
//! assert_eq!(result.labels, truth);
//! ```

// `!(x > 0.0)` guards reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bound;
mod counts;
pub mod elice1;
pub mod elice2;
pub mod elice3;
pub mod error;
pub mod experiment;
pub mod io;
pub mod method;
pub mod metrics;
pub mod numeric;
pub mod sampling;
pub mod seed;
pub mod simulator;
pub mod types;

pub use error::{Error, Result};
pub use method::{Method, MethodSpec};
pub use metrics::{accuracy, mean_sd};
pub use numeric::{binary_entropy, logistic, sign};
pub use types::{
    AbilityVector, AggregationResult, ComparisonMode, DifficultyVector, ExpertLabels, LabelMatrix,
    MethodKind, ResultParams, ScoreKind,
};
