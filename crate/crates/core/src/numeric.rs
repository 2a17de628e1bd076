//! Scalar kernels shared by every estimator.

use crate::error::{Error, Result};

/// The logistic function `1 / (1 + e^-x)`.
///
/// Evaluated in a form that does not overflow for large negative `x`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Base-2 binary entropy of a Bernoulli rate, with `0 log 0 = 0`.
///
/// Base 2 keeps the result in `[0, 1]`, which is what lets the entropy-discounted
/// ability span the full `[-1, 1]` range.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!(
            "binary entropy needs a probability in [0, 1], got {p}"
        )));
    }
    Ok(xlog2x(p) + xlog2x(1.0 - p))
}

fn xlog2x(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Sign with a fixed tie rule: `sign(0) = +1`.
#[inline]
pub fn sign(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// `sign` returned as a float, for use inside weighted sums.
#[inline]
pub(crate) fn signf(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `(p - q)(1 - H(p))` with `q = 1 - p`: the entropy-discounted signed score used for
/// both labeler ability and (shifted by one) instance difficulty.
pub fn entropy_discounted_score(p: f64) -> f64 {
    let h = xlog2x(p) + xlog2x(1.0 - p);
    (2.0 * p - 1.0) * (1.0 - h)
}
