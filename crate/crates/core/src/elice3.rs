//! Refined scores from comparisons of log average scores.
//!
//! Starting from ELICE 2 estimates, each labeler gets an average reliability
//! `P_j = mean_i σ(c α_j β_i)` and each instance an average difficulty score
//! `Q_i = mean_j σ(c α_j β_i)`. Labelers are compared through `d_(j,k) = log(P_j / P_k)` and
//! the refined abilities solve the ridge problem `α' = (GᵀG + μI)⁻¹ Gᵀd`, where every row of
//! `G` holds a `+1` for the first and a `-1` for the second index of one comparison.
//! Instances are handled the same way with `ν`, plus an offset of one.
//!
//! `G` is never built. For `n` indices the normal matrix is `nI - 11ᵀ` (pairwise) or the
//! cycle Laplacian (circular), both of which have cheap exact solves.

use serde::{Deserialize, Serialize};

use crate::counts::check_len;
use crate::elice2::{self, flip_aware_labels};
use crate::error::{Error, Result};
use crate::numeric::logistic;
use crate::types::{
    AbilityVector, AggregationResult, ComparisonMode, DifficultyVector, ExpertLabels, LabelMatrix,
    MethodKind, ScoreKind,
};

pub const DEFAULT_RIDGE: f64 = 1e-4;
pub const DEFAULT_SCORE_SCALE: f64 = 3.0;
pub const DEFAULT_AGGREGATION_SCALE: f64 = 100.0;

/// Normwise backward error above which a solve is reported as failed.
const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Elice3Params {
    /// `None` picks [`ComparisonMode::default_for`] the instance count.
    pub mode: Option<ComparisonMode>,
    pub mu: f64,
    pub nu: f64,
    /// `c` inside `σ(c α β)` when averaging the ELICE 2 scores.
    pub score_scale: f64,
    /// `c` in the final flip-aware vote.
    pub aggregation_scale: f64,
}

impl Default for Elice3Params {
    fn default() -> Self {
        Self {
            mode: None,
            mu: DEFAULT_RIDGE,
            nu: DEFAULT_RIDGE,
            score_scale: DEFAULT_SCORE_SCALE,
            aggregation_scale: DEFAULT_AGGREGATION_SCALE,
        }
    }
}

impl Elice3Params {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ridge mu", self.mu),
            ("ridge nu", self.nu),
            ("score scale", self.score_scale),
            ("aggregation scale", self.aggregation_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn resolved_mode(&self, n_instances: usize) -> ComparisonMode {
        self.mode
            .unwrap_or_else(|| ComparisonMode::default_for(n_instances))
    }
}

/// The comparison rows over `count` indices, enumerated on demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComparisonDesign {
    count: usize,
    mode: ComparisonMode,
}

pub fn build_design(count: usize, mode: ComparisonMode) -> Result<ComparisonDesign> {
    if count < 2 {
        return Err(Error::domain(format!(
            "a comparison design needs at least 2 indices, got {count}"
        )));
    }
    Ok(ComparisonDesign { count, mode })
}

impl ComparisonDesign {
    /// Number of compared indices (columns of `G`).
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mode(&self) -> ComparisonMode {
        self.mode
    }

    /// Number of comparisons (rows of `G`).
    pub fn len(&self) -> usize {
        match self.mode {
            ComparisonMode::Pairwise => self.count * (self.count - 1) / 2,
            ComparisonMode::Circular => self.count,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// 0-based `(first, second)` pairs: lexicographic for pairwise, `(j, j+1 mod n)` for
    /// circular.
    pub fn rows(&self) -> Box<dyn Iterator<Item = (usize, usize)> + '_> {
        let n = self.count;
        match self.mode {
            ComparisonMode::Pairwise => {
                Box::new((0..n).flat_map(move |j| (j + 1..n).map(move |k| (j, k))))
            }
            ComparisonMode::Circular => Box::new((0..n).map(move |j| (j, (j + 1) % n))),
        }
    }

    /// `Gᵀd` for `d_(j,k) = x_j - x_k`.
    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        let n = self.count;
        match self.mode {
            ComparisonMode::Pairwise => {
                let total: f64 = x.iter().sum();
                x.iter().map(|&v| n as f64 * v - total).collect()
            }
            ComparisonMode::Circular => self.normal_apply(x),
        }
    }

    /// `GᵀG x`. For differences of a vector, `Gᵀd` equals this product too.
    pub fn normal_apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.count;
        match self.mode {
            ComparisonMode::Pairwise => {
                let total: f64 = x.iter().sum();
                x.iter().map(|&v| n as f64 * v - total).collect()
            }
            ComparisonMode::Circular if n == 2 => {
                let d = 2.0 * (x[0] - x[1]);
                vec![d, -d]
            }
            ComparisonMode::Circular => (0..n)
                .map(|j| 2.0 * x[j] - x[(j + n - 1) % n] - x[(j + 1) % n])
                .collect(),
        }
    }

    /// `b - (GᵀG + ridge I) x`.
    fn residual(&self, x: &[f64], b: &[f64], ridge: f64) -> Vec<f64> {
        let ax = self.normal_apply(x);
        b.iter()
            .zip(&ax)
            .zip(x)
            .map(|((bi, a), xi)| bi - a - ridge * xi)
            .collect()
    }

    /// Infinity norm of `GᵀG + ridge I`.
    fn norm_inf(&self, ridge: f64) -> f64 {
        match self.mode {
            ComparisonMode::Pairwise => 2.0 * (self.count - 1) as f64 + ridge,
            ComparisonMode::Circular => 4.0 + ridge,
        }
    }

    /// Solves `(GᵀG + ridge I) x = b` exactly.
    fn solve_normal(&self, b: &[f64], ridge: f64) -> Vec<f64> {
        let n = self.count;
        match self.mode {
            // (n + r)I - 11ᵀ, inverted by Sherman-Morrison
            ComparisonMode::Pairwise => {
                let total: f64 = b.iter().sum();
                let shift = total / ridge;
                b.iter()
                    .map(|&v| (v + shift) / (n as f64 + ridge))
                    .collect()
            }
            ComparisonMode::Circular if n == 2 => {
                // [[2+r, -2], [-2, 2+r]]
                let (a, c) = (2.0 + ridge, -2.0);
                let det = a * a - c * c;
                vec![(a * b[0] - c * b[1]) / det, (a * b[1] - c * b[0]) / det]
            }
            ComparisonMode::Circular => cyclic_tridiagonal(2.0 + ridge, -1.0, b),
        }
    }
}

/// Solves the symmetric cyclic tridiagonal system with constant diagonal `diag`, constant
/// off-diagonal `off` and corner entries `off`, for `n ≥ 3`.
fn cyclic_tridiagonal(diag: f64, off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    // A = T + u vᵀ with u = (γ, 0, .., 0, off), v = (1, 0, .., 0, off / γ)
    let gamma = -diag;
    let mut main = vec![diag; n];
    main[0] = diag - gamma;
    main[n - 1] = diag - off * off / gamma;
    let x = thomas(&main, off, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off;
    let z = thomas(&main, off, &u);
    let factor = (x[0] + off * x[n - 1] / gamma) / (1.0 + z[0] + off * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect()
}

/// Tridiagonal solve with per-row diagonal and a constant off-diagonal.
fn thomas(main: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / main[0];
    d[0] = rhs[0] / main[0];
    for i in 1..n {
        let m = main[i] - off * c[i - 1];
        c[i] = off / m;
        d[i] = (rhs[i] - off * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// `(GᵀG + ridge I)⁻¹ Gᵀd + offset` with `d` the log ratios of `scores`.
pub fn solve_refined_scores(
    scores: &[f64],
    design: &ComparisonDesign,
    ridge: f64,
    offset: f64,
) -> Result<Vec<f64>> {
    check_len("scores", scores.len(), design.count())?;
    if !(ridge > 0.0 && ridge.is_finite()) {
        return Err(Error::domain(format!(
            "ridge must be positive, got {ridge}"
        )));
    }
    if let Some(k) = scores.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::domain(format!(
            "score {k} = {} is not positive",
            scores[k]
        )));
    }
    let logs: Vec<f64> = scores.iter().map(|s| s.ln()).collect();
    let b = design.rhs(&logs);
    let mut x = design.solve_normal(&b, ridge);
    // one step of iterative refinement
    let r = design.residual(&x, &b, ridge);
    let dx = design.solve_normal(&r, ridge);
    x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);

    // normwise backward error |b - Ax| / (|A| |x| + |b|)
    let inf = |v: &[f64]| v.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let r = design.residual(&x, &b, ridge);
    let scale = design.norm_inf(ridge) * inf(&x) + inf(&b);
    let residual = if scale > 0.0 { inf(&r) / scale } else { 0.0 };
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::Numeric {
            residual,
            tolerance: RESIDUAL_TOLERANCE,
        });
    }
    Ok(x.into_iter().map(|v| v + offset).collect())
}

fn check_scores(abilities: &AbilityVector, difficulties: &DifficultyVector) -> Result<()> {
    if abilities.is_empty() || difficulties.is_empty() {
        return Err(Error::shape("score vectors must be non-empty"));
    }
    Ok(())
}

/// `P_j = mean_i σ(c α_j β_i)`.
pub fn average_reliability(
    abilities: &AbilityVector,
    difficulties: &DifficultyVector,
    scale_c: f64,
) -> Result<Vec<f64>> {
    check_scores(abilities, difficulties)?;
    let beta = difficulties.values();
    let n = beta.len() as f64;
    Ok(abilities
        .values()
        .iter()
        .map(|&a| beta.iter().map(|&b| logistic(scale_c * a * b)).sum::<f64>() / n)
        .collect())
}

/// `Q_i = mean_j σ(c α_j β_i)`.
pub fn average_difficulty_score(
    abilities: &AbilityVector,
    difficulties: &DifficultyVector,
    scale_c: f64,
) -> Result<Vec<f64>> {
    check_scores(abilities, difficulties)?;
    let alpha = abilities.values();
    let m = alpha.len() as f64;
    Ok(difficulties
        .values()
        .iter()
        .map(|&b| {
            alpha
                .iter()
                .map(|&a| logistic(scale_c * a * b))
                .sum::<f64>()
                / m
        })
        .collect())
}

/// Flip-aware vote with refined scores, `A_i = sign(Σ_j σ(|c α'_j β'_i|) L_ij sign(α'_j β'_i))`.
pub fn aggregate(
    labels: &LabelMatrix,
    refined_alpha: &AbilityVector,
    refined_beta: &DifficultyVector,
    scale_c: f64,
) -> Result<AggregationResult> {
    if !(scale_c > 0.0 && scale_c.is_finite()) {
        return Err(Error::domain(format!(
            "scale c must be positive, got {scale_c}"
        )));
    }
    let out = flip_aware_labels(
        labels,
        refined_alpha.values(),
        refined_beta.values(),
        scale_c,
    )?;
    let mut result = AggregationResult::new(out, MethodKind::Elice3);
    result.abilities = Some(refined_alpha.clone());
    result.difficulties = Some(refined_beta.clone());
    result.params.scale_c = Some(scale_c);
    Ok(result)
}

pub fn run(
    labels: &LabelMatrix,
    expert: &ExpertLabels,
    params: &Elice3Params,
) -> Result<AggregationResult> {
    params.validate()?;
    let mode = params.resolved_mode(labels.n_instances());
    let scores = elice2::estimate(labels, expert)?;

    let p = average_reliability(&scores.abilities, &scores.difficulties, params.score_scale)?;
    let q = average_difficulty_score(&scores.abilities, &scores.difficulties, params.score_scale)?;
    let labeler_design = build_design(labels.n_labelers(), mode)?;
    let instance_design = build_design(labels.n_instances(), mode)?;
    let (alpha, beta) = rayon::join(
        || solve_refined_scores(&p, &labeler_design, params.mu, 0.0),
        || solve_refined_scores(&q, &instance_design, params.nu, 1.0),
    );
    let alpha = AbilityVector::new(alpha?, ScoreKind::Elice3Refined)?;
    let beta = DifficultyVector::new(beta?, ScoreKind::Elice3Refined)?;

    let mut result = aggregate(labels, &alpha, &beta, params.aggregation_scale)?;
    result.params.score_scale_c = Some(params.score_scale);
    result.params.mode = Some(mode);
    result.params.ridge_mu = Some(params.mu);
    result.params.ridge_nu = Some(params.nu);
    result.unscored_labelers = scores.unscored;
    Ok(result)
}
