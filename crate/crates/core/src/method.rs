//! One entry point over every aggregator, used by the CLI and the experiment runner.

use serde::{Deserialize, Serialize};

use crate::baselines::{
    dawid_skene, karger_iterative, majority_vote, DawidSkeneParams, KargerParams,
};
use crate::elice2::Elice2Params;
use crate::elice3::Elice3Params;
use crate::error::{Error, Result};
use crate::types::{AggregationResult, ComparisonMode, ExpertLabels, LabelMatrix, MethodKind};
use crate::{elice1, elice2, elice3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Majority,
    DawidSkene(DawidSkeneParams),
    Karger(KargerParams),
    Elice1,
    Elice2(Elice2Params),
    Elice3(Elice3Params),
}

impl Method {
    pub fn with_defaults(kind: MethodKind) -> Self {
        match kind {
            MethodKind::Majority => Method::Majority,
            MethodKind::DawidSkene => Method::DawidSkene(DawidSkeneParams::default()),
            MethodKind::Karger => Method::Karger(KargerParams::default()),
            MethodKind::Elice1 => Method::Elice1,
            MethodKind::Elice2 => Method::Elice2(Elice2Params::default()),
            MethodKind::Elice3 => Method::Elice3(Elice3Params::default()),
        }
    }

    pub fn kind(&self) -> MethodKind {
        match self {
            Method::Majority => MethodKind::Majority,
            Method::DawidSkene(_) => MethodKind::DawidSkene,
            Method::Karger(_) => MethodKind::Karger,
            Method::Elice1 => MethodKind::Elice1,
            Method::Elice2(_) => MethodKind::Elice2,
            Method::Elice3(_) => MethodKind::Elice3,
        }
    }

    pub fn needs_expert(&self) -> bool {
        matches!(self, Method::Elice1 | Method::Elice2(_) | Method::Elice3(_))
    }

    pub fn run(
        &self,
        labels: &LabelMatrix,
        expert: Option<&ExpertLabels>,
    ) -> Result<AggregationResult> {
        let expert = || {
            expert.ok_or_else(|| {
                Error::invalid(format!("method {} needs expert labels", self.kind()))
            })
        };
        match self {
            Method::Majority => Ok(majority_vote(labels)),
            Method::DawidSkene(p) => dawid_skene(labels, p),
            Method::Karger(p) => karger_iterative(labels, p),
            Method::Elice1 => elice1::run(labels, expert()?),
            Method::Elice2(p) => elice2::run(labels, expert()?, p),
            Method::Elice3(p) => elice3::run(labels, expert()?, p),
        }
    }
}

/// Replaces the output on expert instances with the expert labels.
pub fn clamp_to_expert(result: &mut AggregationResult, expert: &ExpertLabels) {
    for &(i, l) in expert.pairs() {
        result.labels[i] = l;
    }
}

/// Serializable method description: a bare name or a name with overrides.
///
/// ```json
/// "elice2"
/// {"method": "elice3", "mode": "circular", "mu": 1e-4}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodSpec {
    Name(MethodKind),
    Detailed(MethodOptions),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodOptions {
    pub method: Option<MethodKind>,
    /// Report label; defaults to the method name plus the comparison mode for ELICE 3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ComparisonMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl From<MethodKind> for MethodSpec {
    fn from(kind: MethodKind) -> Self {
        MethodSpec::Name(kind)
    }
}

impl MethodSpec {
    fn options(&self) -> MethodOptions {
        match self {
            MethodSpec::Name(kind) => MethodOptions {
                method: Some(*kind),
                ..MethodOptions::default()
            },
            MethodSpec::Detailed(o) => o.clone(),
        }
    }

    pub fn kind(&self) -> Result<MethodKind> {
        self.options()
            .method
            .ok_or_else(|| Error::invalid("method entry without a `method` name"))
    }

    pub fn label(&self) -> Result<String> {
        let o = self.options();
        if let Some(label) = o.label {
            return Ok(label);
        }
        let kind = self.kind()?;
        Ok(match (kind, o.mode) {
            (MethodKind::Elice3, Some(mode)) => format!("{kind}-{mode}"),
            _ => kind.to_string(),
        })
    }

    /// Builds the method; `seed` feeds randomized methods that were not given one.
    pub fn build(&self, seed: u64) -> Result<Method> {
        let o = self.options();
        Ok(match self.kind()? {
            MethodKind::Majority => Method::Majority,
            MethodKind::DawidSkene => {
                let d = DawidSkeneParams::default();
                Method::DawidSkene(DawidSkeneParams {
                    max_iter: o.iterations.unwrap_or(d.max_iter),
                    tol: o.tol.unwrap_or(d.tol),
                })
            }
            MethodKind::Karger => Method::Karger(KargerParams {
                iterations: o.iterations.unwrap_or(KargerParams::default().iterations),
                seed,
            }),
            MethodKind::Elice1 => Method::Elice1,
            MethodKind::Elice2 => Method::Elice2(Elice2Params {
                scale_c: o.scale_c.unwrap_or(Elice2Params::default().scale_c),
            }),
            MethodKind::Elice3 => {
                let d = Elice3Params::default();
                Method::Elice3(Elice3Params {
                    mode: o.mode,
                    mu: o.mu.unwrap_or(d.mu),
                    nu: o.nu.unwrap_or(d.nu),
                    score_scale: d.score_scale,
                    aggregation_scale: o.scale_c.unwrap_or(d.aggregation_scale),
                })
            }
        })
    }
}
