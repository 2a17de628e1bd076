//! Seeded fixtures shared by the benchmarks.

use crowdforge::sampling::sample_uniform;
use crowdforge::seed::derive_seed;
use crowdforge::simulator::{simulate, Bands, CrowdSpec};
use crowdforge::{ExpertLabels, LabelMatrix};

pub struct Fixture {
    pub labels: LabelMatrix,
    pub expert: ExpertLabels,
    pub truth: Vec<i8>,
}

/// An `n × m` crowd with `bad` of its labelers split evenly between random and malicious,
/// plus `experts` uniformly drawn expert labels.
pub fn fixture(n: usize, m: usize, bad: f64, experts: usize, seed: u64) -> Fixture {
    let spec = CrowdSpec {
        n_instances: n,
        n_labelers: m,
        fractions: [1.0 - bad, bad / 2.0, bad / 2.0],
        bands: Bands::default(),
        positive_fraction: 0.5,
        seed,
    };
    let data = simulate(&spec, false).expect("valid fixture spec");
    let idx = sample_uniform(experts, n, derive_seed(seed, "expert", 0)).expect("experts <= n");
    let expert = ExpertLabels::from_truth(&idx, &data.truth).expect("indices in range");
    Fixture {
        labels: data.labels,
        expert,
        truth: data.truth,
    }
}

/// Strictly positive scores resembling average reliabilities.
pub fn scores(len: usize, seed: u64) -> Vec<f64> {
    let mut s = seed | 1;
    (0..len)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            0.05 + 0.9 * (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}
