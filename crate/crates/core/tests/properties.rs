use crowdforge::baselines::{
    dawid_skene, karger_iterative, majority_vote, DawidSkeneParams, KargerParams,
};
use crowdforge::bound::{bound_value, error_e, min_expert_labels, normalized_epsilon, BoundInputs};
use crowdforge::elice2::{flip_aware_labels, Elice2Params};
use crowdforge::elice3::{build_design, solve_refined_scores};
use crowdforge::experiment::{
    run_experiment, Composition, DatasetSource, ExperimentConfig, ExpertSelection, RunOptions,
    SimulationSource,
};
use crowdforge::numeric::entropy_discounted_score;
use crowdforge::sampling::{kmeans_fit, sample_stratified, FeatureMatrix, KMeansInit};
use crowdforge::simulator::{generate_labels, generate_truth, Bands};
use crowdforge::{
    accuracy, binary_entropy, elice1, elice3, logistic, AbilityVector, ComparisonMode,
    DifficultyVector, ExpertLabels, LabelMatrix, MethodKind, ScoreKind,
};
use proptest::collection::vec;
use proptest::prelude::*;

/// An `n × m` label matrix with at least one observed label in every row and column.
fn label_matrix(max_n: usize, max_m: usize, missing: bool) -> impl Strategy<Value = LabelMatrix> {
    (1..=max_n, 1..=max_m).prop_flat_map(move |(n, m)| {
        let cell = if missing {
            prop_oneof![3 => Just(1i8), 3 => Just(-1i8), 1 => Just(0i8)].boxed()
        } else {
            prop_oneof![Just(1i8), Just(-1i8)].boxed()
        };
        vec(cell, n * m).prop_map(move |mut entries| {
            // the diagonal-ish pattern guarantees no empty row or column
            for i in 0..n.max(m) {
                let (r, c) = (i % n, i % m);
                if entries[r * m + c] == 0 {
                    entries[r * m + c] = 1;
                }
            }
            LabelMatrix::new(n, m, entries).unwrap()
        })
    })
}

fn pm_one(n: usize) -> impl Strategy<Value = Vec<i8>> {
    vec(prop_oneof![Just(1i8), Just(-1i8)], n)
}

fn negate_column(labels: &LabelMatrix, j: usize) -> LabelMatrix {
    let mut entries = labels.entries().to_vec();
    for i in 0..labels.n_instances() {
        entries[i * labels.n_labelers() + j] *= -1;
    }
    LabelMatrix::new(labels.n_instances(), labels.n_labelers(), entries).unwrap()
}

proptest! {
    #[test]
    fn logistic_is_symmetric_and_monotone(x in -40.0f64..40.0, dx in 1e-6f64..5.0) {
        prop_assert!((logistic(x) + logistic(-x) - 1.0).abs() < 1e-12);
        prop_assert!(logistic(x + dx) >= logistic(x));
        prop_assert!(logistic(x) > 0.0 && logistic(x) < 1.0 || x.abs() > 36.0);
    }

    #[test]
    fn entropy_is_symmetric_and_peaks_at_half(p in 0.0f64..=1.0) {
        let h = binary_entropy(p).unwrap();
        prop_assert!((h - binary_entropy(1.0 - p).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&h));
        if (p - 0.5).abs() > 1e-6 {
            prop_assert!(h < 1.0);
        }
    }

    #[test]
    fn entropy_rejects_non_probabilities(p in prop_oneof![-10.0f64..-1e-9, 1.0000001f64..10.0]) {
        prop_assert!(binary_entropy(p).is_err());
    }

    #[test]
    fn ability_is_antisymmetric(p in 0.0f64..=1.0) {
        let a = entropy_discounted_score(p);
        prop_assert!((a + entropy_discounted_score(1.0 - p)).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&a));
        // β = score + 1 lies in [0, 2]
        prop_assert!((0.0..=2.0).contains(&(a + 1.0)));
    }

    #[test]
    fn elice2_scores_stay_in_range(
        labels in label_matrix(12, 8, true),
        picks in vec(any::<prop::sample::Index>(), 1..6),
        truth_bits in vec(any::<bool>(), 12),
    ) {
        let n = labels.n_instances();
        let mut idx: Vec<usize> = picks.iter().map(|p| p.index(n)).collect();
        idx.sort_unstable();
        idx.dedup();
        let truth: Vec<i8> = (0..n).map(|i| if truth_bits[i] { 1 } else { -1 }).collect();
        let expert = ExpertLabels::from_truth(&idx, &truth).unwrap();
        let s = crowdforge::elice2::estimate(&labels, &expert).unwrap();
        prop_assert!(s.abilities.values().iter().all(|a| (-1.0..=1.0).contains(a)));
        prop_assert!(s.difficulties.values().iter().all(|b| (0.0..=2.0).contains(b)));
        let r = crowdforge::elice2::run(&labels, &expert, &Elice2Params::default()).unwrap();
        prop_assert_eq!(r.labels.len(), n);
        prop_assert!(r.labels.iter().all(|&l| l == 1 || l == -1));
    }

    #[test]
    fn elice2_vote_is_invariant_under_column_and_ability_negation(
        labels in label_matrix(10, 6, true),
        alpha in vec(prop_oneof![-1.0f64..-1e-3, 1e-3f64..1.0], 6),
        beta in vec(1e-3f64..2.0, 10),
        j in 0usize..6,
    ) {
        let m = labels.n_labelers();
        let n = labels.n_instances();
        let j = j % m;
        let alpha = &alpha[..m];
        let beta = &beta[..n];
        let before = flip_aware_labels(&labels, alpha, beta, 3.0).unwrap();
        let mut flipped_alpha = alpha.to_vec();
        flipped_alpha[j] = -flipped_alpha[j];
        let after = flip_aware_labels(&negate_column(&labels, j), &flipped_alpha, beta, 3.0).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn zero_abilities_reduce_every_elice_vote_to_majority(
        labels in label_matrix(15, 7, true),
        beta in vec(0.0f64..1.0, 15),
    ) {
        let n = labels.n_instances();
        let m = labels.n_labelers();
        let mv = majority_vote(&labels).labels;
        let b1 = DifficultyVector::new(beta[..n].to_vec(), ScoreKind::Elice1).unwrap();
        let a1 = AbilityVector::new(vec![0.0; m], ScoreKind::Elice1).unwrap();
        prop_assert_eq!(&elice1::aggregate(&labels, &a1, &b1).unwrap().labels, &mv);

        let b2 = DifficultyVector::new(beta[..n].iter().map(|b| 2.0 * b).collect(), ScoreKind::Elice2).unwrap();
        let a2 = AbilityVector::new(vec![0.0; m], ScoreKind::Elice2).unwrap();
        let r2 = crowdforge::elice2::aggregate(&labels, &a2, &b2, &Elice2Params::default()).unwrap();
        prop_assert_eq!(&r2.labels, &mv);

        let b3 = DifficultyVector::new(beta[..n].iter().map(|b| b + 1.0).collect(), ScoreKind::Elice3Refined).unwrap();
        let a3 = AbilityVector::new(vec![0.0; m], ScoreKind::Elice3Refined).unwrap();
        prop_assert_eq!(&elice3::aggregate(&labels, &a3, &b3, 100.0).unwrap().labels, &mv);
    }

    #[test]
    fn majority_ignores_column_order(labels in label_matrix(10, 7, true), seed in any::<u64>()) {
        let m = labels.n_labelers();
        let mut order: Vec<usize> = (0..m).collect();
        let mut s = seed;
        for k in (1..m).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(k, (s >> 33) as usize % (k + 1));
        }
        let columns: Vec<Vec<i8>> = order.iter().map(|&j| labels.column(j)).collect();
        let permuted = LabelMatrix::from_columns(&columns).unwrap();
        prop_assert_eq!(majority_vote(&labels).labels, majority_vote(&permuted).labels);
    }

    #[test]
    fn dawid_skene_objective_never_decreases(labels in label_matrix(30, 8, true)) {
        let s = crowdforge::baselines::dawid_skene::fit(&labels, &DawidSkeneParams::default()).unwrap();
        for w in s.objective_history.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
        for rows in &s.confusion {
            for row in rows {
                prop_assert!((row[0] + row[1] - 1.0).abs() < 1e-9);
            }
        }
        let r = dawid_skene(&labels, &DawidSkeneParams::default()).unwrap();
        prop_assert_eq!(r.labels.len(), labels.n_instances());
    }

    #[test]
    fn karger_is_symmetric_under_global_negation(labels in label_matrix(12, 6, true), seed in any::<u64>()) {
        let p = KargerParams { iterations: 10, seed };
        let neg = LabelMatrix::new(
            labels.n_instances(),
            labels.n_labelers(),
            labels.entries().iter().map(|v| -v).collect(),
        ).unwrap();
        let a = karger_iterative(&labels, &p).unwrap();
        let b = karger_iterative(&neg, &p).unwrap();
        // exact zero sums fall to the +1 tie rule on both sides
        for (x, y) in a.labels.iter().zip(&b.labels) {
            prop_assert!(*x == -*y || (*x == 1 && *y == 1));
        }
    }

    #[test]
    fn simulator_flips_exact_counts(n in 1usize..300, rates in vec(0.0f64..=1.0, 1..8), seed in any::<u64>()) {
        let truth = generate_truth(n, 0.5, seed).unwrap();
        let labels = generate_labels(&truth, &rates, seed).unwrap();
        for (j, rate) in rates.iter().enumerate() {
            let flips = labels.column(j).iter().zip(&truth).filter(|(a, b)| a != b).count();
            prop_assert_eq!(flips, (rate * n as f64).round() as usize);
            let acc = accuracy(&labels.column(j), &truth).unwrap();
            prop_assert!((acc - (1.0 - flips as f64 / n as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn accuracy_of_self_and_negation(v in pm_one(40)) {
        let neg: Vec<i8> = v.iter().map(|x| -x).collect();
        prop_assert_eq!(accuracy(&v, &v).unwrap(), 1.0);
        prop_assert_eq!(accuracy(&v, &neg).unwrap(), 0.0);
    }

    #[test]
    fn refined_differences_ignore_score_scale(
        scores in vec(0.01f64..1.0, 2..9),
        k in 0.01f64..50.0,
        circular in any::<bool>(),
    ) {
        let mode = if circular { ComparisonMode::Circular } else { ComparisonMode::Pairwise };
        let d = build_design(scores.len(), mode).unwrap();
        let a = solve_refined_scores(&scores, &d, 1e-4, 0.0).unwrap();
        let scaled: Vec<f64> = scores.iter().map(|s| s * k).collect();
        let b = solve_refined_scores(&scaled, &d, 1e-4, 0.0).unwrap();
        for j in 1..scores.len() {
            prop_assert!(((a[j] - a[0]) - (b[j] - b[0])).abs() < 1e-10);
        }
    }

    #[test]
    fn bound_error_is_symmetric_and_consistent(c in 1e-3f64..0.999, d in 1e-3f64..0.999) {
        let e = error_e(c, d).unwrap();
        prop_assert!((e - error_e(d, c).unwrap()).abs() < 1e-12);
        prop_assert!((e * (1.0 + (c - 0.5) * (d - 0.5)) - 1.0).abs() < 1e-12);
        prop_assert!(e > 0.8 && e < 4.0 / 3.0);
    }

    #[test]
    fn bound_scales_linearly_in_log_confidence(c in 0.05f64..0.95, d in 0.05f64..0.95, delta in 1e-6f64..0.5, k in 1.5f64..4.0) {
        // δ^k multiplies ln(1/δ) by k
        let base = bound_value(&BoundInputs::new(c, d, delta).unwrap()).unwrap();
        let powered = bound_value(&BoundInputs::new(c, d, delta.powf(k)).unwrap()).unwrap();
        prop_assert!((powered / base - k).abs() < 1e-9 * k);
        let n = min_expert_labels(&BoundInputs::new(c, d, delta).unwrap()).unwrap() as f64;
        prop_assert!(n >= base - 1e-9 && n < base + 1.0);
    }

    #[test]
    fn bound_shrinks_as_epsilon_grows(c in 0.05f64..0.95, d1 in 0.05f64..0.95, d2 in 0.05f64..0.95) {
        let (lo, hi) = if normalized_epsilon(c, d1).unwrap() <= normalized_epsilon(c, d2).unwrap() {
            (d1, d2)
        } else {
            (d2, d1)
        };
        let n_lo = min_expert_labels(&BoundInputs::new(c, lo, 0.05).unwrap()).unwrap();
        let n_hi = min_expert_labels(&BoundInputs::new(c, hi, 0.05).unwrap()).unwrap();
        prop_assert!(n_hi <= n_lo);
    }

    #[test]
    fn stratified_sample_is_exact_and_distinct(
        points in vec((-50.0f64..50.0, -50.0f64..50.0), 4..60),
        k in 1usize..4,
        extra in 0usize..10,
        seed in any::<u64>(),
    ) {
        let rows: Vec<Vec<f64>> = points.iter().map(|&(x, y)| vec![x, y]).collect();
        let f = FeatureMatrix::from_rows(&rows).unwrap();
        let model = kmeans_fit(&f, k, seed, KMeansInit::PlusPlus, 50).unwrap();
        for w in model.wcss_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].max(1.0));
        }
        prop_assert!(model.members().iter().all(|g| !g.is_empty()));
        let n = (k + extra).min(rows.len());
        let s = sample_stratified(&model, n, seed).unwrap();
        prop_assert_eq!(s.len(), n);
        prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(&s, &sample_stratified(&model, n, seed).unwrap());
    }

    #[test]
    fn label_matrix_rejects_empty_rows_and_columns(n in 1usize..6, m in 1usize..6, zero_row in any::<bool>(), at in 0usize..6) {
        let mut entries = vec![1i8; n * m];
        if zero_row {
            let r = at % n;
            entries[r * m..(r + 1) * m].iter_mut().for_each(|v| *v = 0);
        } else {
            let c = at % m;
            (0..n).for_each(|i| entries[i * m + c] = 0);
        }
        prop_assert!(LabelMatrix::new(n, m, entries).is_err());
    }
}

#[test]
fn reports_are_byte_identical_for_identical_configs() {
    let config = ExperimentConfig {
        dataset: DatasetSource::Simulate(SimulationSource {
            n_instances: 150,
            n_labelers: 10,
            positive_fraction: 0.6,
            bands: Bands::default(),
        }),
        methods: [
            MethodKind::Majority,
            MethodKind::DawidSkene,
            MethodKind::Karger,
            MethodKind::Elice1,
            MethodKind::Elice2,
            MethodKind::Elice3,
        ]
        .into_iter()
        .map(Into::into)
        .collect(),
        expert: ExpertSelection::uniform(8),
        runs: 5,
        seed: 42,
        composition: Some(Composition::bad_band(0.3, 0.7, 10, 0.5).unwrap()),
        sweep: None,
        threshold: 0.9,
    };
    let a = run_experiment(
        &config,
        &RunOptions {
            threads: Some(3),
            timings: false,
        },
    )
    .unwrap();
    let b = run_experiment(
        &config,
        &RunOptions {
            threads: Some(1),
            timings: false,
        },
    )
    .unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let mut ca = Vec::new();
    let mut cb = Vec::new();
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
    for cell in &a.cells {
        assert_eq!(cell.runs, 5, "{}", cell.method);
        assert_eq!(cell.accuracies.len(), 5);
        assert_eq!(cell.inputs_sha256, a.cells[0].inputs_sha256);
    }
}
