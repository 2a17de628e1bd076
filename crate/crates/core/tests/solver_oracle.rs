//! Structured ridge solves against a dense explicit-design solve.

use crowdforge::elice3::{build_design, solve_refined_scores};
use crowdforge::ComparisonMode;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense_solve(scores: &[f64], mode: ComparisonMode, ridge: f64, offset: f64) -> Vec<f64> {
    let design = build_design(scores.len(), mode).unwrap();
    let rows: Vec<(usize, usize)> = design.rows().collect();
    let mut g = DMatrix::<f64>::zeros(rows.len(), scores.len());
    let mut d = DVector::<f64>::zeros(rows.len());
    for (r, &(j, k)) in rows.iter().enumerate() {
        g[(r, j)] += 1.0;
        g[(r, k)] -= 1.0;
        d[r] = (scores[j] / scores[k]).ln();
    }
    let n = scores.len();
    let a = g.transpose() * &g + DMatrix::<f64>::identity(n, n) * ridge;
    let x = a
        .cholesky()
        .expect("ridge system is SPD")
        .solve(&(g.transpose() * d));
    x.iter().map(|v| v + offset).collect()
}

fn random_scores(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.01..1.0)).collect()
}

#[test]
fn structured_solve_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for mode in [ComparisonMode::Pairwise, ComparisonMode::Circular] {
        for m in 2..=6 {
            for ridge in [1e-4, 1e-2, 1.0] {
                for _ in 0..20 {
                    let scores = random_scores(&mut rng, m);
                    let design = build_design(m, mode).unwrap();
                    let fast = solve_refined_scores(&scores, &design, ridge, 1.0).unwrap();
                    let slow = dense_solve(&scores, mode, ridge, 1.0);
                    for (a, b) in fast.iter().zip(&slow) {
                        assert!(
                            (a - b).abs() < 1e-9,
                            "{mode} M={m} ridge={ridge}: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn tiny_ridge_recovers_log_ratios() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for mode in [ComparisonMode::Pairwise, ComparisonMode::Circular] {
        for m in 2..=6 {
            let scores = random_scores(&mut rng, m);
            let design = build_design(m, mode).unwrap();
            let x = solve_refined_scores(&scores, &design, 1e-8, 0.0).unwrap();
            for j in 0..m {
                for k in 0..m {
                    let want = (scores[j] / scores[k]).ln();
                    assert!((x[j] - x[k] - want).abs() < 1e-3, "{mode} M={m}");
                }
            }
        }
    }
}

#[test]
fn design_rows_have_one_plus_and_one_minus() {
    for mode in [ComparisonMode::Pairwise, ComparisonMode::Circular] {
        for m in 2..=9 {
            let design = build_design(m, mode).unwrap();
            let rows: Vec<(usize, usize)> = design.rows().collect();
            assert_eq!(rows.len(), design.len());
            let mut appearances = vec![0usize; m];
            for &(j, k) in &rows {
                assert_ne!(j, k);
                appearances[j] += 1;
                appearances[k] += 1;
            }
            let expected = match mode {
                ComparisonMode::Pairwise => m - 1,
                ComparisonMode::Circular => 2,
            };
            assert!(appearances.iter().all(|&a| a == expected), "{mode} M={m}");
            // diagonal of GᵀG equals the appearance count
            for j in 0..m {
                let mut e = vec![0.0; m];
                e[j] = 1.0;
                assert_eq!(design.normal_apply(&e)[j], expected as f64);
            }
        }
    }
}

#[test]
fn large_instance_counts_stay_linear() {
    // a pairwise design over 20000 instances would need 2e8 rows if materialized
    let n = 20_000;
    let scores: Vec<f64> = (0..n).map(|i| 0.2 + 0.6 * (i as f64 / n as f64)).collect();
    for mode in [ComparisonMode::Pairwise, ComparisonMode::Circular] {
        let design = build_design(n, mode).unwrap();
        let x = solve_refined_scores(&scores, &design, 1e-4, 1.0).unwrap();
        assert_eq!(x.len(), n);
        assert!(x.iter().all(|v| v.is_finite()));
    }
}
