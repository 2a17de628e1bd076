use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use crowdforge::elice3::{build_design, solve_refined_scores};
use crowdforge::ComparisonMode;
use crowdforge_bench::scores;

fn ridge(c: &mut Criterion) {
    let mut group = c.benchmark_group("ridge_solve");
    for len in [20, 1_000, 100_000] {
        let s = scores(len, 7);
        for (name, mode) in [
            ("pairwise", ComparisonMode::Pairwise),
            ("circular", ComparisonMode::Circular),
        ] {
            let design = build_design(len, mode).unwrap();
            group.bench_with_input(BenchmarkId::new(name, len), &s, |b, s| {
                b.iter(|| solve_refined_scores(s, &design, 1e-4, 0.0).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, ridge);
criterion_main!(benches);
