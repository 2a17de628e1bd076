//! Choosing which instances go to the expert: uniformly at random, or an equal share from
//! each k-means cluster of the instance features.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{child_rng, rng_from};

/// Dense row-major feature matrix, one row per instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::invalid("feature matrix has no rows"));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::invalid("feature rows are empty"));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::shape(format!(
                    "feature row {i} has {} values, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "feature row {i} has a non-finite value"
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            n_rows: rows.len(),
            dim,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KMeansInit {
    Random,
    #[default]
    PlusPlus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub wcss_history: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Member indices of every cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &c) in self.assignment.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `n` distinct indices from `0..total`, uniform without replacement.
pub fn sample_uniform(n: usize, total: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 || n > total {
        return Err(Error::domain(format!(
            "cannot sample {n} of {total} instances"
        )));
    }
    let mut rng = rng_from(seed);
    let mut out = index::sample(&mut rng, total, n).into_vec();
    out.sort_unstable();
    Ok(out)
}

fn init_centroids(
    features: &FeatureMatrix,
    k: usize,
    init: KMeansInit,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let n = features.n_rows();
    match init {
        KMeansInit::Random => index::sample(rng, n, k)
            .into_iter()
            .map(|i| features.row(i).to_vec())
            .collect(),
        KMeansInit::PlusPlus => {
            let mut chosen = vec![rng.random_range(0..n)];
            let mut dist: Vec<f64> = features
                .rows()
                .map(|r| sq_dist(r, features.row(chosen[0])))
                .collect();
            while chosen.len() < k {
                let total: f64 = dist.iter().sum();
                let next = if total > 0.0 {
                    let mut target = rng.random::<f64>() * total;
                    let mut pick = n - 1;
                    for (i, d) in dist.iter().enumerate() {
                        if target < *d {
                            pick = i;
                            break;
                        }
                        target -= d;
                    }
                    while dist[pick] == 0.0 {
                        pick -= 1;
                    }
                    pick
                } else {
                    // duplicates only: any point not chosen yet
                    let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                    free[rng.random_range(0..free.len())]
                };
                chosen.push(next);
                let c = features.row(next);
                for (d, r) in dist.iter_mut().zip(features.rows()) {
                    *d = d.min(sq_dist(r, c));
                }
            }
            chosen
                .into_iter()
                .map(|i| features.row(i).to_vec())
                .collect()
        }
    }
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

fn wcss(features: &FeatureMatrix, centroids: &[Vec<f64>], assignment: &[usize]) -> f64 {
    features
        .rows()
        .zip(assignment)
        .map(|(r, &c)| sq_dist(r, &centroids[c]))
        .sum()
}

/// Lloyd's algorithm until the assignment stops changing or `max_iter` iterations.
///
/// A cluster that ends up empty is re-seeded at the point farthest from its own centroid
/// (taken from a cluster with at least two members), which never raises the objective.
pub fn kmeans_fit(
    features: &FeatureMatrix,
    k: usize,
    seed: u64,
    init: KMeansInit,
    max_iter: usize,
) -> Result<ClusterModel> {
    let n = features.n_rows();
    if k == 0 || k > n {
        return Err(Error::domain(format!("k = {k} must lie in 1..={n}")));
    }
    if max_iter == 0 {
        return Err(Error::domain("max_iter must be at least 1"));
    }
    let mut rng = rng_from(seed);
    let mut centroids = init_centroids(features, k, init, &mut rng);
    let mut assignment: Vec<usize> = Vec::new();
    let mut history: Vec<f64> = Vec::new();

    for _ in 0..max_iter {
        let mut next: Vec<usize> = (0..n)
            .into_par_iter()
            .map(|i| nearest(features.row(i), &centroids))
            .collect();

        let mut sizes = vec![0usize; k];
        for &c in &next {
            sizes[c] += 1;
        }
        let mut repaired = false;
        while let Some(empty) = sizes.iter().position(|&s| s == 0) {
            let far = (0..n)
                .filter(|&i| sizes[next[i]] > 1)
                .map(|i| (i, sq_dist(features.row(i), &centroids[next[i]])))
                .fold(
                    (usize::MAX, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                )
                .0;
            sizes[next[far]] -= 1;
            sizes[empty] += 1;
            next[far] = empty;
            centroids[empty] = features.row(far).to_vec();
            repaired = true;
        }

        let converged = !repaired && next == assignment;
        assignment = next;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            centroid.iter_mut().for_each(|v| *v = 0.0);
            for (r, _) in features.rows().zip(&assignment).filter(|(_, &a)| a == c) {
                for (v, x) in centroid.iter_mut().zip(r) {
                    *v += x;
                }
            }
            let size = sizes[c] as f64;
            centroid.iter_mut().for_each(|v| *v /= size);
        }
        let cost = wcss(features, &centroids, &assignment);
        if let Some(&prev) = history.last() {
            debug_assert!(
                cost <= prev + 1e-9 * prev.max(1.0),
                "k-means objective rose from {prev} to {cost}"
            );
        }
        history.push(cost);
        if converged {
            break;
        }
    }
    Ok(ClusterModel {
        centroids,
        assignment,
        wcss_history: history,
    })
}

/// Per-cluster quotas: `n / k` each, the remainder to the largest clusters, and any shortfall
/// of a cluster too small for its quota handed on to clusters with room, largest first.
pub fn stratified_quotas(sizes: &[usize], n: usize) -> Result<Vec<usize>> {
    let k = sizes.len();
    let total: usize = sizes.iter().sum();
    if k == 0 || n < k || n > total {
        return Err(Error::domain(format!(
            "cannot draw {n} instances from {k} clusters holding {total}"
        )));
    }
    let mut by_size: Vec<usize> = (0..k).collect();
    by_size.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));

    let mut quotas = vec![n / k; k];
    for &c in by_size.iter().take(n % k) {
        quotas[c] += 1;
    }
    let mut deficit = 0;
    for c in 0..k {
        if quotas[c] > sizes[c] {
            deficit += quotas[c] - sizes[c];
            quotas[c] = sizes[c];
        }
    }
    while deficit > 0 {
        for &c in &by_size {
            if deficit > 0 && quotas[c] < sizes[c] {
                quotas[c] += 1;
                deficit -= 1;
            }
        }
    }
    Ok(quotas)
}

/// Draws each cluster's quota uniformly from its members; returns sorted indices.
pub fn sample_stratified(model: &ClusterModel, n: usize, seed: u64) -> Result<Vec<usize>> {
    let members = model.members();
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let quotas = stratified_quotas(&sizes, n)?;
    let mut out = Vec::with_capacity(n);
    for (c, (group, quota)) in members.iter().zip(quotas).enumerate() {
        let mut rng = child_rng(seed, "stratified", c as u64);
        out.extend(
            index::sample(&mut rng, group.len(), quota)
                .into_iter()
                .map(|p| group[p]),
        );
    }
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(per: usize, gap: f64) -> FeatureMatrix {
        let mut rng = rng_from(7);
        let rows: Vec<Vec<f64>> = (0..2 * per)
            .map(|i| {
                let base = if i < per { 0.0 } else { gap };
                vec![base + rng.random::<f64>(), base + rng.random::<f64>()]
            })
            .collect();
        FeatureMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn uniform_examples() {
        let mut all = sample_uniform(10, 10, 3).unwrap();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(
            sample_uniform(1, 50, 9).unwrap(),
            sample_uniform(1, 50, 9).unwrap()
        );
        let s = sample_uniform(8, 958, 1).unwrap();
        assert_eq!(s.len(), 8);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(sample_uniform(11, 10, 0).is_err());
        assert!(sample_uniform(0, 10, 0).is_err());
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let f =
            FeatureMatrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 4.0], vec![4.0, 2.0]]).unwrap();
        let m = kmeans_fit(&f, 1, 0, KMeansInit::PlusPlus, 10).unwrap();
        assert_eq!(m.centroids, vec![vec![2.0, 2.0]]);
        assert_eq!(m.assignment, vec![0, 0, 0]);
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let f = blobs(30, 100.0);
        for init in [KMeansInit::Random, KMeansInit::PlusPlus] {
            let m = kmeans_fit(&f, 2, 11, init, 50).unwrap();
            let first = m.assignment[0];
            assert!(m.assignment[..30].iter().all(|&c| c == first));
            assert!(m.assignment[30..].iter().all(|&c| c != first));
        }
    }

    #[test]
    fn k_equal_n_has_zero_wcss() {
        let f = blobs(5, 3.0);
        let m = kmeans_fit(&f, 10, 2, KMeansInit::Random, 20).unwrap();
        assert_eq!(*m.wcss_history.last().unwrap(), 0.0);
        let mut ids = m.assignment.clone();
        ids.sort_unstable();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        // duplicate points force the random init into coincident centroids
        let f = FeatureMatrix::from_rows(&[
            vec![0.0],
            vec![0.0],
            vec![0.0],
            vec![10.0],
            vec![10.0],
            vec![10.0],
        ])
        .unwrap();
        for seed in 0..20 {
            let m = kmeans_fit(&f, 3, seed, KMeansInit::Random, 20).unwrap();
            assert!(m.members().iter().all(|g| !g.is_empty()), "seed {seed}");
        }
    }

    #[test]
    fn quota_examples() {
        assert_eq!(stratified_quotas(&[50, 50], 8).unwrap(), vec![4, 4]);
        assert_eq!(stratified_quotas(&[3, 97], 8).unwrap(), vec![3, 5]);
        assert_eq!(
            stratified_quotas(&[10, 40, 30, 20], 6).unwrap(),
            vec![1, 2, 2, 1]
        );
        assert!(stratified_quotas(&[3, 3], 1).is_err());
        assert!(stratified_quotas(&[3, 3], 7).is_err());
    }

    #[test]
    fn stratified_takes_quota_from_each_cluster() {
        let f = blobs(40, 50.0);
        let m = kmeans_fit(&f, 2, 5, KMeansInit::PlusPlus, 50).unwrap();
        let s = sample_stratified(&m, 8, 13).unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(s.iter().filter(|&&i| i < 40).count(), 4);
        assert_eq!(s, sample_stratified(&m, 8, 13).unwrap());
    }
}
