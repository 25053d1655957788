//! Normalized-cut spectral clustering.
//!
//! [`shi_malik`] embeds the graph with the `k` smallest eigenvectors of its
//! normalized Laplacian, renormalizes the rows, runs k-means `S` times with
//! independent seeds and keeps the partition with the smallest normalized
//! cut. [`partition_distance`] compares two partitions up to relabeling.

mod assignment;
mod kmeans;
mod weekly;

pub use assignment::{max_weight_matching, min_cost_assignment};
pub use kmeans::{kmeans, kmeans_with_rng, restart_rng, KMeansFit, MAX_ITERATIONS};
pub use weekly::{weekly_partitions, WeeklyOptions, WeeklyPartitions, WeeklyReport};

use ndarray::Array2;
use serde::Serialize;

use crate::affinity::AffinityMatrix;
use crate::error::{Error, Result};
use crate::spectral::{normalized_laplacian, relaxed_ncut_bound, smallest_eigenpairs, DegreeProfile};

/// Assignment of `n` items to `k` non-empty clusters, numbered in order of
/// each cluster's smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Validates that every label is below `k` and every cluster is used,
    /// then canonicalizes.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        let mut used = vec![false; k];
        for (i, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::invalid(format!("label {l} of item {i} is not below k={k}")));
            }
            used[l] = true;
        }
        if let Some(c) = used.iter().position(|u| !u) {
            return Err(Error::invalid(format!("cluster {c} is empty")));
        }
        Ok(Self::from_labels(&labels))
    }

    /// Canonical partition induced by arbitrary labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let canon: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition {
            k: map.len(),
            labels: canon,
        }
    }

    pub fn single(n: usize) -> Self {
        Partition::from_labels(&vec![0; n])
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == cluster).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

/// `Σ_ℓ W(V_ℓ, V̄_ℓ) / Vol(V_ℓ)`.
pub fn ncut(w: &AffinityMatrix, partition: &Partition) -> Result<f64> {
    if w.len() != partition.len() {
        return Err(Error::invalid("partition size does not match affinity matrix"));
    }
    let k = partition.k();
    let mut cut = vec![0.0; k];
    let mut vol = vec![0.0; k];
    let labels = partition.labels();
    for (i, row) in w.weights().rows().into_iter().enumerate() {
        let li = labels[i];
        for (j, &x) in row.iter().enumerate() {
            vol[li] += x;
            if labels[j] != li {
                cut[li] += x;
            }
        }
    }
    let mut total = 0.0;
    for c in 0..k {
        if vol[c] <= 0.0 {
            return Err(Error::Numerical(format!("cluster {c} has zero volume")));
        }
        total += cut[c] / vol[c];
    }
    Ok(total)
}

/// Fewest items that must change cluster to turn `p` into `q`, up to
/// relabeling: `n` minus the best cluster matching on the confusion table.
pub fn partition_distance(p: &Partition, q: &Partition) -> Result<usize> {
    if p.len() != q.len() {
        return Err(Error::invalid(format!(
            "partitions have different lengths ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    let mut confusion = vec![vec![0usize; q.k()]; p.k()];
    for (a, b) in p.labels().iter().zip(q.labels()) {
        confusion[*a][*b] += 1;
    }
    Ok(p.len() - max_weight_matching(&confusion))
}

/// How rows of the eigenvector matrix are rescaled before k-means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowNormalization {
    /// Euclidean unit length.
    #[default]
    UnitLength,
    /// Divide by the signed row sum.
    RowSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiMalikOptions {
    pub restarts: usize,
    pub seed: u64,
    pub normalization: RowNormalization,
}

impl Default for ShiMalikOptions {
    fn default() -> Self {
        ShiMalikOptions {
            restarts: 500,
            seed: 0,
            normalization: RowNormalization::UnitLength,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringReport {
    pub best: Partition,
    pub ncut_value: f64,
    pub relaxed_bound: f64,
    pub quality_ratio: f64,
    /// Restarts whose partition equals `best`.
    pub stability_count: usize,
    pub restarts: usize,
    pub seed: u64,
    /// The `k` smallest eigenvalues of the normalized Laplacian.
    pub eigenvalues: Vec<f64>,
}

/// `ncut / bound`, defined as 1 when both are numerically zero.
pub fn quality_ratio(ncut_value: f64, bound: f64) -> f64 {
    const ZERO: f64 = 1e-12;
    if ncut_value.abs() < ZERO && bound.abs() < ZERO {
        1.0
    } else if bound.abs() < ZERO {
        f64::INFINITY
    } else {
        ncut_value / bound
    }
}

pub fn normalize_rows(x: &Array2<f64>, mode: RowNormalization) -> Array2<f64> {
    let mut y = x.clone();
    for mut row in y.rows_mut() {
        let scale = match mode {
            RowNormalization::UnitLength => row.iter().map(|v| v * v).sum::<f64>().sqrt(),
            RowNormalization::RowSum => row.sum(),
        };
        if scale != 0.0 && scale.is_finite() {
            row.mapv_inplace(|v| v / scale);
        }
    }
    y
}

pub fn shi_malik(w: &AffinityMatrix, k: usize, restarts: usize, seed: u64) -> Result<ClusteringReport> {
    shi_malik_with(
        w,
        k,
        &ShiMalikOptions {
            restarts,
            seed,
            ..Default::default()
        },
    )
}

pub fn shi_malik_with(w: &AffinityMatrix, k: usize, options: &ShiMalikOptions) -> Result<ClusteringReport> {
    let n = w.len();
    if k < 2 || k > n {
        return Err(Error::invalid(format!("need 2 <= k <= n (k={k}, n={n})")));
    }
    if options.restarts == 0 {
        return Err(Error::invalid("at least one restart is required"));
    }
    let isolated = DegreeProfile::of(w).isolated;
    if !isolated.is_empty() {
        return Err(Error::IsolatedVertices(isolated));
    }
    let laplacian = normalized_laplacian(w)?;
    let embedding = smallest_eigenpairs(&laplacian, k)?;
    let bound = relaxed_ncut_bound(&embedding);
    let points = normalize_rows(embedding.vectors(), options.normalization);

    let run = |s: usize| -> Result<(Partition, f64)> {
        let mut rng = restart_rng(options.seed, s as u64);
        let p = kmeans_with_rng(&points, k, &mut rng)?.partition();
        let value = ncut(w, &p)?;
        Ok((p, value))
    };

    #[cfg(feature = "parallel")]
    let runs: Vec<Result<(Partition, f64)>> = {
        use rayon::prelude::*;
        (0..options.restarts).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Result<(Partition, f64)>> = (0..options.restarts).map(run).collect();

    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (s, (_, value)) in runs.iter().enumerate() {
        if *value < runs[best].1 {
            best = s;
        }
    }
    let (best_partition, ncut_value) = runs[best].clone();
    let stability_count = runs.iter().filter(|(p, _)| *p == best_partition).count();
    Ok(ClusteringReport {
        quality_ratio: quality_ratio(ncut_value, bound),
        best: best_partition,
        ncut_value,
        relaxed_bound: bound,
        stability_count,
        restarts: options.restarts,
        seed: options.seed,
        eigenvalues: embedding.eigenvalues().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn aff(w: Array2<f64>) -> AffinityMatrix {
        AffinityMatrix::new(w, "test").unwrap()
    }

    fn path3() -> AffinityMatrix {
        aff(array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    }

    fn two_triangles() -> AffinityMatrix {
        let mut w = Array2::zeros((6, 6));
        for b in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        w[[3 * b + i, 3 * b + j]] = 1.0;
                    }
                }
            }
        }
        aff(w)
    }

    #[test]
    fn partition_canonical() {
        let p = Partition::new(vec![2, 2, 0, 1], 3).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1, 2]);
        assert!(Partition::new(vec![0, 2], 3).is_err());
        assert!(Partition::new(vec![0, 3], 3).is_err());
        assert_eq!(p.sizes(), vec![2, 1, 1]);
        assert_eq!(p.members(0), vec![0, 1]);
    }

    #[test]
    fn ncut_single_cluster() {
        assert_eq!(ncut(&path3(), &Partition::single(3)).unwrap(), 0.0);
    }

    #[test]
    fn ncut_path() {
        let p = Partition::from_labels(&[0, 1, 1]);
        assert_abs_diff_eq!(ncut(&path3(), &p).unwrap(), 4.0 / 3.0, epsilon = 1e-15);
        // brute force over all bipartitions: 4/3 is the minimum
        let mut best = f64::INFINITY;
        for mask in 1u32..4 {
            let labels: Vec<usize> = (0..3).map(|i| ((mask >> i) & 1) as usize).collect();
            best = best.min(ncut(&path3(), &Partition::from_labels(&labels)).unwrap());
        }
        assert_abs_diff_eq!(best, 4.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn ncut_disjoint_edges() {
        let mut w = Array2::zeros((4, 4));
        for (i, j) in [(0, 1), (2, 3)] {
            w[[i, j]] = 1.0;
            w[[j, i]] = 1.0;
        }
        assert_eq!(ncut(&aff(w), &Partition::from_labels(&[0, 0, 1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn ncut_zero_volume() {
        let w = aff(array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert!(ncut(&w, &Partition::from_labels(&[0, 0, 1])).is_err());
    }

    #[test]
    fn shi_malik_two_cliques() {
        for s in [1, 5, 50] {
            let r = shi_malik(&two_triangles(), 2, s, 3).unwrap();
            assert_eq!(r.best.labels(), &[0, 0, 0, 1, 1, 1]);
            assert_eq!(r.ncut_value, 0.0);
            assert_eq!(r.quality_ratio, 1.0);
            assert!(r.stability_count >= 1 && r.stability_count <= s);
        }
    }

    #[test]
    fn shi_malik_validation() {
        assert!(shi_malik(&path3(), 1, 10, 0).is_err());
        assert!(shi_malik(&path3(), 4, 10, 0).is_err());
        assert!(shi_malik(&path3(), 2, 0, 0).is_err());
        let w = aff(array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert!(matches!(shi_malik(&w, 2, 5, 0), Err(Error::IsolatedVertices(v)) if v == vec![2]));
    }

    #[test]
    fn shi_malik_reproducible() {
        let w = aff(array![
            [0.0, 3.0, 1.0, 0.2, 0.0],
            [3.0, 0.0, 2.0, 0.0, 0.1],
            [1.0, 2.0, 0.0, 0.5, 0.0],
            [0.2, 0.0, 0.5, 0.0, 4.0],
            [0.0, 0.1, 0.0, 4.0, 0.0]
        ]);
        let a = shi_malik(&w, 2, 30, 9).unwrap();
        let b = shi_malik(&w, 2, 30, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ncut_value.to_bits(), b.ncut_value.to_bits());
        assert!(a.quality_ratio >= 1.0 - 1e-9);
    }

    #[test]
    fn row_normalization_modes() {
        let x = array![[3.0, 4.0], [0.0, 0.0], [1.0, 1.0]];
        let u = normalize_rows(&x, RowNormalization::UnitLength);
        assert_abs_diff_eq!(u[[0, 0]], 0.6, epsilon = 1e-15);
        assert_eq!(u.row(1).to_vec(), vec![0.0, 0.0]);
        let s = normalize_rows(&x, RowNormalization::RowSum);
        assert_abs_diff_eq!(s[[0, 1]], 4.0 / 7.0, epsilon = 1e-15);
        assert_eq!(s[[2, 0]], 0.5);
    }

    #[test]
    fn distance_basics() {
        let p = Partition::from_labels(&[0, 0, 0, 1, 1, 1, 2, 2, 2]);
        assert_eq!(partition_distance(&p, &p).unwrap(), 0);
        let permuted = Partition::from_labels(&[2, 2, 2, 0, 0, 0, 1, 1, 1]);
        assert_eq!(partition_distance(&p, &permuted).unwrap(), 0);
        let moved = Partition::from_labels(&[0, 0, 1, 1, 1, 1, 2, 2, 2]);
        assert_eq!(partition_distance(&p, &moved).unwrap(), 1);
        assert!(partition_distance(&p, &Partition::single(3)).is_err());
        // different k
        assert_eq!(partition_distance(&p, &Partition::single(9)).unwrap(), 6);
    }

    /// Exhaustive search over label bijections (padded with "unmatched").
    fn distance_by_permutation(p: &Partition, q: &Partition) -> usize {
        fn perms(items: Vec<usize>) -> Vec<Vec<usize>> {
            if items.len() <= 1 {
                return vec![items];
            }
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut rest = items.clone();
                let head = rest.remove(i);
                for mut tail in perms(rest) {
                    tail.insert(0, head);
                    out.push(tail);
                }
            }
            out
        }
        let m = p.k().max(q.k());
        perms((0..m).collect())
            .into_iter()
            .map(|sigma| {
                p.labels()
                    .iter()
                    .zip(q.labels())
                    .filter(|(a, b)| sigma[**a] != **b)
                    .count()
            })
            .min()
            .unwrap()
    }

    #[test]
    fn distance_agrees_with_permutation_search() {
        let mut rng = restart_rng(42, 0);
        use rand::Rng;
        for _ in 0..200 {
            let n = rng.gen_range(3..10);
            let kp = rng.gen_range(1..=4);
            let kq = rng.gen_range(1..=4);
            let p = Partition::from_labels(&(0..n).map(|_| rng.gen_range(0..kp)).collect::<Vec<_>>());
            let q = Partition::from_labels(&(0..n).map(|_| rng.gen_range(0..kq)).collect::<Vec<_>>());
            assert_eq!(partition_distance(&p, &q).unwrap(), distance_by_permutation(&p, &q));
        }
    }
}
