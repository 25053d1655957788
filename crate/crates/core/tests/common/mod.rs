//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use metaregion::affinity::AffinityMatrix;
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Every labelling of `n` items into exactly `k` non-empty clusters, in
/// restricted-growth form (each partition visited once).
pub fn set_partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, n: usize, k: usize, used: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n - i < k - used {
            return;
        }
        if i == n {
            if used == k {
                out.push(cur.clone());
            }
            return;
        }
        for c in 0..=used.min(k - 1) {
            cur.push(c);
            go(i + 1, n, k, used.max(c + 1), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// NCut straight from the definition: Σ_c cut(c) / vol(c).
pub fn ncut_by_definition(w: &Array2<f64>, labels: &[usize], k: usize) -> f64 {
    let n = labels.len();
    let mut total = 0.0;
    for c in 0..k {
        let mut cut = 0.0;
        let mut vol = 0.0;
        for i in (0..n).filter(|&i| labels[i] == c) {
            for j in 0..n {
                vol += w[[i, j]];
                if labels[j] != c {
                    cut += w[[i, j]];
                }
            }
        }
        total += cut / vol;
    }
    total
}

pub fn exhaustive_min_ncut(w: &Array2<f64>, k: usize) -> (f64, Vec<usize>) {
    set_partitions(w.nrows(), k)
        .into_iter()
        .map(|p| (ncut_by_definition(w, &p, k), p))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("n >= k")
}

/// Symmetric weighted graph: each edge present with probability `density`,
/// weight uniform in (0.1, 1]. Redrawn until no vertex is isolated.
pub fn random_graph(n: usize, density: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    loop {
        let mut w = Array2::zeros((n, n));
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < density {
                    let v = rng.gen_range(0.1..=1.0);
                    w[[i, j]] = v;
                    w[[j, i]] = v;
                }
            }
        }
        if w.rows().into_iter().all(|r| r.sum() > 0.0) {
            return w;
        }
    }
}

pub fn random_affinity(n: usize, density: f64, seed: u64) -> AffinityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AffinityMatrix::new(random_graph(n, density, &mut rng), "random").unwrap()
}

/// Random symmetric matrix with entries uniform in [-1, 1].
pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-1.0..=1.0);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    a
}

/// Block-diagonal graph with `components` connected random blocks.
pub fn disconnected_graph(sizes: &[usize], rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n: usize = sizes.iter().sum();
    let mut w = Array2::zeros((n, n));
    let mut start = 0;
    for &s in sizes {
        // a path keeps the block connected; random chords on top
        for i in 0..s {
            for j in i + 1..s {
                if j == i + 1 || rng.gen::<f64>() < 0.4 {
                    let v = rng.gen_range(0.1..=1.0);
                    w[[start + i, start + j]] = v;
                    w[[start + j, start + i]] = v;
                }
            }
        }
        start += s;
    }
    w
}

/// Max |A v - λ v| over all eigenpairs (columns of `vectors`).
pub fn eigen_residual(a: &Array2<f64>, values: &[f64], vectors: &Array2<f64>) -> f64 {
    let mut worst = 0.0f64;
    for (c, &lambda) in values.iter().enumerate() {
        let v = vectors.column(c);
        let av = a.dot(&v);
        for (x, y) in av.iter().zip(v.iter()) {
            worst = worst.max((x - lambda * y).abs());
        }
    }
    worst
}

#[test]
fn stirling_counts() {
    // S(n, k) for small n
    assert_eq!(set_partitions(5, 2).len(), 15);
    assert_eq!(set_partitions(6, 3).len(), 90);
    assert_eq!(set_partitions(8, 3).len(), 966);
    assert_eq!(set_partitions(4, 4).len(), 1);
}
