use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Partition;
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// Raw cluster index per point (not canonicalized).
    pub assignment: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    pub iterations: usize,
}

impl KMeansFit {
    pub fn partition(&self) -> Partition {
        Partition::from_labels(&self.assignment)
    }
}

/// RNG for restart `stream` of a run seeded with `seed`. Streams are
/// independent, so restarts can run in any order.
pub fn restart_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: each new centre is drawn with probability
/// proportional to its squared distance from the nearest chosen centre.
fn seed_centroids<R: Rng>(points: &Array2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(first))).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave target past the last positive weight
            chosen.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap_or(0))
        } else {
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), points.row(pick)));
        }
    }
    centroids
}

fn nearest_centroid(point: ArrayView1<f64>, centroids: &Array2<f64>) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(point, row);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Fills empty clusters by moving the farthest point of the cluster with the
/// largest inertia (among clusters with at least two members).
fn repair_empty(points: &Array2<f64>, centroids: &mut Array2<f64>, assignment: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignment.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut inertia = vec![0.0; k];
        for (i, &a) in assignment.iter().enumerate() {
            inertia[a] += sq_dist(points.row(i), centroids.row(a));
        }
        let donor = (0..k)
            .filter(|&c| sizes[c] >= 2)
            .max_by(|&a, &b| inertia[a].total_cmp(&inertia[b]).then(b.cmp(&a)))
            .expect("n >= k guarantees a cluster with two members");
        let far = assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == donor)
            .map(|(i, _)| i)
            .max_by(|&a, &b| {
                sq_dist(points.row(a), centroids.row(donor))
                    .total_cmp(&sq_dist(points.row(b), centroids.row(donor)))
                    .then(b.cmp(&a))
            })
            .expect("donor is non-empty");
        assignment[far] = empty;
        centroids.row_mut(empty).assign(&points.row(far));
    }
}

fn update_centroids(points: &Array2<f64>, assignment: &[usize], centroids: &mut Array2<f64>) {
    let k = centroids.nrows();
    let mut counts = vec![0usize; k];
    centroids.fill(0.0);
    for (i, &a) in assignment.iter().enumerate() {
        counts[a] += 1;
        let mut row = centroids.row_mut(a);
        row += &points.row(i);
    }
    for (c, &cnt) in counts.iter().enumerate() {
        if cnt > 0 {
            centroids.row_mut(c).mapv_inplace(|x| x / cnt as f64);
        }
    }
}

/// Lloyd iterations from a k-means++ start, until assignments stop changing
/// or [`MAX_ITERATIONS`] is reached.
pub fn kmeans_with_rng<R: Rng>(points: &Array2<f64>, k: usize, rng: &mut R) -> Result<KMeansFit> {
    let n = points.nrows();
    if k == 0 || n < k {
        return Err(Error::invalid(format!("k-means needs n >= k >= 1 (n={n}, k={k})")));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("k-means input has non-finite coordinates".into()));
    }
    let mut centroids = seed_centroids(points, k, rng);
    let mut assignment = vec![usize::MAX; n];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut next: Vec<usize> = (0..n).map(|i| nearest_centroid(points.row(i), &centroids)).collect();
        repair_empty(points, &mut centroids, &mut next, k);
        if next == assignment {
            break;
        }
        assignment = next;
        update_centroids(points, &assignment, &mut centroids);
    }
    let inertia = assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_dist(points.row(i), centroids.row(a)))
        .sum();
    Ok(KMeansFit {
        assignment,
        centroids,
        inertia,
        iterations,
    })
}

/// Single k-means run on restart stream 0 of `seed`.
pub fn kmeans(points: &Array2<f64>, k: usize, seed: u64) -> Result<Partition> {
    Ok(kmeans_with_rng(points, k, &mut restart_rng(seed, 0))?.partition())
}
