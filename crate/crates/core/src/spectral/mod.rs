//! Normalized Laplacian, its smallest eigenpairs, the relaxed normalized-cut
//! bound and eigengap-based suggestions for the number of clusters.

mod jacobi;

pub use jacobi::symmetric_eigen;

use std::io::Write;

use ndarray::Array2;

use crate::affinity::AffinityMatrix;
use crate::error::{Error, Result};

pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
pub const ZERO_EIGENVALUE: f64 = 1e-12;

/// Degrees `d_i = Σ_j w_ij` and the indices with zero degree.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeProfile {
    pub degrees: Vec<f64>,
    pub isolated: Vec<usize>,
}

impl DegreeProfile {
    pub fn of(w: &AffinityMatrix) -> Self {
        let degrees: Vec<f64> = w.weights().rows().into_iter().map(|r| r.sum()).collect();
        let isolated = degrees
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0.0)
            .map(|(i, _)| i)
            .collect();
        DegreeProfile { degrees, isolated }
    }
}

/// `D^{-1/2} (D - W) D^{-1/2}`. Fails if any vertex has zero degree.
pub fn normalized_laplacian(w: &AffinityMatrix) -> Result<Array2<f64>> {
    let profile = DegreeProfile::of(w);
    if !profile.isolated.is_empty() {
        return Err(Error::IsolatedVertices(profile.isolated));
    }
    let inv_sqrt: Vec<f64> = profile.degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let n = w.len();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            1.0
        } else {
            -w.get(i, j) * inv_sqrt[i] * inv_sqrt[j]
        }
    }))
}

/// The `k` smallest eigenpairs of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    eigenvalues: Vec<f64>,
    vectors: Array2<f64>,
}

impl SpectralEmbedding {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `n × k`, column `j` is the unit eigenvector for `eigenvalues[j]`.
    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalue table followed by a blank line and the vector block.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "eigenvalue_rank,lambda")?;
        for (r, l) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{},{}", r + 1, l)?;
        }
        writeln!(out)?;
        write!(out, "city")?;
        for r in 0..self.k() {
            write!(out, ",v{}", r + 1)?;
        }
        writeln!(out)?;
        for (i, row) in self.vectors.rows().into_iter().enumerate() {
            write!(out, "{i}")?;
            for x in row {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn check_symmetric(m: &Array2<f64>) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::invalid("matrix is not square"));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (m[[i, j]], m[[j, i]]);
            if (a - b).abs() > SYMMETRY_TOLERANCE * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::invalid(format!("matrix is not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// Flips each column so that its first coordinate with magnitude above
/// `1e-12` is positive.
fn normalize_signs(vectors: &mut Array2<f64>) {
    for mut col in vectors.columns_mut() {
        if let Some(&lead) = col.iter().find(|x| x.abs() > 1e-12) {
            if lead < 0.0 {
                col.mapv_inplace(|x| -x);
            }
        }
    }
}

pub fn smallest_eigenpairs(matrix: &Array2<f64>, k: usize) -> Result<SpectralEmbedding> {
    let n = matrix.nrows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= k <= n (k={k}, n={n})")));
    }
    check_symmetric(matrix)?;
    let (values, vectors) = symmetric_eigen(matrix)?;
    let mut vectors = vectors.slice(ndarray::s![.., ..k]).to_owned();
    normalize_signs(&mut vectors);
    Ok(SpectralEmbedding {
        eigenvalues: values[..k].to_vec(),
        vectors,
    })
}

/// Every eigenpair, ascending.
pub fn full_spectrum(matrix: &Array2<f64>) -> Result<SpectralEmbedding> {
    smallest_eigenpairs(matrix, matrix.nrows())
}

/// `λ_1 + … + λ_k`: a lower bound on the normalized cut of any k-partition.
pub fn relaxed_ncut_bound(embedding: &SpectralEmbedding) -> f64 {
    embedding.eigenvalues.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCandidate {
    pub k: usize,
    /// `λ_{k+1} / λ_k`; infinite when `λ_k` is numerically zero but
    /// `λ_{k+1}` is not.
    pub ratio: f64,
}

/// Ranks `k ∈ 2..=max_k` by the eigengap ratio `λ_{k+1}/λ_k`, largest first,
/// ties going to the smaller `k`.
///
/// A pair of numerically-zero eigenvalues counts as ratio 1, so for a graph
/// with `m` components the only infinite ratio sits at `k = m`.
pub fn suggest_k(eigenvalues: &[f64], max_k: usize) -> Result<Vec<GapCandidate>> {
    if eigenvalues.len() < 2 {
        return Err(Error::invalid("need at least two eigenvalues"));
    }
    if max_k < 2 {
        return Err(Error::invalid("max_k must be at least 2"));
    }
    if eigenvalues.len() < max_k + 1 {
        return Err(Error::invalid(format!(
            "need {} eigenvalues for max_k={max_k}, got {}",
            max_k + 1,
            eigenvalues.len()
        )));
    }
    if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("eigenvalues must be ascending"));
    }
    let mut out: Vec<GapCandidate> = (2..=max_k)
        .map(|k| {
            let (lo, hi) = (eigenvalues[k - 1], eigenvalues[k]);
            let ratio = match (lo.abs() < ZERO_EIGENVALUE, hi.abs() < ZERO_EIGENVALUE) {
                (true, true) => 1.0,
                (true, false) => f64::INFINITY,
                _ => hi / lo,
            };
            GapCandidate { k, ratio }
        })
        .collect();
    out.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn aff(w: Array2<f64>) -> AffinityMatrix {
        AffinityMatrix::new(w, "test").unwrap()
    }

    #[test]
    fn k2_laplacian() {
        let l = normalized_laplacian(&aff(array![[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert_eq!(l, array![[1.0, -1.0], [-1.0, 1.0]]);
        let e = smallest_eigenpairs(&l, 2).unwrap();
        assert_abs_diff_eq!(e.eigenvalues()[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues()[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn isolated_vertex_error_lists_ids() {
        let w = aff(array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        match normalized_laplacian(&w).unwrap_err() {
            Error::IsolatedVertices(v) => assert_eq!(v, vec![2]),
            e => panic!("{e}"),
        }
        assert_eq!(DegreeProfile::of(&w).isolated, vec![2]);
    }

    #[test]
    fn kernel_is_sqrt_degree() {
        let w = aff(array![[0.0, 2.0, 1.0], [2.0, 0.0, 3.0], [1.0, 3.0, 0.0]]);
        let l = normalized_laplacian(&w).unwrap();
        let e = smallest_eigenpairs(&l, 1).unwrap();
        assert_abs_diff_eq!(e.eigenvalues()[0], 0.0, epsilon = 1e-12);
        let d = DegreeProfile::of(&w).degrees;
        let norm: f64 = d.iter().sum::<f64>().sqrt();
        for (i, di) in d.iter().enumerate() {
            assert_abs_diff_eq!(e.vectors()[[i, 0]], di.sqrt() / norm, epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_degenerate() {
        let e = smallest_eigenpairs(&Array2::eye(3), 3).unwrap();
        assert_eq!(e.eigenvalues(), &[1.0, 1.0, 1.0]);
        let g = e.vectors().t().dot(e.vectors());
        for ((i, j), &x) in g.indexed_iter() {
            assert_abs_diff_eq!(x, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
        }
        for col in e.vectors().columns() {
            assert!(*col.iter().find(|x| x.abs() > 1e-12).unwrap() > 0.0);
        }
    }

    #[test]
    fn cubic_roots() {
        // [[2,1,0],[1,2,1],[0,1,2]]: det(A - λI) = (2-λ)((2-λ)^2 - 2), roots 2, 2 ± √2.
        let a = array![[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]];
        let e = smallest_eigenpairs(&a, 3).unwrap();
        let expect = [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
        for (got, want) in e.eigenvalues().iter().zip(expect) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(smallest_eigenpairs(&array![[1.0, 2.0], [0.0, 1.0]], 1).is_err());
        assert!(smallest_eigenpairs(&Array2::eye(2), 3).is_err());
        assert!(smallest_eigenpairs(&Array2::eye(2), 0).is_err());
    }

    #[test]
    fn path_p3_bound() {
        let w = aff(array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]);
        let e = smallest_eigenpairs(&normalized_laplacian(&w).unwrap(), 2).unwrap();
        // path spectrum 1 - cos(πj/2), j = 0, 1, 2
        assert_abs_diff_eq!(e.eigenvalues()[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(relaxed_ncut_bound(&e), 1.0, epsilon = 1e-12);
        assert!(relaxed_ncut_bound(&e) <= 4.0 / 3.0);
        let e1 = smallest_eigenpairs(&normalized_laplacian(&w).unwrap(), 1).unwrap();
        assert_abs_diff_eq!(relaxed_ncut_bound(&e1), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_disjoint_edges_bound_zero() {
        let mut w = Array2::zeros((4, 4));
        for (i, j) in [(0, 1), (2, 3)] {
            w[[i, j]] = 1.0;
            w[[j, i]] = 1.0;
        }
        let e = smallest_eigenpairs(&normalized_laplacian(&aff(w)).unwrap(), 2).unwrap();
        assert_abs_diff_eq!(relaxed_ncut_bound(&e), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn suggest_constructed_jump() {
        let s = suggest_k(&[0.0, 0.01, 0.02, 0.9, 1.0], 4).unwrap();
        assert_eq!(s[0].k, 3);
        assert_abs_diff_eq!(s[0].ratio, 45.0, epsilon = 1e-9);
    }

    #[test]
    fn suggest_ties_smallest_first() {
        let s = suggest_k(&[0.5; 6], 5).unwrap();
        assert!(s.iter().all(|c| c.ratio == 1.0));
        assert_eq!(s.iter().map(|c| c.k).collect::<Vec<_>>(), vec![2, 3, 4, 5]);
    }

    #[test]
    fn suggest_component_count() {
        // three disjoint triangles
        let mut w = Array2::zeros((9, 9));
        for b in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        w[[3 * b + i, 3 * b + j]] = 1.0;
                    }
                }
            }
        }
        let e = full_spectrum(&normalized_laplacian(&aff(w)).unwrap()).unwrap();
        assert_eq!(e.eigenvalues().iter().filter(|l| l.abs() < 1e-10).count(), 3);
        let s = suggest_k(e.eigenvalues(), 5).unwrap();
        assert_eq!(s[0].k, 3);
        assert!(s[0].ratio.is_infinite());
        assert!(s[1].ratio.is_finite());
    }

    #[test]
    fn suggest_errors() {
        assert!(suggest_k(&[0.0], 2).is_err());
        assert!(suggest_k(&[0.0, 1.0], 2).is_err());
        assert!(suggest_k(&[1.0, 0.0, 2.0], 2).is_err());
    }

    #[test]
    fn embedding_csv_layout() {
        let e = smallest_eigenpairs(&Array2::eye(2), 1).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("eigenvalue_rank,lambda\n1,1\n\ncity,v1\n"));
    }
}
