//! Compressed sparse rows and a direct solver wrapper around faer's sparse
//! LU, with residual checks and iterative refinement.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// Accepted normwise backward error `‖b − Ax‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)`.
pub const RESIDUAL_ACCEPT: f64 = 1e-10;
const RESIDUAL_TARGET: f64 = 1e-12;
const REFINE_STEPS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    /// Builds from unsorted triplets; duplicates are summed in input order,
    /// so assembly is deterministic.
    pub fn from_triplets(n_rows: usize, n_cols: usize, trips: &[(usize, usize, f64)]) -> Csr {
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, _, _) in trips {
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; trips.len()];
        let mut vals = vec![0.0; trips.len()];
        for &(i, j, v) in trips {
            debug_assert!(j < n_cols);
            let k = next[i];
            cols[k] = j;
            vals[k] = v;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(trips.len());
        let mut out_vals = Vec::with_capacity(trips.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..n_rows {
            let (s, e) = (counts[i], counts[i + 1]);
            order.clear();
            order.extend(s..e);
            // stable: equal columns keep insertion order
            order.sort_by_key(|&k| cols[k]);
            let mut last = usize::MAX;
            for &k in &order {
                if cols[k] == last {
                    *out_vals.last_mut().unwrap() += vals[k];
                } else {
                    col_idx.push(cols[k]);
                    out_vals.push(vals[k]);
                    last = cols[k];
                }
            }
            row_ptr.push(col_idx.len());
        }
        Csr {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals: out_vals,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e].iter().copied().zip(self.vals[s..e].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[s..e].binary_search(&j) {
            Ok(k) => self.vals[s + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n_rows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `Aᵀx`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_rows);
        let mut y = vec![0.0; self.n_cols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    /// `yᵀAx`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> Csr {
        let trips: Vec<(usize, usize, f64)> =
            self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Csr::from_triplets(self.n_cols, self.n_rows, &trips)
    }

    /// Max row sum of absolute values.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Principal submatrix on the rows/columns where `keep` is true, with
    /// the compressed index map.
    pub fn restrict(&self, keep: &[bool]) -> (Csr, Vec<usize>) {
        let mut map = vec![usize::MAX; self.n_rows];
        let mut kept = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                map[i] = kept.len();
                kept.push(i);
            }
        }
        let mut trips = Vec::with_capacity(self.nnz());
        for &i in &kept {
            for (j, v) in self.row(i) {
                if keep[j] {
                    trips.push((map[i], map[j], v));
                }
            }
        }
        (Csr::from_triplets(kept.len(), kept.len(), &trips), kept)
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trips: Vec<Triplet<usize, usize, f64>> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.n_rows, self.n_cols, &trips)
            .map_err(|e| Error::Singular(format!("cannot build sparse matrix: {e:?}")))
    }
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sparse LU of a square matrix, solving with `A` or `Aᵀ`.
pub struct DirectSolver {
    a: Csr,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    norm: f64,
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectSolver")
            .field("n", &self.a.n_rows)
            .field("nnz", &self.a.nnz())
            .finish()
    }
}

impl DirectSolver {
    pub fn new(a: Csr) -> Result<Self> {
        if a.n_rows != a.n_cols {
            return Err(Error::Singular("matrix is not square".into()));
        }
        if a.n_rows == 0 {
            return Err(Error::Singular("empty system".into()));
        }
        let norm = a.norm_inf();
        let lu = a
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::Singular(format!("factorization failed: {e:?}")))?;
        Ok(Self { a, lu, norm })
    }

    pub fn matrix(&self) -> &Csr {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.n_rows
    }

    fn raw_solve(&self, b: &[f64], transpose: bool) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        if transpose {
            self.lu.solve_transpose_in_place(x.as_mut());
        } else {
            self.lu.solve_in_place(x.as_mut());
        }
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }

    fn backward_error(&self, b: &[f64], x: &[f64], r: &[f64]) -> f64 {
        let denom = self.norm * norm_inf(x) + norm_inf(b);
        if denom == 0.0 {
            0.0
        } else {
            norm_inf(r) / denom
        }
    }

    /// Solves `Ax = b` (or `Aᵀx = b`), returning the solution and its
    /// normwise backward error. Non-finite output or a residual above
    /// [`RESIDUAL_ACCEPT`] is an error; nothing is regularised.
    pub fn solve_with(&self, b: &[f64], transpose: bool) -> Result<(Vec<f64>, f64)> {
        assert_eq!(b.len(), self.dim());
        let apply = |x: &[f64]| {
            if transpose {
                self.a.matvec_t(x)
            } else {
                self.a.matvec(x)
            }
        };
        let mut x = self.raw_solve(b, transpose);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("factorization produced non-finite values".into()));
        }
        let mut r: Vec<f64> = apply(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        let mut err = self.backward_error(b, &x, &r);
        for _ in 0..REFINE_STEPS {
            if err <= RESIDUAL_TARGET {
                break;
            }
            let dx = self.raw_solve(&r, transpose);
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let r2: Vec<f64> = apply(&cand).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
            let err2 = self.backward_error(b, &cand, &r2);
            if !(err2 < err) {
                break;
            }
            x = cand;
            r = r2;
            err = err2;
        }
        if !err.is_finite() {
            return Err(Error::Singular("non-finite residual".into()));
        }
        if err > RESIDUAL_ACCEPT {
            return Err(Error::NotConverged {
                residual: err,
                limit: RESIDUAL_ACCEPT,
            });
        }
        Ok((x, err))
    }

    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.solve_with(b, false)
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.solve_with(b, true)
    }
}

/// Symmetric eigen-decomposition of a small dense matrix (row-major),
/// eigenvalues ascending; columns of the returned matrix are eigenvectors.
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[i * n + j] + a[j * n + i]));
    let evd = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Singular(format!("eigen-decomposition failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let vals: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let mut vecs = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            vecs[i * n + j] = u[(i, j)];
        }
    }
    Ok((vals, vecs))
}

/// Thin SVD of a dense `rows × cols` matrix (row-major): singular values
/// (descending) and right singular vectors as columns of a `cols × cols`
/// row-major matrix.
pub fn thin_svd(a: &[f64], rows: usize, cols: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = Mat::<f64>::from_fn(rows, cols, |i, j| a[i * cols + j]);
    let svd = m
        .thin_svd()
        .map_err(|e| Error::Singular(format!("svd failed: {e:?}")))?;
    let s = svd.S();
    let v = svd.V();
    let k = rows.min(cols);
    let vals: Vec<f64> = (0..k).map(|i| s[i]).collect();
    let mut vecs = vec![0.0; cols * k];
    for i in 0..cols {
        for j in 0..k {
            vecs[i * k + j] = v[(i, j)];
        }
    }
    Ok((vals, vecs))
}

/// Solves a small dense system by LU with partial pivoting.
pub fn dense_solve(a: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i * n + j]);
    let lu = m.partial_piv_lu();
    let mut x = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    lu.solve_in_place(x.as_mut());
    let x: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("dense system is singular".into()));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tridiag(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -2.0));
            }
        }
        Csr::from_triplets(n, n, &t)
    }

    #[test]
    fn duplicates_sum() {
        let a = Csr::from_triplets(2, 2, &[(0, 1, 1.0), (0, 0, 2.0), (0, 1, 3.0), (1, 0, -1.0)]);
        assert_eq!(a.get(0, 1), 4.0);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.transpose().get(1, 0), 4.0);
    }

    #[test]
    fn solve_and_transpose() {
        let a = tridiag(50);
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.matvec(&x_true);
        let bt = a.matvec_t(&x_true);
        let s = DirectSolver::new(a).unwrap();
        let (x, r) = s.solve(&b).unwrap();
        assert!(r <= 1e-14);
        for (u, v) in x.iter().zip(&x_true) {
            assert_relative_eq!(u, v, epsilon = 1e-12);
        }
        let (y, _) = s.solve_transpose(&bt).unwrap();
        for (u, v) in y.iter().zip(&x_true) {
            assert_relative_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_is_an_error() {
        let a = Csr::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        let s = DirectSolver::new(a);
        let failed = match s {
            Err(_) => true,
            Ok(s) => s.solve(&[1.0, 0.0]).is_err(),
        };
        assert!(failed);
    }

    #[test]
    fn restrict_keeps_principal_block() {
        let a = tridiag(4);
        let (b, kept) = a.restrict(&[true, false, true, true]);
        assert_eq!(kept, vec![0, 2, 3]);
        assert_eq!(b.get(1, 2), -2.0);
        assert_eq!(b.get(0, 1), 0.0);
    }

    #[test]
    fn small_dense_helpers() {
        let (vals, vecs) = symmetric_eigen(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(vals[1], 3.0, epsilon = 1e-14);
        assert_relative_eq!(vecs[0].abs(), 0.5f64.sqrt(), epsilon = 1e-14);
        let x = dense_solve(&[2.0, 1.0, 1.0, 3.0], 2, &[3.0, 5.0]).unwrap();
        assert_relative_eq!(x[0], 0.8, epsilon = 1e-14);
        assert_relative_eq!(x[1], 1.4, epsilon = 1e-14);
        let (s, _) = thin_svd(&[3.0, 0.0, 0.0, 2.0, 0.0, 0.0], 3, 2).unwrap();
        assert_relative_eq!(s[0], 3.0, epsilon = 1e-14);
        assert_relative_eq!(s[1], 2.0, epsilon = 1e-14);
    }
}
