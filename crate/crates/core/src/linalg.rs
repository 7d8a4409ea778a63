//! Thin sparse-matrix layer over `faer`: triplet assembly, products and a
//! direct solver with iterative refinement.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// Compressed sparse column matrix of `f64`.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    inner: SparseColMat<usize, f64>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder { nrows, ncols, entries: Vec::new() }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push(Triplet::new(row, col, val));
    }

    pub fn extend(&mut self, other: TripletBuilder) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        self.entries.extend(other.entries);
    }

    /// Adds every entry of `block` shifted by `(row0, col0)`, scaled.
    pub fn add_block(&mut self, row0: usize, col0: usize, block: &SparseMatrix, scale: f64) {
        for (i, j, v) in block.iter() {
            self.add(row0 + i, col0 + j, scale * v);
        }
    }

    pub fn build(self) -> SparseMatrix {
        let inner = SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &self.entries)
            .expect("triplet indices are within bounds");
        SparseMatrix { inner }
    }
}

impl SparseMatrix {
    pub fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn nnz(&self) -> usize {
        self.inner.val().len()
    }

    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.add(i, i, 1.0);
        }
        b.build()
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut b = TripletBuilder::new(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            b.add(i, i, d);
        }
        b.build()
    }

    /// Stored entries as `(row, col, value)`, column by column.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let sym = self.inner.symbolic();
        let (ptr, rows, vals) = (sym.col_ptr(), sym.row_idx(), self.inner.val());
        (0..self.ncols()).flat_map(move |j| (ptr[j]..ptr[j + 1]).map(move |k| (rows[k], j, vals[k])))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let sym = self.inner.symbolic();
        let (ptr, rows, vals) = (sym.col_ptr(), sym.row_idx(), self.inner.val());
        (ptr[j]..ptr[j + 1]).filter(|&k| rows[k] == i).map(|k| vals[k]).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows().min(self.ncols())];
        for (i, j, v) in self.iter() {
            if i == j {
                d[i] += v;
            }
        }
        d
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols());
        let mut y = vec![0.0; self.nrows()];
        for (i, j, v) in self.iter() {
            y[i] += v * x[j];
        }
        y
    }

    /// `selfᵀ x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows());
        let mut y = vec![0.0; self.ncols()];
        for (i, j, v) in self.iter() {
            y[j] += v * x[i];
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut b = TripletBuilder::new(self.ncols(), self.nrows());
        for (i, j, v) in self.iter() {
            b.add(j, i, v);
        }
        b.build()
    }

    /// `diag(d) · self`.
    pub fn scale_rows(&self, d: &[f64]) -> SparseMatrix {
        assert_eq!(d.len(), self.nrows());
        let mut b = TripletBuilder::new(self.nrows(), self.ncols());
        for (i, j, v) in self.iter() {
            b.add(i, j, d[i] * v);
        }
        b.build()
    }

    /// `self · other`.
    pub fn matmul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols(), other.nrows());
        let sym = self.inner.symbolic();
        let (ptr, rows, vals) = (sym.col_ptr(), sym.row_idx(), self.inner.val());
        let osym = other.inner.symbolic();
        let (optr, orows, ovals) = (osym.col_ptr(), osym.row_idx(), other.inner.val());

        let mut b = TripletBuilder::new(self.nrows(), other.ncols());
        let mut acc = vec![0.0; self.nrows()];
        let mut mark = vec![usize::MAX; self.nrows()];
        let mut pattern = Vec::new();
        for j in 0..other.ncols() {
            pattern.clear();
            for kk in optr[j]..optr[j + 1] {
                let (k, bkj) = (orows[kk], ovals[kk]);
                for ii in ptr[k]..ptr[k + 1] {
                    let i = rows[ii];
                    if mark[i] != j {
                        mark[i] = j;
                        acc[i] = 0.0;
                        pattern.push(i);
                    }
                    acc[i] += vals[ii] * bkj;
                }
            }
            for &i in &pattern {
                b.add(i, j, acc[i]);
            }
        }
        b.build()
    }

    /// `self + scale · other`.
    pub fn add_scaled(&self, other: &SparseMatrix, scale: f64) -> SparseMatrix {
        assert_eq!((self.nrows(), self.ncols()), (other.nrows(), other.ncols()));
        let mut b = TripletBuilder::new(self.nrows(), self.ncols());
        b.add_block(0, 0, self, 1.0);
        b.add_block(0, 0, other, scale);
        b.build()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows(), self.ncols());
        for (i, j, v) in self.iter() {
            m[(i, j)] += v;
        }
        m
    }

    /// Largest stored magnitude.
    pub fn max_abs(&self) -> f64 {
        self.iter().map(|(_, _, v)| v.abs()).fold(0.0, f64::max)
    }

    pub(crate) fn faer(&self) -> &SparseColMat<usize, f64> {
        &self.inner
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Sparse LU factorization (partial pivoting) of a square matrix.
pub struct LuSolver {
    matrix: SparseMatrix,
    lu: Lu<usize, f64>,
}

impl LuSolver {
    pub fn new(matrix: &SparseMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::SingularMatrix(format!(
                "matrix is {}x{}, not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let lu = matrix
            .faer()
            .sp_lu()
            .map_err(|e| Error::SingularMatrix(format!("LU factorization failed: {e:?}")))?;
        Ok(LuSolver { matrix: matrix.clone(), lu })
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }

    /// Solves `A x = b` and refines until the residual stops improving or
    /// drops below `1e-14·‖b‖`. Non-finite results are reported as a
    /// singular matrix.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let bnorm = norm2(b);
        let mut x = self.raw_solve(b);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularMatrix("factorization produced non-finite values".into()));
        }
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut res = residual(&self.matrix, &x, b);
        let mut rnorm = norm2(&res);
        for _ in 0..4 {
            if rnorm <= 1e-14 * bnorm {
                break;
            }
            let dx = self.raw_solve(&res);
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let cres = residual(&self.matrix, &candidate, b);
            let cnorm = norm2(&cres);
            if !(cnorm < rnorm) {
                break;
            }
            x = candidate;
            res = cres;
            rnorm = cnorm;
        }
        Ok(x)
    }
}

/// `b − A x`.
pub fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(ax).map(|(bi, axi)| bi - axi).collect()
}

/// `‖b − A x‖ / ‖b‖`, or the absolute residual when `b = 0`.
pub fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let r = norm2(&residual(a, x, b));
    let bn = norm2(b);
    if bn > 0.0 {
        r / bn
    } else {
        r
    }
}

/// Sparse Cholesky solve for symmetric positive definite systems.
pub fn solve_spd(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let llt = a
        .faer()
        .sp_cholesky(faer::Side::Lower)
        .map_err(|e| Error::SingularMatrix(format!("Cholesky factorization failed: {e:?}")))?;
    let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    llt.solve_in_place(rhs.as_mut());
    Ok((0..b.len()).map(|i| rhs[(i, 0)]).collect())
}
