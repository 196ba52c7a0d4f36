//! Sparse symmetric positive definite solves backed by faer's supernodal
//! Cholesky factorization (AMD ordering).

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LltError;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};
use std::sync::Once;

use crate::{Error, Result};

static SEQUENTIAL: Once = Once::new();

// Workers parallelize above the factorization; keep faer sequential so that
// results do not depend on the thread count.
fn ensure_sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Triplet accumulator for a square sparse matrix. Duplicate entries are summed.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, capacity: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(capacity),
        }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push(Triplet::new(row, col, value));
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn build(&self) -> Result<SparseMatrix> {
        let inner = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| Error::InvalidArgument(format!("sparse assembly: {e:?}")))?;
        Ok(SparseMatrix { inner })
    }
}

/// Compressed sparse column matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    inner: SparseColMat<usize, f64>,
}

impl SparseMatrix {
    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.inner.compute_nnz()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        let col_ptr = self.inner.col_ptr();
        let row_idx = self.inner.row_idx();
        let val = self.inner.val();
        for (j, &xj) in x.iter().enumerate() {
            for k in col_ptr[j]..col_ptr[j + 1] {
                y[row_idx[k]] += val[k] * xj;
            }
        }
        y
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let col_ptr = self.inner.col_ptr();
        let row_idx = self.inner.row_idx();
        let val = self.inner.val();
        let lookup = |i: usize, j: usize| -> f64 {
            let rows = &row_idx[col_ptr[j]..col_ptr[j + 1]];
            match rows.binary_search(&i) {
                Ok(k) => val[col_ptr[j] + k],
                Err(_) => 0.0,
            }
        };
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..self.dim() {
            for k in col_ptr[j]..col_ptr[j + 1] {
                let i = row_idx[k];
                scale = scale.max(val[k].abs());
                if i > j {
                    worst = worst.max((val[k] - lookup(j, i)).abs());
                }
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    fn same_pattern(&self, other: &SparseMatrix) -> bool {
        self.inner.col_ptr() == other.inner.col_ptr() && self.inner.row_idx() == other.inner.row_idx()
    }
}

/// Symbolic factorization reusable across matrices with the same pattern.
#[derive(Debug, Clone)]
pub struct SymbolicCache {
    pattern: SparseMatrix,
    symbolic: SymbolicLlt<usize>,
}

impl SymbolicCache {
    pub fn new(matrix: &SparseMatrix) -> Result<Self> {
        ensure_sequential();
        let symbolic = SymbolicLlt::try_new(matrix.inner.symbolic(), Side::Lower)
            .map_err(|e| Error::InvalidArgument(format!("symbolic factorization: {e:?}")))?;
        Ok(Self {
            pattern: matrix.clone(),
            symbolic,
        })
    }

    pub fn matches(&self, matrix: &SparseMatrix) -> bool {
        self.pattern.same_pattern(matrix)
    }
}

/// Numeric Cholesky factor of an SPD matrix.
pub struct CholeskySolver {
    matrix: SparseMatrix,
    llt: Llt<usize, f64>,
}

impl CholeskySolver {
    /// Factor `matrix`. `context` is attached to the error when a nonpositive
    /// pivot is met.
    pub fn factor(matrix: SparseMatrix, cache: Option<&SymbolicCache>, context: &str) -> Result<Self> {
        ensure_sequential();
        let symbolic = match cache {
            Some(c) if c.matches(&matrix) => c.symbolic.clone(),
            _ => SymbolicLlt::try_new(matrix.inner.symbolic(), Side::Lower)
                .map_err(|e| Error::InvalidArgument(format!("symbolic factorization: {e:?}")))?,
        };
        let llt = Llt::try_new_with_symbolic(symbolic, matrix.inner.as_ref(), Side::Lower)
            .map_err(|e| match e {
                LltError::Numeric(_) => Error::NotPositiveDefinite {
                    context: context.to_string(),
                },
                LltError::Generic(g) => Error::InvalidArgument(format!("factorization: {g:?}")),
            })?;
        Ok(Self { matrix, llt })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Solve for every right-hand side; returns the solutions and the largest
    /// relative residual `|Ax - b|_inf / max(|b|_inf, tiny)`.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
        let n = self.matrix.dim();
        if rhs.is_empty() {
            return (Vec::new(), 0.0);
        }
        let b = Mat::<f64>::from_fn(n, rhs.len(), |i, j| rhs[j][i]);
        let x = self.llt.solve(&b);
        let mut out = Vec::with_capacity(rhs.len());
        let mut worst: f64 = 0.0;
        for (j, bj) in rhs.iter().enumerate() {
            let xj: Vec<f64> = (0..n).map(|i| x[(i, j)]).collect();
            let ax = self.matrix.mul_vec(&xj);
            let bnorm = bj.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let rnorm = ax
                .iter()
                .zip(bj)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let rel = if bnorm > 0.0 { rnorm / bnorm } else { rnorm };
            worst = worst.max(rel);
            out.push(xj);
        }
        (out, worst)
    }

    pub fn solve(&self, rhs: &[f64]) -> (Vec<f64>, f64) {
        let (mut x, r) = self.solve_many(std::slice::from_ref(&rhs.to_vec()));
        (x.pop().unwrap_or_default(), r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: f64) -> SparseMatrix {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 2.0 + shift);
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
                b.add(i + 1, i, -1.0);
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn solves_tridiagonal_system() {
        let a = laplacian_1d(50, 0.0);
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x_true);
        let solver = CholeskySolver::factor(a, None, "test").unwrap();
        let (x, res) = solver.solve(&b);
        assert!(res < 1e-13);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-10);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(0, 0, 2.0);
        b.add(1, 1, 4.0);
        let a = b.build().unwrap();
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![3.0, 4.0]);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = laplacian_1d(10, -3.0);
        let err = CholeskySolver::factor(a, None, "shifted").err().unwrap();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn cached_symbolic_is_reused() {
        let a = laplacian_1d(30, 0.0);
        let cache = SymbolicCache::new(&a).unwrap();
        let b = laplacian_1d(30, 1.0);
        assert!(cache.matches(&b));
        let solver = CholeskySolver::factor(b, Some(&cache), "test").unwrap();
        let (_, res) = solver.solve(&vec![1.0; 30]);
        assert!(res < 1e-13);
        assert!(!cache.matches(&laplacian_1d(31, 0.0)));
    }

    #[test]
    fn asymmetry_detects_nonsymmetric_entries() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(0, 1, 0.5);
        b.add(1, 0, 0.25);
        b.add(1, 1, 1.0);
        assert!((b.build().unwrap().asymmetry() - 0.25).abs() < 1e-15);
        assert_eq!(laplacian_1d(5, 0.0).asymmetry(), 0.0);
    }
}
