//! Dense symmetric positive-definite solves and Schur complements of
//! graph Laplacians.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::graph::{VertexId, WeightedGraph};

/// Largest system the direct solver accepts.
pub const MAX_UNKNOWNS: usize = 6000;

/// Cholesky factorization with one step of iterative refinement per solve.
pub struct SpdSolver {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl SpdSolver {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n > MAX_UNKNOWNS {
            return Err(Error::Capacity(format!(
                "{n} unknowns exceeds the direct-solver limit of {MAX_UNKNOWNS}"
            )));
        }
        let chol = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::Connectivity("system matrix is not positive definite".into()))?;
        Ok(SpdSolver { matrix, chol })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let b = DVector::from_column_slice(b);
        let mut x = self.chol.solve(&b);
        let r = &b - &self.matrix * &x;
        x += self.chol.solve(&r);
        x.as_slice().to_vec()
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = self.chol.solve(b);
        let r = b - &self.matrix * &x;
        x += self.chol.solve(&r);
        x
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.solve_matrix(&DMatrix::identity(self.dim(), self.dim()))
    }
}

/// Weighted Laplacian `D - A` restricted to `rows x rows`.
pub fn laplacian_block(g: &WeightedGraph, rows: &[VertexId]) -> DMatrix<f64> {
    let index = position_map(g.num_vertices(), rows);
    let mut m = DMatrix::zeros(rows.len(), rows.len());
    for (i, &x) in rows.iter().enumerate() {
        m[(i, i)] = g.mass(x);
        for (y, w) in g.neighbors(x) {
            if let Some(j) = index[y] {
                m[(i, j)] -= w;
            }
        }
    }
    m
}

/// Full weighted Laplacian.
pub fn laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let all: Vec<VertexId> = (0..g.num_vertices()).collect();
    laplacian_block(g, &all)
}

pub(crate) fn position_map(n: usize, set: &[VertexId]) -> Vec<Option<usize>> {
    let mut index = vec![None; n];
    for (i, &v) in set.iter().enumerate() {
        index[v] = Some(i);
    }
    index
}

/// Schur complement of a symmetric matrix onto the index set `keep`:
/// `M_KK - M_KI M_II^{-1} M_IK`.
pub fn schur_complement(m: &DMatrix<f64>, keep: &[usize]) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let kept = position_map(n, keep);
    let interior: Vec<usize> = (0..n).filter(|&i| kept[i].is_none()).collect();
    let k = keep.len();
    let mut mkk = DMatrix::zeros(k, k);
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            mkk[(a, b)] = m[(i, j)];
        }
    }
    if interior.is_empty() {
        return Ok(mkk);
    }
    let mut mii = DMatrix::zeros(interior.len(), interior.len());
    for (a, &i) in interior.iter().enumerate() {
        for (b, &j) in interior.iter().enumerate() {
            mii[(a, b)] = m[(i, j)];
        }
    }
    let mut mik = DMatrix::zeros(interior.len(), k);
    for (a, &i) in interior.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            mik[(a, b)] = m[(i, j)];
        }
    }
    let solver = SpdSolver::new(mii)?;
    let x = solver.solve_matrix(&mik);
    let mut s = mkk - mik.transpose() * x;
    // restore exact symmetry
    let st = s.transpose();
    s = (s + st) * 0.5;
    Ok(s)
}
