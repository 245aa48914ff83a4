//! Dense row-major matrix and a Householder QR least-squares solver.

use std::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix::from_vec(indices.len(), self.cols, data)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Relative threshold below which a column's component orthogonal to the
/// preceding columns counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Least-squares solve of `a * x ~= b` via Householder QR without pivoting.
///
/// Returns `Err(j)` naming the first column `j` that is (numerically) a
/// linear combination of columns `0..j`.
pub fn lstsq_qr(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, usize> {
    let (m, n) = (a.rows(), a.cols());
    assert_eq!(b.len(), m);
    assert!(m >= n, "least squares needs rows >= cols");

    // Column-major working copy; each column is a contiguous slice.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let norms: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let mut rhs = b.to_vec();
    let mut diag = vec![0.0; n];

    for k in 0..n {
        let alpha = norm(&cols[k][k..]);
        if norms[k] == 0.0 || alpha <= RANK_TOLERANCE * norms[k] {
            return Err(k);
        }
        let sign = if cols[k][k] >= 0.0 { 1.0 } else { -1.0 };
        let r_kk = -sign * alpha;
        // v = x - r_kk e1, stored in place of column k below the diagonal.
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= r_kk;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = r_kk;

        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let scale = 2.0 * dot / vtv;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= scale * vi;
            }
        };
        for col in cols.iter_mut().skip(k + 1) {
            reflect(&mut col[k..]);
        }
        reflect(&mut rhs[k..]);
    }

    // Back substitution on R x = (Q^T b)[..n].
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= cols[j][k] * x[j];
        }
        x[k] = s / diag[k];
    }
    Ok(x)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
