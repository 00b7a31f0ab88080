use std::fmt;
use std::ops::{Index, IndexMut};

use crate::value::Value;

use super::NumericError;

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self, NumericError> {
        if rows == 0 || cols == 0 {
            return Err(NumericError::EmptyMatrix);
        }
        Ok(Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        })
    }

    pub fn identity(n: usize) -> Result<Self, NumericError> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(NumericError::Ragged);
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericError> {
        if rows == 0 || cols == 0 {
            return Err(NumericError::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(NumericError::EntryCount {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols)
    }

    pub fn to_value(&self) -> Value {
        Value::list(
            self.row_iter()
                .map(|r| Value::list(r.iter().map(|&x| Value::Real(x)))),
        )
    }

    /// Accepts any matrix-shaped value; integer entries are widened.
    pub fn from_value(v: &Value) -> Result<Self, NumericError> {
        if !v.is_matrix() {
            return Err(NumericError::NotAMatrix(v.kind()));
        }
        let rows = v.as_list().unwrap_or_default();
        let cols = rows[0].as_list().map_or(0, <[Value]>::len);
        let data = rows
            .iter()
            .flat_map(|r| r.as_list().unwrap_or_default())
            .filter_map(Value::as_f64)
            .collect();
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_value().fmt(f)
    }
}

fn order(n: i64) -> Result<usize, NumericError> {
    if n <= 0 {
        Err(NumericError::NonPositiveOrder(n))
    } else {
        Ok(n as usize)
    }
}

/// `diag` on the diagonal, `off` everywhere else.
pub fn build_fill(n: i64, diag: f64, off: f64) -> Result<Matrix, NumericError> {
    let n = order(n)?;
    let mut m = Matrix::zeros(n, n)?;
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = if i == j { diag } else { off };
        }
    }
    Ok(m)
}

/// Tridiagonal Toeplitz matrix: `diag` on the diagonal, `upper` just above
/// it, `lower` just below, zero elsewhere.
pub fn build_tridiag(n: i64, diag: f64, upper: f64, lower: f64) -> Result<Matrix, NumericError> {
    let n = order(n)?;
    let mut m = Matrix::zeros(n, n)?;
    for i in 0..n {
        m[(i, i)] = diag;
        if i + 1 < n {
            m[(i, i + 1)] = upper;
            m[(i + 1, i)] = lower;
        }
    }
    Ok(m)
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix, NumericError> {
    if a.cols != b.rows {
        return Err(NumericError::DimensionMismatch {
            left: (a.rows, a.cols),
            right: (b.rows, b.cols),
        });
    }
    let mut c = Matrix::zeros(a.rows, b.cols)?;
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            for j in 0..b.cols {
                c[(i, j)] += aik * b[(k, j)];
            }
        }
    }
    Ok(c)
}

/// `a · b · c`, evaluated left to right.
pub fn dot3(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Matrix, NumericError> {
    matmul(&matmul(a, b)?, c)
}
