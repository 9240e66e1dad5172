//! Small dense linear algebra: row-major matrices, a jittered Cholesky
//! factorization for kernel matrices, and cyclic Jacobi eigenvalues.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Jitter multipliers (times the mean diagonal) tried in order.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

const SYMMETRY_TOL: f64 = 1e-12;

/// Dense row-major matrix.
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

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{} entries", rows * cols),
                got: format!("{} entries", data.len()),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch {
                expected: format!("rows of length {c}"),
                got: "ragged rows".into(),
            });
        }
        Self::from_row_major(r, c, rows.concat())
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

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected: format!("{} rows", self.cols),
                got: format!("{} rows", other.rows),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::ShapeMismatch {
                expected: format!("vector of length {}", self.cols),
                got: format!("length {}", v.len()),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest |a_ij − a_ji|, or an error if the matrix is not square.
    pub fn asymmetry(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch {
                expected: "square matrix".into(),
                got: format!("{}x{}", self.rows, self.cols),
            });
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        Ok(worst)
    }

    fn check_symmetric(&self) -> Result<()> {
        let asym = self.asymmetry()?;
        if asym > SYMMETRY_TOL * self.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(())
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

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower Cholesky factor `L` with `L·Lᵀ = A + jitter_used·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactor {
    lower: Matrix,
    jitter_used: f64,
}

impl SpdFactor {
    pub fn dimension(&self) -> usize {
        self.lower.rows
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// Absolute diagonal shift that was needed for the factorization.
    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    /// `ln |A + jitter·I|`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dimension())
            .map(|i| self.lower[(i, i)].ln())
            .sum::<f64>()
    }

    pub fn solve_vec(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dimension();
        if rhs.len() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("vector of length {n}"),
                got: format!("length {}", rhs.len()),
            });
        }
        let mut x = rhs.to_vec();
        cholesky_solve_in_place(self.lower.as_slice(), n, &mut x);
        Ok(x)
    }

    /// Solves for every column of `rhs`.
    pub fn solve_mat(&self, rhs: &Matrix) -> Result<Matrix> {
        let n = self.dimension();
        if rhs.rows != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} rows"),
                got: format!("{} rows", rhs.rows),
            });
        }
        let mut out = Matrix::zeros(n, rhs.cols);
        for j in 0..rhs.cols {
            let x = self.solve_vec(&rhs.column(j))?;
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

/// Cholesky factorization with an escalating diagonal jitter ladder.
pub fn spd_factor(matrix: &Matrix) -> Result<SpdFactor> {
    matrix.check_symmetric()?;
    let n = matrix.rows;
    let mut lower = vec![0.0; n * n];
    let jitter_used = factor_with_ladder(matrix.as_slice(), n, &mut lower)?;
    Ok(SpdFactor {
        lower: Matrix {
            rows: n,
            cols: n,
            data: lower,
        },
        jitter_used,
    })
}

pub fn spd_solve(factor: &SpdFactor, rhs: &[f64]) -> Result<Vec<f64>> {
    factor.solve_vec(rhs)
}

/// Factors the row-major symmetric `a` into `lower`, walking the jitter
/// ladder. Returns the absolute jitter applied. No symmetry check.
pub(crate) fn factor_with_ladder(a: &[f64], n: usize, lower: &mut [f64]) -> Result<f64> {
    let mean_diag = if n == 0 {
        0.0
    } else {
        (0..n).map(|i| a[i * n + i]).sum::<f64>() / n as f64
    };
    let mut last = 0.0;
    for &step in &JITTER_LADDER {
        let jitter = step * mean_diag.abs();
        last = jitter;
        if cholesky_into(a, n, jitter, lower) {
            return Ok(jitter);
        }
    }
    Err(Error::NotPositiveDefinite(last))
}

/// Plain Cholesky of `a + jitter·I` into `lower`; false on a nonpositive pivot.
fn cholesky_into(a: &[f64], n: usize, jitter: f64, lower: &mut [f64]) -> bool {
    let mut inv_diag = vec![0.0; n];
    for j in 0..n {
        let (done, rest) = lower.split_at_mut(j * n);
        let row_j = &mut rest[..n];
        let a_j = &a[j * n..j * n + j];
        for k in 0..j {
            let s = a_j[k] - dot(&row_j[..k], &done[k * n..k * n + k]);
            row_j[k] = s * inv_diag[k];
        }
        let d = a[j * n + j] + jitter - dot(&row_j[..j], &row_j[..j]);
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        row_j[j] = d.sqrt();
        inv_diag[j] = 1.0 / row_j[j];
        for v in &mut row_j[j + 1..] {
            *v = 0.0;
        }
    }
    true
}

/// Forward/back substitution against a row-major lower factor.
pub(crate) fn cholesky_solve_in_place(lower: &[f64], n: usize, x: &mut [f64]) {
    for i in 0..n {
        let row = &lower[i * n..i * n + i];
        let s = x[i] - dot(row, &x[..i]);
        x[i] = s / lower[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= lower[k * n + i] * x[k];
        }
        x[i] = s / lower[i * n + i];
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-12;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// nonincreasing. Intended for the small (p ≤ 8) Gram matrices used by the
/// collinearity index.
pub fn sym_eigenvalues(matrix: &Matrix) -> Result<Vec<f64>> {
    matrix.check_symmetric()?;
    let n = matrix.rows;
    let mut a = matrix.clone();
    let initial = a.frobenius_norm();
    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off(&a) <= JACOBI_TOL * initial {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    let new_rp = arp - s * (arq + tau * arp);
                    let new_rq = arq + s * (arp - tau * arq);
                    a[(r, p)] = new_rp;
                    a[(p, r)] = new_rp;
                    a[(r, q)] = new_rq;
                    a[(q, r)] = new_rq;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}
