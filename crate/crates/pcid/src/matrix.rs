//! Small dense matrix primitives: determinant, adjugate and minimum
//! eigenvalue of a symmetric matrix.
//!
//! The extension-and-mixing pipeline multiplies by the adjugate of a
//! filter state that is singular by construction right after a reset, so
//! the kernels here must be exact at singularity. Adjugates are computed
//! from cofactors up to 4x4 (the sizes the estimators actually use) and
//! fall back to `det * inv` only for comfortably non-singular larger
//! inputs. All kernels are pure functions on value-copied inputs.

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries.
    ///
    /// Panics if `data.len() != rows * cols` or a dimension is zero; shape
    /// mismatches are programming errors, not runtime conditions.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::from_rows(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Column vector from a slice.
    pub fn col_vec(entries: &[f64]) -> Self {
        Matrix::from_rows(entries.len(), 1, entries.to_vec())
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add: shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sub: shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `self += other * s`, in place; the one mutating helper the
    /// integrators use on their own state.
    pub fn add_scaled(&mut self, other: &Matrix, s: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add_scaled: shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul: inner dimensions must agree");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> Matrix {
        let n = self.rows;
        let mut data = Vec::with_capacity((n - 1) * (n - 1));
        for i in 0..n {
            if i == skip_row {
                continue;
            }
            for j in 0..n {
                if j == skip_col {
                    continue;
                }
                data.push(self[(i, j)]);
            }
        }
        Matrix::from_rows(n - 1, n - 1, data)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

fn require_square(m: &Matrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{what} requires a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    if !m.is_finite() {
        return Err(Error::Contract(format!("{what}: non-finite entries")));
    }
    Ok(())
}

/// Determinant: closed form up to 3x3, LU with partial pivoting above.
pub fn determinant(m: &Matrix) -> Result<f64> {
    require_square(m, "determinant")?;
    Ok(det_unchecked(m))
}

fn det_unchecked(m: &Matrix) -> f64 {
    match m.rows {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => det_lu(m),
    }
}

fn det_lu(m: &Matrix) -> f64 {
    let n = m.rows;
    let mut a = m.clone();
    let mut det = 1.0;
    for k in 0..n {
        // partial pivoting
        let mut piv = k;
        for i in (k + 1)..n {
            if a[(i, k)].abs() > a[(piv, k)].abs() {
                piv = i;
            }
        }
        if a[(piv, k)] == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                let tmp = a[(k, j)];
                a[(k, j)] = a[(piv, j)];
                a[(piv, j)] = tmp;
            }
            det = -det;
        }
        det *= a[(k, k)];
        for i in (k + 1)..n {
            let f = a[(i, k)] / a[(k, k)];
            for j in k..n {
                a[(i, j)] -= f * a[(k, j)];
            }
        }
    }
    det
}

/// Adjugate, satisfying `adj(M) * M = det(M) * I` including for singular `M`.
///
/// Cofactor transpose up to 4x4; larger matrices go through `det * inv`
/// when the pivots show the inverse is trustworthy, cofactors otherwise.
pub fn adjugate(m: &Matrix) -> Result<Matrix> {
    require_square(m, "adjugate")?;
    let n = m.rows;
    if n == 1 {
        return Ok(Matrix::from_rows(1, 1, vec![1.0]));
    }
    if n <= 4 {
        return Ok(adj_cofactor(m));
    }
    match inv_lu(m) {
        Some(inv) => Ok(inv.scale(det_unchecked(m))),
        None => Ok(adj_cofactor(m)),
    }
}

fn adj_cofactor(m: &Matrix) -> Matrix {
    let n = m.rows;
    let mut adj = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let cof = sign * det_unchecked(&m.minor(i, j));
            // transposed placement
            adj[(j, i)] = cof;
        }
    }
    adj
}

fn inv_lu(m: &Matrix) -> Option<Matrix> {
    let n = m.rows;
    let scale = m.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut a = m.clone();
    let mut inv = Matrix::identity(n);
    for k in 0..n {
        let mut piv = k;
        for i in (k + 1)..n {
            if a[(i, k)].abs() > a[(piv, k)].abs() {
                piv = i;
            }
        }
        // refuse to invert when the pivot is not comfortably non-singular
        if a[(piv, k)].abs() <= 1e-10 * scale.max(1.0) {
            return None;
        }
        if piv != k {
            for j in 0..n {
                a.data.swap(k * n + j, piv * n + j);
                inv.data.swap(k * n + j, piv * n + j);
            }
        }
        let d = a[(k, k)];
        for j in 0..n {
            a[(k, j)] /= d;
            inv[(k, j)] /= d;
        }
        for i in 0..n {
            if i == k {
                continue;
            }
            let f = a[(i, k)];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[(i, j)] -= f * a[(k, j)];
                inv[(i, j)] -= f * inv[(k, j)];
            }
        }
    }
    Some(inv)
}

/// Minimum eigenvalue of a symmetric matrix.
///
/// Closed form up to 2x2, cyclic Jacobi sweeps above. Inputs asymmetric
/// beyond 1e-9 absolute are rejected.
pub fn min_eigenvalue(m: &Matrix) -> Result<f64> {
    require_square(m, "min_eigenvalue")?;
    let n = m.rows;
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if asym > 1e-9 {
        return Err(Error::Contract(format!(
            "min_eigenvalue requires a symmetric matrix (max asymmetry {asym:.3e})"
        )));
    }
    match n {
        1 => Ok(m[(0, 0)]),
        2 => {
            let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
            let mean = 0.5 * (a + c);
            let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            Ok(mean - r)
        }
        _ => Ok(jacobi_min_eig(m)),
    }
}

fn jacobi_min_eig(m: &Matrix) -> f64 {
    let n = m.rows;
    let mut a = m.clone();
    // symmetrize fp dust so rotations stay consistent
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
    let scale = a.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[(i, j)].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).fold(f64::INFINITY, f64::min)
}
