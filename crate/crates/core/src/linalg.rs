//! Dense linear algebra used by the solvers: vectors, row-major matrices,
//! Cholesky and partially pivoted LU factorizations, Gershgorin bounds.
//!
//! The oracle module deliberately does not call into the factorizations
//! here; it only borrows the [`Matrix`] container.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    libm::sqrt(dot(x, x))
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(a: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= a;
    }
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

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
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    found: col.len(),
                });
            }
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
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
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
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
                axpy(a, orow, dst);
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows.min(self.cols) {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
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

/// Dense real symmetric matrix. Entries satisfy `a[i][j] == a[j][i]` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Symmetrizes `m` as `(M + Mᵀ)/2`.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        if m.rows() == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        let mut m = m;
        let n = m.rows();
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Ok(SymMatrix(m))
    }

    /// Accepts `m` only if its asymmetry is within `rel_tol · max|m_ij|`,
    /// then symmetrizes.
    pub fn new_checked(m: Matrix, rel_tol: f64) -> Result<Self> {
        let asymmetry = m.asymmetry();
        if asymmetry > rel_tol * m.max_abs() {
            return Err(Error::NotSymmetric { asymmetry });
        }
        SymMatrix::new(m)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        SymMatrix::new(Matrix::from_diagonal(diag))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Matrix::identity(n))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        SymMatrix::new(Matrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.0.matvec(x)
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.0.matvec(x))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// Gershgorin interval `[lo, hi]` containing every eigenvalue.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let row = self.0.row(i);
            let radius: f64 = row
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| v.abs())
                .sum();
            lo = lo.min(row[i] - radius);
            hi = hi.max(row[i] + radius);
        }
        (lo, hi)
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Lower-triangular Cholesky factor `B = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn factor(b: &SymMatrix) -> Result<Self> {
        let n = b.n();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = b[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d });
            }
            let djj = libm::sqrt(d);
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = b[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// `Lᵀ x`, so that `‖x‖_B = ‖Lᵀx‖`.
    pub fn lt_mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        (0..n)
            .map(|i| (i..n).map(|k| self.l[(k, i)] * x[k]).sum())
            .collect()
    }

    /// Solves `L Lᵀ x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Certified lower bound on the smallest eigenvalue of `B = LLᵀ`:
    /// `λ_min(B) = 1/‖L⁻¹‖₂² ≥ 1/‖L⁻¹‖_F²`.
    pub fn min_eigenvalue_lower_bound(&self) -> f64 {
        let n = self.l.rows();
        // columns of L⁻¹ by forward substitution on unit vectors
        let mut frob2 = 0.0;
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[j] = 1.0;
            for i in j..n {
                let mut s = col[i];
                for k in j..i {
                    s -= self.l[(i, k)] * col[k];
                }
                col[i] = s / self.l[(i, i)];
            }
            frob2 += dot(&col[j..], &col[j..]);
        }
        1.0 / frob2
    }
}

/// Relative pivot threshold below which a system is reported singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-14;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Factors `a`. A pivot smaller than `1e-14` times the matrix scale
    /// (largest entry or largest pivot seen so far) is reported as singular.
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut scale = a.max_abs();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmax > SINGULAR_PIVOT_RTOL * scale) {
                return Err(Error::SingularSystem {
                    column: k,
                    pivot: pmax,
                });
            }
            scale = scale.max(pmax);
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= factor * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lu[(i, k)] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lu[(i, k)] * x[k];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }
}

/// Solves `a x = rhs` by LU with partial pivoting.
pub fn lu_solve(a: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    Ok(Lu::factor(a)?.solve(rhs))
}

/// Solves `A X = RHS` column by column with one factorization.
pub fn lu_solve_many(a: &Matrix, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let lu = Lu::factor(a)?;
    Ok(rhs.iter().map(|b| lu.solve(b)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrizes_on_construction() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 3.0]]).unwrap();
        let s = SymMatrix::new(m).unwrap();
        assert_eq!(s[(0, 1)], 3.0);
        assert_eq!(s[(1, 0)], 3.0);
    }

    #[test]
    fn checked_construction_rejects_asymmetry() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 3.0]]).unwrap();
        assert!(matches!(
            SymMatrix::new_checked(m, 1e-12),
            Err(Error::NotSymmetric { .. })
        ));
        let tiny = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0 + 1e-15, 3.0]]).unwrap();
        assert!(SymMatrix::new_checked(tiny, 1e-12).is_ok());
    }

    #[test]
    fn rejects_empty_and_rectangular() {
        assert!(SymMatrix::new(Matrix::zeros(0, 0)).is_err());
        assert!(SymMatrix::new(Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn cholesky_solves_and_bounds() {
        let b = SymMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let c = Cholesky::factor(&b).unwrap();
        let x = c.solve(&[1.0, 2.0]);
        let bx = b.matvec(&x);
        assert!((bx[0] - 1.0).abs() < 1e-14 && (bx[1] - 2.0).abs() < 1e-14);
        // ‖Lᵀx‖² == xᵀBx
        let v = [0.3, -0.7];
        let ltx = c.lt_mul(&v);
        assert!((dot(&ltx, &ltx) - b.quadratic_form(&v)).abs() < 1e-14);
        // true λ_min = (7 - √5)/2
        let lmin = (7.0 - libm::sqrt(5.0)) / 2.0;
        let bound = c.min_eigenvalue_lower_bound();
        assert!(bound > 0.0 && bound <= lmin);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let b = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            Cholesky::factor(&b),
            Err(Error::NotPositiveDefinite { row: 1, .. })
        ));
    }

    #[test]
    fn lu_solves_with_pivoting() {
        let a = Matrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ])
        .unwrap();
        let x = lu_solve(&a, &[3.0, 2.0, 4.0]).unwrap();
        let ax = a.matvec(&x);
        for (l, r) in ax.iter().zip([3.0, 2.0, 4.0]) {
            assert!((l - r).abs() < 1e-14);
        }
    }

    #[test]
    fn lu_detects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(lu_solve(&a, &[1.0, 1.0]), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn gershgorin_exact_on_diagonal() {
        let a = SymMatrix::from_diagonal(&[-3.0, 2.0]).unwrap();
        assert_eq!(a.gershgorin_bounds(), (-3.0, 2.0));
    }
}
