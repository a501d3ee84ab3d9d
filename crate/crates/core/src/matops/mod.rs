//! Dense real-matrix kernel: norms, spectra, Kronecker products and
//! power-decay certificates.
//!
//! Everything here is a pure function of immutable inputs. Complex numbers
//! appear only as eigenvalue outputs.

mod certificate;
mod eigen;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use certificate::{decay_ratios, power_decay_certificate, DecayCertificate, DEFAULT_P_CHECK};
pub use eigen::{eigenvalues, symmetric_eigen, symmetric_eigenvalues};

/// Row-major dense matrix of finite reals.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {ncols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(nrows, ncols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
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

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Block-diagonal matrix assembled from square or rectangular blocks.
    pub fn block_diag(blocks: &[Matrix]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            out.set_block(r0, c0, b);
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    /// Assembles a matrix from a grid of blocks. Each block row must share
    /// a row count and each block column a column count.
    pub fn from_blocks(grid: &[Vec<Matrix>]) -> Result<Self> {
        let first = grid
            .first()
            .ok_or_else(|| Error::Dimension("empty block grid".into()))?;
        let col_widths: Vec<usize> = first.iter().map(|b| b.cols).collect();
        let mut row_heights = Vec::with_capacity(grid.len());
        for (bi, row) in grid.iter().enumerate() {
            if row.len() != col_widths.len() {
                return Err(Error::Dimension(format!(
                    "block row {bi} has {} blocks, expected {}",
                    row.len(),
                    col_widths.len()
                )));
            }
            let h = row[0].rows;
            for (bj, b) in row.iter().enumerate() {
                if b.rows != h || b.cols != col_widths[bj] {
                    return Err(Error::Dimension(format!(
                        "block ({bi}, {bj}) is {}x{}, expected {h}x{}",
                        b.rows, b.cols, col_widths[bj]
                    )));
                }
            }
            row_heights.push(h);
        }
        let mut out = Self::zeros(row_heights.iter().sum(), col_widths.iter().sum());
        let mut r0 = 0;
        for (row, h) in grid.iter().zip(&row_heights) {
            let mut c0 = 0;
            for b in row {
                out.set_block(r0, c0, b);
                c0 += b.cols;
            }
            r0 += h;
        }
        Ok(out)
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

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Checked product `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self^p` by repeated multiplication; `p = 0` gives the identity.
    pub fn pow(&self, p: usize) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut out = Matrix::identity(self.rows);
        for _ in 0..p {
            out = out.matmul(self)?;
        }
        Ok(out)
    }

    /// Copies the `nrows x ncols` block whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nrows: usize, ncols: usize) -> Matrix {
        assert!(r0 + nrows <= self.rows && c0 + ncols <= self.cols);
        let mut out = Matrix::zeros(nrows, ncols);
        for i in 0..nrows {
            out.data[i * ncols..(i + 1) * ncols]
                .copy_from_slice(&self.data[(r0 + i) * self.cols + c0..(r0 + i) * self.cols + c0 + ncols]);
        }
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols);
        for i in 0..b.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + b.cols].copy_from_slice(b.row(i));
        }
    }

    /// Largest absolute entry.
    /// Entrywise division; stays finite for subnormal `s`, where
    /// `scale(1.0 / s)` would overflow.
    pub fn unscale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v / s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entrywise difference to `other` (same shape).
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs).expect("matrix product dimensions")
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum dimensions");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference dimensions");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<Vec<f64>>,
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            data: self.to_rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        if repr.data.len() != repr.rows {
            return Err(serde::de::Error::custom(format!(
                "matrix declares {} rows but data has {}",
                repr.rows,
                repr.data.len()
            )));
        }
        let m = Matrix::from_rows(&repr.data).map_err(serde::de::Error::custom)?;
        if m.cols != repr.cols {
            return Err(serde::de::Error::custom(format!(
                "matrix declares {} cols but rows have {}",
                repr.cols, m.cols
            )));
        }
        Ok(m)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            if s == 0.0 {
                continue;
            }
            for p in 0..b.rows {
                for q in 0..b.cols {
                    out[(i * b.rows + p, j * b.cols + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Max absolute row sum, the norm induced by the vector ∞-norm.
pub fn induced_inf_norm(m: &Matrix) -> f64 {
    (0..m.rows)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest singular value, the norm induced by the Euclidean vector norm.
pub fn spectral_norm(m: &Matrix) -> f64 {
    // Normalize first so the Gram matrix neither overflows nor goes
    // subnormal, then work with the smaller Gram matrix.
    let s = m.max_abs();
    if s == 0.0 || !s.is_finite() {
        return s;
    }
    let m = m.unscale(s);
    let gram = if m.rows >= m.cols {
        &m.transpose() * &m
    } else {
        &m * &m.transpose()
    };
    let top = symmetric_eigenvalues(&gram)
        .expect("Gram matrix is square and symmetric")
        .into_iter()
        .fold(0.0, f64::max);
    s * top.max(0.0).sqrt()
}

/// Maximum modulus over the eigenvalues of a square matrix.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Euclidean norm of a vector.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// ∞-norm of a vector; zero for the empty vector.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn construction_rejects_bad_shapes_and_nan() {
        assert!(matches!(Matrix::new(2, 2, vec![1.0; 3]), Err(Error::Dimension(_))));
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn inf_norm_examples() {
        assert_eq!(induced_inf_norm(&m(&[&[1.0, -2.0], &[3.0, 4.0]])), 7.0);
        assert_eq!(induced_inf_norm(&Matrix::identity(3)), 1.0);
        assert_eq!(induced_inf_norm(&Matrix::zeros(2, 3)), 0.0);
    }

    #[test]
    fn spectral_norm_examples() {
        assert!((spectral_norm(&Matrix::diag(&[3.0, -5.0])) - 5.0).abs() < 1e-12);
        assert!((spectral_norm(&Matrix::identity(4)) - 1.0).abs() < 1e-12);
        assert!((spectral_norm(&m(&[&[0.0, 2.0], &[0.0, 0.0]])) - 2.0).abs() < 1e-12);
        // wide matrix goes through the row Gram
        assert!((spectral_norm(&m(&[&[3.0, 4.0]])) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_examples() {
        assert!((spectral_radius(&Matrix::identity(2)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(spectral_radius(&m(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap(), 0.0);
        assert!(matches!(
            spectral_radius(&Matrix::zeros(2, 3)),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
        // rotation by 90 degrees scaled by 2: eigenvalues ±2i
        let r = m(&[&[0.0, -2.0], &[2.0, 0.0]]);
        assert!((spectral_radius(&r).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kron_examples() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let k = kron(&Matrix::identity(2), &a);
        assert_eq!(k, Matrix::block_diag(&[a.clone(), a.clone()]));

        let row = kron(&m(&[&[1.0, 2.0]]), &m(&[&[0.0, 1.0]]));
        assert_eq!(row, m(&[&[0.0, 1.0, 0.0, 2.0]]));

        let big = kron(&Matrix::zeros(2, 3), &Matrix::zeros(4, 5));
        assert_eq!((big.rows(), big.cols()), (8, 15));
    }

    #[test]
    fn blocks_round_trip() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0], &[6.0]]);
        let g = Matrix::from_blocks(&[vec![a.clone(), b.clone()]]).unwrap();
        assert_eq!(g.block(0, 0, 2, 2), a);
        assert_eq!(g.block(0, 2, 2, 1), b);
        assert!(Matrix::from_blocks(&[vec![a.clone()], vec![b]]).is_err());
    }

    #[test]
    fn pow_zero_is_identity() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(a.pow(0).unwrap(), Matrix::identity(2));
        assert_eq!(a.pow(2).unwrap(), &a * &a);
    }

    #[test]
    fn json_layout_is_nested_rows() {
        let a = m(&[&[1.0, 2.5], &[3.0, -4.0]]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"rows":2,"cols":2,"data":[[1.0,2.5],[3.0,-4.0]]}"#);
        let back: Matrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
        let bad = r#"{"rows":3,"cols":2,"data":[[1.0,2.5],[3.0,-4.0]]}"#;
        assert!(serde_json::from_str::<Matrix>(bad).is_err());
    }
}
