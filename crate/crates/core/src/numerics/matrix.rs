use std::ops::{Index, IndexMut};

use crate::{Error, Result};

/// Dense row-major matrix of `f64`.
///
/// Boundary constructors ([`Matrix::from_vec`], [`Matrix::from_columns`])
/// reject non-finite entries, so persisted or user-supplied data always
/// satisfies the finiteness invariant. Arithmetic results are not
/// re-validated; transient non-finite values (e.g. a diverging training
/// run) are detected where they matter, at the loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries, validating length and
    /// finiteness.
    pub fn from_vec(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix entries length {} does not match {}x{}",
                entries.len(),
                rows,
                cols
            )));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite matrix entry {bad}")));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    /// Stacks equal-length vectors as columns, validating finiteness.
    pub fn from_columns(columns: &[Vector]) -> Result<Self> {
        let rows = match columns.first() {
            Some(c) => c.dim(),
            None => return Err(Error::invalid("cannot build a matrix from zero columns")),
        };
        let cols = columns.len();
        let mut entries = vec![0.0; rows * cols];
        for (j, col) in columns.iter().enumerate() {
            if col.dim() != rows {
                return Err(Error::Shape {
                    op: "from_columns",
                    left: (rows, 1),
                    right: (col.dim(), 1),
                });
            }
            for i in 0..rows {
                if !col[i].is_finite() {
                    return Err(Error::invalid(format!("non-finite entry {}", col[i])));
                }
                entries[i * cols + j] = col[i];
            }
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vector {
        Vector::new((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    /// Matrix product `self * other`.
    ///
    /// Backed by a tuned GEMM; the naive triple loop lives in the tests as
    /// an independent reference.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        // Row-major strides: row stride = cols, column stride = 1.
        unsafe {
            matrixmultiply::dgemm(
                self.rows,
                self.cols,
                other.cols,
                1.0,
                self.entries.as_ptr(),
                self.cols as isize,
                1,
                other.entries.as_ptr(),
                other.cols as isize,
                1,
                0.0,
                out.entries.as_mut_ptr(),
                other.cols as isize,
                1,
            );
        }
        Ok(out)
    }

    /// Product with the right factor transposed, `self * otherᵀ`.
    ///
    /// Avoids materializing the transpose; used by gradient accumulation.
    pub fn matmul_nt(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::Shape {
                op: "matmul_nt",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        // otherᵀ viewed in place: row stride 1, column stride other.cols.
        unsafe {
            matrixmultiply::dgemm(
                self.rows,
                self.cols,
                other.rows,
                1.0,
                self.entries.as_ptr(),
                self.cols as isize,
                1,
                other.entries.as_ptr(),
                1,
                other.cols as isize,
                0.0,
                out.entries.as_mut_ptr(),
                other.rows as isize,
                1,
            );
        }
        Ok(out)
    }

    /// Product with the left factor transposed, `selfᵀ * other`.
    pub fn matmul_tn(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::Shape {
                op: "matmul_tn",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        unsafe {
            matrixmultiply::dgemm(
                self.cols,
                self.rows,
                other.cols,
                1.0,
                self.entries.as_ptr(),
                1,
                self.cols as isize,
                other.entries.as_ptr(),
                other.cols as isize,
                1,
                0.0,
                out.entries.as_mut_ptr(),
                other.cols as isize,
                1,
            );
        }
        Ok(out)
    }

    /// Matrix-vector product `self * x`.
    pub fn mul_vec(&self, x: &Vector) -> Result<Vector> {
        if self.cols != x.dim() {
            return Err(Error::Shape {
                op: "mul_vec",
                left: self.shape(),
                right: (x.dim(), 1),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = 0.0;
            for (w, v) in row.iter().zip(x.as_slice()) {
                acc += w * v;
            }
            *o = acc;
        }
        Ok(Vector::new(out))
    }

    /// Transposed matrix-vector product `selfᵀ * x`.
    pub fn mul_vec_t(&self, x: &Vector) -> Result<Vector> {
        if self.rows != x.dim() {
            return Err(Error::Shape {
                op: "mul_vec_t",
                left: self.shape(),
                right: (x.dim(), 1),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &v) in x.iter().enumerate() {
            for (o, w) in out.iter_mut().zip(self.row(i)) {
                *o += w * v;
            }
        }
        Ok(Vector::new(out))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Dense `f64` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    entries: Vec<f64>,
}

impl Vector {
    pub fn new(entries: Vec<f64>) -> Self {
        Self { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.entries.iter()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.iter().zip(other.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "add: dimension mismatch");
        Vector::new(self.iter().zip(other.iter()).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "sub: dimension mismatch");
        Vector::new(self.iter().zip(other.iter()).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector::new(self.iter().map(|a| a * factor).collect())
    }

    pub fn norm_sq(&self) -> f64 {
        self.iter().map(|a| a * a).sum()
    }

    pub fn dist_sq(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dist_sq: dimension mismatch");
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.entries[i]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(entries: Vec<f64>) -> Self {
        Self::new(entries)
    }
}

/// Affine map `W x + b`.
pub fn affine(w: &Matrix, x: &Vector, b: &Vector) -> Result<Vector> {
    if w.rows() != b.dim() {
        return Err(Error::Shape {
            op: "affine",
            left: w.shape(),
            right: (b.dim(), 1),
        });
    }
    let mut out = w.mul_vec(x)?;
    for (o, bias) in out.as_mut_slice().iter_mut().zip(b.iter()) {
        *o += bias;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use rand::Rng;

    fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
        let mut c = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for k in 0..a.cols() {
                    acc += a[(i, k)] * b[(k, j)];
                }
                c[(i, j)] = acc;
            }
        }
        c
    }

    #[test]
    fn matmul_matches_naive_reference() {
        let mut rng = RngStream::new(7, 0);
        let a = Matrix::from_fn(5, 7, |_, _| rng.random_range(-1.0..1.0));
        let b = Matrix::from_fn(7, 3, |_, _| rng.random_range(-1.0..1.0));
        let fast = a.matmul(&b).unwrap();
        let slow = naive_matmul(&a, &b);
        for (x, y) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn transposed_products_match_explicit_transposes() {
        let mut rng = RngStream::new(8, 0);
        let a = Matrix::from_fn(4, 6, |_, _| rng.random_range(-1.0..1.0));
        let b = Matrix::from_fn(5, 6, |_, _| rng.random_range(-1.0..1.0));
        let b_t = Matrix::from_fn(6, 5, |i, j| b[(j, i)]);
        let nt = a.matmul_nt(&b).unwrap();
        let reference = naive_matmul(&a, &b_t);
        for (x, y) in nt.as_slice().iter().zip(reference.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }

        let c = Matrix::from_fn(6, 3, |_, _| rng.random_range(-1.0..1.0));
        let a_t = Matrix::from_fn(6, 4, |i, j| a[(j, i)]);
        let tn = a_t.matmul_tn(&c).unwrap();
        let reference = naive_matmul(&a, &c);
        for (x, y) in tn.as_slice().iter().zip(reference.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(4, 2);
        match a.matmul(&b) {
            Err(Error::Shape { left, right, .. }) => {
                assert_eq!(left, (2, 3));
                assert_eq!(right, (4, 2));
            }
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn mul_vec_t_matches_explicit_transpose() {
        let mut rng = RngStream::new(12, 0);
        let a = Matrix::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0));
        let x = Vector::new(vec![0.5, -1.0, 2.0, 0.25]);
        let a_t = Matrix::from_fn(3, 4, |i, j| a[(j, i)]);
        let fast = a.mul_vec_t(&x).unwrap();
        let slow = a_t.mul_vec(&x).unwrap();
        for (u, v) in fast.iter().zip(slow.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
        assert!(a.mul_vec_t(&Vector::zeros(3)).is_err());
    }

    #[test]
    fn affine_identity_returns_input() {
        let w = Matrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let x = Vector::new(vec![3.0, -1.0, 0.5]);
        let b = Vector::zeros(3);
        assert_eq!(affine(&w, &x, &b).unwrap(), x);
    }

    #[test]
    fn affine_hand_case() {
        let w = Matrix::from_vec(2, 2, vec![1.0, -1.0, 0.0, 2.0]).unwrap();
        let x = Vector::new(vec![1.0, 1.0]);
        let b = Vector::new(vec![-1.0, 0.0]);
        assert_eq!(
            affine(&w, &x, &b).unwrap(),
            Vector::new(vec![-1.0, 2.0])
        );
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn from_columns_round_trip() {
        let cols = vec![
            Vector::new(vec![1.0, 2.0]),
            Vector::new(vec![3.0, 4.0]),
            Vector::new(vec![5.0, 6.0]),
        ];
        let m = Matrix::from_columns(&cols).unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m.col(1), cols[1]);
        assert_eq!(m.row(0), &[1.0, 3.0, 5.0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // affine(W, x, b) == matmul(W, x-as-column) + b on conforming shapes.
            #[test]
            fn affine_equals_matmul_plus_bias(
                rows in 1usize..=16,
                cols in 1usize..=16,
                seed in any::<u64>(),
            ) {
                let mut rng = RngStream::new(seed, 1);
                let w = Matrix::from_fn(rows, cols, |_, _| rng.random_range(-2.0..2.0));
                let x = Vector::new((0..cols).map(|_| rng.random_range(-2.0..2.0)).collect());
                let b = Vector::new((0..rows).map(|_| rng.random_range(-2.0..2.0)).collect());

                let via_affine = affine(&w, &x, &b).unwrap();
                let x_col = Matrix::from_columns(std::slice::from_ref(&x)).unwrap();
                let via_matmul = w.matmul(&x_col).unwrap();
                for i in 0..rows {
                    prop_assert!((via_affine[i] - (via_matmul[(i, 0)] + b[i])).abs() < 1e-12);
                }
            }
        }
    }
}
