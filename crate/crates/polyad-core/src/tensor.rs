//! Dense tensors, dense matrices and Kruskal (CP) models.
//!
//! # Storage conventions
//!
//! These are fixed once here and relied on everywhere else:
//!
//! - [`DenseTensor`] stores its values with the **first index fastest**
//!   (column-major in the matrix case). The flat offset of `(i1, ..., iN)`
//!   is `i1 + I1*(i2 + I2*(i3 + ...))`.
//! - [`Matrix`] stores its values **row-major**; `row(i)` is a contiguous
//!   slice.
//! - The mode-`n` unfolding puts mode `n` on the rows and enumerates the
//!   remaining indices in the columns with the **lowest-numbered mode
//!   fastest**. Under that ordering the flat data of a tensor is exactly the
//!   column-major vectorization of its mode-0 unfolding, and for any Kruskal
//!   model `unfold(reconstruct(k), n) == k.factor(n) * coproduct(k, n)^T`
//!   holds exactly in exact arithmetic.
//! - The Kronecker product `a ⊗ b` places `b`'s indices fastest, which is
//!   what makes the Khatri-Rao chain in [`coproduct_matrix`] (highest mode
//!   first) line up with the unfolding column order.
//!
//! Modes are 0-based throughout the API.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Errors from shape-checked tensor and matrix operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TensorError {
    /// Mode index does not exist for a tensor of this order.
    ModeOutOfRange { mode: usize, order: usize },
    /// Stored value count does not match the shape product.
    SizeMismatch { expected: usize, actual: usize },
    /// A dimension was zero.
    EmptyDimension,
    /// Operand shapes are incompatible.
    ShapeMismatch(String),
    /// Khatri-Rao operands disagree on column count.
    ColumnMismatch { left: usize, right: usize },
}

impl core::fmt::Display for TensorError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TensorError::ModeOutOfRange { mode, order } => {
                write!(f, "mode {mode} out of range for order-{order} tensor")
            }
            TensorError::SizeMismatch { expected, actual } => {
                write!(f, "expected {expected} values, got {actual}")
            }
            TensorError::EmptyDimension => write!(f, "dimensions must be positive"),
            TensorError::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            TensorError::ColumnMismatch { left, right } => {
                write!(f, "column counts differ: {left} vs {right}")
            }
        }
    }
}

/// Dense matrix of `f64`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// # Panics
    ///
    /// Panics if `rows * cols != data.len()` or either dimension is zero.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert_eq!(rows * cols, data.len(), "matrix data length mismatch");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
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
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// # Panics
    ///
    /// Panics on an out-of-range index.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        self.data[i * self.cols + j]
    }

    /// # Panics
    ///
    /// Panics on an out-of-range index.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * other`.
    ///
    /// # Panics
    ///
    /// Panics if the inner dimensions disagree.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &a_ik) in a_row.iter().enumerate() {
                let b_row = other.row(k);
                for (o, &b_kj) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += a_ik * b_kj;
                }
            }
        }
        out
    }

    /// `self * other^T`; both operands are walked row-wise.
    ///
    /// # Panics
    ///
    /// Panics if the column counts disagree.
    pub fn matmul_transpose_b(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_transpose_b dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for j in 0..other.rows {
                let b_row = other.row(j);
                let mut sum = 0.0;
                for (&x, &y) in a_row.iter().zip(b_row.iter()) {
                    sum += x * y;
                }
                out_row[j] = sum;
            }
        }
        out
    }

    /// Gram matrix `self^T * self` (`cols x cols`).
    pub fn gram(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let row = self.row(i);
            for (p, &x) in row.iter().enumerate() {
                let out_row = &mut out.data[p * self.cols..(p + 1) * self.cols];
                for (o, &y) in out_row.iter_mut().zip(row.iter()) {
                    *o += x * y;
                }
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix::new(self.rows, self.cols, self.data.iter().map(|v| v * factor).collect())
    }

    /// # Panics
    ///
    /// Panics if the shapes disagree.
    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "sub shape mismatch"
        );
        Matrix::new(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// # Panics
    ///
    /// Panics if the shapes disagree.
    pub fn add(&self, other: &Matrix) -> Matrix {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "add shape mismatch"
        );
        Matrix::new(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::norm(&self.data)
    }

    /// Column-major flattening: columns stacked top to bottom.
    pub fn vec_columns(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self.data[i * self.cols + j]);
            }
        }
        out
    }

    /// Inverse of [`Matrix::vec_columns`].
    ///
    /// # Panics
    ///
    /// Panics if `values.len() != rows * cols`.
    pub fn from_vec_columns(rows: usize, cols: usize, values: &[f64]) -> Matrix {
        assert_eq!(values.len(), rows * cols, "from_vec_columns length mismatch");
        let mut m = Matrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[i * cols + j] = values[j * rows + i];
            }
        }
        m
    }
}

/// Dense N-way array, first index fastest (see module docs).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(TensorError::EmptyDimension);
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(TensorError::SizeMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self, TensorError> {
        let len: usize = shape.iter().product();
        Self::new(shape, vec![0.0; len])
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Flat offset of a multi-index (first index fastest).
    ///
    /// # Panics
    ///
    /// Panics if the index has the wrong length or is out of range.
    pub fn flat_index(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index order mismatch");
        let mut offset = 0;
        let mut stride = 1;
        for (&i, &dim) in index.iter().zip(self.shape.iter()) {
            assert!(i < dim, "tensor index out of range");
            offset += i * stride;
            stride *= dim;
        }
        offset
    }

    /// Element access; total for in-range multi-indices.
    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.flat_index(index)]
    }
}

/// Kruskal model: one factor matrix per mode, all sharing `rank` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct KruskalModel {
    factors: Vec<Matrix>,
}

impl KruskalModel {
    pub fn new(factors: Vec<Matrix>) -> Result<Self, TensorError> {
        if factors.is_empty() {
            return Err(TensorError::EmptyDimension);
        }
        let rank = factors[0].cols();
        for f in &factors {
            if f.cols() != rank {
                return Err(TensorError::ColumnMismatch {
                    left: rank,
                    right: f.cols(),
                });
            }
        }
        Ok(Self { factors })
    }

    pub fn rank(&self) -> usize {
        self.factors[0].cols()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &Matrix {
        &self.factors[mode]
    }

    /// Shape of the tensor this model reconstructs.
    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    pub(crate) fn factor_mut(&mut self, mode: usize) -> &mut Matrix {
        &mut self.factors[mode]
    }

    pub fn into_factors(self) -> Vec<Matrix> {
        self.factors
    }
}

/// Mode-`n` unfolding (matricization): mode `n` on the rows, remaining
/// indices enumerated in the columns with the lowest mode fastest.
pub fn unfold(t: &DenseTensor, mode: usize) -> Result<Matrix, TensorError> {
    let order = t.order();
    if mode >= order {
        return Err(TensorError::ModeOutOfRange { mode, order });
    }
    let rows = t.shape[mode];
    let cols = t.len() / rows;
    let mode_stride: usize = t.shape[..mode].iter().product();

    let mut out = vec![0.0; rows * cols];
    // Odometer over the non-mode indices, lowest mode fastest; `base` tracks
    // the flat offset with the mode index held at zero.
    let other_dims: Vec<usize> = (0..order).filter(|&m| m != mode).map(|m| t.shape[m]).collect();
    let other_strides: Vec<usize> = (0..order)
        .filter(|&m| m != mode)
        .map(|m| t.shape[..m].iter().product())
        .collect();
    let mut counters = vec![0usize; other_dims.len()];
    let mut base = 0usize;
    for j in 0..cols {
        let mut flat = base;
        for i in 0..rows {
            out[i * cols + j] = t.data[flat];
            flat += mode_stride;
        }
        if j + 1 < cols {
            for (c, (&dim, &stride)) in counters
                .iter_mut()
                .zip(other_dims.iter().zip(other_strides.iter()))
            {
                *c += 1;
                base += stride;
                if *c < dim {
                    break;
                }
                *c = 0;
                base -= dim * stride;
            }
        }
    }
    Ok(Matrix::new(rows, cols, out))
}

/// Inverse of [`unfold`]: rebuild the tensor of the given shape from its
/// mode-`n` unfolding.
pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<DenseTensor, TensorError> {
    let order = shape.len();
    if mode >= order {
        return Err(TensorError::ModeOutOfRange { mode, order });
    }
    if shape.iter().any(|&d| d == 0) {
        return Err(TensorError::EmptyDimension);
    }
    let len: usize = shape.iter().product();
    if m.rows() != shape[mode] || m.rows() * m.cols() != len {
        return Err(TensorError::ShapeMismatch(alloc::format!(
            "{}x{} unfolding does not match shape {:?} at mode {}",
            m.rows(),
            m.cols(),
            shape,
            mode
        )));
    }
    let rows = m.rows();
    let cols = m.cols();
    let mode_stride: usize = shape[..mode].iter().product();
    let other_dims: Vec<usize> = (0..order).filter(|&k| k != mode).map(|k| shape[k]).collect();
    let other_strides: Vec<usize> = (0..order)
        .filter(|&k| k != mode)
        .map(|k| shape[..k].iter().product())
        .collect();

    let mut data = vec![0.0; len];
    let mut counters = vec![0usize; other_dims.len()];
    let mut base = 0usize;
    for j in 0..cols {
        let mut flat = base;
        for i in 0..rows {
            data[flat] = m.data[i * cols + j];
            flat += mode_stride;
        }
        if j + 1 < cols {
            for (c, (&dim, &stride)) in counters
                .iter_mut()
                .zip(other_dims.iter().zip(other_strides.iter()))
            {
                *c += 1;
                base += stride;
                if *c < dim {
                    break;
                }
                *c = 0;
                base -= dim * stride;
            }
        }
    }
    DenseTensor::new(shape.to_vec(), data)
}

/// Kronecker product: `(I*K) x (J*L)` with `b`'s indices fastest, i.e.
/// entry `((i*K + k), (j*L + l)) = a[i,j] * b[k,l]`.
pub fn kronecker(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = (a.rows(), a.cols());
    let (br, bc) = (b.rows(), b.cols());
    let mut out = Matrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let scale = a.get(i, j);
            for k in 0..br {
                let b_row = b.row(k);
                let out_row = &mut out.data[(i * br + k) * ac * bc..];
                for (l, &v) in b_row.iter().enumerate() {
                    out_row[j * bc + l] = scale * v;
                }
            }
        }
    }
    out
}

/// Khatri-Rao product: column `j` is `kronecker(a[:,j], b[:,j])`.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix, TensorError> {
    if a.cols() != b.cols() {
        return Err(TensorError::ColumnMismatch {
            left: a.cols(),
            right: b.cols(),
        });
    }
    let cols = a.cols();
    let mut out = Matrix::zeros(a.rows() * b.rows(), cols);
    for i in 0..a.rows() {
        let a_row = a.row(i);
        for k in 0..b.rows() {
            let b_row = b.row(k);
            let out_row = out.row_mut(i * b.rows() + k);
            for j in 0..cols {
                out_row[j] = a_row[j] * b_row[j];
            }
        }
    }
    Ok(out)
}

/// Khatri-Rao chain of every factor except `mode`, highest mode first, so
/// that `unfold(reconstruct(k), mode) = k.factor(mode) * result^T`.
///
/// Shape: `(prod of other mode sizes) x rank`. Requires order >= 2.
pub fn coproduct_matrix(k: &KruskalModel, mode: usize) -> Result<Matrix, TensorError> {
    let order = k.order();
    if mode >= order {
        return Err(TensorError::ModeOutOfRange { mode, order });
    }
    if order < 2 {
        return Err(TensorError::ShapeMismatch(String::from(
            "coproduct needs at least two modes",
        )));
    }
    let mut acc: Option<Matrix> = None;
    for m in (0..order).rev() {
        if m == mode {
            continue;
        }
        acc = Some(match acc {
            None => k.factor(m).clone(),
            Some(prev) => khatri_rao(&prev, k.factor(m))?,
        });
    }
    Ok(acc.expect("order >= 2 leaves at least one factor"))
}

/// Dense reconstruction of a Kruskal model: the sum of its rank-one terms.
pub fn reconstruct(k: &KruskalModel) -> Result<DenseTensor, TensorError> {
    let shape = k.shape();
    if k.order() == 1 {
        let f = k.factor(0);
        let data: Vec<f64> = (0..f.rows()).map(|i| f.row(i).iter().sum()).collect();
        return DenseTensor::new(shape, data);
    }
    let coproduct = coproduct_matrix(k, 0)?;
    let unfolded = k.factor(0).matmul_transpose_b(&coproduct);
    fold(&unfolded, 0, &shape)
}

/// Frobenius norm (compensated accumulation).
pub fn frobenius_norm(t: &DenseTensor) -> f64 {
    math::norm(&t.data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.uniform_open() * 2.0 - 1.0)
    }

    fn random_tensor(rng: &mut SeededRng, shape: &[usize]) -> DenseTensor {
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.uniform_open() * 2.0 - 1.0).collect();
        DenseTensor::new(shape.to_vec(), data).unwrap()
    }

    fn random_model(rng: &mut SeededRng, shape: &[usize], rank: usize) -> KruskalModel {
        KruskalModel::new(
            shape
                .iter()
                .map(|&dim| random_matrix(rng, dim, rank))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn unfold_2x2x2_matches_direct_enumeration() {
        // t[i,j,k] = 4i + 2j + k, checked against the unfolding definition
        // entry by entry over all 8 elements.
        let mut data = vec![0.0; 8];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    data[i + 2 * j + 4 * k] = (4 * i + 2 * j + k) as f64;
                }
            }
        }
        let t = DenseTensor::new(vec![2, 2, 2], data).unwrap();
        let m = unfold(&t, 0).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 4);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    // column index: j fastest, then k
                    assert_eq!(m.get(i, j + 2 * k), (4 * i + 2 * j + k) as f64);
                }
            }
        }
    }

    #[test]
    fn unfold_vector_is_single_column() {
        // Degenerate mode: the product over the remaining (no) modes is 1,
        // so an order-1 tensor unfolds to an I1 x 1 matrix holding the data.
        let t = DenseTensor::new(vec![4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = unfold(&t, 0).unwrap();
        assert_eq!((m.rows(), m.cols()), (4, 1));
        assert_eq!(m.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn unfold_rejects_bad_mode() {
        let t = DenseTensor::new(vec![2, 2], vec![0.0; 4]).unwrap();
        assert!(matches!(
            unfold(&t, 2),
            Err(TensorError::ModeOutOfRange { mode: 2, order: 2 })
        ));
    }

    #[test]
    fn fold_unfold_round_trips() {
        let mut rng = SeededRng::new(42);
        let t = random_tensor(&mut rng, &[3, 4, 5]);
        for mode in 0..3 {
            let m = unfold(&t, mode).unwrap();
            let back = fold(&m, mode, &[3, 4, 5]).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn unfold_fold_round_trips_on_matrix_side() {
        let mut rng = SeededRng::new(43);
        let m = random_matrix(&mut rng, 3, 8);
        let t = fold(&m, 0, &[3, 4, 2]).unwrap();
        assert_eq!(unfold(&t, 0).unwrap(), m);
    }

    #[test]
    fn fold_row_to_vector() {
        let m = Matrix::new(5, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let t = fold(&m, 0, &[5]).unwrap();
        assert_eq!(t.data(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn fold_rejects_shape_mismatch() {
        let m = Matrix::zeros(3, 8);
        assert!(fold(&m, 0, &[3, 5]).is_err());
    }

    #[test]
    fn kronecker_matches_definition() {
        let a = Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let b = Matrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let k = kronecker(&a, &b);
        assert_eq!((k.rows(), k.cols()), (4, 4));
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        assert_eq!(k.get(i * 2 + p, j * 2 + q), a.get(i, j) * b.get(p, q));
                    }
                }
            }
        }
    }

    #[test]
    fn kronecker_identity_is_neutral() {
        let b = Matrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(kronecker(&Matrix::identity(1), &b), b);
    }

    #[test]
    fn kronecker_shape_law() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(4, 5);
        let k = kronecker(&a, &b);
        assert_eq!((k.rows(), k.cols()), (8, 15));
    }

    #[test]
    fn khatri_rao_columns_are_kronecker_columns() {
        let mut rng = SeededRng::new(7);
        let a = random_matrix(&mut rng, 3, 2);
        let b = random_matrix(&mut rng, 4, 2);
        let kr = khatri_rao(&a, &b).unwrap();
        for j in 0..2 {
            let col_a = Matrix::new(3, 1, a.column(j));
            let col_b = Matrix::new(4, 1, b.column(j));
            let expected = kronecker(&col_a, &col_b);
            for i in 0..12 {
                assert_eq!(kr.get(i, j), expected.get(i, 0));
            }
        }
    }

    #[test]
    fn khatri_rao_ones_row_is_neutral() {
        let mut rng = SeededRng::new(8);
        let b = random_matrix(&mut rng, 4, 3);
        let ones = Matrix::new(1, 3, vec![1.0; 3]);
        assert_eq!(khatri_rao(&ones, &b).unwrap(), b);
    }

    #[test]
    fn khatri_rao_shape_chain() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(3, 2);
        let c = Matrix::zeros(4, 2);
        let chained = khatri_rao(&khatri_rao(&a, &b).unwrap(), &c).unwrap();
        assert_eq!((chained.rows(), chained.cols()), (24, 2));
    }

    #[test]
    fn khatri_rao_rejects_column_mismatch() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(3, 4);
        assert!(matches!(
            khatri_rao(&a, &b),
            Err(TensorError::ColumnMismatch { left: 2, right: 4 })
        ));
    }

    #[test]
    fn reconstruct_rank_one_is_outer_product() {
        let a = Matrix::new(2, 1, vec![1.0, 2.0]);
        let b = Matrix::new(3, 1, vec![3.0, 4.0, 5.0]);
        let c = Matrix::new(2, 1, vec![6.0, 7.0]);
        let model = KruskalModel::new(vec![a.clone(), b.clone(), c.clone()]).unwrap();
        let t = reconstruct(&model).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..2 {
                    assert!(
                        (t.get(&[i, j, k]) - a.get(i, 0) * b.get(j, 0) * c.get(k, 0)).abs()
                            < 1e-15
                    );
                }
            }
        }
    }

    #[test]
    fn matricized_identity_holds_for_every_mode() {
        let mut rng = SeededRng::new(9);
        let model = random_model(&mut rng, &[3, 4, 5], 3);
        let t = reconstruct(&model).unwrap();
        let scale = frobenius_norm(&t);
        for mode in 0..3 {
            let lhs = unfold(&t, mode).unwrap();
            let rhs = model
                .factor(mode)
                .matmul_transpose_b(&coproduct_matrix(&model, mode).unwrap());
            assert!(lhs.sub(&rhs).frobenius_norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn zero_factor_gives_zero_tensor() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::new(3, 2, vec![1.0; 6]);
        let c = Matrix::new(4, 2, vec![2.0; 8]);
        let model = KruskalModel::new(vec![a, b, c]).unwrap();
        let t = reconstruct(&model).unwrap();
        assert!(t.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coproduct_of_two_mode_model_is_other_factor() {
        let mut rng = SeededRng::new(10);
        let a = random_matrix(&mut rng, 3, 2);
        let b = random_matrix(&mut rng, 4, 2);
        let model = KruskalModel::new(vec![a, b.clone()]).unwrap();
        assert_eq!(coproduct_matrix(&model, 0).unwrap(), b);
    }

    #[test]
    fn coproduct_matches_reconstruction_unfolding() {
        let mut rng = SeededRng::new(11);
        let model = random_model(&mut rng, &[2, 3, 4], 2);
        let t = reconstruct(&model).unwrap();
        let lhs = unfold(&t, 0).unwrap();
        let v = khatri_rao(model.factor(2), model.factor(1)).unwrap();
        let rhs = model.factor(0).matmul_transpose_b(&v);
        assert!(lhs.sub(&rhs).frobenius_norm() < 1e-12 * frobenius_norm(&t).max(1.0));
    }

    #[test]
    fn coproduct_of_all_ones_columns_is_ones() {
        let ones = |rows| Matrix::new(rows, 1, vec![1.0; rows]);
        let model = KruskalModel::new(vec![ones(2), ones(3), ones(4)]).unwrap();
        let v = coproduct_matrix(&model, 1).unwrap();
        assert_eq!((v.rows(), v.cols()), (8, 1));
        assert!(v.data().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn frobenius_norm_cases() {
        let zero = DenseTensor::zeros(vec![2, 3]).unwrap();
        assert_eq!(frobenius_norm(&zero), 0.0);
        let single = DenseTensor::new(vec![1], vec![3.0]).unwrap();
        assert_eq!(frobenius_norm(&single), 3.0);
        let ones = DenseTensor::new(vec![2, 2], vec![1.0; 4]).unwrap();
        assert_eq!(frobenius_norm(&ones), 2.0);
    }

    #[test]
    fn dense_tensor_validates_shape() {
        assert!(matches!(
            DenseTensor::new(vec![2, 3], vec![0.0; 5]),
            Err(TensorError::SizeMismatch { expected: 6, actual: 5 })
        ));
        assert!(matches!(
            DenseTensor::new(vec![2, 0], vec![]),
            Err(TensorError::EmptyDimension)
        ));
    }

    #[test]
    fn vec_columns_round_trips() {
        let mut rng = SeededRng::new(12);
        let m = random_matrix(&mut rng, 4, 3);
        let v = m.vec_columns();
        assert_eq!(Matrix::from_vec_columns(4, 3, &v), m);
        // Stacked-column layout: first four entries are the first column.
        assert_eq!(&v[..4], m.column(0).as_slice());
    }
}
