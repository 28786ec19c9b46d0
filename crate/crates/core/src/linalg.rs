//! Dense complex linear algebra over multipartite Hilbert spaces.
//!
//! This module is the brute-force reference that every circuit result is
//! checked against, so it favours obvious textbook loops over clever code.
//! Matrices are row-major `Complex64` buffers; eigenvalues come from a
//! standard Hermitian solver. Equality of matrices is always tolerance-based.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute tolerance for physical-property checks (trace, positivity, Hermiticity).
pub const PHYS_TOL: f64 = 1e-9;
/// Absolute tolerance for pure-arithmetic identities (summation reordering only).
pub const ARITH_TOL: f64 = 1e-12;

/// Dense complex matrix in row-major order.
#[derive(Clone, Debug)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries. Panics if the entry count is wrong.
    pub fn from_entries(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(
            rows * cols,
            data.len(),
            "entry count {} does not match {}x{}",
            data.len(),
            rows,
            cols
        );
        Self { rows, cols, data }
    }

    /// Column vector |psi><psi| outer product.
    pub fn outer(amplitudes: &[Complex64]) -> Self {
        let n = amplitudes.len();
        Self::from_fn(n, n, |i, j| amplitudes[i] * amplitudes[j].conj())
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

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scaled(&self, factor: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, rhs: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, rhs: &ComplexMatrix, tol: f64) -> bool {
        (self.rows, self.cols) == (rhs.rows, rhs.cols) && self.max_abs_diff(rhs) <= tol
    }

    /// Largest |m[i,j] - conj(m[j,i])| over all entries.
    pub fn hermitian_deviation(&self) -> f64 {
        assert!(self.is_square());
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// (m + m^dagger) / 2.
    pub fn hermitized(&self) -> ComplexMatrix {
        assert!(self.is_square());
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Ordered local dimensions (d1, d2, ...) of a multipartite Hilbert space.
///
/// Subsystems are numbered from 1 in every public interface, matching the
/// usual "qubit 2" phrasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemShape {
    dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidShape { dims });
        }
        Ok(Self { dims })
    }

    /// Shorthand for a bipartite shape (d1, d2).
    pub fn bipartite(d1: usize, d2: usize) -> Result<Self> {
        Self::new(vec![d1, d2])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn subsystem_count(&self) -> usize {
        self.dims.len()
    }

    /// Validates a 1-based subsystem index and returns its 0-based position.
    pub(crate) fn subsystem_position(&self, subsystem: usize) -> Result<usize> {
        if subsystem == 0 || subsystem > self.dims.len() {
            return Err(Error::SubsystemOutOfRange {
                subsystem,
                count: self.dims.len(),
            });
        }
        Ok(subsystem - 1)
    }

    pub(crate) fn check_matrix(&self, m: &ComplexMatrix) -> Result<()> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        if m.rows() != self.total_dim() {
            return Err(Error::ShapeMismatch {
                matrix_dim: m.rows(),
                dims: self.dims.clone(),
            });
        }
        Ok(())
    }

    /// Row-major strides: index = sum_j component_j * stride_j.
    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for j in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * self.dims[j + 1];
        }
        strides
    }
}

/// Kronecker product a (x) b.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ia in 0..a.rows() {
        for ja in 0..a.cols() {
            let f = a[(ia, ja)];
            if f == Complex64::ZERO {
                continue;
            }
            for ib in 0..b.rows() {
                for jb in 0..b.cols() {
                    out[(ia * b.rows() + ib, ja * b.cols() + jb)] = f * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Transpose on the indices of one subsystem (1-based), leaving the others alone.
///
/// Preserves trace and Hermiticity, but not positivity in general.
pub fn partial_transpose(
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    subsystem: usize,
) -> Result<ComplexMatrix> {
    shape.check_matrix(rho)?;
    let t = shape.subsystem_position(subsystem)?;
    let strides = shape.strides();
    let dt = shape.dims()[t];
    let st = strides[t];
    let n = shape.total_dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let it = (i / st) % dt;
        for j in 0..n {
            let jt = (j / st) % dt;
            // swap the subsystem-t component between row and column
            let i2 = i - it * st + jt * st;
            let j2 = j - jt * st + it * st;
            out[(i2, j2)] = rho[(i, j)];
        }
    }
    Ok(out)
}

/// Reduced matrix with one subsystem (1-based) traced out.
///
/// The result has the remaining subsystems in their original order; tracing
/// the only subsystem of a unipartite shape yields a 1x1 matrix.
pub fn partial_trace(
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    subsystem: usize,
) -> Result<ComplexMatrix> {
    shape.check_matrix(rho)?;
    let t = shape.subsystem_position(subsystem)?;
    let strides = shape.strides();
    let dt = shape.dims()[t];
    let st = strides[t];
    let m = shape.total_dim() / dt;
    let mut out = ComplexMatrix::zeros(m, m);

    // Split a full index into (prefix, suffix) with the traced component removed.
    let reduce = |full: usize| -> usize {
        let high = full / (st * dt);
        let low = full % st;
        high * st + low
    };
    let n = shape.total_dim();
    for i in 0..n {
        let it = (i / st) % dt;
        for j in 0..n {
            let jt = (j / st) % dt;
            if it != jt {
                continue;
            }
            out[(reduce(i), reduce(j))] += rho[(i, j)];
        }
    }
    Ok(out)
}

/// Real eigenvalues of a Hermitian matrix, sorted in descending order.
///
/// Rejects input whose Hermitian deviation exceeds [`PHYS_TOL`]; smaller
/// deviations are symmetrized away before solving.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let dev = m.hermitian_deviation();
    if dev > PHYS_TOL {
        return Err(Error::NotHermitian {
            deviation: dev,
            tolerance: PHYS_TOL,
        });
    }
    let h = m.hermitized();
    let n = h.rows();
    let na = nalgebra::DMatrix::from_fn(n, n, |i, j| h[(i, j)]);
    let mut eigs: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(eigs)
}

/// Tr(m^k) by repeated multiplication; for Hermitian m this is the k-th power sum
/// of the eigenvalues.
pub fn power_trace(m: &ComplexMatrix, k: usize) -> Complex64 {
    assert!(m.is_square(), "power_trace needs a square matrix");
    assert!(k >= 1, "power_trace needs k >= 1");
    let mut acc = m.clone();
    for _ in 1..k {
        acc = acc.matmul(m);
    }
    acc.trace()
}
