//! Dense symmetric matrices and the Cholesky kernel.
//!
//! Every iterate, covariance and weight field in the crate is a full dense
//! symmetric matrix. Both triangles are stored and every mutation writes the
//! mirrored entry, so `get(i, j) == get(j, i)` holds bit-for-bit.
//!
//! Cholesky factorization doubles as the positive-definiteness test: a
//! non-positive or non-finite pivot yields [`NotPd`] instead of an error path
//! that unwinds, because the line searches probe outside the cone on purpose.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

/// The matrix is not symmetric positive definite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("matrix is not positive definite")]
pub struct NotPd;

/// A scalar function returned a non-finite value at a probe point.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("function returned a non-finite value at probe ({row}, {col})")]
pub struct NonFiniteValue {
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix dimension must be at least 1")]
    EmptyDimension,
    #[error("expected {expected} entries, got {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("entries ({row}, {col}) and ({col}, {row}) differ")]
    Asymmetric { row: usize, col: usize },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
}

/// Errors from the plain-text matrix format.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("missing dimension header")]
    MissingHeader,
    #[error("invalid dimension header {0:?}")]
    BadHeader(String),
    #[error("expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("row {row}: expected {expected} values, found {found}")]
    ColumnCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {col}: cannot parse {token:?} as a number")]
    BadNumber {
        row: usize,
        col: usize,
        token: String,
    },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Dense symmetric `d × d` matrix stored row-major with both triangles.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for i in 0..self.dim {
            list.entry(&self.row(i));
        }
        list.finish()
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = v;
        }
        m
    }

    /// Builds a matrix from the upper triangle of `f`; `f(i, j)` is only
    /// called for `i <= j` and mirrored.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Row-major entries; both triangles must agree exactly.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if dim == 0 {
            return Err(MatrixError::EmptyDimension);
        }
        let expected = dim.saturating_mul(dim);
        if data.len() != expected {
            return Err(MatrixError::WrongLength {
                expected,
                found: data.len(),
            });
        }
        for i in 0..dim {
            for j in 0..dim {
                let v = data[i * dim + j];
                if !v.is_finite() {
                    return Err(MatrixError::NonFinite { row: i, col: j });
                }
                if j > i && v != data[j * dim + i] {
                    return Err(MatrixError::Asymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(MatrixError::WrongLength {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(dim, data)
    }

    /// Symmetrizes an arbitrary square array as `(a + aᵀ) / 2`.
    pub fn symmetrize(dim: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), dim * dim);
        Self::from_fn(dim, |i, j| {
            if i == j {
                data[i * dim + i]
            } else {
                0.5 * (data[i * dim + j] + data[j * dim + i])
            }
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Writes `v` at `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major view of all entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| factor * v)
    }

    /// Entrywise map; `f` must be a function of the value only so symmetry
    /// is preserved.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Entrywise combination of two matrices of equal dimension.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self + alpha * other`
    pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + alpha * b)
    }

    /// Frobenius inner product `Σ a_ij b_ij`.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_offdiag(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    /// Ordinary matrix product, returned row-major (it is not symmetric in
    /// general).
    pub fn matmul(&self, other: &Self) -> Vec<f64> {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let row = other.row(k);
                let dst = &mut out[i * d..(i + 1) * d];
                for (o, &b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Symmetric permutation `P M Pᵀ` with `perm[i]` the source index of row `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.dim);
        Self::from_fn(self.dim, |i, j| self.get(perm[i], perm[j]))
    }

    /// Writes the plain-text interchange format: the dimension on the first
    /// line, then one row per line with 17 significant digits per entry.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.dim)?;
        for i in 0..self.dim {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("formatted floats are ASCII")
    }

    /// Parses the plain-text interchange format. Symmetry must be exact.
    pub fn parse_text(text: &str) -> Result<Self, FormatError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(FormatError::MissingHeader)?.trim();
        let dim: usize = header
            .parse()
            .map_err(|_| FormatError::BadHeader(header.to_string()))?;
        if dim == 0 {
            return Err(MatrixError::EmptyDimension.into());
        }
        let mut data = Vec::new();
        let mut rows = 0usize;
        for (row, line) in lines.enumerate() {
            if row >= dim {
                return Err(FormatError::RowCount {
                    expected: dim,
                    found: row + 1,
                });
            }
            let mut count = 0usize;
            for (col, token) in line.split_whitespace().enumerate() {
                if col >= dim {
                    return Err(FormatError::ColumnCount {
                        row,
                        expected: dim,
                        found: line.split_whitespace().count(),
                    });
                }
                let v: f64 = token.parse().map_err(|_| FormatError::BadNumber {
                    row,
                    col,
                    token: token.to_string(),
                })?;
                data.push(v);
                count += 1;
            }
            if count != dim {
                return Err(FormatError::ColumnCount {
                    row,
                    expected: dim,
                    found: count,
                });
            }
            rows += 1;
        }
        if rows != dim {
            return Err(FormatError::RowCount {
                expected: dim,
                found: rows,
            });
        }
        Ok(Self::from_row_major(dim, data)?)
    }

    pub fn read_file(path: impl AsRef<std::path::Path>) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_text(&text)
    }

    pub fn write_file(&self, path: impl AsRef<std::path::Path>) -> io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = io::BufWriter::new(file);
        self.write_text(&mut w)?;
        w.flush()
    }
}

pub fn fro_norm(m: &SymMatrix) -> f64 {
    m.dot(m).sqrt()
}

pub fn fro_dist(a: &SymMatrix, b: &SymMatrix) -> f64 {
    assert_eq!(a.dim(), b.dim(), "dimension mismatch");
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
}

/// Factors `m`; any pivot that is not strictly positive and finite yields
/// [`NotPd`].
pub fn cholesky(m: &SymMatrix) -> Result<CholeskyFactor, NotPd> {
    let d = m.dim();
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot -= l[j * d + k] * l[j * d + k];
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(NotPd);
        }
        let ljj = pivot.sqrt();
        l[j * d + j] = ljj;
        for i in (j + 1)..d {
            let (ri, rj) = (&l[i * d..i * d + j], &l[j * d..j * d + j]);
            let s: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
            l[i * d + j] = (m.get(i, j) - s) / ljj;
        }
    }
    Ok(CholeskyFactor { dim: d, lower: l })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.lower(i, i).ln()).sum::<f64>()
    }

    /// Smallest elimination pivot `l_ii²`. Pivots are diagonal entries of
    /// successive Schur complements, so this bounds `λ_min` from above.
    pub fn min_pivot(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.lower(i, i).powi(2))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest elimination pivot `l_ii²`; bounds `λ_max` from below.
    pub fn max_pivot(&self) -> f64 {
        (0..self.dim).map(|i| self.lower(i, i).powi(2)).fold(0.0, f64::max)
    }

    /// `L Lᵀ`
    pub fn reconstruct(&self) -> SymMatrix {
        let d = self.dim;
        SymMatrix::from_fn(d, |i, j| {
            let k = i.min(j) + 1;
            (0..k).map(|t| self.lower(i, t) * self.lower(j, t)).sum()
        })
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        assert_eq!(b.len(), d);
        let mut y = b.to_vec();
        for i in 0..d {
            let s: f64 = (0..i).map(|k| self.lower(i, k) * y[k]).sum();
            y[i] = (y[i] - s) / self.lower(i, i);
        }
        for i in (0..d).rev() {
            let s: f64 = ((i + 1)..d).map(|k| self.lower(k, i) * y[k]).sum();
            y[i] = (y[i] - s) / self.lower(i, i);
        }
        y
    }

    /// Solves `Lᵀ x = b`.
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        assert_eq!(b.len(), d);
        let mut x = b.to_vec();
        for i in (0..d).rev() {
            let s: f64 = ((i + 1)..d).map(|k| self.lower(k, i) * x[k]).sum();
            x[i] = (x[i] - s) / self.lower(i, i);
        }
        x
    }

    /// `L⁻¹ B L⁻ᵀ` for symmetric `B`.
    pub fn whiten(&self, b: &SymMatrix) -> SymMatrix {
        let d = self.dim;
        assert_eq!(b.dim(), d, "dimension mismatch");
        // columns of X = L⁻¹ B, then rows of L⁻¹ Xᵀ
        let forward = |col: &mut [f64]| {
            for i in 0..d {
                let s: f64 = (0..i).map(|k| self.lower(i, k) * col[k]).sum();
                col[i] = (col[i] - s) / self.lower(i, i);
            }
        };
        let mut xt = b.as_slice().to_vec();
        for row in xt.chunks_mut(d) {
            forward(row);
        }
        let mut out = vec![0.0; d * d];
        for j in 0..d {
            let mut col: Vec<f64> = (0..d).map(|i| xt[i * d + j]).collect();
            forward(&mut col);
            for i in 0..d {
                out[i * d + j] = col[i];
            }
        }
        SymMatrix::symmetrize(d, &out)
    }

    /// Inverse of the factored matrix, computed as `L⁻ᵀ L⁻¹`.
    pub fn inverse(&self) -> SymMatrix {
        let d = self.dim;
        // Rows of L⁻¹ (lower triangular).
        let mut linv = vec![0.0; d * d];
        for j in 0..d {
            linv[j * d + j] = 1.0 / self.lower(j, j);
            for i in (j + 1)..d {
                let mut s = 0.0;
                for k in j..i {
                    s += self.lower(i, k) * linv[k * d + j];
                }
                linv[i * d + j] = -s / self.lower(i, i);
            }
        }
        // (L⁻ᵀ L⁻¹)_ij = Σ_{k ≥ max(i,j)} linv[k][i] linv[k][j]
        SymMatrix::from_fn(d, |i, j| {
            (j.max(i)..d)
                .map(|k| linv[k * d + i] * linv[k * d + j])
                .sum()
        })
    }
}

pub fn log_det(f: &CholeskyFactor) -> f64 {
    f.log_det()
}

/// Bregman divergence of `−log det` between `Θ + Δ` and `Θ`:
/// `log det Θ − log det(Θ + Δ) + ⟨Θ⁻¹, Δ⟩`, given factors of both.
///
/// Small steps use the series `Σ_{k≥2} (−1)ᵏ tr(Mᵏ)/k` with `M = L⁻¹ΔL⁻ᵀ`,
/// which keeps relative accuracy where the direct difference cancels.
pub fn log_det_bregman(theta: &CholeskyFactor, moved: &CholeskyFactor, delta: &SymMatrix, inverse: &SymMatrix) -> f64 {
    let m = theta.whiten(delta);
    let norm = fro_norm(&m);
    if norm > 0.25 {
        return theta.log_det() - moved.log_det() + inverse.dot(delta);
    }
    let d = m.dim();
    let mut power = m.clone();
    let mut total = 0.0;
    let mut bound = norm;
    for k in 2..200 {
        power = SymMatrix::symmetrize(d, &power.matmul(&m));
        let term = power.trace() / k as f64;
        total += if k % 2 == 0 { term } else { -term };
        // |tr Mʲ| ≤ ‖M‖ᵏ for every later j
        bound *= norm;
        if bound <= f64::EPSILON * total.abs() {
            break;
        }
    }
    total
}

pub fn spd_inverse(f: &CholeskyFactor) -> SymMatrix {
    f.inverse()
}

/// Central finite differences under the symmetric-pair convention: an
/// off-diagonal probe moves `(i, j)` and `(j, i)` together, so the result is
/// twice the one-sided partial derivative for `i != j`.
pub fn finite_diff_grad(
    f: impl Fn(&SymMatrix) -> f64,
    at: &SymMatrix,
    h: f64,
) -> Result<SymMatrix, NonFiniteValue> {
    assert!(h > 0.0, "finite difference step must be positive");
    let d = at.dim();
    let mut grad = SymMatrix::zeros(d);
    let mut probe = at.clone();
    for i in 0..d {
        for j in i..d {
            let base = at.get(i, j);
            probe.set(i, j, base + h);
            let plus = f(&probe);
            probe.set(i, j, base - h);
            let minus = f(&probe);
            probe.set(i, j, base);
            if !plus.is_finite() || !minus.is_finite() {
                return Err(NonFiniteValue { row: i, col: j });
            }
            grad.set(i, j, (plus - minus) / (2.0 * h));
        }
    }
    Ok(grad)
}
