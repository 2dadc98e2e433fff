//! Dense vector/matrix arithmetic and the tolerance constants shared by the
//! numeric modules.
//!
//! All values are 64-bit floats and are validated to be finite at
//! construction; a NaN or infinity inside a weight matrix would silently
//! corrupt every constraint built from it.

use crate::error::{Error, Result};

/// A dense column vector of finite `f64` entries, at least one entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    entries: Vec<f64>,
}

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("vector must have dim >= 1".into()));
        }
        if !entries.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("vector entry".into()));
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.entries.iter()
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(entries: Vec<f64>) -> Result<Self> {
        Vector::new(entries)
    }
}

/// A dense row-major matrix of finite `f64` entries, both dims at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(
                "matrix must have rows >= 1 and cols >= 1".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data length".into(),
                expected: rows * cols,
                found: data.len(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from a row-of-rows layout, validating rectangularity.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("matrix must have rows >= 1".into()));
        }
        let cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: format!("matrix row {i}"),
                    expected: cols,
                    found: r.len(),
                });
            }
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Matrix::new(n, n, data).expect("identity is finite and non-empty")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Row `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Matrix-vector product with ascending-index accumulation.
///
/// The fixed summation order keeps witness replay deterministic.
pub fn mat_vec(w: &Matrix, x: &Vector) -> Result<Vector> {
    if w.cols() != x.dim() {
        return Err(Error::DimensionMismatch {
            context: "mat_vec".into(),
            expected: w.cols(),
            found: x.dim(),
        });
    }
    let mut out = Vec::with_capacity(w.rows());
    for i in 0..w.rows() {
        out.push(dot(w.row(i), x.as_slice()));
    }
    Vector::new(out)
}

/// Dot product with ascending-index accumulation.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Componentwise `max(x, 0)`.
pub fn relu_vec(x: &Vector) -> Vector {
    let out: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
    Vector::new(out).expect("relu preserves dim and finiteness")
}

/// Tolerance knobs shared by the solver, encoder, and search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum constraint violation accepted when declaring an LP point
    /// feasible. One order below the epsilon budget so solver noise cannot
    /// masquerade as epsilon slack.
    pub feas_tol: f64,
    /// Distance from an integer below which a binary relaxation value counts
    /// as integral.
    pub int_tol: f64,
    /// Total budget for the epsilon relaxation terms linking layers.
    pub eps_budget: f64,
}

impl Tolerances {
    pub const DEFAULT_FEAS_TOL: f64 = 1e-7;
    pub const DEFAULT_INT_TOL: f64 = 1e-6;
    pub const DEFAULT_EPS_BUDGET: f64 = 1e-6;
    /// Larger budget preset for problems with binary-valued inputs.
    pub const BINARY_INPUT_EPS_BUDGET: f64 = 1e-4;

    pub fn new(feas_tol: f64, int_tol: f64, eps_budget: f64) -> Result<Self> {
        if !(feas_tol > 0.0 && int_tol > 0.0 && eps_budget > 0.0) {
            return Err(Error::InvalidParameter(
                "tolerances must be strictly positive".into(),
            ));
        }
        if int_tol >= 0.5 {
            return Err(Error::InvalidParameter(
                format!("int_tol must be < 0.5, got {int_tol}"),
            ));
        }
        Ok(Self {
            feas_tol,
            int_tol,
            eps_budget,
        })
    }

    /// Same tolerances with a different epsilon budget.
    pub fn with_eps_budget(self, eps_budget: f64) -> Result<Self> {
        Tolerances::new(self.feas_tol, self.int_tol, eps_budget)
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas_tol: Self::DEFAULT_FEAS_TOL,
            int_tol: Self::DEFAULT_INT_TOL,
            eps_budget: Self::DEFAULT_EPS_BUDGET,
        }
    }
}
