//! Dense symmetric matrices and the spectral primitives built on them.
//!
//! Every function here works through a symmetric eigendecomposition, so the
//! results (inverses, square roots, exponentials, projectors) are symmetric
//! by construction and stay that way through long fixed-point iterations.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for positive semi-definiteness: `λ_min ≥ -PSD_TOL·max(1, λ_max)`.
pub const PSD_TOL: f64 = 1e-9;

/// Relative eigenvalue cutoff below which a direction is treated as outside the range.
pub const RANK_TOL: f64 = 1e-12;

/// A real symmetric `d × d` matrix, `d ≥ 1`.
///
/// Inputs are symmetrized as `(M + Mᵀ)/2` on construction, so
/// `entries(i, j) == entries(j, i)` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidMatrix(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without validation; callers guarantee a non-empty square input.
    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        let mut s = (m + t) * 0.5;
        // Averaging is already symmetric in exact arithmetic; copy the upper
        // triangle down so that it is symmetric in floating point too.
        let d = s.nrows();
        for j in 0..d {
            for i in (j + 1)..d {
                s[(i, j)] = s[(j, i)];
            }
        }
        Self { m: s }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has length {}, expected {d}",
                    row.len()
                )));
            }
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn zeros(d: usize) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        Self { m: DMatrix::zeros(d, d) }
    }

    pub fn identity(d: usize) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        Self { m: DMatrix::identity(d, d) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "dimension must be at least 1");
        Self {
            m: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    /// `scale · c cᵀ`.
    pub fn outer(c: &[f64], scale: f64) -> Self {
        assert!(!c.is_empty(), "dimension must be at least 1");
        let v = DVector::from_column_slice(c);
        Self::symmetrized(&v * v.transpose() * scale)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.m[(i, j)]).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|x| x.is_finite())
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: &self.m * s }
    }

    /// `T · self · Tᵀ` for a square `T` of the same dimension.
    pub fn congruence(&self, t: &DMatrix<f64>) -> Result<Self> {
        if t.nrows() != self.dim() || t.ncols() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: t.nrows().max(t.ncols()),
            });
        }
        Ok(Self::symmetrized(t * &self.m * t.transpose()))
    }

    /// `self · inner · self`, which is symmetric because `self` is.
    pub fn sandwich(&self, inner: &SymMatrix) -> Result<Self> {
        check_dims(self, inner)?;
        Ok(Self::symmetrized(&self.m * &inner.m * &self.m))
    }

    /// Entrywise maximum absolute difference.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn try_add(&self, other: &SymMatrix) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self {
            m: &self.m + &other.m,
        })
    }

    pub fn try_sub(&self, other: &SymMatrix) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self {
            m: &self.m - &other.m,
        })
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        self.try_add(rhs).expect("dimension mismatch in SymMatrix addition")
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;

    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        self.try_sub(rhs)
            .expect("dimension mismatch in SymMatrix subtraction")
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;

    fn mul(self, rhs: f64) -> SymMatrix {
        self.scale(rhs)
    }
}

pub(crate) fn check_dims(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomp {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// `Q · diag(f(λ)) · Qᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (j, lam) in self.eigenvalues.iter().enumerate() {
            let v = f(*lam);
            scaled.column_mut(j).scale_mut(v);
        }
        SymMatrix::symmetrized(scaled * q.transpose())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map(|x| x)
    }

    /// `NotPsd` unless `λ_min ≥ −PSD_TOL·max(1, λ_max)`.
    pub fn psd_gate(&self) -> Result<()> {
        let floor = -PSD_TOL * self.max().max(1.0);
        if self.min() < floor {
            return Err(Error::NotPsd {
                min_eig: self.min(),
            });
        }
        Ok(())
    }
}

pub fn eig_sym(m: &SymMatrix) -> Result<EigenDecomp> {
    if !m.is_finite() {
        return Err(Error::InvalidMatrix("non-finite entries".into()));
    }
    let eig = m.m.clone().symmetric_eigen();
    let d = m.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(d, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(d, d);
    for (j, &k) in order.iter().enumerate() {
        eigenvectors.set_column(j, &eig.eigenvectors.column(k));
    }
    Ok(EigenDecomp {
        eigenvalues,
        eigenvectors,
    })
}

pub fn max_eig(m: &SymMatrix) -> Result<f64> {
    Ok(eig_sym(m)?.max())
}

pub fn min_eig(m: &SymMatrix) -> Result<f64> {
    Ok(eig_sym(m)?.min())
}

pub fn spectral_norm(m: &SymMatrix) -> Result<f64> {
    let e = eig_sym(m)?;
    Ok(e.min().abs().max(e.max().abs()))
}

/// Loewner order test `A ⪯ B`: `λ_min(B − A) ≥ −tol·max(1, ‖B − A‖)`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    let diff = b.try_sub(a)?;
    let e = eig_sym(&diff)?;
    let norm = e.min().abs().max(e.max().abs());
    Ok(e.min() >= -tol * norm.max(1.0))
}

pub fn is_psd(m: &SymMatrix) -> Result<bool> {
    Ok(eig_sym(m)?.psd_gate().is_ok())
}

fn rank_cutoff(e: &EigenDecomp, rank_tol: f64) -> f64 {
    rank_tol * e.max().max(0.0)
}

/// `M^{+/2} := (M⁺)^{1/2}`; eigenvalues above `rank_tol·λ_max` map to `λ^{-1/2}`, the rest to zero.
pub fn pinv_sqrt(m: &SymMatrix, rank_tol: f64) -> Result<SymMatrix> {
    let e = eig_sym(m)?;
    e.psd_gate()?;
    let cut = rank_cutoff(&e, rank_tol);
    Ok(e.map(|l| if l > cut && l > 0.0 { l.sqrt().recip() } else { 0.0 }))
}

/// Moore–Penrose pseudo-inverse of a p.s.d. matrix.
pub fn pinv(m: &SymMatrix, rank_tol: f64) -> Result<SymMatrix> {
    let e = eig_sym(m)?;
    e.psd_gate()?;
    let cut = rank_cutoff(&e, rank_tol);
    Ok(e.map(|l| if l > cut && l > 0.0 { l.recip() } else { 0.0 }))
}

/// Principal square root of a p.s.d. matrix.
pub fn sqrt_psd(m: &SymMatrix) -> Result<SymMatrix> {
    let e = eig_sym(m)?;
    e.psd_gate()?;
    Ok(e.map(|l| l.max(0.0).sqrt()))
}

/// `M M⁺`, the orthogonal projector onto `range(M)`.
pub fn range_projector(m: &SymMatrix, rank_tol: f64) -> Result<SymMatrix> {
    let e = eig_sym(m)?;
    e.psd_gate()?;
    let cut = rank_cutoff(&e, rank_tol);
    Ok(e.map(|l| if l > cut && l > 0.0 { 1.0 } else { 0.0 }))
}

pub fn matrix_exp(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(eig_sym(m)?.map(f64::exp))
}

/// Inverse of a positive definite matrix.
pub fn inverse_pd(m: &SymMatrix) -> Result<SymMatrix> {
    let e = eig_sym(m)?;
    if e.min() <= 0.0 {
        return Err(Error::NotPsd { min_eig: e.min() });
    }
    Ok(e.map(f64::recip))
}
