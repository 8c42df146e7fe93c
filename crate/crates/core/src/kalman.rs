//! Discrete-time LTI model, the one-step covariance map
//! `f(Λ, Ξ) = ((AΛAᵀ + Q)⁻¹ + Ξ)⁻¹` and its fixed points.
//!
//! `Ξ` plays the role of the information sum `Σ_{i∈𝒮} 𝒵_i`; the same
//! recursion with `Ξ` replaced by a scaled `γ E[Z]` yields the upper and lower
//! steady-state envelopes.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::concentration::{AwParams, GenParams};
use crate::error::{Error, Result};
use crate::symmat::{self, SymMatrix, PSD_TOL};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Eigenvalues with modulus at least `1 - MARGINAL_TOL` are treated as unstable.
const MARGINAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    q: SymMatrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, q: SymMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidMatrix(format!(
                "state matrix is {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix("state matrix has non-finite entries".into()));
        }
        if q.dim() != a.nrows() {
            return Err(Error::DimMismatch {
                expected: a.nrows(),
                got: q.dim(),
            });
        }
        let min = symmat::min_eig(&q)?;
        if min <= 0.0 {
            return Err(Error::NotPsd { min_eig: min });
        }
        Ok(Self { a, q })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn q(&self) -> &SymMatrix {
        &self.q
    }

    pub fn to_json(&self) -> String {
        let raw = RawSystem {
            a: self.a.row_iter().map(|r| r.iter().copied().collect()).collect(),
            q: self.q.to_rows(),
        };
        serde_json::to_string_pretty(&raw).expect("system serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawSystem =
            serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let n = raw.a.len();
        if n == 0 || raw.a.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("state matrix must be square and non-empty".into()));
        }
        let a = DMatrix::from_fn(n, n, |i, j| raw.a[i][j]);
        Self::new(a, SymMatrix::from_rows(&raw.q)?)
    }
}

#[derive(Debug, Clone)]
pub struct SteadyStateResult {
    pub matrix: SymMatrix,
    pub iterations: usize,
    pub residual: f64,
}

fn check_dim(sys: &LtiSystem, m: &SymMatrix) -> Result<()> {
    if m.dim() != sys.dim() {
        return Err(Error::DimMismatch {
            expected: sys.dim(),
            got: m.dim(),
        });
    }
    Ok(())
}

fn check_psd(m: &SymMatrix) -> Result<()> {
    let e = symmat::eig_sym(m)?;
    e.psd_gate()?;
    Ok(())
}

fn step(sys: &LtiSystem, lambda: &SymMatrix, xi: &SymMatrix) -> Result<SymMatrix> {
    let predicted = &lambda.congruence(&sys.a)? + &sys.q;
    let info = &symmat::inverse_pd(&predicted)? + xi;
    symmat::inverse_pd(&info)
}

/// `f(Λ, Ξ) = ((AΛAᵀ + Q)⁻¹ + Ξ)⁻¹`.
pub fn f_map(sys: &LtiSystem, lambda: &SymMatrix, xi: &SymMatrix) -> Result<SymMatrix> {
    check_dim(sys, lambda)?;
    check_dim(sys, xi)?;
    check_psd(xi)?;
    step(sys, lambda, xi)
}

/// One filtered-covariance update with measurement information `Ξ`.
pub fn riccati_step(sys: &LtiSystem, p: &SymMatrix, xi: &SymMatrix) -> Result<SymMatrix> {
    check_psd(p)?;
    f_map(sys, p, xi)
}

fn relative_residual(next: &SymMatrix, prev: &SymMatrix) -> Result<f64> {
    let diff = next.try_sub(prev)?;
    Ok(symmat::spectral_norm(&diff)? / symmat::spectral_norm(next)?.max(1.0))
}

/// Iterates `P ← f(P, Ξ)` from `p_init` until the relative step falls to `tol`.
pub fn steady_state(
    sys: &LtiSystem,
    xi: &SymMatrix,
    p_init: &SymMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<SteadyStateResult> {
    check_dim(sys, xi)?;
    check_dim(sys, p_init)?;
    check_psd(xi)?;
    check_psd(p_init)?;
    let mut p = p_init.clone();
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let next = step(sys, &p, xi)?;
        residual = relative_residual(&next, &p)?;
        p = next;
        if residual <= tol {
            return Ok(SteadyStateResult {
                matrix: p,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
        last: Box::new(p),
    })
}

/// [`steady_state`] from `P = 0` with the default tolerance and budget.
pub fn steady_state_default(sys: &LtiSystem, xi: &SymMatrix) -> Result<SteadyStateResult> {
    steady_state(
        sys,
        xi,
        &SymMatrix::zeros(sys.dim()),
        DEFAULT_TOL,
        DEFAULT_MAX_ITER,
    )
}

fn numeric_rank(m: DMatrix<Complex<f64>>, rank_tol: f64) -> usize {
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let cut = rank_tol * top.max(1.0);
    sv.iter().filter(|&&s| s > cut).count()
}

/// PBH test: `rank [λI − A; C] = d` at every eigenvalue of `A` with `|λ| ≥ 1`.
pub fn detectability_check(a: &DMatrix<f64>, c_rows: &[Vec<f64>], rank_tol: f64) -> Result<bool> {
    if !a.is_square() {
        return Err(Error::DimMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let d = a.nrows();
    if let Some(row) = c_rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimMismatch {
            expected: d,
            got: row.len(),
        });
    }
    let m = c_rows.len();
    for lambda in a.complex_eigenvalues().iter() {
        if lambda.norm() < 1.0 - MARGINAL_TOL {
            continue;
        }
        let stacked = DMatrix::from_fn(d + m, d, |i, j| {
            if i < d {
                let diag = if i == j { *lambda } else { Complex::new(0.0, 0.0) };
                diag - Complex::new(a[(i, j)], 0.0)
            } else {
                Complex::new(c_rows[i - d][j], 0.0)
            }
        });
        if numeric_rank(stacked, rank_tol) < d {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Steady-state envelopes from the two-sided bound:
/// `Ū` solves `Λ = f(Λ, (1-ε̄)γE[Z])`, `L̄` solves `Λ = f(Λ, (1+ε̄)γE[Z])`.
///
/// Returned as `(upper, lower)`.
pub fn ss_bounds_aw(
    sys: &LtiSystem,
    params: &AwParams,
    ez: &SymMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(SteadyStateResult, SteadyStateResult)> {
    let g = params.gamma as f64;
    let zero = SymMatrix::zeros(sys.dim());
    let upper = steady_state(sys, &ez.scale((1.0 - params.epsilon_bar) * g), &zero, tol, max_iter)?;
    let lower = steady_state(sys, &ez.scale((1.0 + params.epsilon_bar) * g), &zero, tol, max_iter)?;
    Ok((upper, lower))
}

/// Steady-state envelopes from the refined bounds:
/// `U` from `(1-rε)γE[Z]`, `L` from `(1+rε)γE[Z]`, each one-sided.
///
/// Fails with [`Error::TrivialLowerScale`] when `1 - rε ≤ 0`.
pub fn ss_bounds_gen(
    sys: &LtiSystem,
    params: &GenParams,
    ez: &SymMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(SteadyStateResult, SteadyStateResult)> {
    let lower_factor = 1.0 - params.r * params.epsilon;
    if lower_factor <= 0.0 {
        return Err(Error::TrivialLowerScale {
            value: lower_factor,
        });
    }
    let zero = SymMatrix::zeros(sys.dim());
    let upper = steady_state(sys, &ez.scale(params.lower_scale()), &zero, tol, max_iter)?;
    let lower = steady_state(sys, &ez.scale(params.upper_scale()), &zero, tol, max_iter)?;
    Ok((upper, lower))
}

/// `true` when `a ⪯ b` under the default p.s.d. tolerance.
pub fn ordered(a: &SymMatrix, b: &SymMatrix) -> Result<bool> {
    symmat::loewner_leq(a, b, PSD_TOL)
}
