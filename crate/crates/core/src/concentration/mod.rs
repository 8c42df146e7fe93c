//! Matrix concentration inequalities for sums of i.i.d. p.s.d. random matrices.
//!
//! Two bound families are implemented over the same ensemble:
//!
//! * the two-sided Ahlswede–Winter style bound, parameterized by
//!   [`AwParams`] `(d, δ̄, γ, ρ̄, ε̄, p)` with `γ ε̄² / ρ̄ = 4 ln(2d/δ̄)` and
//!   `ε̄ ∈ (0, 1)`:
//!
//!   ```text
//!   P[ (1-ε̄) γ E[Z] ⪯ Σ Z_i ⪯ (1+ε̄) γ E[Z] ] ≥ 1 - δ̄
//!   ```
//!
//! * the refined one-sided bounds, parameterized by [`GenParams`]
//!   `(d, δ, γ, ρ, ε, p, ζ)` with `r = 1 - ζ²/ρ`, `r γ ε² / ρ = 4 ln(d/δ)`,
//!   `ε ∈ (0, 2]`, `ζ ∈ [0, 1]` and `ρ > ζ²`:
//!
//!   ```text
//!   P[ (1-rε) γ E[Z] ⪯ Σ Z_i ] ≥ 1 - δ
//!   P[ Σ Z_i ⪯ (1+rε) γ E[Z] ] ≥ 1 - δ
//!   ```
//!
//! Both need a certificate `Z ⪯ ρ E[Z]` almost surely; by default the
//! tightest one, [`rho_min`](crate::ensemble::rho_min), is used.
//!
//! Setting `ζ = 0`, `δ̄ = 2δ` and restricting `ε` to `(0, 1)` turns the
//! refined pair into the two-sided bound exactly; see
//! [`GenParams::reduce_to_aw`].

pub mod oracles;

pub use oracles::{
    centered_norm_check, exp_identity_check, exp_sandwich_check, master_tail_rhs,
    mgf_bound_check, mgf_bound_check_dist, whiten, FiniteDistribution, TailSide, Whitening,
    WhiteningResiduals,
};

use crate::ensemble::{self, SamplingDistribution, SensorPool};
use crate::error::{Error, Result};
use crate::symmat::{self, SymMatrix, RANK_TOL};

/// Loewner tolerance used when checking a supplied `ρ` against a pool.
pub const CERTIFICATE_TOL: f64 = 1e-8;

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_probability(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must lie in (0, 1), got {x}"
        )));
    }
    Ok(())
}

fn check_gamma(gamma: usize) -> Result<()> {
    if gamma == 0 {
        return Err(Error::InvalidBudget("gamma must be at least 1".into()));
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "rho must be a finite value >= 1, got {rho}"
        )));
    }
    Ok(())
}

/// `ρ > ζ²` first, then `ζ ∈ [0, 1]`.
fn check_refinement(rho: f64, zeta: f64) -> Result<()> {
    if !(rho > zeta * zeta) {
        return Err(Error::InvalidRefinement {
            rho,
            zeta_sq: zeta * zeta,
        });
    }
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::InvalidParameter(format!(
            "zeta must lie in [0, 1], got {zeta}"
        )));
    }
    Ok(())
}

/// `r(ρ, ζ) = 1 - ζ²/ρ`.
pub fn r_factor(rho: f64, zeta: f64) -> Result<f64> {
    let zeta_sq = zeta * zeta;
    if rho == zeta_sq {
        return Err(Error::Undefined);
    }
    Ok(1.0 - zeta_sq / rho)
}

/// `ε̄ = √(4 ρ̄ ln(2d/δ̄) / γ)`, which must land in `(0, 1)`.
pub fn solve_epsilon_aw(d: usize, delta_bar: f64, gamma: usize, rho_bar: f64) -> Result<f64> {
    check_dim(d)?;
    check_probability("delta_bar", delta_bar)?;
    check_gamma(gamma)?;
    check_rho(rho_bar)?;
    let eps = (4.0 * rho_bar * (2.0 * d as f64 / delta_bar).ln() / gamma as f64).sqrt();
    if eps >= 1.0 {
        return Err(Error::InsufficientSamples {
            gamma,
            required: sample_complexity_aw(d, delta_bar, rho_bar),
        });
    }
    Ok(eps)
}

/// `ε = √(4 ρ ln(d/δ) / (r γ))`, which must land in `(0, 2]`.
///
/// The error reports the exact boundary `ρ ln(d/δ) / r` at which `ε = 2`.
pub fn solve_epsilon_gen(
    d: usize,
    delta: f64,
    gamma: usize,
    rho: f64,
    zeta: f64,
) -> Result<f64> {
    check_dim(d)?;
    check_probability("delta", delta)?;
    check_gamma(gamma)?;
    check_rho(rho)?;
    check_refinement(rho, zeta)?;
    let r = r_factor(rho, zeta)?;
    let log_term = (d as f64 / delta).ln();
    let eps = (4.0 * rho * log_term / (r * gamma as f64)).sqrt();
    if eps > 2.0 {
        return Err(Error::InsufficientSamples {
            gamma,
            required: rho * log_term / r,
        });
    }
    Ok(eps)
}

/// `κ̄ = 4 ρ̄ ln(2d/δ̄)`; the two-sided bound needs `γ > κ̄`.
pub fn sample_complexity_aw(d: usize, delta_bar: f64, rho_bar: f64) -> f64 {
    4.0 * rho_bar * (2.0 * d as f64 / delta_bar).ln()
}

/// `κ = ρ² / (ρ - ζ²) · 2 ln(d/δ)`.
///
/// This is the published complexity. Inverting the refined equality at
/// `ε = 2` gives the smaller boundary `ρ²/(ρ - ζ²) · ln(d/δ)`, i.e. `κ/2`,
/// which is what [`solve_epsilon_gen`] enforces. `κ` is therefore
/// sufficient but not necessary. At `ζ = 0` it satisfies
/// `κ̄ = 2κ + 4ρ ln 2` when `δ̄ = δ` and `ρ̄ = ρ`.
pub fn sample_complexity_gen(d: usize, delta: f64, rho: f64, zeta: f64) -> Result<f64> {
    check_refinement(rho, zeta)?;
    Ok(rho * rho / (rho - zeta * zeta) * 2.0 * (d as f64 / delta).ln())
}

/// `(ρ - ζ²) · 4 ln(d/δ)`; the refined lower bound is non-trivial iff `γ` strictly exceeds it.
pub fn nontriviality_threshold(d: usize, delta: f64, rho: f64, zeta: f64) -> f64 {
    (rho - zeta * zeta) * 4.0 * (d as f64 / delta).ln()
}

fn certify(pool: &SensorPool, p: &SamplingDistribution, rho: f64) -> Result<()> {
    let ez = ensemble::expected_info(pool, p)?;
    let bound = ez.scale(rho);
    let infos = pool.info_matrices();
    for i in p.support() {
        if !symmat::loewner_leq(&infos[i], &bound, CERTIFICATE_TOL)? {
            return Err(Error::HypothesisViolated(format!(
                "sensor {i} violates Z <= {rho} E[Z]"
            )));
        }
    }
    Ok(())
}

/// Parameters of the two-sided bound, with `ε̄` solved from the equality.
#[derive(Debug, Clone, PartialEq)]
pub struct AwParams {
    pub d: usize,
    pub delta_bar: f64,
    pub gamma: usize,
    pub rho_bar: f64,
    pub epsilon_bar: f64,
    pub p: SamplingDistribution,
}

impl AwParams {
    pub fn solve(
        d: usize,
        delta_bar: f64,
        gamma: usize,
        rho_bar: f64,
        p: SamplingDistribution,
    ) -> Result<Self> {
        let epsilon_bar = solve_epsilon_aw(d, delta_bar, gamma, rho_bar)?;
        Ok(Self {
            d,
            delta_bar,
            gamma,
            rho_bar,
            epsilon_bar,
            p,
        })
    }

    /// Solves for a pool, checking `𝒵_i ⪯ ρ̄ E[Z]` on the support.
    /// `rho_bar = None` uses the tightest certificate.
    pub fn for_pool(
        pool: &SensorPool,
        p: &SamplingDistribution,
        delta_bar: f64,
        gamma: usize,
        rho_bar: Option<f64>,
    ) -> Result<Self> {
        let rho_bar = match rho_bar {
            Some(r) => {
                certify(pool, p, r)?;
                r
            }
            None => ensemble::rho_min(pool, p, RANK_TOL)?,
        };
        Self::solve(pool.dim(), delta_bar, gamma, rho_bar, p.clone())
    }

    /// Relative residual of `γ ε̄² / ρ̄ = 4 ln(2d/δ̄)`.
    pub fn equality_residual(&self) -> f64 {
        let lhs = self.gamma as f64 * self.epsilon_bar.powi(2) / self.rho_bar;
        let rhs = 4.0 * (2.0 * self.d as f64 / self.delta_bar).ln();
        (lhs - rhs).abs() / rhs
    }

    pub fn kappa(&self) -> f64 {
        sample_complexity_aw(self.d, self.delta_bar, self.rho_bar)
    }
}

/// Parameters of the refined one-sided bounds, with `ε` solved from the equality.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub d: usize,
    pub delta: f64,
    pub gamma: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub p: SamplingDistribution,
    pub zeta: f64,
    pub r: f64,
}

impl GenParams {
    pub fn solve(
        d: usize,
        delta: f64,
        gamma: usize,
        rho: f64,
        zeta: f64,
        p: SamplingDistribution,
    ) -> Result<Self> {
        let epsilon = solve_epsilon_gen(d, delta, gamma, rho, zeta)?;
        let r = r_factor(rho, zeta)?;
        Ok(Self {
            d,
            delta,
            gamma,
            rho,
            epsilon,
            p,
            zeta,
            r,
        })
    }

    pub fn for_pool(
        pool: &SensorPool,
        p: &SamplingDistribution,
        delta: f64,
        gamma: usize,
        zeta: f64,
        rho: Option<f64>,
    ) -> Result<Self> {
        let rho = match rho {
            Some(r) => {
                certify(pool, p, r)?;
                r
            }
            None => ensemble::rho_min(pool, p, RANK_TOL)?,
        };
        Self::solve(pool.dim(), delta, gamma, rho, zeta, p.clone())
    }

    /// Relative residual of `r γ ε² / ρ = 4 ln(d/δ)`.
    pub fn equality_residual(&self) -> f64 {
        let lhs = self.r * self.gamma as f64 * self.epsilon.powi(2) / self.rho;
        let rhs = 4.0 * (self.d as f64 / self.delta).ln();
        (lhs - rhs).abs() / rhs
    }

    pub fn lower_scale(&self) -> f64 {
        (1.0 - self.r * self.epsilon) * self.gamma as f64
    }

    pub fn upper_scale(&self) -> f64 {
        (1.0 + self.r * self.epsilon) * self.gamma as f64
    }

    pub fn nontriviality_threshold(&self) -> f64 {
        nontriviality_threshold(self.d, self.delta, self.rho, self.zeta)
    }

    pub fn lower_trivial(&self) -> bool {
        self.gamma as f64 <= self.nontriviality_threshold() || self.lower_scale() <= 0.0
    }

    pub fn kappa(&self) -> Result<f64> {
        sample_complexity_gen(self.d, self.delta, self.rho, self.zeta)
    }

    /// The two-sided parameters `(d, 2δ, γ, ρ, ε, p)` implied at `ζ = 0`, `ε ∈ (0, 1)`.
    pub fn reduce_to_aw(&self) -> Result<AwParams> {
        if self.zeta != 0.0 {
            return Err(Error::InvalidParameter(
                "reduction requires zeta = 0".into(),
            ));
        }
        if !(self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(
                "reduction requires epsilon in (0, 1)".into(),
            ));
        }
        check_probability("delta_bar", 2.0 * self.delta)?;
        Ok(AwParams {
            d: self.d,
            delta_bar: 2.0 * self.delta,
            gamma: self.gamma,
            rho_bar: self.rho,
            epsilon_bar: self.epsilon,
            p: self.p.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// A semi-definite envelope `scale · E[Z]` with its confidence.
///
/// `trivial` marks a lower envelope whose scale is not positive; such a
/// bound holds vacuously and cannot feed the steady-state recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct SdBound {
    pub matrix: SymMatrix,
    pub scale: f64,
    pub confidence: f64,
    pub side: Side,
    pub two_sided: bool,
    pub trivial: bool,
}

fn check_ez(d: usize, ez: &SymMatrix) -> Result<()> {
    if ez.dim() != d {
        return Err(Error::DimMismatch {
            expected: d,
            got: ez.dim(),
        });
    }
    Ok(())
}

/// `((1-ε̄)γ E[Z], (1+ε̄)γ E[Z])`, jointly at confidence `1 - δ̄`.
pub fn aw_bounds(params: &AwParams, ez: &SymMatrix) -> Result<(SdBound, SdBound)> {
    check_ez(params.d, ez)?;
    let g = params.gamma as f64;
    let confidence = 1.0 - params.delta_bar;
    let lower_scale = (1.0 - params.epsilon_bar) * g;
    let upper_scale = (1.0 + params.epsilon_bar) * g;
    Ok((
        SdBound {
            matrix: ez.scale(lower_scale),
            scale: lower_scale,
            confidence,
            side: Side::Lower,
            two_sided: true,
            trivial: lower_scale <= 0.0,
        },
        SdBound {
            matrix: ez.scale(upper_scale),
            scale: upper_scale,
            confidence,
            side: Side::Upper,
            two_sided: true,
            trivial: upper_scale <= 0.0,
        },
    ))
}

/// `((1-rε)γ E[Z], (1+rε)γ E[Z])`, each one-sided at confidence `1 - δ`.
///
/// The lower envelope is returned even when trivial so that callers can
/// reject it explicitly.
pub fn gen_bounds(params: &GenParams, ez: &SymMatrix) -> Result<(SdBound, SdBound)> {
    check_ez(params.d, ez)?;
    check_refinement(params.rho, params.zeta)?;
    let confidence = 1.0 - params.delta;
    let lower_scale = params.lower_scale();
    let upper_scale = params.upper_scale();
    Ok((
        SdBound {
            matrix: ez.scale(lower_scale),
            scale: lower_scale,
            confidence,
            side: Side::Lower,
            two_sided: false,
            trivial: params.lower_trivial(),
        },
        SdBound {
            matrix: ez.scale(upper_scale),
            scale: upper_scale,
            confidence,
            side: Side::Upper,
            two_sided: false,
            trivial: upper_scale <= 0.0,
        },
    ))
}
