//! Exact finite-support checks of the intermediate facts behind the refined
//! bound: the master tail inequality, the mgf bound for a whitened and
//! centered ensemble, the matrix exponential identities, and the
//! pseudo-inverse whitening that maps `Z` onto `Y` with `E[Y]` a projector.
//!
//! Expectations are computed by enumerating the support, never by sampling.

use nalgebra::DMatrix;

use crate::ensemble::{self, SamplingDistribution, SensorPool, RANGE_TOL, SIMPLEX_TOL};
use crate::error::{Error, Result};
use crate::symmat::{self, SymMatrix, PSD_TOL};

/// Relative slack on scalar inequalities evaluated in floating point.
const CHECK_SLACK: f64 = 1e-12;

/// A random symmetric matrix with finite support.
#[derive(Debug, Clone)]
pub struct FiniteDistribution {
    support: Vec<SymMatrix>,
    probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(support: Vec<SymMatrix>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidParameter("empty support".into()));
        }
        if support.len() != probs.len() {
            return Err(Error::DimMismatch {
                expected: support.len(),
                got: probs.len(),
            });
        }
        let d = support[0].dim();
        if let Some(m) = support.iter().find(|m| m.dim() != d) {
            return Err(Error::DimMismatch {
                expected: d,
                got: m.dim(),
            });
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidDistribution("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { support, probs })
    }

    pub fn dim(&self) -> usize {
        self.support[0].dim()
    }

    pub fn support(&self) -> &[SymMatrix] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `E[g(X)]` by enumeration.
    pub fn expect(&self, g: impl Fn(&SymMatrix) -> Result<SymMatrix>) -> Result<SymMatrix> {
        let d = self.dim();
        let mut acc = DMatrix::<f64>::zeros(d, d);
        for (m, &w) in self.support.iter().zip(&self.probs) {
            if w > 0.0 {
                acc += g(m)?.as_matrix() * w;
            }
        }
        SymMatrix::new(acc)
    }

    pub fn mean(&self) -> Result<SymMatrix> {
        self.expect(|m| Ok(m.clone()))
    }

    fn supported(&self) -> impl Iterator<Item = &SymMatrix> {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(_, &w)| w > 0.0)
            .map(|(m, _)| m)
    }
}

/// Which tail of `S_γ = Σ X_i` is bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    /// `P[-S_γ ⋠ tI] ≤ d e^{-λt} Π ‖E[e^{-λX_i}]‖`.
    Lower,
    /// `P[S_γ ⋠ tI] ≤ d e^{-λt} Π ‖E[e^{λX_i}]‖`.
    Upper,
}

/// Right-hand side of the master tail inequality for `γ` i.i.d. copies of `dist`.
pub fn master_tail_rhs(
    dist: &FiniteDistribution,
    gamma: usize,
    lambda: f64,
    t: f64,
    side: TailSide,
) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let sign = match side {
        TailSide::Lower => -1.0,
        TailSide::Upper => 1.0,
    };
    let mgf = dist.expect(|x| symmat::matrix_exp(&x.scale(sign * lambda)))?;
    let norm = symmat::spectral_norm(&mgf)?;
    let log_rhs = (dist.dim() as f64).ln() - lambda * t + gamma as f64 * norm.ln();
    Ok(log_rhs.exp())
}

fn check_upper_bounded(dist: &FiniteDistribution, rho: f64) -> Result<()> {
    for (i, y) in dist.support().iter().enumerate() {
        let e = symmat::eig_sym(y)?;
        if e.min() < -PSD_TOL * e.max().max(1.0) {
            return Err(Error::HypothesisViolated(format!(
                "support point {i} is not p.s.d."
            )));
        }
        if e.max() > rho * (1.0 + PSD_TOL) {
            return Err(Error::HypothesisViolated(format!(
                "support point {i} has top eigenvalue {} > rho = {rho}",
                e.max()
            )));
        }
    }
    Ok(())
}

/// `‖𝒴_i - E[Y]‖ ≤ ρ` for every support point, given `0 ⪯ Y ⪯ ρI`.
pub fn centered_norm_check(dist: &FiniteDistribution, rho: f64) -> Result<bool> {
    if !(rho > 0.0) {
        return Err(Error::HypothesisViolated(format!("rho = {rho} must be positive")));
    }
    check_upper_bounded(dist, rho)?;
    let mean = dist.mean()?;
    for y in dist.supported() {
        if symmat::spectral_norm(&(y - &mean))? > rho * (1.0 + CHECK_SLACK) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `‖e^X‖ = e^{‖X‖}` for p.s.d. `X`, to `1e-9` relative.
pub fn exp_identity_check(x: &SymMatrix) -> Result<bool> {
    let e = symmat::eig_sym(x)?;
    if e.min() < -PSD_TOL * e.max().max(1.0) {
        return Err(Error::NotPsd { min_eig: e.min() });
    }
    let norm = e.min().abs().max(e.max().abs());
    let lhs = symmat::spectral_norm(&symmat::matrix_exp(x)?)?;
    let rhs = norm.exp();
    Ok((lhs - rhs).abs() <= 1e-9 * rhs)
}

/// `I + X ⪯ e^X ⪯ I + X + X²` for symmetric `X` with `‖X‖ ≤ 1`, at Loewner tolerance `tol`.
pub fn exp_sandwich_check(x: &SymMatrix, tol: f64) -> Result<bool> {
    let norm = symmat::spectral_norm(x)?;
    if norm > 1.0 + CHECK_SLACK {
        return Err(Error::HypothesisViolated(format!(
            "‖X‖ = {norm} exceeds 1"
        )));
    }
    let id = SymMatrix::identity(x.dim());
    let exp = symmat::matrix_exp(x)?;
    let linear = &id + x;
    let upper = &linear + &x.sandwich(&id)?;
    Ok(symmat::loewner_leq(&linear, &exp, tol)? && symmat::loewner_leq(&exp, &upper, tol)?)
}

/// mgf bound on a whitened ensemble `Y`:
/// with `X = (Y - E[Y])/ρ` and `ρ̃ = 1/ρ - ζ²/ρ²`, checks
/// `‖E[e^{±λX}]‖ ≤ e^{λ²ρ̃}` for both signs.
///
/// Hypotheses: `λ ∈ [0, 1]`, `Y ⪯ ρI`, `ζ 𝓘 ⪯ E[Y] ⪯ 𝓘` with `𝓘` the range
/// projector of `E[Y]`, and `ρ ≥ ζ²`.
pub fn mgf_bound_check_dist(
    dist: &FiniteDistribution,
    rho: f64,
    zeta: f64,
    lambda: f64,
) -> Result<bool> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    if !(rho > 0.0) || !(0.0..=1.0).contains(&zeta) || rho < zeta * zeta {
        return Err(Error::HypothesisViolated(format!(
            "need rho > 0, zeta in [0, 1] and rho >= zeta^2 (rho = {rho}, zeta = {zeta})"
        )));
    }
    check_upper_bounded(dist, rho)?;
    let mean = dist.mean()?;
    let proj = symmat::range_projector(&mean, symmat::RANK_TOL)?;
    if !symmat::loewner_leq(&proj.scale(zeta), &mean, PSD_TOL)?
        || !symmat::loewner_leq(&mean, &proj, PSD_TOL)?
    {
        return Err(Error::HypothesisViolated(format!(
            "E[Y] is not sandwiched between {zeta}·I_y and I_y"
        )));
    }

    let rho_tilde = 1.0 / rho - zeta * zeta / (rho * rho);
    let bound = (lambda * lambda * rho_tilde).exp();
    for sign in [-1.0, 1.0] {
        let mgf = dist.expect(|y| {
            let x = (y - &mean).scale(sign * lambda / rho);
            symmat::matrix_exp(&x)
        })?;
        if symmat::spectral_norm(&mgf)? > bound * (1.0 + CHECK_SLACK) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// [`mgf_bound_check_dist`] on the whitening of `(pool, p)`.
pub fn mgf_bound_check(
    pool: &SensorPool,
    p: &SamplingDistribution,
    rho: f64,
    zeta: f64,
    lambda: f64,
) -> Result<bool> {
    let w = whiten(pool, p, symmat::RANK_TOL)?;
    mgf_bound_check_dist(&w.distribution, rho, zeta, lambda)
}

/// Maximum entrywise residuals of the whitening identities.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhiteningResiduals {
    /// `𝓘_z = Z̃^{+/2} Z̃ Z̃^{+/2} = Z̃ Z̃⁺ Z̃ Z̃⁺`.
    pub projector: f64,
    /// `𝓘_z = Z̃^{1/2} Z̃^{+/2} = Z̃^{+/2} Z̃^{1/2}`.
    pub square_root: f64,
    /// `𝓘_y = Z̃^{+/2} Z̃ Z̃^{+/2}`.
    pub whitened_projector: f64,
    /// `E[Y] = 𝓘_y`.
    pub expected: f64,
    /// `𝒵_i = 𝓘_z 𝒵_i 𝓘_z` on the support, relative to `max(1, ‖𝒵_i‖)`.
    pub range: f64,
}

impl WhiteningResiduals {
    pub fn max(&self) -> f64 {
        [
            self.projector,
            self.square_root,
            self.whitened_projector,
            self.expected,
            self.range,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// The congruence `Y = Z̃^{+/2} Z Z̃^{+/2}` of an ensemble, `Z̃ = E[Z]`.
#[derive(Debug, Clone)]
pub struct Whitening {
    pub distribution: FiniteDistribution,
    pub expected: SymMatrix,
    pub whitener: SymMatrix,
    /// `𝓘_z = Z̃ Z̃⁺`.
    pub projector_z: SymMatrix,
    /// `𝓘_y = Ỹ Ỹ⁺`, `Ỹ = E[Y]`.
    pub projector_y: SymMatrix,
    pub residuals: WhiteningResiduals,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn whiten(pool: &SensorPool, p: &SamplingDistribution, rank_tol: f64) -> Result<Whitening> {
    let ez = ensemble::expected_info(pool, p)?;
    let w = symmat::pinv_sqrt(&ez, rank_tol)?;
    let proj_z = symmat::range_projector(&ez, rank_tol)?;
    let complement = &SymMatrix::identity(pool.dim()) - &proj_z;
    let infos = pool.info_matrices();

    let mut range = 0.0f64;
    for i in p.support() {
        let z = &infos[i];
        let outside = symmat::spectral_norm(&complement.sandwich(z)?)?;
        let scale = symmat::spectral_norm(z)?;
        if outside > RANGE_TOL * scale {
            return Err(Error::RangeViolation {
                index: i,
                residual: outside,
            });
        }
        let back = proj_z.sandwich(z)?;
        range = range.max(back.max_abs_diff(z) / scale.max(1.0));
    }

    let support = infos
        .iter()
        .map(|z| w.sandwich(z))
        .collect::<Result<Vec<_>>>()?;
    let distribution = FiniteDistribution::new(support, p.probs().to_vec())?;
    let ey = distribution.mean()?;
    let proj_y = symmat::range_projector(&ey, rank_tol)?;

    let pinv = symmat::pinv(&ez, rank_tol)?;
    let sqrt = symmat::sqrt_psd(&ez)?;
    let whitened_ez = w.sandwich(&ez)?;
    let (a, b, s, pi) = (
        ez.as_matrix(),
        pinv.as_matrix(),
        sqrt.as_matrix(),
        proj_z.as_matrix(),
    );
    let projector = max_abs(&(whitened_ez.as_matrix() - pi)).max(max_abs(&(a * b * a * b - pi)));
    let square_root =
        max_abs(&(s * w.as_matrix() - pi)).max(max_abs(&(w.as_matrix() * s - pi)));
    let whitened_projector = proj_y.max_abs_diff(&whitened_ez);
    let expected = ey.max_abs_diff(&proj_y);

    Ok(Whitening {
        distribution,
        expected: ez,
        whitener: w,
        projector_z: proj_z,
        projector_y: proj_y,
        residuals: WhiteningResiduals {
            projector,
            square_root,
            whitened_projector,
            expected,
            range,
        },
    })
}
