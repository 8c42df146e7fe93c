//! Seeded Monte Carlo experiments on random sensor-selection instances.
//!
//! For every trial a selection of `γ` sensors is drawn, its information sum
//! `S = Σ Z_i` is compared against the sum envelopes, and the steady-state
//! covariance `P_𝒮` of the filter driven by `S` is compared against the
//! steady-state envelopes. Trials run in parallel; their outcomes are
//! collected in trial order and folded sequentially, so reports are
//! bit-identical for a fixed seed regardless of thread count.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::concentration::{AwParams, GenParams};
use crate::ensemble::{self, SamplingDistribution, Sensor, SensorPool, SelectionSampler};
use crate::error::{Error, Result};
use crate::kalman::{self, LtiSystem, SteadyStateResult, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::symmat::{self, SymMatrix, PSD_TOL, RANK_TOL};

pub const MAX_GENERATION_ATTEMPTS: usize = 1000;

/// Loewner tolerance for steady-state orderings.
pub const ORDER_TOL: f64 = 1e-8;

/// Largest tolerated fraction of trials dropped for non-convergence.
pub const MAX_EXCLUDED_FRACTION: f64 = 1e-3;

const MIN_RHO_ITERS: usize = 2000;

/// Stream ids at or above this offset are reserved for instance generation,
/// keeping them disjoint from per-trial selection streams.
const GENERATION_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionChoice {
    Uniform,
    /// Output of [`heuristic_distribution`] in [`HeuristicMode::MinRho`].
    Heuristic,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicMode {
    Uniform,
    MinRho,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub eta: usize,
    pub gammas: Vec<usize>,
    pub delta: f64,
    pub zetas: Vec<f64>,
    pub sigma2: f64,
    pub q_scale: f64,
    pub trials: usize,
    pub seed: u64,
    pub distribution: DistributionChoice,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 3,
            eta: 420,
            gammas: vec![60],
            delta: 0.05,
            zetas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            sigma2: 0.5,
            q_scale: 0.5,
            trials: 2000,
            seed: 1,
            distribution: DistributionChoice::Uniform,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.eta == 0 {
            return Err(Error::InvalidParameter("d and eta must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.gammas.is_empty() || self.gammas.contains(&0) {
            return Err(Error::InvalidBudget("gamma values must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidSensor(format!(
                "noise variance must be positive, got {}",
                self.sigma2
            )));
        }
        if !(self.q_scale > 0.0 && self.q_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "q_scale must be positive, got {}",
                self.q_scale
            )));
        }
        if let DistributionChoice::Custom(p) = &self.distribution {
            if p.len() != self.eta {
                return Err(Error::DimMismatch {
                    expected: self.eta,
                    got: p.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub system: LtiSystem,
    pub pool: SensorPool,
    pub rejections: usize,
}

fn admissible(system: &LtiSystem, pool: &SensorPool) -> Result<bool> {
    for s in pool.sensors() {
        if !kalman::detectability_check(system.a(), std::slice::from_ref(&s.c), RANK_TOL)? {
            return Ok(false);
        }
    }
    let ez = ensemble::expected_info(pool, &SamplingDistribution::uniform(pool.len()))?;
    let e = symmat::eig_sym(&ez)?;
    Ok(e.min() > RANK_TOL * e.max())
}

/// Random instance: `A` and every observation vector with i.i.d. uniform(0,1)
/// entries, common noise variance `sigma2`, `Q = q_scale·I`.
///
/// Candidates are redrawn until every `(A, c_i)` is detectable and `E[Z]`
/// under uniform sampling is p.d.
pub fn build_instance(d: usize, eta: usize, sigma2: f64, q_scale: f64, seed: u64) -> Result<Instance> {
    if d == 0 || eta == 0 {
        return Err(Error::InvalidParameter("d and eta must be at least 1".into()));
    }
    let q = SymMatrix::identity(d).scale(q_scale);
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(GENERATION_STREAM + attempt as u64);
        let a = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>());
        let system = LtiSystem::new(a, q.clone())?;
        let sensors = (0..eta)
            .map(|_| Sensor::new((0..d).map(|_| rng.random::<f64>()).collect(), sigma2))
            .collect::<Result<Vec<_>>>()?;
        let pool = SensorPool::new(d, sensors)?;
        if admissible(&system, &pool)? {
            return Ok(Instance {
                system,
                pool,
                rejections: attempt,
            });
        }
    }
    Err(Error::GenerationFailed {
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

/// The numerical-example instance: `d = 3`, `η = 420`, `σ² = 0.5`, `Q = 0.5·I`.
pub fn build_fig1_instance(seed: u64) -> Result<Instance> {
    build_instance(3, 420, 0.5, 0.5, seed)
}

/// Leverages `σ_i⁻² c_iᵀ E[Z]⁻¹ c_i`, which equal the whitened peaks of rank-one sensors.
fn leverages(pool: &SensorPool, p: &[f64]) -> Option<Vec<f64>> {
    let dist = SamplingDistribution::new(p.to_vec()).ok()?;
    let ez = ensemble::expected_info(pool, &dist).ok()?;
    let inv = symmat::inverse_pd(&ez).ok()?;
    Some(
        pool.sensors()
            .iter()
            .map(|s| {
                let c = nalgebra::DVector::from_column_slice(&s.c);
                inv.as_matrix().dot(&(&c * c.transpose())) / s.sigma2
            })
            .collect(),
    )
}

fn max_supported(values: &[f64], p: &[f64]) -> f64 {
    values
        .iter()
        .zip(p)
        .filter(|(_, &w)| w > 0.0)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A sampling distribution with a small certificate `ρ`.
///
/// `MinRho` runs the multiplicative update `p_i ← p_i ℓ_i / Σ_j p_j ℓ_j` on the
/// leverages `ℓ_i = λ̄(E[Z]^{+/2} 𝒵_i E[Z]^{+/2})` for a fixed number of
/// iterations and keeps the iterate with the smallest `max_i ℓ_i`. The
/// uniform start is a candidate, so the result is never worse than uniform.
/// Falls back to uniform if `E[Z]` is singular along the way.
pub fn heuristic_distribution(pool: &SensorPool, mode: HeuristicMode) -> SamplingDistribution {
    let uniform = SamplingDistribution::uniform(pool.len());
    if mode == HeuristicMode::Uniform || pool.len() == 1 {
        return uniform;
    }
    let mut p = uniform.probs().to_vec();
    let Some(mut lev) = leverages(pool, &p) else {
        return uniform;
    };
    let mut best = (max_supported(&lev, &p), p.clone());
    for _ in 0..MIN_RHO_ITERS {
        let total: f64 = p.iter().zip(&lev).map(|(w, l)| w * l).sum();
        for (w, l) in p.iter_mut().zip(&lev) {
            *w *= l / total;
        }
        let norm: f64 = p.iter().sum();
        p.iter_mut().for_each(|w| *w /= norm);
        match leverages(pool, &p) {
            Some(next) => lev = next,
            None => break,
        }
        let rho = max_supported(&lev, &p);
        if rho < best.0 {
            best = (rho, p.clone());
        }
    }
    match SamplingDistribution::new(best.1) {
        Ok(d) if leverages(pool, d.probs()).is_some() => d,
        _ => uniform,
    }
}

fn resolve_distribution(pool: &SensorPool, choice: &DistributionChoice) -> Result<SamplingDistribution> {
    match choice {
        DistributionChoice::Uniform => Ok(SamplingDistribution::uniform(pool.len())),
        DistributionChoice::Heuristic => Ok(heuristic_distribution(pool, HeuristicMode::MinRho)),
        DistributionChoice::Custom(p) => SamplingDistribution::new(p.clone()),
    }
}

/// An instance with its sampling distribution and derived quantities.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub instance: Instance,
    pub p: SamplingDistribution,
    pub rho: f64,
    pub ez: SymMatrix,
}

impl Experiment {
    /// Generates the instance from the config's seed.
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let instance = build_instance(config.d, config.eta, config.sigma2, config.q_scale, config.seed)?;
        Self::with_instance(config, instance)
    }

    /// Uses a given instance; `d` and `eta` are taken from it.
    pub fn with_instance(config: &ExperimentConfig, instance: Instance) -> Result<Self> {
        let mut config = config.clone();
        config.d = instance.pool.dim();
        config.eta = instance.pool.len();
        config.validate()?;
        if instance.system.dim() != config.d {
            return Err(Error::DimMismatch {
                expected: instance.system.dim(),
                got: config.d,
            });
        }
        let p = resolve_distribution(&instance.pool, &config.distribution)?;
        let rho = ensemble::rho_min(&instance.pool, &p, RANK_TOL)?;
        let ez = ensemble::expected_info(&instance.pool, &p)?;
        Ok(Self {
            config,
            instance,
            p,
            rho,
            ez,
        })
    }

    pub fn gen_params(&self, gamma: usize, zeta: f64) -> Result<GenParams> {
        GenParams::solve(self.config.d, self.config.delta, gamma, self.rho, zeta, self.p.clone())
    }

    /// Two-sided parameters at `δ̄ = δ`.
    pub fn aw_params(&self, gamma: usize) -> Result<AwParams> {
        AwParams::solve(self.config.d, self.config.delta, gamma, self.rho, self.p.clone())
    }

    fn steady(&self, xi: &SymMatrix) -> Result<SteadyStateResult> {
        kalman::steady_state(
            &self.instance.system,
            xi,
            &SymMatrix::zeros(self.config.d),
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )
    }
}

/// Coverage of the refined one-sided bounds at one `ζ`.
#[derive(Debug, Clone, Serialize)]
pub struct GenCoverage {
    pub zeta: f64,
    pub epsilon: Option<f64>,
    pub r: Option<f64>,
    pub lower_trivial: bool,
    /// Why no parameters exist at this `ζ`.
    pub infeasible: Option<String>,
    /// `{(1-rε)γE[Z] ⪯ S}`.
    pub freq_lower: Option<f64>,
    /// `{S ⪯ (1+rε)γE[Z]}`.
    pub freq_upper: Option<f64>,
    /// `{L ⪯ P_𝒮}`.
    pub freq_ss_lower: Option<f64>,
    /// `{P_𝒮 ⪯ U}`.
    pub freq_ss_upper: Option<f64>,
    pub lam_upper: Option<f64>,
    pub lam_lower: Option<f64>,
    /// Trials where a sum event held but the matching covariance ordering did not.
    pub implication_violations: usize,
}

/// Coverage of the two-sided bound.
#[derive(Debug, Clone, Serialize)]
pub struct AwCoverage {
    pub delta_bar: f64,
    pub epsilon_bar: Option<f64>,
    pub infeasible: Option<String>,
    pub freq_two_sided: Option<f64>,
    /// `{L̄ ⪯ P_𝒮 ⪯ Ū}`.
    pub freq_ss_two_sided: Option<f64>,
    pub lam_upper: Option<f64>,
    pub lam_lower: Option<f64>,
    pub implication_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub gamma: usize,
    pub delta: f64,
    pub rho: f64,
    pub n_trials: usize,
    /// Trials dropped because the Riccati iteration did not converge.
    pub excluded: usize,
    /// Target `1 - δ` for the one-sided events.
    pub confidence: f64,
    pub lam_p_mean: f64,
    pub lam_p_std: f64,
    pub gen: Vec<GenCoverage>,
    pub aw: AwCoverage,
}

impl CoverageReport {
    /// Fails when more than 0.1% of trials were excluded.
    pub fn validate(&self) -> Result<()> {
        if self.excluded as f64 > MAX_EXCLUDED_FRACTION * self.n_trials as f64 {
            return Err(Error::NoConvergence {
                iterations: DEFAULT_MAX_ITER,
                residual: f64::NAN,
                last: Box::new(SymMatrix::zeros(1)),
            });
        }
        Ok(())
    }
}

/// `1 - δ - 3√(δ(1-δ)/n)`: the confidence target less a 3σ binomial allowance.
pub fn coverage_threshold(delta: f64, n: usize) -> f64 {
    1.0 - delta - 3.0 * (delta * (1.0 - delta) / n as f64).sqrt()
}

struct GenSetup {
    zeta: f64,
    params: std::result::Result<GenParams, Error>,
    lower: SymMatrix,
    upper: SymMatrix,
    ss: Option<(SteadyStateResult, SteadyStateResult)>,
}

struct AwSetup {
    params: std::result::Result<AwParams, Error>,
    lower: SymMatrix,
    upper: SymMatrix,
    ss: Option<(SteadyStateResult, SteadyStateResult)>,
}

#[derive(Default, Clone, Copy)]
struct GenOutcome {
    lower: bool,
    upper: bool,
    ss_lower: bool,
    ss_upper: bool,
    violation: bool,
}

#[derive(Default, Clone, Copy)]
struct AwOutcome {
    two_sided: bool,
    ss_two_sided: bool,
    violation: bool,
}

struct TrialOutcome {
    lam_p: Option<f64>,
    gen: Vec<GenOutcome>,
    aw: AwOutcome,
}

fn leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    symmat::loewner_leq(a, b, tol)
}

fn setup_gen(exp: &Experiment, gamma: usize, zeta: f64) -> Result<GenSetup> {
    let params = exp.gen_params(gamma, zeta);
    let (lower, upper, ss) = match &params {
        Ok(g) => {
            let ss = match kalman::ss_bounds_gen(&exp.instance.system, g, &exp.ez, DEFAULT_TOL, DEFAULT_MAX_ITER) {
                Ok(pair) => Some(pair),
                Err(Error::TrivialLowerScale { .. }) => None,
                Err(e) => return Err(e),
            };
            (exp.ez.scale(g.lower_scale()), exp.ez.scale(g.upper_scale()), ss)
        }
        Err(_) => (SymMatrix::zeros(exp.config.d), SymMatrix::zeros(exp.config.d), None),
    };
    Ok(GenSetup {
        zeta,
        params,
        lower,
        upper,
        ss,
    })
}

fn setup_aw(exp: &Experiment, gamma: usize) -> Result<AwSetup> {
    let params = exp.aw_params(gamma);
    let (lower, upper, ss) = match &params {
        Ok(a) => {
            let g = gamma as f64;
            let pair = kalman::ss_bounds_aw(&exp.instance.system, a, &exp.ez, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            (
                exp.ez.scale((1.0 - a.epsilon_bar) * g),
                exp.ez.scale((1.0 + a.epsilon_bar) * g),
                Some(pair),
            )
        }
        Err(_) => (SymMatrix::zeros(exp.config.d), SymMatrix::zeros(exp.config.d), None),
    };
    Ok(AwSetup {
        params,
        lower,
        upper,
        ss,
    })
}

fn run_trial(
    exp: &Experiment,
    sampler: &SelectionSampler,
    gamma: usize,
    trial: u64,
    gens: &[GenSetup],
    aw: &AwSetup,
) -> Result<TrialOutcome> {
    let sel = sampler.draw(gamma, exp.config.seed, trial)?;
    let sum = ensemble::selection_sum(&exp.instance.pool, &sel)?;
    let p_ss = match exp.steady(&sum) {
        Ok(r) => Some(r.matrix),
        Err(Error::NoConvergence { .. }) => None,
        Err(e) => return Err(e),
    };
    let lam_p = p_ss.as_ref().map(symmat::max_eig).transpose()?;

    let mut gen_out = Vec::with_capacity(gens.len());
    for g in gens {
        let mut o = GenOutcome::default();
        if g.params.is_ok() {
            o.lower = leq(&g.lower, &sum, PSD_TOL)?;
            o.upper = leq(&sum, &g.upper, PSD_TOL)?;
            if let (Some(p), Some((u, l))) = (&p_ss, &g.ss) {
                o.ss_upper = leq(p, &u.matrix, ORDER_TOL)?;
                o.ss_lower = leq(&l.matrix, p, ORDER_TOL)?;
                o.violation = (o.lower && !o.ss_upper) || (o.upper && !o.ss_lower);
            }
        }
        gen_out.push(o);
    }

    let mut aw_out = AwOutcome::default();
    if aw.params.is_ok() {
        aw_out.two_sided = leq(&aw.lower, &sum, PSD_TOL)? && leq(&sum, &aw.upper, PSD_TOL)?;
        if let (Some(p), Some((u, l))) = (&p_ss, &aw.ss) {
            aw_out.ss_two_sided = leq(&l.matrix, p, ORDER_TOL)? && leq(p, &u.matrix, ORDER_TOL)?;
            aw_out.violation = aw_out.two_sided && !aw_out.ss_two_sided;
        }
    }

    Ok(TrialOutcome {
        lam_p,
        gen: gen_out,
        aw: aw_out,
    })
}

fn freq(count: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        count as f64 / n as f64
    }
}

fn gen_coverage(
    g: &GenSetup,
    k: usize,
    all: &[TrialOutcome],
    converged: &[&TrialOutcome],
) -> Result<GenCoverage> {
    let p = match &g.params {
        Ok(p) => p,
        Err(e) => {
            return Ok(GenCoverage {
                zeta: g.zeta,
                epsilon: None,
                r: None,
                lower_trivial: true,
                infeasible: Some(e.to_string()),
                freq_lower: None,
                freq_upper: None,
                freq_ss_lower: None,
                freq_ss_upper: None,
                lam_upper: None,
                lam_lower: None,
                implication_violations: 0,
            })
        }
    };
    let in_all = |f: fn(&GenOutcome) -> bool| freq(all.iter().filter(|o| f(&o.gen[k])).count(), all.len());
    let in_converged = |f: fn(&GenOutcome) -> bool| converged.iter().filter(|o| f(&o.gen[k])).count();
    let n_ss = converged.len();
    let has_ss = g.ss.is_some();
    Ok(GenCoverage {
        zeta: g.zeta,
        epsilon: Some(p.epsilon),
        r: Some(p.r),
        lower_trivial: p.lower_trivial(),
        infeasible: None,
        freq_lower: Some(in_all(|o| o.lower)),
        freq_upper: Some(in_all(|o| o.upper)),
        freq_ss_lower: has_ss.then(|| freq(in_converged(|o| o.ss_lower), n_ss)),
        freq_ss_upper: has_ss.then(|| freq(in_converged(|o| o.ss_upper), n_ss)),
        lam_upper: g.ss.as_ref().map(|(u, _)| symmat::max_eig(&u.matrix)).transpose()?,
        lam_lower: g.ss.as_ref().map(|(_, l)| symmat::max_eig(&l.matrix)).transpose()?,
        implication_violations: in_converged(|o| o.violation),
    })
}

/// Runs `config.trials` trials at one `γ` against every `ζ` in the config.
pub fn coverage(exp: &Experiment, gamma: usize) -> Result<CoverageReport> {
    let cfg = &exp.config;
    let gens = cfg
        .zetas
        .iter()
        .map(|&z| setup_gen(exp, gamma, z))
        .collect::<Result<Vec<_>>>()?;
    let aw = setup_aw(exp, gamma)?;
    let sampler = SelectionSampler::new(&exp.p);

    let outcomes = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(exp, &sampler, gamma, t, &gens, &aw))
        .collect::<Result<Vec<_>>>()?;

    let n = outcomes.len();
    let converged: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.lam_p.is_some()).collect();
    let n_ss = converged.len();
    let lams: Vec<f64> = converged.iter().filter_map(|o| o.lam_p).collect();
    let mean = if lams.is_empty() {
        f64::NAN
    } else {
        lams.iter().sum::<f64>() / lams.len() as f64
    };
    let std = if lams.len() < 2 {
        0.0
    } else {
        (lams.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (lams.len() - 1) as f64).sqrt()
    };

    let gen = gens
        .iter()
        .enumerate()
        .map(|(k, g)| gen_coverage(g, k, &outcomes, &converged))
        .collect::<Result<Vec<_>>>()?;

    let aw_cov = match &aw.params {
        Ok(a) => AwCoverage {
            delta_bar: a.delta_bar,
            epsilon_bar: Some(a.epsilon_bar),
            infeasible: None,
            freq_two_sided: Some(freq(outcomes.iter().filter(|o| o.aw.two_sided).count(), n)),
            freq_ss_two_sided: Some(freq(converged.iter().filter(|o| o.aw.ss_two_sided).count(), n_ss)),
            lam_upper: aw.ss.as_ref().map(|(u, _)| symmat::max_eig(&u.matrix)).transpose()?,
            lam_lower: aw.ss.as_ref().map(|(_, l)| symmat::max_eig(&l.matrix)).transpose()?,
            implication_violations: converged.iter().filter(|o| o.aw.violation).count(),
        },
        Err(e) => AwCoverage {
            delta_bar: cfg.delta,
            epsilon_bar: None,
            infeasible: Some(e.to_string()),
            freq_two_sided: None,
            freq_ss_two_sided: None,
            lam_upper: None,
            lam_lower: None,
            implication_violations: 0,
        },
    };

    if aw.params.is_err() && gens.iter().all(|g| g.params.is_err()) {
        if let Some(Err(e)) = gens.first().map(|g| &g.params) {
            return Err(e.clone());
        }
        if let Err(e) = &aw.params {
            return Err(e.clone());
        }
    }

    Ok(CoverageReport {
        gamma,
        delta: cfg.delta,
        rho: exp.rho,
        n_trials: n,
        excluded: n - n_ss,
        confidence: 1.0 - cfg.delta,
        lam_p_mean: mean,
        lam_p_std: std,
        gen,
        aw: aw_cov,
    })
}

/// Generates the configured instance and reports coverage at the first `γ`.
pub fn run_coverage(config: &ExperimentConfig) -> Result<CoverageReport> {
    let exp = Experiment::prepare(config)?;
    coverage(&exp, config.gammas[0])
}

/// One `(γ, ζ)` row of a sweep. Coverage columns are steady-state frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: usize,
    pub zeta: f64,
    pub epsilon: Option<f64>,
    pub r: Option<f64>,
    pub lam_u_gen: Option<f64>,
    pub lam_u_aw: Option<f64>,
    pub lam_p_mean: Option<f64>,
    pub lam_p_std: Option<f64>,
    pub coverage_lower: Option<f64>,
    pub coverage_upper: Option<f64>,
    pub lower_trivial: bool,
}

pub const CSV_HEADER: [&str; 11] = [
    "gamma",
    "zeta",
    "epsilon",
    "r",
    "lam_U_gen",
    "lam_U_aw",
    "lam_P_mean",
    "lam_P_std",
    "coverage_lower",
    "coverage_upper",
    "lower_trivial",
];

impl SweepRow {
    /// Fields in [`CSV_HEADER`] order; missing values are empty.
    pub fn csv_fields(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        vec![
            self.gamma.to_string(),
            self.zeta.to_string(),
            opt(self.epsilon),
            opt(self.r),
            opt(self.lam_u_gen),
            opt(self.lam_u_aw),
            opt(self.lam_p_mean),
            opt(self.lam_p_std),
            opt(self.coverage_lower),
            opt(self.coverage_upper),
            self.lower_trivial.to_string(),
        ]
    }
}

fn rows_for(report: &CoverageReport) -> Vec<SweepRow> {
    report
        .gen
        .iter()
        .map(|g| SweepRow {
            gamma: report.gamma,
            zeta: g.zeta,
            epsilon: g.epsilon,
            r: g.r,
            lam_u_gen: g.lam_upper,
            lam_u_aw: report.aw.lam_upper,
            lam_p_mean: report.lam_p_mean.is_finite().then_some(report.lam_p_mean),
            lam_p_std: report.lam_p_mean.is_finite().then_some(report.lam_p_std),
            coverage_lower: g.freq_ss_lower,
            coverage_upper: g.freq_ss_upper,
            lower_trivial: g.lower_trivial,
        })
        .collect()
}

/// Rows for every configured `γ` and `ζ`, with the reports they came from.
///
/// Parameters that cannot be solved at a `(γ, ζ)` leave the affected columns
/// empty instead of failing the sweep.
pub fn sweep(exp: &Experiment) -> Result<(Vec<SweepRow>, Vec<CoverageReport>)> {
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &gamma in &exp.config.gammas {
        let report = match coverage(exp, gamma) {
            Ok(r) => r,
            Err(Error::InsufficientSamples { .. }) | Err(Error::InvalidRefinement { .. }) => {
                rows.extend(exp.config.zetas.iter().map(|&zeta| SweepRow {
                    gamma,
                    zeta,
                    epsilon: None,
                    r: None,
                    lam_u_gen: None,
                    lam_u_aw: None,
                    lam_p_mean: None,
                    lam_p_std: None,
                    coverage_lower: None,
                    coverage_upper: None,
                    lower_trivial: true,
                }));
                continue;
            }
            Err(e) => return Err(e),
        };
        rows.extend(rows_for(&report));
        reports.push(report);
    }
    Ok((rows, reports))
}

/// Sweep over `ζ` at the single configured `γ`.
pub fn sweep_zeta(exp: &Experiment) -> Result<Vec<SweepRow>> {
    if exp.config.gammas.len() != 1 {
        return Err(Error::InvalidParameter(
            "a zeta sweep needs exactly one gamma".into(),
        ));
    }
    Ok(sweep(exp)?.0)
}

/// Sweep over every configured `(γ, ζ)` pair.
pub fn sweep_gamma(exp: &Experiment) -> Result<Vec<SweepRow>> {
    Ok(sweep(exp)?.0)
}
