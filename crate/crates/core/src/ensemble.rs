//! Candidate-sensor pools, the sampling-with-replacement policy, and the
//! random information matrix `Z` it induces.
//!
//! Sensor `i` contributes `𝒵_i = σ_i⁻² c_i c_iᵀ`. A selection of `γ` i.i.d.
//! categorical draws gives `Σ_k Z_k = C_Sᵀ R_S⁻¹ C_S`, the information term of
//! the Kalman covariance update.
//!
//! Selections are 0-based indices into the pool.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symmat::{self, SymMatrix};

/// Tolerance on `Σ p_i = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Relative residual allowed outside `range(E[Z])` before a sensor is declared unbounded.
pub const RANGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensor {
    pub c: Vec<f64>,
    pub sigma2: f64,
}

impl Sensor {
    pub fn new(c: Vec<f64>, sigma2: f64) -> Result<Self> {
        let s = Self { c, sigma2 };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::InvalidSensor(format!(
                "noise variance must be positive and finite, got {}",
                self.sigma2
            )));
        }
        if self.c.is_empty() {
            return Err(Error::InvalidSensor("empty observation vector".into()));
        }
        if self.c.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSensor("non-finite observation vector".into()));
        }
        Ok(())
    }
}

/// `σ⁻² c cᵀ`.
pub fn info_matrix(s: &Sensor) -> Result<SymMatrix> {
    s.validate()?;
    Ok(SymMatrix::outer(&s.c, s.sigma2.recip()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPool {
    d: usize,
    sensors: Vec<Sensor>,
}

/// An ordered pool of `η ≥ 1` candidate sensors over a `d`-dimensional state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPool")]
pub struct SensorPool {
    d: usize,
    sensors: Vec<Sensor>,
}

impl TryFrom<RawPool> for SensorPool {
    type Error = Error;

    fn try_from(raw: RawPool) -> Result<Self> {
        SensorPool::new(raw.d, raw.sensors)
    }
}

impl SensorPool {
    pub fn new(d: usize, sensors: Vec<Sensor>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidBudget("state dimension must be at least 1".into()));
        }
        if sensors.is_empty() {
            return Err(Error::InvalidBudget("pool must hold at least one sensor".into()));
        }
        for (i, s) in sensors.iter().enumerate() {
            s.validate()
                .map_err(|e| Error::InvalidSensor(format!("sensor {i}: {e}")))?;
            if s.c.len() != d {
                return Err(Error::DimMismatch {
                    expected: d,
                    got: s.c.len(),
                });
            }
        }
        Ok(Self { d, sensors })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn sensors(&self) -> &[Sensor] {
        &self.sensors
    }

    pub fn info_matrices(&self) -> Vec<SymMatrix> {
        self.sensors
            .iter()
            .map(|s| SymMatrix::outer(&s.c, s.sigma2.recip()))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pool serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| {
            // Validation errors from TryFrom arrive as serde custom messages.
            let msg = e.to_string();
            if msg.contains("noise variance") || msg.contains("observation vector") {
                Error::InvalidSensor(msg)
            } else {
                Error::InvalidParameter(format!("pool JSON: {msg}"))
            }
        })
    }
}

/// A point on the probability simplex `Δ^η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SamplingDistribution {
    p: Vec<f64>,
}

impl TryFrom<Vec<f64>> for SamplingDistribution {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        SamplingDistribution::new(p)
    }
}

impl From<SamplingDistribution> for Vec<f64> {
    fn from(d: SamplingDistribution) -> Self {
        d.p
    }
}

impl SamplingDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty probability vector".into()));
        }
        if let Some(i) = p.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "p[{i}] = {} is not a non-negative number",
                p[i]
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { p })
    }

    pub fn uniform(eta: usize) -> Self {
        assert!(eta >= 1, "uniform distribution over an empty pool");
        Self {
            p: vec![1.0 / eta as f64; eta],
        }
    }

    /// Normalizes non-negative weights onto the simplex.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidDistribution(
                "weights must have a positive finite sum".into(),
            ));
        }
        Self::new(w.iter().map(|x| x / total).collect())
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.p
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0.0)
            .map(|(i, _)| i)
    }
}

fn check_lengths(pool: &SensorPool, p: &SamplingDistribution) -> Result<()> {
    if pool.len() != p.len() {
        return Err(Error::DimMismatch {
            expected: pool.len(),
            got: p.len(),
        });
    }
    Ok(())
}

/// `E[Z] = Σ_i p_i 𝒵_i`.
pub fn expected_info(pool: &SensorPool, p: &SamplingDistribution) -> Result<SymMatrix> {
    check_lengths(pool, p)?;
    let d = pool.dim();
    let mut acc = DMatrix::<f64>::zeros(d, d);
    for (s, &w) in pool.sensors().iter().zip(p.probs()) {
        if w > 0.0 {
            let c = DVector::from_column_slice(&s.c);
            acc.ger(w / s.sigma2, &c, &c, 1.0);
        }
    }
    SymMatrix::new(acc)
}

/// A sequence of `γ ≥ 1` sensor indices drawn with replacement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub indices: Vec<usize>,
}

impl Selection {
    pub fn gamma(&self) -> usize {
        self.indices.len()
    }
}

/// The random stream for one Monte Carlo trial: ChaCha8 keyed by `seed`,
/// with the trial index as the stream id. Draw `k` of a trial is always the
/// `k`-th value of that stream, independent of thread scheduling.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Inverse-CDF categorical sampler over a fixed distribution.
#[derive(Debug, Clone)]
pub struct SelectionSampler {
    cumulative: Vec<f64>,
    last_supported: usize,
}

impl SelectionSampler {
    pub fn new(p: &SamplingDistribution) -> Self {
        let mut acc = 0.0;
        let cumulative = p
            .probs()
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect();
        let last_supported = p
            .probs()
            .iter()
            .rposition(|&x| x > 0.0)
            .expect("a valid distribution has non-empty support");
        Self {
            cumulative,
            last_supported,
        }
    }

    pub fn draw_one(&self, rng: &mut impl Rng) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u = rng.random::<f64>() * total;
        // First index whose cumulative mass exceeds u; zero-mass entries never win.
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.last_supported)
    }

    pub fn draw(&self, gamma: usize, seed: u64, trial: u64) -> Result<Selection> {
        if gamma < 1 {
            return Err(Error::InvalidBudget("gamma must be at least 1".into()));
        }
        let mut rng = trial_rng(seed, trial);
        Ok(Selection {
            indices: (0..gamma).map(|_| self.draw_one(&mut rng)).collect(),
        })
    }
}

/// `γ` independent categorical draws from `p`, deterministic in `seed` (trial 0).
pub fn draw_selection(
    pool: &SensorPool,
    p: &SamplingDistribution,
    gamma: usize,
    seed: u64,
) -> Result<Selection> {
    draw_selection_trial(pool, p, gamma, seed, 0)
}

pub fn draw_selection_trial(
    pool: &SensorPool,
    p: &SamplingDistribution,
    gamma: usize,
    seed: u64,
    trial: u64,
) -> Result<Selection> {
    check_lengths(pool, p)?;
    SelectionSampler::new(p).draw(gamma, seed, trial)
}

/// `Σ_{k} 𝒵_{S_k}` over the drawn indices.
pub fn selection_sum(pool: &SensorPool, sel: &Selection) -> Result<SymMatrix> {
    let d = pool.dim();
    let mut acc = DMatrix::<f64>::zeros(d, d);
    for &i in &sel.indices {
        let s = pool.sensors().get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            eta: pool.len(),
        })?;
        let c = DVector::from_column_slice(&s.c);
        acc.ger(s.sigma2.recip(), &c, &c, 1.0);
    }
    SymMatrix::new(acc)
}

/// Whitened top eigenvalue `λ̄(E[Z]^{+/2} 𝒵_i E[Z]^{+/2})` for every sensor.
///
/// Sensors with `p_i > 0` must lie in `range(E[Z])`; otherwise no finite
/// certificate exists and `Unbounded` is returned. Unsupported sensors are
/// reported but never checked.
pub fn whitened_peaks(
    pool: &SensorPool,
    p: &SamplingDistribution,
    rank_tol: f64,
) -> Result<Vec<f64>> {
    let ez = expected_info(pool, p)?;
    let w = symmat::pinv_sqrt(&ez, rank_tol)?;
    let proj = symmat::range_projector(&ez, rank_tol)?;
    let complement = &SymMatrix::identity(pool.dim()) - &proj;
    let infos = pool.info_matrices();
    let mut peaks = Vec::with_capacity(pool.len());
    for (i, z) in infos.iter().enumerate() {
        if p.probs()[i] > 0.0 {
            let outside = symmat::spectral_norm(&complement.sandwich(z)?)?;
            let scale = symmat::spectral_norm(z)?;
            if outside > RANGE_TOL * scale {
                return Err(Error::Unbounded { index: i });
            }
        }
        peaks.push(symmat::max_eig(&w.sandwich(z)?)?);
    }
    Ok(peaks)
}

/// Smallest `ρ` with `𝒵_i ⪯ ρ·E[Z]` for every supported sensor; always `≥ 1`.
pub fn rho_min(pool: &SensorPool, p: &SamplingDistribution, rank_tol: f64) -> Result<f64> {
    let peaks = whitened_peaks(pool, p, rank_tol)?;
    let rho = p
        .support()
        .map(|i| peaks[i])
        .fold(f64::NEG_INFINITY, f64::max);
    // ρ ≥ 1 is forced by averaging the certificate against p.
    Ok(rho.max(1.0))
}

/// Pool with i.i.d. uniform(0,1) observation entries and a common noise variance.
pub fn random_pool(d: usize, eta: usize, sigma2: f64, seed: u64) -> Result<SensorPool> {
    if d == 0 || eta == 0 {
        return Err(Error::InvalidBudget(
            "pool dimension and size must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sensors = (0..eta)
        .map(|_| Sensor::new((0..d).map(|_| rng.random::<f64>()).collect(), sigma2))
        .collect::<Result<Vec<_>>>()?;
    SensorPool::new(d, sensors)
}
