//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sensel::concentration::{
    self, aw_bounds, gen_bounds, oracles, AwParams, FiniteDistribution, GenParams, TailSide,
};
use sensel::ensemble::{self, SamplingDistribution, Sensor, SensorPool, SelectionSampler};
use sensel::harness::{
    self, build_fig1_instance, coverage_threshold, CoverageReport, DistributionChoice, Experiment,
    ExperimentConfig,
};
use sensel::kalman::{self, LtiSystem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use sensel::symmat::{self, SymMatrix, RANK_TOL};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const DELTA: f64 = 0.05;
const COVERAGE_TRIALS: usize = 2000;
const COVERAGE_GAMMA: usize = 240;
const COVERAGE_ZETAS: [f64; 3] = [0.0, 0.5, 1.0];
const RUNTIME_LIMIT: Duration = Duration::from_secs(120);
const TREND_ZETAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const TREND_GAMMAS: [usize; 7] = [60, 90, 120, 150, 180, 210, 240];
const MIN_IMPROVEMENT: f64 = 0.01;
/// Slack for "non-increasing" comparisons of computed eigenvalues.
const MONOTONE_SLACK: f64 = 1e-12;
const KAPPA_REL_TOL: f64 = 1e-9;
const REDUCTION_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-9;
const ORDER_TOL: f64 = 1e-8;
const MC_TRIALS: usize = 10_000;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = Result<Outcome, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn outcome(pass: bool, detail: impl Into<String>) -> Check {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_symmetric(d: usize, r: &mut ChaCha8Rng) -> SymMatrix {
    let b = DMatrix::from_fn(d, d, |_, _| 2.0 * r.random::<f64>() - 1.0);
    SymMatrix::new(&b + b.transpose()).unwrap()
}

fn random_psd(d: usize, r: &mut ChaCha8Rng) -> SymMatrix {
    let cols = 1 + r.random_range(0..d);
    let b = DMatrix::from_fn(d, cols, |_, _| 2.0 * r.random::<f64>() - 1.0);
    SymMatrix::new(&b * b.transpose()).unwrap()
}

fn random_simplex(n: usize, r: &mut ChaCha8Rng) -> SamplingDistribution {
    let w: Vec<f64> = (0..n).map(|_| 0.05 + r.random::<f64>()).collect();
    SamplingDistribution::from_weights(&w).unwrap()
}

fn random_pool(d: usize, eta: usize, r: &mut ChaCha8Rng) -> SensorPool {
    let sensors = (0..eta)
        .map(|_| {
            let c = (0..d).map(|_| 2.0 * r.random::<f64>() - 1.0).collect();
            Sensor::new(c, 0.1 + r.random::<f64>()).unwrap()
        })
        .collect();
    SensorPool::new(d, sensors).unwrap()
}

fn coverage_runs() -> Result<Vec<(u64, CoverageReport, Duration)>, String> {
    SEEDS
        .iter()
        .map(|&seed| {
            let start = Instant::now();
            let cfg = ExperimentConfig {
                gammas: vec![COVERAGE_GAMMA],
                delta: DELTA,
                zetas: COVERAGE_ZETAS.to_vec(),
                trials: COVERAGE_TRIALS,
                seed,
                distribution: DistributionChoice::Uniform,
                ..ExperimentConfig::default()
            };
            let inst = build_fig1_instance(seed).map_err(e2s)?;
            let exp = Experiment::with_instance(&cfg, inst).map_err(e2s)?;
            let report = harness::coverage(&exp, COVERAGE_GAMMA).map_err(e2s)?;
            Ok((seed, report, start.elapsed()))
        })
        .collect()
}

fn min_opt(acc: f64, x: Option<f64>) -> f64 {
    x.map_or(f64::NEG_INFINITY, |v| acc.min(v))
}

fn criterion_sum_coverage(runs: &[(u64, CoverageReport, Duration)]) -> Check {
    let thr = coverage_threshold(DELTA, COVERAGE_TRIALS);
    let mut worst = f64::INFINITY;
    let mut slowest = Duration::ZERO;
    for (_, r, t) in runs {
        for g in &r.gen {
            worst = min_opt(worst, g.freq_lower);
            worst = min_opt(worst, g.freq_upper);
        }
        worst = min_opt(worst, r.aw.freq_two_sided);
        slowest = slowest.max(*t);
    }
    outcome(
        worst >= thr && slowest <= RUNTIME_LIMIT,
        format!(
            "min frequency {worst:.4} vs threshold {thr:.4}; slowest instance {:.1}s",
            slowest.as_secs_f64()
        ),
    )
}

fn criterion_ss_coverage(runs: &[(u64, CoverageReport, Duration)]) -> Check {
    let thr = coverage_threshold(DELTA, COVERAGE_TRIALS);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    let mut excluded = 0;
    for (_, r, _) in runs {
        for g in &r.gen {
            worst = min_opt(worst, g.freq_ss_upper);
            worst = min_opt(worst, g.freq_ss_lower);
            violations += g.implication_violations;
        }
        worst = min_opt(worst, r.aw.freq_ss_two_sided);
        violations += r.aw.implication_violations;
        excluded += r.excluded;
    }
    outcome(
        worst >= thr && violations == 0 && excluded == 0,
        format!(
            "min frequency {worst:.4} vs threshold {thr:.4}; {violations} implication violations; {excluded} excluded"
        ),
    )
}

fn trend_experiment(seed: u64, gammas: &[usize]) -> Result<Experiment, String> {
    let cfg = ExperimentConfig {
        gammas: gammas.to_vec(),
        delta: DELTA,
        zetas: TREND_ZETAS.to_vec(),
        trials: 100,
        seed,
        distribution: DistributionChoice::Heuristic,
        ..ExperimentConfig::default()
    };
    Experiment::with_instance(&cfg, build_fig1_instance(seed).map_err(e2s)?).map_err(e2s)
}

fn non_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] * (1.0 + MONOTONE_SLACK))
}

fn criterion_zeta_trend() -> Check {
    let mut improved = 0;
    let mut notes = Vec::new();
    for seed in SEEDS {
        let exp = trend_experiment(seed, &[60])?;
        let rows = harness::sweep_zeta(&exp).map_err(e2s)?;
        let lam: Vec<f64> = rows.iter().filter_map(|r| r.lam_u_gen).collect();
        if !non_increasing(&lam) {
            return outcome(false, format!("seed {seed}: lam_U_gen not non-increasing: {lam:?}"));
        }
        let Some(best) = lam.last().copied() else {
            return outcome(false, format!("seed {seed}: no feasible zeta at gamma 60"));
        };
        match rows[0].lam_u_aw {
            Some(aw) => {
                if best > aw {
                    return outcome(false, format!("seed {seed}: {best} > two-sided {aw}"));
                }
                let gain = (aw - best) / aw;
                if gain >= MIN_IMPROVEMENT {
                    improved += 1;
                }
                notes.push(format!("{:.0}%", 100.0 * gain));
            }
            None => notes.push("two-sided infeasible".into()),
        }
    }
    outcome(
        improved >= 4,
        format!("improvement over two-sided bound by seed: {}; {improved}/5 seeds >= 1%", notes.join(", ")),
    )
}

fn criterion_gamma_trend() -> Check {
    let mut notes = Vec::new();
    for seed in SEEDS {
        let exp = trend_experiment(seed, &TREND_GAMMAS)?;
        let rows = harness::sweep_gamma(&exp).map_err(e2s)?;
        for &zeta in &TREND_ZETAS {
            let col: Vec<f64> = rows.iter().filter(|r| r.zeta == zeta).filter_map(|r| r.lam_u_gen).collect();
            if col.len() != TREND_GAMMAS.len() || !non_increasing(&col) {
                return outcome(false, format!("seed {seed}, zeta {zeta}: lam_U_gen column {col:?}"));
            }
        }
        let zmax = *TREND_ZETAS.last().unwrap();
        let top: Vec<&harness::SweepRow> = rows.iter().filter(|r| r.zeta == zmax).collect();
        let aw: Vec<f64> = top.iter().filter_map(|r| r.lam_u_aw).collect();
        if aw.len() != TREND_GAMMAS.len() || !non_increasing(&aw) {
            return outcome(false, format!("seed {seed}: lam_U_aw column {aw:?}"));
        }
        let gaps: Vec<f64> = top
            .iter()
            .map(|r| r.lam_u_aw.unwrap() - r.lam_u_gen.unwrap())
            .collect();
        let argmax = gaps
            .iter()
            .enumerate()
            .fold(0, |best, (i, g)| if *g > gaps[best] { i } else { best });
        if argmax != 0 {
            return outcome(false, format!("seed {seed}: largest gap at gamma {}", TREND_GAMMAS[argmax]));
        }
        notes.push(format!("{:.3}", gaps[0]));
    }
    outcome(true, format!("all columns non-increasing; gap at gamma 60 by seed: {}", notes.join(", ")))
}

fn criterion_identities() -> Check {
    let mut r = rng(5);
    let mut worst_kappa = 0.0f64;
    for _ in 0..100 {
        let d = r.random_range(1..=20);
        let delta = 0.001 + 0.49 * r.random::<f64>();
        let rho = 1.0 + 20.0 * r.random::<f64>();
        let kbar = concentration::sample_complexity_aw(d, delta, rho);
        let k = concentration::sample_complexity_gen(d, delta, rho, 0.0).map_err(e2s)?;
        let rel = (kbar - (2.0 * k + 4.0 * rho * 2f64.ln())).abs() / kbar;
        worst_kappa = worst_kappa.max(rel);
    }

    let mut worst_reduction = 0.0f64;
    for _ in 0..50 {
        let d = r.random_range(2..=4);
        let pool = random_pool(d, r.random_range(d..=10), &mut r);
        let p = random_simplex(pool.len(), &mut r);
        let delta = 0.01 + 0.2 * r.random::<f64>();
        let rho = ensemble::rho_min(&pool, &p, RANK_TOL).map_err(e2s)?;
        let ez = ensemble::expected_info(&pool, &p).map_err(e2s)?;
        let min_gamma = (4.0 * rho * (d as f64 / delta).ln()).ceil() as usize + 1;
        let gamma = min_gamma + r.random_range(0..500);
        let gen = GenParams::solve(d, delta, gamma, rho, 0.0, p.clone()).map_err(e2s)?;
        let aw = AwParams::solve(d, 2.0 * delta, gamma, rho, p.clone()).map_err(e2s)?;
        let (gl, gu) = gen_bounds(&gen, &ez).map_err(e2s)?;
        let (al, au) = aw_bounds(&aw, &ez).map_err(e2s)?;
        let (rl, ru) = aw_bounds(&gen.reduce_to_aw().map_err(e2s)?, &ez).map_err(e2s)?;
        let scale = symmat::spectral_norm(&gu.matrix).map_err(e2s)?.max(1.0);
        for diff in [
            gl.matrix.max_abs_diff(&al.matrix),
            gu.matrix.max_abs_diff(&au.matrix),
            gl.matrix.max_abs_diff(&rl.matrix),
            gu.matrix.max_abs_diff(&ru.matrix),
        ] {
            worst_reduction = worst_reduction.max(diff / scale);
        }
        if (gl.confidence - (1.0 - delta)).abs() > 1e-15 || (al.confidence - (1.0 - 2.0 * delta)).abs() > 1e-15 {
            return outcome(false, "confidence levels do not match the reduction");
        }
    }

    let mut flips = 0;
    for _ in 0..100 {
        let d = r.random_range(1..=10);
        let delta = 0.01 + 0.3 * r.random::<f64>();
        let zeta = r.random::<f64>();
        let rho = 2.0 + 8.0 * r.random::<f64>();
        let threshold = concentration::nontriviality_threshold(d, delta, rho, zeta);
        let below = threshold.floor() as usize;
        for gamma in [below.saturating_sub(1), below, below + 1, below + 2] {
            if gamma == 0 {
                continue;
            }
            let Ok(params) = GenParams::solve(d, delta, gamma, rho, zeta, SamplingDistribution::uniform(1)) else {
                continue;
            };
            if params.lower_trivial() != (gamma as f64 <= threshold) {
                return outcome(false, format!("flag mismatch at gamma {gamma}, threshold {threshold}"));
            }
        }
        let before = GenParams::solve(d, delta, below, rho, zeta, SamplingDistribution::uniform(1)).map_err(e2s)?;
        let after = GenParams::solve(d, delta, below + 1, rho, zeta, SamplingDistribution::uniform(1)).map_err(e2s)?;
        if before.lower_trivial() && !after.lower_trivial() {
            flips += 1;
        }
    }

    outcome(
        worst_kappa <= KAPPA_REL_TOL && worst_reduction <= REDUCTION_TOL && flips == 100,
        format!(
            "kappa identity max rel err {worst_kappa:e}; reduction max err {worst_reduction:e}; flag flipped at threshold in {flips}/100"
        ),
    )
}

/// `P[λ̄(±Σ X_i) > t]` estimated from `MC_TRIALS` draws.
fn tail_frequency(dist: &FiniteDistribution, gamma: usize, t: f64, side: TailSide, seed: u64) -> f64 {
    let p = SamplingDistribution::new(dist.probs().to_vec()).unwrap();
    let sampler = SelectionSampler::new(&p);
    let sign = if side == TailSide::Upper { 1.0 } else { -1.0 };
    let hits = (0..MC_TRIALS as u64)
        .filter(|&trial| {
            let sel = sampler.draw(gamma, seed, trial).unwrap();
            let d = dist.dim();
            let mut acc = DMatrix::<f64>::zeros(d, d);
            for i in sel.indices {
                acc += dist.support()[i].as_matrix();
            }
            let s = SymMatrix::new(acc * sign).unwrap();
            symmat::max_eig(&s).unwrap() > t
        })
        .count();
    hits as f64 / MC_TRIALS as f64
}

fn criterion_oracles() -> Check {
    let mut r = rng(6);
    let mut failures = Vec::new();

    let mut ok = 0;
    for _ in 0..100 {
        let d = r.random_range(1..=6);
        let x = random_psd(d, &mut r).scale(3.0 * r.random::<f64>());
        ok += oracles::exp_identity_check(&x).map_err(e2s)? as usize;
    }
    if ok < 100 {
        failures.push(format!("exp identity {ok}/100"));
    }

    ok = 0;
    for k in 0..100 {
        let d = r.random_range(1..=6);
        let x = random_symmetric(d, &mut r);
        let norm = symmat::spectral_norm(&x).map_err(e2s)?;
        let target = if k % 10 == 0 { 1.0 } else { r.random::<f64>() };
        let x = x.scale(target / norm.max(f64::MIN_POSITIVE));
        ok += oracles::exp_sandwich_check(&x, ORACLE_TOL).map_err(e2s)? as usize;
    }
    if ok < 100 {
        failures.push(format!("exp sandwich {ok}/100"));
    }

    ok = 0;
    for _ in 0..100 {
        let d = r.random_range(1..=5);
        let n = r.random_range(1..=8);
        let support: Vec<SymMatrix> = (0..n).map(|_| random_psd(d, &mut r)).collect();
        let rho = support
            .iter()
            .map(|y| symmat::max_eig(y).unwrap())
            .fold(f64::MIN_POSITIVE, f64::max);
        let p = random_simplex(n, &mut r);
        let dist = FiniteDistribution::new(support, p.probs().to_vec()).map_err(e2s)?;
        ok += oracles::centered_norm_check(&dist, rho).map_err(e2s)? as usize;
    }
    if ok < 100 {
        failures.push(format!("centered norm {ok}/100"));
    }

    ok = 0;
    for _ in 0..100 {
        let d = r.random_range(1..=4);
        let pool = random_pool(d, r.random_range(1..=10), &mut r);
        let p = random_simplex(pool.len(), &mut r);
        let rho = ensemble::rho_min(&pool, &p, RANK_TOL).map_err(e2s)?;
        let zeta = r.random::<f64>().min(rho.sqrt());
        let all = (0..=10).all(|k| {
            oracles::mgf_bound_check(&pool, &p, rho, zeta, k as f64 / 10.0).unwrap_or(false)
                && oracles::mgf_bound_check(&pool, &p, rho, 0.0, k as f64 / 10.0).unwrap_or(false)
        });
        ok += all as usize;
    }
    if ok < 100 {
        failures.push(format!("mgf bound {ok}/100"));
    }

    let mut tail_ok = 0;
    let mut tail_notes = Vec::new();
    for k in 0..20u64 {
        let d = r.random_range(2..=3);
        let n = r.random_range(2..=6);
        let support: Vec<SymMatrix> = (0..n).map(|_| random_symmetric(d, &mut r).scale(0.5)).collect();
        let dist = FiniteDistribution::new(support, random_simplex(n, &mut r).probs().to_vec()).map_err(e2s)?;
        let gamma = r.random_range(5..=20);
        let lambda = 0.2 + 0.8 * r.random::<f64>();
        let side = if k % 2 == 0 { TailSide::Upper } else { TailSide::Lower };
        // Place t so that the bound lands at a target in (0.05, 0.9).
        let target = 0.05 + 0.85 * r.random::<f64>();
        let at_one = oracles::master_tail_rhs(&dist, gamma, lambda, 1.0, side).map_err(e2s)?;
        let t = 1.0 + (at_one / target).ln() / lambda;
        if t <= 0.0 {
            return Err(format!("tail config {k}: target bound not reachable with t > 0"));
        }
        let rhs = oracles::master_tail_rhs(&dist, gamma, lambda, t, side).map_err(e2s)?;
        let freq = tail_frequency(&dist, gamma, t, side, 100 + k);
        let allowance = 3.0 * (rhs * (1.0 - rhs) / MC_TRIALS as f64).sqrt();
        if freq <= rhs + allowance {
            tail_ok += 1;
        }
        tail_notes.push(format!("{freq:.3}<={rhs:.3}"));
    }
    if tail_ok < 20 {
        failures.push(format!("tail bound {tail_ok}/20 ({})", tail_notes.join(" ")));
    }

    let mut worst_whitening = 0.0f64;
    for k in 0..30 {
        let d = r.random_range(2..=4);
        let mut pool = random_pool(d, r.random_range(1..=8), &mut r);
        if k % 3 == 0 {
            // Observation vectors confined to a proper subspace: rank-deficient E[Z].
            let basis = DMatrix::from_fn(d, d - 1, |_, _| r.random::<f64>() - 0.5);
            let sensors = pool
                .sensors()
                .iter()
                .map(|s| {
                    let coeff = nalgebra::DVector::from_fn(d - 1, |i, _| s.c[i]);
                    Sensor::new((&basis * coeff).iter().copied().collect(), s.sigma2).unwrap()
                })
                .collect();
            pool = SensorPool::new(d, sensors).map_err(e2s)?;
        }
        let p = random_simplex(pool.len(), &mut r);
        let w = oracles::whiten(&pool, &p, RANK_TOL).map_err(e2s)?;
        worst_whitening = worst_whitening.max(w.residuals.max());
        if k % 3 == 0 && w.projector_z.trace() > (d - 1) as f64 + 1e-9 {
            failures.push("rank-deficient construction has full-rank E[Z]".into());
        }
    }
    if worst_whitening > ORACLE_TOL {
        failures.push(format!("whitening residual {worst_whitening:e}"));
    }

    let pass = failures.is_empty();
    let detail = if pass {
        format!("all suites pass; max whitening residual {worst_whitening:e}")
    } else {
        failures.join("; ")
    };
    outcome(pass, detail)
}

fn criterion_kalman() -> Check {
    let mut r = rng(7);
    let mut mono = 0;
    for _ in 0..200 {
        let d = r.random_range(1..=4);
        let a = DMatrix::from_fn(d, d, |_, _| 2.0 * r.random::<f64>() - 1.0);
        let sys = LtiSystem::new(a, &random_psd(d, &mut r) + &SymMatrix::identity(d).scale(0.1)).map_err(e2s)?;
        let lam = random_psd(d, &mut r);
        let lam_big = &lam + &random_psd(d, &mut r);
        let xi = random_psd(d, &mut r);
        let xi_big = &xi + &random_psd(d, &mut r);
        let f = |l: &SymMatrix, x: &SymMatrix| kalman::f_map(&sys, l, x).unwrap();
        let in_xi = symmat::loewner_leq(&f(&lam, &xi_big), &f(&lam, &xi), ORACLE_TOL).map_err(e2s)?;
        let in_lam = symmat::loewner_leq(&f(&lam, &xi), &f(&lam_big, &xi), ORACLE_TOL).map_err(e2s)?;
        mono += (in_xi && in_lam) as usize;
    }

    let mut worst_residual = 0.0f64;
    let mut worst_spread = 0.0f64;
    let mut max_iters = 0;
    for seed in SEEDS {
        let inst = build_fig1_instance(seed).map_err(e2s)?;
        let p = SamplingDistribution::uniform(inst.pool.len());
        let sel = ensemble::draw_selection(&inst.pool, &p, 60, seed).map_err(e2s)?;
        let xi = ensemble::selection_sum(&inst.pool, &sel).map_err(e2s)?;
        let inits = [
            SymMatrix::zeros(3),
            inst.system.q().clone(),
            SymMatrix::identity(3).scale(10.0),
        ];
        let limits = inits
            .iter()
            .map(|p0| kalman::steady_state(&inst.system, &xi, p0, DEFAULT_TOL, DEFAULT_MAX_ITER))
            .collect::<Result<Vec<_>, _>>()
            .map_err(e2s)?;
        for l in &limits {
            let next = kalman::riccati_step(&inst.system, &l.matrix, &xi).map_err(e2s)?;
            let res = symmat::spectral_norm(&next.try_sub(&l.matrix).unwrap()).unwrap()
                / symmat::spectral_norm(&l.matrix).unwrap().max(1.0);
            worst_residual = worst_residual.max(res);
            worst_spread = worst_spread.max(l.matrix.max_abs_diff(&limits[0].matrix));
            max_iters = max_iters.max(l.iterations);
        }
    }

    let mut worst_scalar = 0.0f64;
    for _ in 0..50 {
        let a = 2.0 * r.random::<f64>() - 1.0 + if r.random::<bool>() { 0.5 } else { 0.0 };
        let q = 0.1 + 2.0 * r.random::<f64>();
        let xi = 0.1 + 5.0 * r.random::<f64>();
        let sys = LtiSystem::new(DMatrix::from_element(1, 1, a), SymMatrix::from_diagonal(&[q])).map_err(e2s)?;
        let res = kalman::steady_state(&sys, &SymMatrix::from_diagonal(&[xi]), &SymMatrix::zeros(1), DEFAULT_TOL, DEFAULT_MAX_ITER)
            .map_err(e2s)?;
        // Positive root of ξa²p² + (1 + ξq − a²)p − q = 0.
        let (qa, qb, qc) = (xi * a * a, 1.0 + xi * q - a * a, -q);
        let root = if qa.abs() < 1e-300 {
            -qc / qb
        } else {
            (2.0 * -qc) / (qb + (qb * qb - 4.0 * qa * qc).sqrt())
        };
        worst_scalar = worst_scalar.max((res.matrix.get(0, 0) - root).abs() / root.max(1.0));
    }

    outcome(
        mono == 200 && worst_residual <= DEFAULT_TOL && worst_spread <= ORDER_TOL && worst_scalar <= 1e-10,
        format!(
            "monotone {mono}/200; fixed-point residual {worst_residual:e}; init spread {worst_spread:e}; scalar error {worst_scalar:e}; max iterations {max_iters}"
        ),
    )
}

fn criterion_determinism() -> Check {
    let dir = std::env::temp_dir().join(format!("sensel-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(e2s)?;
    let cfg = dir.join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{"gammas": [60, 120, 180, 240], "zetas": [0, 0.5, 1], "trials": 500, "distribution": "heuristic"}"#,
    )
    .map_err(e2s)?;
    let run = |name: &str, threads: &str| -> Result<Vec<u8>, String> {
        let out = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_sensel"))
            .args(["sweep", "--seed", "11", "--threads", threads, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(e2s)?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        std::fs::read(out).map_err(e2s)
    };
    let a = run("a.csv", "4")?;
    let b = run("b.csv", "4")?;
    let c = run("c.csv", "1")?;
    let _ = std::fs::remove_dir_all(&dir);
    outcome(
        a == b && b == c && !a.is_empty(),
        format!("{} bytes; reruns identical: {}; thread counts identical: {}", a.len(), a == b, b == c),
    )
}

fn main() -> ExitCode {
    let runs = coverage_runs();
    let criteria: Vec<Criterion> = vec![
        ("coverage, sum level", Box::new(|| criterion_sum_coverage(runs.as_ref().map_err(Clone::clone)?))),
        ("coverage, steady-state level", Box::new(|| criterion_ss_coverage(runs.as_ref().map_err(Clone::clone)?))),
        ("zeta trend at gamma 60", Box::new(criterion_zeta_trend)),
        ("gamma trend over 60..240", Box::new(criterion_gamma_trend)),
        ("exact identities", Box::new(criterion_identities)),
        ("oracle suite", Box::new(criterion_oracles)),
        ("Kalman numerics", Box::new(criterion_kalman)),
        ("sweep determinism", Box::new(criterion_determinism)),
    ];
    let mut all = true;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!("{} criterion {}: {name} ({detail})", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
