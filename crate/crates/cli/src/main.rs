mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use sensel::concentration::{self, oracles};
use sensel::harness::{self, CoverageReport, Experiment, Instance, CSV_HEADER};
use sensel::kalman::{self, LtiSystem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use sensel::symmat::{self, SymMatrix, RANK_TOL};
use sensel::{ensemble::SensorPool, Error};

use config::{CliConfig, SweepMode};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Input(String),
    Invariant(String),
    Infeasible(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(s) => write!(f, "invalid input: {s}"),
            CliError::Invariant(s) => write!(f, "invariant violated: {s}"),
            CliError::Infeasible(s) => write!(f, "infeasible parameters: {s}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 4,
            CliError::Core(e) => match e {
                Error::HypothesisViolated(_) => 1,
                Error::GenerationFailed { .. } => 3,
                Error::InsufficientSamples { .. }
                | Error::InvalidRefinement { .. }
                | Error::Undefined
                | Error::TrivialLowerScale { .. } => 4,
                Error::NoConvergence { .. } => 5,
                _ => 2,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "sensel", version, about = "Concentration bounds for Kalman filtering with randomly selected sensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config; omitted keys take the numerical-example defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (a directory for `gen`, a file otherwise; stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads for Monte Carlo trials (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Directory with system.json and pool.json; generated from the seed if omitted.
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write system.json and pool.json.
    Gen(Common),
    /// Solve the bound parameters and report feasibility.
    Params(Common),
    /// Run a zeta or gamma sweep and write CSV.
    Sweep(Common),
    /// Run coverage experiments and the oracle suites.
    Verify(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Gen(c) | Command::Params(c) | Command::Sweep(c) | Command::Verify(c) => c.clone(),
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = CliConfig::load(common.config.as_deref(), common.seed).and_then(|cfg| match cli.command {
        Command::Gen(_) => cmd_gen(&cfg, &common),
        Command::Params(_) => cmd_params(&cfg, &common),
        Command::Sweep(_) => cmd_sweep(&cfg, &common),
        Command::Verify(_) => cmd_verify(&cfg, &common),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Input(e.to_string()))
        }
    }
}

fn load_instance(dir: &Path) -> Result<Instance, CliError> {
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read_to_string(&p).map_err(|e| io_err(&p, e))
    };
    let system = LtiSystem::from_json(&read("system.json")?)?;
    let pool = SensorPool::from_json(&read("pool.json")?)?;
    Ok(Instance {
        system,
        pool,
        rejections: 0,
    })
}

fn experiment(cfg: &CliConfig, common: &Common) -> Result<Experiment, CliError> {
    Ok(match &common.instance {
        Some(dir) => Experiment::with_instance(&cfg.experiment, load_instance(dir)?)?,
        None => Experiment::prepare(&cfg.experiment)?,
    })
}

fn cmd_gen(cfg: &CliConfig, common: &Common) -> Result<(), CliError> {
    let e = &cfg.experiment;
    let inst = harness::build_instance(e.d, e.eta, e.sigma2, e.q_scale, e.seed)?;
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|err| io_err(&dir, err))?;
    for (name, text) in [
        ("system.json", inst.system.to_json()),
        ("pool.json", inst.pool.to_json()),
    ] {
        let p = dir.join(name);
        fs::write(&p, text + "\n").map_err(|err| io_err(&p, err))?;
    }
    println!(
        "wrote {} (d = {}, eta = {}, seed = {}, rejections = {})",
        dir.display(),
        e.d,
        e.eta,
        e.seed,
        inst.rejections
    );
    Ok(())
}

#[derive(Serialize)]
struct GenEntry {
    zeta: f64,
    r: Option<f64>,
    epsilon_gen: Option<f64>,
    kappa_gen: Option<f64>,
    nontriviality_threshold: f64,
    gen_feasible: bool,
    lower_trivial: bool,
    reason: Option<String>,
}

#[derive(Serialize)]
struct GammaEntry {
    gamma: usize,
    epsilon_aw: Option<f64>,
    aw_feasible: bool,
    aw_reason: Option<String>,
    gen: Vec<GenEntry>,
}

fn cmd_params(cfg: &CliConfig, common: &Common) -> Result<(), CliError> {
    let exp = experiment(cfg, common)?;
    let e = &exp.config;
    let mut feasible = true;
    let mut first_err: Option<Error> = None;
    let mut entries = Vec::new();
    for &gamma in &e.gammas {
        let aw = exp.aw_params(gamma);
        let gen = e
            .zetas
            .iter()
            .map(|&zeta| {
                let params = exp.gen_params(gamma, zeta);
                let entry = GenEntry {
                    zeta,
                    r: concentration::r_factor(exp.rho, zeta).ok(),
                    epsilon_gen: params.as_ref().ok().map(|p| p.epsilon),
                    kappa_gen: concentration::sample_complexity_gen(e.d, e.delta, exp.rho, zeta).ok(),
                    nontriviality_threshold: concentration::nontriviality_threshold(e.d, e.delta, exp.rho, zeta),
                    gen_feasible: params.is_ok(),
                    lower_trivial: params.as_ref().map(|p| p.lower_trivial()).unwrap_or(true),
                    reason: params.as_ref().err().map(|err| err.to_string()),
                };
                if let Err(err) = params {
                    first_err.get_or_insert(err);
                }
                entry
            })
            .collect::<Vec<_>>();
        feasible &= aw.is_ok() && gen.iter().all(|g| g.gen_feasible);
        entries.push(GammaEntry {
            gamma,
            epsilon_aw: aw.as_ref().ok().map(|a| a.epsilon_bar),
            aw_feasible: aw.is_ok(),
            aw_reason: aw.as_ref().err().map(|err| err.to_string()),
            gen,
        });
        if let Err(err) = aw {
            first_err.get_or_insert(err);
        }
    }
    let report = json!({
        "d": e.d,
        "eta": e.eta,
        "delta": e.delta,
        "rho": exp.rho,
        "kappa_aw": concentration::sample_complexity_aw(e.d, e.delta, exp.rho),
        "feasible": feasible,
        "gammas": entries,
    });
    write_output(common.out.as_deref(), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    match first_err {
        None => Ok(()),
        Some(err) => Err(CliError::Infeasible(err.to_string())),
    }
}

fn sweep_csv(rows: &[harness::SweepRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)
        .map_err(|e| CliError::Input(e.to_string()))?;
    for row in rows {
        w.write_record(row.csv_fields())
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn cmd_sweep(cfg: &CliConfig, common: &Common) -> Result<(), CliError> {
    let exp = experiment(cfg, common)?;
    if cfg.mode == SweepMode::Zeta && exp.config.gammas.len() != 1 {
        return Err(CliError::Input(
            "mode \"zeta\" needs exactly one gamma".into(),
        ));
    }
    let (rows, reports) = harness::sweep(&exp)?;
    let excluded: usize = reports.iter().map(|r| r.excluded).sum();
    let csv = sweep_csv(&rows)?;
    let summary = format!(
        "{} rows, {} gamma values, rho = {}, {} trials each, {} excluded",
        rows.len(),
        exp.config.gammas.len(),
        exp.rho,
        exp.config.trials,
        excluded
    );
    match &common.out {
        Some(p) => {
            fs::write(p, csv).map_err(|e| io_err(p, e))?;
            println!("{summary}");
        }
        None => {
            write_output(None, &csv)?;
            eprintln!("{summary}");
        }
    }
    for r in &reports {
        r.validate()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SuiteResult {
    name: String,
    pass: bool,
    detail: String,
}

fn suite(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> SuiteResult {
    SuiteResult {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

fn coverage_suite(report: &CoverageReport) -> SuiteResult {
    let mut failures = Vec::new();
    let n = report.n_trials;
    let thr = harness::coverage_threshold(report.delta, n);
    let thr_aw = harness::coverage_threshold(report.aw.delta_bar, n);
    let mut check = |label: String, value: Option<f64>, threshold: f64| {
        if let Some(v) = value {
            if v < threshold {
                failures.push(format!("{label} = {v} < {threshold:.4}"));
            }
        }
    };
    for g in &report.gen {
        check(format!("zeta {} sum lower", g.zeta), g.freq_lower, thr);
        check(format!("zeta {} sum upper", g.zeta), g.freq_upper, thr);
        check(format!("zeta {} steady-state lower", g.zeta), g.freq_ss_lower, thr);
        check(format!("zeta {} steady-state upper", g.zeta), g.freq_ss_upper, thr);
    }
    check("two-sided sum".into(), report.aw.freq_two_sided, thr_aw);
    check("two-sided steady state".into(), report.aw.freq_ss_two_sided, thr_aw);
    for g in &report.gen {
        if g.implication_violations > 0 {
            failures.push(format!("zeta {}: {} implication violations", g.zeta, g.implication_violations));
        }
    }
    if report.aw.implication_violations > 0 {
        failures.push(format!("two-sided: {} implication violations", report.aw.implication_violations));
    }
    if report.validate().is_err() {
        failures.push(format!("{} of {} trials excluded", report.excluded, n));
    }
    let detail = if failures.is_empty() {
        format!("{n} trials, threshold {thr:.4}")
    } else {
        failures.join("; ")
    };
    suite(format!("coverage gamma={}", report.gamma), failures.is_empty(), detail)
}

fn oracle_suites(exp: &Experiment) -> Result<Vec<SuiteResult>, CliError> {
    let mut out = Vec::new();
    let inst = &exp.instance;

    let undetectable = inst
        .pool
        .sensors()
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            match kalman::detectability_check(inst.system.a(), std::slice::from_ref(&s.c), RANK_TOL) {
                Ok(true) => None,
                Ok(false) => Some(Ok(i)),
                Err(e) => Some(Err(e)),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    out.push(suite(
        "detectability",
        undetectable.is_empty(),
        format!("{} of {} sensors fail PBH", undetectable.len(), inst.pool.len()),
    ));

    let w = oracles::whiten(&inst.pool, &exp.p, RANK_TOL)?;
    let res = w.residuals.max();
    out.push(suite("whitening", res <= 1e-9, format!("max residual {res:e}")));

    let dist = &w.distribution;
    out.push(suite(
        "centered norm",
        oracles::centered_norm_check(dist, exp.rho)?,
        format!("rho = {}", exp.rho),
    ));

    let mut mgf_ok = true;
    let mut checked = Vec::new();
    for &zeta in &exp.config.zetas {
        if !(0.0..=1.0).contains(&zeta) || zeta * zeta > exp.rho {
            continue;
        }
        for k in 0..=10 {
            mgf_ok &= oracles::mgf_bound_check_dist(dist, exp.rho, zeta, k as f64 / 10.0)?;
        }
        checked.push(zeta);
    }
    out.push(suite("mgf bound", mgf_ok, format!("zetas {checked:?}, lambda in 0..=1 step 0.1")));

    let mut identity_ok = true;
    let mut sandwich_ok = true;
    let mean = dist.mean()?;
    for y in dist.support() {
        identity_ok &= oracles::exp_identity_check(y)?;
        let x = (y - &mean).scale(1.0 / exp.rho);
        sandwich_ok &= oracles::exp_sandwich_check(&x, 1e-9)?;
    }
    out.push(suite("exp identity", identity_ok, format!("{} support points", dist.support().len())));
    out.push(suite("exp sandwich", sandwich_ok, format!("{} centered support points", dist.support().len())));

    let gamma = exp.config.gammas[0] as f64;
    let xi = exp.ez.scale(gamma);
    let d = exp.config.d;
    let inits = [
        SymMatrix::zeros(d),
        inst.system.q().clone(),
        SymMatrix::identity(d).scale(10.0),
    ];
    let limits = inits
        .iter()
        .map(|p0| kalman::steady_state(&inst.system, &xi, p0, DEFAULT_TOL, DEFAULT_MAX_ITER))
        .collect::<Result<Vec<_>, _>>()?;
    let spread = limits
        .iter()
        .map(|l| l.matrix.max_abs_diff(&limits[0].matrix))
        .fold(0.0, f64::max);
    let residual = limits.iter().map(|l| l.residual).fold(0.0, f64::max);
    out.push(suite(
        "steady-state uniqueness",
        spread <= 1e-8 && residual <= DEFAULT_TOL,
        format!("spread {spread:e}, residual {residual:e}"),
    ));

    let top = symmat::max_eig(&limits[0].matrix)?;
    out.push(suite("steady-state p.d.", top > 0.0 && symmat::min_eig(&limits[0].matrix)? > 0.0, format!("max eigenvalue {top}")));
    Ok(out)
}

fn cmd_verify(cfg: &CliConfig, common: &Common) -> Result<(), CliError> {
    let exp = experiment(cfg, common)?;
    let mut suites = oracle_suites(&exp)?;
    for &gamma in &exp.config.gammas {
        let report = harness::coverage(&exp, gamma)?;
        suites.push(coverage_suite(&report));
    }
    let pass = suites.iter().all(|s| s.pass);
    let report = json!({
        "seed": exp.config.seed,
        "rho": exp.rho,
        "pass": pass,
        "suites": suites,
    });
    write_output(common.out.as_deref(), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    if !pass {
        let failed: Vec<&str> = suites.iter().filter(|s| !s.pass).map(|s| s.name.as_str()).collect();
        return Err(CliError::Invariant(failed.join(", ")));
    }
    Ok(())
}
