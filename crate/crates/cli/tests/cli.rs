use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sensel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sensel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_owned()
}

fn gen_instance(dir: &Path, config: Option<&str>, seed: &str) -> String {
    let out = dir.join(format!("inst-{seed}"));
    let out_s = out.to_str().unwrap().to_owned();
    let mut args = vec!["gen", "--out", &out_s, "--seed", seed];
    if let Some(c) = config {
        args.extend(["--config", c]);
    }
    let res = sensel(&args);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    out_s
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn gen_default_writes_numerical_example() {
    let tmp = TempDir::new().unwrap();
    let dir = gen_instance(tmp.path(), None, "5");
    let pool: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(Path::new(&dir).join("pool.json")).unwrap()).unwrap();
    assert_eq!(pool["d"], 3);
    assert_eq!(pool["sensors"].as_array().unwrap().len(), 420);
    let sys: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(Path::new(&dir).join("system.json")).unwrap()).unwrap();
    assert_eq!(sys["A"].as_array().unwrap().len(), 3);
    assert_eq!(sys["Q"][0][0], 0.5);
}

#[test]
fn gen_small_and_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.json", r#"{"d": 2, "eta": 5}"#);
    let a = gen_instance(tmp.path(), Some(&cfg), "9");
    let b_dir = tmp.path().join("again");
    let res = sensel(&["gen", "--config", &cfg, "--seed", "9", "--out", b_dir.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    for f in ["system.json", "pool.json"] {
        let x = fs::read(Path::new(&a).join(f)).unwrap();
        let y = fs::read(b_dir.join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let pool: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(Path::new(&a).join("pool.json")).unwrap()).unwrap();
    assert_eq!(pool["sensors"].as_array().unwrap().len(), 5);
}

#[test]
fn gen_failure_exits_3() {
    let tmp = TempDir::new().unwrap();
    // One sensor can never make a 2-dimensional E[Z] p.d.
    let cfg = write_config(tmp.path(), "c.json", r#"{"d": 2, "eta": 1}"#);
    let res = sensel(&["gen", "--config", &cfg, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(code(&res), 3);
}

#[test]
fn params_feasibility_and_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let inst = gen_instance(tmp.path(), None, "2");

    let cfg = write_config(tmp.path(), "ok.json", r#"{"gamma": 240, "zetas": [0.0]}"#);
    let res = sensel(&["params", "--config", &cfg, "--instance", &inst]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let v = json_of(&res);
    assert_eq!(v["feasible"], true);
    assert_eq!(v["gammas"][0]["aw_feasible"], true);
    assert_eq!(v["gammas"][0]["gen"][0]["gen_feasible"], true);
    assert!(v["rho"].as_f64().unwrap() >= 1.0);

    let cfg = write_config(tmp.path(), "low.json", r#"{"gamma": 10, "zetas": [0.0, 1.0]}"#);
    let res = sensel(&["params", "--config", &cfg, "--instance", &inst]);
    assert_eq!(code(&res), 4);
    let v = json_of(&res);
    assert_eq!(v["gammas"][0]["aw_feasible"], false);
    assert!(v["gammas"][0]["gen"].as_array().unwrap().iter().all(|g| g["gen_feasible"] == false));
    assert!(v["gammas"][0]["aw_reason"].as_str().unwrap().contains("insufficient samples"));
}

#[test]
fn params_invalid_refinement_exits_4() {
    let tmp = TempDir::new().unwrap();
    let inst = gen_instance(tmp.path(), None, "2");
    // Uniform sampling on this pool gives rho well below 9, so zeta = 3 exceeds sqrt(rho).
    let cfg = write_config(tmp.path(), "c.json", r#"{"gamma": 500, "zetas": [3.0]}"#);
    let res = sensel(&["params", "--config", &cfg, "--instance", &inst]);
    assert_eq!(code(&res), 4);
    let v = json_of(&res);
    assert!(v["gammas"][0]["gen"][0]["reason"].as_str().unwrap().contains("invalid refinement"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"gamma": 60, "colour": "red"}"#);
    assert_eq!(code(&sensel(&["params", "--config", &cfg])), 2);
    assert_eq!(code(&sensel(&["params", "--config", "/nonexistent/c.json"])), 2);
    let cfg = write_config(tmp.path(), "m.json", r#"{"gammas": [60, 120], "mode": "zeta"}"#);
    assert_eq!(code(&sensel(&["sweep", "--config", &cfg])), 2);
}

#[test]
fn sweep_row_counts() {
    let tmp = TempDir::new().unwrap();
    let inst = gen_instance(tmp.path(), None, "1");

    let cfg = write_config(
        tmp.path(),
        "z.json",
        r#"{"gamma": 60, "zetas": [0, 0.25, 0.5, 0.75, 1], "trials": 50, "distribution": "heuristic", "mode": "zeta"}"#,
    );
    let out = tmp.path().join("z.csv");
    let res = sensel(&["sweep", "--config", &cfg, "--instance", &inst, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stdout).contains("5 rows"));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "gamma,zeta,epsilon,r,lam_U_gen,lam_U_aw,lam_P_mean,lam_P_std,coverage_lower,coverage_upper,lower_trivial"
    );
    assert_eq!(lines.count(), 5);

    let cfg = write_config(
        tmp.path(),
        "g.json",
        r#"{"gammas": [60, 90, 120, 150, 180, 210, 240], "zetas": [0, 0.5, 1], "trials": 20}"#,
    );
    let res = sensel(&["sweep", "--config", &cfg, "--instance", &inst]);
    assert_eq!(code(&res), 0);
    let csv = String::from_utf8(res.stdout).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7 * 3);
    // Uniform sampling makes the two-sided bound infeasible at small gamma: empty field.
    let first: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first.len(), 11);
    assert_eq!(first[5], "");
}

#[test]
fn sweep_is_byte_identical_across_runs_and_threads() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "g.json",
        r#"{"gammas": [60, 120, 240], "zetas": [0, 1], "trials": 100, "distribution": "heuristic"}"#,
    );
    let run = |threads: &str, name: &str| {
        let out = tmp.path().join(name);
        let res = sensel(&["sweep", "--config", &cfg, "--seed", "4", "--threads", threads, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&res), 0);
        fs::read(out).unwrap()
    };
    let a = run("1", "a.csv");
    let b = run("4", "b.csv");
    let c = run("4", "c.csv");
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn verify_healthy_instance_passes() {
    let tmp = TempDir::new().unwrap();
    let inst = gen_instance(tmp.path(), None, "6");
    let cfg = write_config(tmp.path(), "v.json", r#"{"gamma": 240, "zetas": [0, 0.5, 1], "trials": 300}"#);
    let res = sensel(&["verify", "--config", &cfg, "--instance", &inst]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    let v = json_of(&res);
    assert_eq!(v["pass"], true);
    assert!(v["suites"].as_array().unwrap().len() >= 8);
}

#[test]
fn verify_tiny_instance_with_large_budget() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "t.json",
        r#"{"d": 2, "eta": 3, "gamma": 2000, "zetas": [0, 1], "trials": 200}"#,
    );
    let res = sensel(&["verify", "--config", &cfg, "--seed", "8"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    let v = json_of(&res);
    let cov = v["suites"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == "coverage gamma=2000")
        .unwrap();
    assert_eq!(cov["pass"], true);
}

#[test]
fn verify_rejects_corrupted_pool() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.json", r#"{"d": 2, "eta": 4}"#);
    let inst = gen_instance(tmp.path(), Some(&cfg), "3");
    let pool_path = Path::new(&inst).join("pool.json");
    let mut pool: serde_json::Value = serde_json::from_str(&fs::read_to_string(&pool_path).unwrap()).unwrap();
    pool["sensors"][1]["sigma2"] = serde_json::json!(0.0);
    fs::write(&pool_path, serde_json::to_string(&pool).unwrap()).unwrap();
    let res = sensel(&["verify", "--instance", &inst]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("invalid sensor"));
}
