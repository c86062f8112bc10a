use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn qnet(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qnet"));
    cmd.args(args).env_remove("QNET_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("qnet runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn small_config(dir: &Path, patch: impl FnOnce(&mut Value)) -> String {
    let mut config = json!({
        "name": "small",
        "d": 2,
        "v": [0.5, -0.5],
        "trials": 24,
        "seed": 11,
        "series": [
            { "label": "ME", "scheme": "ME", "probe": { "kind": "fock", "n": 2 },
              "resources": { "kind": "allocated", "n_c": 2.0 } },
            { "label": "MS", "scheme": "MS", "probe": { "kind": "fock", "n": 1 },
              "resources": { "kind": "explicit", "alphas": [1.0, -1.0] } }
        ],
        "task": { "kind": "curve", "m": [5, 10] }
    });
    patch(&mut config);
    let path = dir.join("config.json");
    std::fs::write(&path, config.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// CSV body without the metadata comment lines.
fn body(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let out = qnet(&["simulate", "--preset", "nope"], &[]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
}

#[test]
fn missing_source_and_conflicting_flags_are_usage_errors() {
    assert_eq!(code(&qnet(&["bounds"], &[])), 2);
    assert_eq!(code(&qnet(&["bounds", "--preset", "fig2e", "--config", "x.json"], &[])), 2);
    assert_eq!(code(&qnet(&["simulate", "--preset", "fig2e", "--workers", "0"], &[])), 2);
}

#[test]
fn schema_violations_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |c| c["v"] = json!([1.0]));
    let out = qnet(&["bounds", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(code(&out), 2);
    let cfg = small_config(dir.path(), |c| c["series"][0]["resources"]["kind"] = json!("magic"));
    assert_eq!(code(&qnet(&["bounds", "--config", &cfg], &[])), 2);
}

#[test]
fn fig2e_bounds_report_the_fock_optimum_and_shot_noise() {
    let dir = tempfile::tempdir().unwrap();
    let out = qnet(&["bounds", "--preset", "fig2e", "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("fig2e_bounds.json"));
    assert_eq!(report["command"], "bounds");
    assert_eq!(report["config"]["name"], "fig2e");
    assert!(report["version"].is_string());
    let entry = report["bounds"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["series"] == "difference" && e["m"] == 100)
        .unwrap();
    let qcrb = entry["qcrb"].as_f64().unwrap();
    assert!((qcrb - 2.0 / (100.0 * (144.0 + 24.0))).abs() < 1e-15);
    assert!((qcrb - 1.1905e-4).abs() < 1e-8);
    assert!((entry["shot_noise"].as_f64().unwrap() - 8.333e-4).abs() < 1e-7);
    assert!((entry["gain"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let f = &entry["qfim"];
    let inv = &entry["qfim_inverse"];
    for i in 0..2 {
        for j in 0..2 {
            let p: f64 = (0..2).map(|k| f[i][k].as_f64().unwrap() * inv[k][j].as_f64().unwrap()).sum();
            assert!((p - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }
}

#[test]
fn gain_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [(vec![1.0, 0.0, 0.0], 1.0), (vec![1.0 / 3.0, -1.0 / 3.0, 1.0 / 3.0], 3.0)];
    for (v, expected) in cases {
        let cfg = small_config(dir.path(), |c| {
            c["d"] = json!(3);
            c["v"] = json!(v);
            c["series"] = json!([{ "label": "s", "scheme": "MS", "probe": { "kind": "fock", "n": 1 },
                                   "resources": { "kind": "explicit", "alphas": [1.0, 1.0, 1.0] } }]);
        });
        let out = qnet(&["bounds", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let report = read_json(&dir.path().join("small_bounds.json"));
        let g = report["bounds"][0]["gain"].as_f64().unwrap();
        assert!((g - expected).abs() < 1e-12, "gain {g} for {v:?}");
    }
}

#[test]
fn simulate_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |c| c["task"]["write_estimates"] = json!(true));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = qnet(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = qnet(&["simulate", "--config", &cfg, "--workers", "1", "--out", b.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["small_curve.csv", "small_estimates.csv", "small_summary.json"] {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert_eq!(x, y, "{f} differs");
    }
    let text = std::fs::read_to_string(a.join("small_curve.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# qnet "));
    assert!(lines.next().unwrap().starts_with("# config {"));
    assert!(lines.next().unwrap().starts_with("series,scheme,m,n_t,seed,msf,"));
    assert_eq!(text.lines().count(), 3 + 4);
    let est = std::fs::read_to_string(a.join("small_estimates.csv")).unwrap();
    assert_eq!(est.lines().count(), 3 + 2 * 2 * 24);
    let summary = read_json(&a.join("small_summary.json"));
    assert_eq!(summary["runs"].as_array().unwrap().len(), 4);
    assert_eq!(summary["config"]["seed"], 11);
}

#[test]
fn seed_precedence_flag_over_env_over_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |c| c["task"]["m"] = json!([5]));
    let run = |name: &str, args: &[&str], envs: &[(&str, &str)]| {
        let out_dir = dir.path().join(name);
        let mut full = vec!["simulate", "--config", &cfg, "--out", out_dir.to_str().unwrap()];
        full.extend_from_slice(args);
        let out = qnet(&full, envs);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        (read_json(&out_dir.join("small_summary.json")), body(&out_dir.join("small_curve.csv")))
    };
    let (base, base_body) = run("base", &[], &[]);
    let (env, env_body) = run("env", &[], &[("QNET_SEED", "99")]);
    let (flag, flag_body) = run("flag", &["--seed", "7"], &[("QNET_SEED", "99")]);
    let (explicit, explicit_body) = run("explicit", &["--seed", "99"], &[]);
    assert_eq!(base["config"]["seed"], 11);
    assert_eq!(env["config"]["seed"], 99);
    assert_eq!(flag["config"]["seed"], 7);
    assert_eq!(env_body, explicit_body);
    assert_ne!(base_body, env_body);
    assert_ne!(flag_body, env_body);
    assert_eq!(explicit["config"]["seed"], 99);
}

#[test]
fn widespread_nonconvergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |c| {
        c["task"]["m"] = json!([5]);
        c["mle"] = json!({ "max_iterations": 1, "tolerance": 1e-300 });
        c["nonconvergence_threshold"] = json!(0.0);
    });
    let out = qnet(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("small_summary.json").exists());
}

fn write_fit_csv(path: &Path, gamma_me: f64, gamma_ms: f64, m_opt: f64, d: f64) {
    let mut text = String::from("# synthetic\nseries,scheme,N_T,msf\n");
    for n in [200.0, 300.0, 450.0, 600.0, 800.0] {
        let me = gamma_me * m_opt / (n * n + 2.0 * n * m_opt);
        let ms = gamma_ms * m_opt * d / (n * n + 2.0 * n * d * m_opt);
        text += &format!("ME,ME,{n},{me:.17e}\nMS,MS,{n},{ms:.17e}\n");
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn fit_recovers_planted_gammas() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("points.csv");
    write_fit_csv(&input, 2.36, 2.4, 36.0, 2.0);
    let out = qnet(
        &["fit", "--input", input.to_str().unwrap(), "--d", "2", "--m-opt", "36", "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let fits: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(fits[0]["model"], "ME");
    assert!((fits[0]["gamma"].as_f64().unwrap() - 2.36).abs() < 1e-12);
    assert_eq!(fits[1]["model"], "MS");
    assert!((fits[1]["gamma"].as_f64().unwrap() - 2.4).abs() < 1e-12);
    let stored = read_json(&dir.path().join("fit.json"));
    assert_eq!(stored["config"]["m_opt"], 36);

    let out = qnet(
        &["fit", "--input", input.to_str().unwrap(), "--model", "MS", "--series", "MS", "--preset", "fig3c"],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let fits: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(fits.as_array().unwrap().len(), 1);
    assert!((fits[0]["gamma"].as_f64().unwrap() - 2.4).abs() < 1e-12);
}

#[test]
fn fit_rejects_empty_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "N_T,msf\n").unwrap();
    let out = qnet(&["fit", "--input", empty.to_str().unwrap(), "--model", "ME", "--d", "2", "--m-opt", "36"], &[]);
    assert_ne!(code(&out), 0);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "N_T,msf\n200,abc\n").unwrap();
    let out = qnet(&["fit", "--input", bad.to_str().unwrap(), "--model", "ME", "--d", "2", "--m-opt", "36"], &[]);
    assert_eq!(code(&out), 2);
    let missing = dir.path().join("missing.csv");
    std::fs::write(&missing, "x,y\n1,2\n").unwrap();
    let out = qnet(&["fit", "--input", missing.to_str().unwrap(), "--model", "ME", "--d", "2", "--m-opt", "36"], &[]);
    assert_eq!(code(&out), 2);
    let out = qnet(&["fit", "--input", empty.to_str().unwrap(), "--model", "ME"], &[]);
    assert_eq!(code(&out), 2);
}
