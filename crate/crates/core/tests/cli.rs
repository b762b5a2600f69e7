use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn srbkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srbkit"))
        .args(args)
        .env("SRBKIT_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_summary_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"model": {"name": "cat"}, "experiment": "pliss_demo"}"#);
    let out_dir = dir.path().join("out");
    let o = srbkit(&["run", &cfg, "-o", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS count_exceeds_theta_n"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["experiment"], "pliss_demo");
    for f in summary["files"].as_array().unwrap() {
        assert!(out_dir.join(f.as_str().unwrap()).exists(), "{f}");
    }
    let cocycle = fs::read_to_string(out_dir.join("cocycle.csv")).unwrap();
    assert_eq!(cocycle.lines().next(), Some("step,log_norm_df_e,log_norm_df_inv_f"));
    let timing: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("timing.json")).unwrap()).unwrap();
    assert_eq!(timing["workers"], 2);
}

#[test]
fn sample_configs_pass() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let dir = tempfile::tempdir().unwrap();
    for name in ["cat_pliss_demo", "solenoid_contraction", "dfa_hyperbolic_times"] {
        let cfg = configs.join(format!("{name}.json"));
        let out = dir.path().join(name);
        let o = srbkit(&["run", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}{}", stdout(&o), stderr(&o));
    }
}

#[test]
fn failed_assertions_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // ten iterates cannot bring Birkhoff averages within 1e-9 of the reference
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"name": "cat"}, "experiment": "physical_basin", "horizon": 10,
            "measures": {"tol": 1e-9, "samples": 100}}"#,
    );
    let o = srbkit(&["run", &cfg, "-o", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL basin_fraction"));
}

#[test]
fn sigma_above_one_is_rejected_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"name": "cat"}, "experiment": "pliss_demo", "constants": {"sigma": 1.5}}"#,
    );
    let o = srbkit(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("constants.sigma"), "{}", stderr(&o));
}

#[test]
fn malformed_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"name": "cat"}, "experiment": "pliss_demo", "typo": 1}"#,
    );
    let o = srbkit(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("typo"));
    let o = srbkit(&["run", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn list_models_names_all_four() {
    let o = srbkit(&["list-models"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["cat:", "perturbed_cat:", "solenoid:", "dfa:"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn describe_reports_files_and_assertions() {
    let o = srbkit(&["describe", "distortion"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("distortion.csv"));
    assert!(text.contains("ratios_within_bound"));
    let o = srbkit(&["describe", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("srb_converge"));
}

#[test]
fn help_mentions_the_worker_variable() {
    let o = srbkit(&["--help"]);
    assert!(stdout(&o).contains("SRBKIT_WORKERS"));
}
