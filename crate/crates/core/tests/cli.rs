use std::path::{Path, PathBuf};
use std::process::Command;

use qhd_lab::cli::{predict, run_scenario, ScenarioConfig, Status, CSV_HEADER};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qhd-lab"))
}

const SMALL: &str = r#"
[scenario]
name = "small"
solver = "both"
t_final = 0.02
record_every = 40

[grid]
x_lo = 0.0
x_hi = 6.283185307179586
n = 32

[physics]
eps2 = 2.0
law = { kind = "power_law", gamma = 2.0 }

[boundary]
kind = "periodic"

[initial]
rho = { recipe = "cosine", amplitude = 0.1 }
u = { recipe = "constant", value = 0.0 }

[solver]
nls_dt = 1e-3
"#;

#[test]
fn predict_scenario_reports_exact_functionals() {
    let cfg = ScenarioConfig::load(&scenario("predict.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = predict(&cfg, dir.path()).unwrap();
    let h = &out.summary["hypotheses"];
    assert!((h["i0"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-6);
    assert!((h["m0"].as_f64().unwrap() + 1.0 / 6.0).abs() < 1e-6);
    assert!((h["t_star"].as_f64().unwrap() - 1.0).abs() < 2e-5);
    assert!(out.files[0].exists());
}

#[test]
fn csv_is_deterministic_and_summary_reproduces_the_run() {
    let cfg = ScenarioConfig::from_toml_str(SMALL).unwrap();
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_scenario(&cfg, a.path()).unwrap();
    run_scenario(&cfg, b.path()).unwrap();
    assert_eq!(first.status, Status::Success);

    let again = ScenarioConfig::load(&a.path().join("small.summary.json")).unwrap();
    assert_eq!(again, cfg);
    run_scenario(&again, c.path()).unwrap();

    for solver in ["qhd", "nls"] {
        let name = format!("small.{solver}.csv");
        let x = std::fs::read(a.path().join(&name)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(&name)).unwrap());
        assert_eq!(x, std::fs::read(c.path().join(&name)).unwrap());

        let text = String::from_utf8(x).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 11);
            for col in cols {
                let mantissa = col.split('e').next().unwrap();
                assert_eq!(mantissa.trim_start_matches('-').len(), 18, "{col}");
                col.parse::<f64>().unwrap();
            }
        }
    }
    let x = &first.summary["run"]["results"]["crosscheck"];
    assert!(x["max_density_discrepancy"].as_f64().unwrap() < 1e-3);
    for section in ["run", "config", "hypotheses", "monitors", "events"] {
        assert!(first.summary.get(section).is_some(), "{section}");
    }
}

#[test]
fn weights_ball_d3() {
    let out = bin().args(["weights", "ball", "--dim", "3", "--samples", "2000"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["laplacian"].as_f64(), Some(-6.0));
    assert_eq!(doc["passed"].as_bool(), Some(true));
}

#[test]
fn config_errors_exit_2_with_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, SMALL.replace("n = 32", "n = 3")).unwrap();
    let out = bin().arg("run").arg(&path).env("QHD_LAB_OUTPUT_DIR", dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 11") && err.contains("grid.n"), "{err}");
}

#[test]
fn instability_is_a_structured_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unstable.toml");
    let src = SMALL
        .replace("solver = \"both\"", "solver = \"qhd\"")
        .replace("t_final = 0.02", "t_final = 2.0")
        .replace("{ recipe = \"constant\", value = 0.0 }", "{ recipe = \"sine\", amplitude = 0.01, wavenumber = 15.0 }")
        .replace("nls_dt = 1e-3", "qhd_dt = 0.5");
    std::fs::write(&path, src).unwrap();
    let out = bin().arg("run").arg(&path).env("QHD_LAB_OUTPUT_DIR", dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("small.summary.json")).unwrap()).unwrap();
    assert!(doc["events"]["instability"]["t"].as_f64().unwrap() > 0.0);
    assert_eq!(doc["run"]["exit_code"].as_i64(), Some(3));
}

#[test]
fn failed_monitor_assumptions_exit_4() {
    let src = std::fs::read_to_string(scenario("wall-mode.toml"))
        .unwrap()
        .replace("law = { kind = \"power_law\", gamma = 2.0 }", "law = { kind = \"sum_of_powers\", terms = [] }")
        .replace("n = 129", "n = 33")
        .replace("t_final = 0.1", "t_final = 0.005");
    let cfg = ScenarioConfig::from_toml_str(&src).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(&cfg, dir.path()).unwrap();
    assert_eq!(out.status, Status::MonitorFailure);
    assert_eq!(out.status.code(), 4);
    assert_eq!(out.summary["monitors"]["failed"][0], "dirichlet/assumptions");
}

#[test]
fn environment_selects_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("predict")
        .arg(scenario("predict.toml"))
        .env("QHD_LAB_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("predict.predict.json").exists());
}

#[test]
fn verify_numerics_suite() {
    let out = bin().args(["verify", "numerics"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["passed"].as_bool(), Some(true));
    assert!(!doc["checks"].as_array().unwrap().is_empty());
}

#[test]
fn stationary_supercritical_shot_reports_overflow() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("stationary")
        .arg(scenario("stationary.toml"))
        .env("QHD_LAB_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stationary.stationary.json")).unwrap())
            .unwrap();
    assert_eq!(doc["events"]["shot"]["kind"], "overflow");
    assert!(dir.path().join("stationary.stationary.csv").exists());
}
