use std::path::Path;
use std::process::{Command, Output};

fn vesar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vesar")).args(args).output().expect("spawn vesar")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn analytic_formulas() {
    let o = vesar(&["analytic", "target-mu"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "mu = 0.44\nve = 0.56\n");

    let o = vesar(&["analytic", "infrequent-observed-mu", "--k", "25"]);
    assert_eq!(stdout(&o), "mu = 0.463461538462\nve = 0.536538461538\n");

    let o = vesar(&["analytic", "invert-nu", "--target-ve", "0.56"]);
    assert_eq!(stdout(&o), "nu = 0.6\n");

    let o = vesar(&["analytic", "sampling-fraction", "--k", "10", "--rho-v", "8"]);
    assert_eq!(stdout(&o), "sampling_fraction = 0.710714285714\n");

    let o = vesar(&["analytic", "observed-component", "--k", "7", "--rho-v", "14", "--tau-v", "0.01"]);
    assert_eq!(stdout(&o), "observed_component = 0.14\n");
}

#[test]
fn analytic_errors_are_reported() {
    let o = vesar(&["analytic", "sampling-fraction", "--rho-v", "8"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--k"));

    let o = vesar(&["analytic", "invert-nu", "--target-ve", "0.56", "--delta", "0.1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = config("infrequent_testing.conf");
    for out in [&a, &b] {
        let o = vesar(&["simulate", "--config", &cfg, "--units", "3000", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 9);

    let o = vesar(&["simulate", "--config", &cfg, "--units", "3000", "--seed", "99"]);
    assert_ne!(stdout(&o), text);
}

#[test]
fn zero_units_gives_header_only() {
    let o = vesar(&["simulate", "--config", &config("registry_harris.conf"), "--units", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("scenario_id,sweep_param,sweep_value,target_ve"));
}

#[test]
fn bad_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "scenario.seed = 1\nsymptom.delta = 1.5\n").unwrap();
    let o = vesar(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("symptom.delta"));

    std::fs::write(&path, "scenario.units = 10\n").unwrap();
    let o = vesar(&["simulate", "--config", path.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("scenario.seed"));
}

#[test]
fn analytic_sweeps() {
    let o = vesar(&["sweep", "--figure", "1a"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| l.starts_with("fig1a,delta,")));
    assert!(text.contains("infeasible"));

    let o = vesar(&["sweep", "--figure", "a1"]);
    let text = stdout(&o);
    let ve_at = |k: &str| {
        text.lines()
            .find(|l| l.split(',').nth(2) == Some(k) && l.split(',').nth(3) == Some("0.6"))
            .map(|l| l.split(',').nth(6).unwrap().to_string())
    };
    assert_eq!(ve_at("1").as_deref(), Some("0.6"));
    assert_eq!(ve_at("25"), ve_at("30"));

    let o = vesar(&["sweep", "--figure", "1b", "--units", "100"]);
    assert!(!o.status.success());
}

#[test]
fn validate_passes_on_a_moderate_run() {
    let o = vesar(&["validate", "--units", "100000", "--seed", "5"]);
    let text = stdout(&o);
    assert!(o.status.success(), "{text}");
    assert!(text.lines().count() >= 10);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
