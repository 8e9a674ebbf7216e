use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn netgame(cmd: &str, config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netgame"))
        .args([cmd, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn shipped_configs_run() {
    let cases = [
        ("analyze", "trend_setter.json", "report.json"),
        ("dynamics", "brdynamics_potential.json", "dynamics_continuous_rk4.csv"),
        ("sensitivity", "lq_pair_sensitivity.json", "grad_y_xstar.csv"),
    ];
    for (cmd, cfg, produced) in cases {
        let dir = tempfile::tempdir().unwrap();
        let o = netgame(cmd, &configs().join(cfg), dir.path());
        assert!(o.status.success(), "{cmd} {cfg}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join(produced).exists(), "{cmd} {cfg} did not write {produced}");
    }
}

#[test]
fn missing_or_malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = netgame("analyze", &dir.path().join("absent.json"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    let bad = write_config(dir.path(), r#"{"game": {"family": "scalar_lq"}}"#);
    assert_eq!(netgame("solve", &bad, dir.path()).status.code(), Some(2));
}

#[test]
fn irregular_equilibrium_exits_numerical() {
    // Agent 2 sits at its lower bound with zero marginal cost, so strict
    // complementarity fails.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"game": {"family": "scalar_lq", "network": {"kind": "complete", "n": 2},
            "k": 0.5, "intercept": [1, 0.5]},
            "sensitivity": {"parameter": "intercept"}}"#,
    );
    let o = netgame("sensitivity", &cfg, dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn zero_iteration_dynamics_records_only_the_start() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"game": {"family": "scalar_lq", "network": {"kind": "complete", "n": 3}, "k": 0.4, "intercept": 1},
            "dynamics": {"modes": [{"mode": "discrete_sequential"}], "x0": [0.5, 0.25, 0.125], "max_iters": 0}}"#,
    );
    let o = netgame("dynamics", &cfg, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("dynamics_discrete_sequential.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert_eq!(lines[0], "step_or_time,x_1_1,x_2_1,x_3_1,residual");
    let fields: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(&fields[..4], &[0.0, 0.5, 0.25, 0.125]);
    assert!(lines[1].split(',').nth(1).unwrap().contains('e'), "floats use scientific notation");
}

#[test]
fn multi_activity_labels_are_one_based() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"game": {"family": "multi_activity", "network": {"kind": "complete", "n": 2},
            "intercept_a": 1, "intercept_b": 1, "beta": 0.2, "delta": -0.3, "mu": 0.1,
            "constraints": {"kind": "box", "lower": [0, 0], "upper": [3, 3]}}}"#,
    );
    let o = netgame("solve", &cfg, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("equilibria.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "equilibrium,x_1_1,x_1_2,x_2_1,x_2_2,residual,stability"
    );
}
