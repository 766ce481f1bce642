//! End-to-end tests against the built binary: exit codes, report keys, CSV
//! schema, determinism and the repro artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_posobs"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn check_certified_scenario_exits_zero() {
    let out = run(&["check", scenario("ex1.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    for key in [
        "cond6a",
        "cond6f",
        "rho_cl",
        "rho_ext",
        "invariance_ok true",
        "stability_ok true",
    ] {
        assert!(text.contains(key), "missing {key} in:\n{text}");
    }
    assert!(text.contains("cond6a 0.000000000000e0 pass"));
    assert!(text.contains("rho_cl 9.000000000000e-1"));
}

#[test]
fn check_generic_flag_fails_mixed_sign_output() {
    let out = run(&["check", scenario("ex1.json").to_str().unwrap(), "--generic"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("cond10c -3.000000000000e-1 fail"), "{text}");
}

#[test]
fn check_noisy_scenario_reports_stability_failure() {
    let out = run(&["check", scenario("ex3.json").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("cond17a 1.000000000000e-2 pass"), "{text}");
    assert!(text.contains("cond17b 8.000000000000e-3 pass"), "{text}");
    assert!(text.contains("cond17c 1.200000000000e-2 pass"), "{text}");
    assert!(text.contains("stability_ok false"), "{text}");
    assert!(text.contains("noise_ok true"), "{text}");
}

#[test]
fn check_without_gains_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("no_gains.json");
    std::fs::write(
        &path,
        r#"{"system": {"A": [[0.5]], "B": [[1.0]], "C": [[1.0]]}}"#,
    )
    .unwrap();
    let out = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_json_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn negative_dynamics_without_positivization_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.json");
    std::fs::write(
        &path,
        r#"{"system": {"A": [[1.2, 0.2], [-0.1, 0.2]],
                       "B": [[1.0, 0.0], [0.0, 1.0]],
                       "C": [[1.0, -1.0]]},
            "gains": {"L_upper": [[0.3], [0.0]], "L_lower": [[0.3], [0.0]],
                      "K_upper": [[0.0, 0.3], [0.0, 0.0]],
                      "K_lower": [[-0.3, 0.0], [0.0, 0.0]]}}"#,
    )
    .unwrap();
    let out = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("A(2,1)"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["check", "--definitely-not-a-flag"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn synth_thm1_infeasible_on_mixed_sign_output() {
    let out = run(&[
        "synth",
        scenario("ex1.json").to_str().unwrap(),
        "--mode",
        "thm1",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("infeasible at stage: lower-observer"));
}

#[test]
fn synth_coupled_writes_certified_gains() {
    let dir = tempfile::tempdir().unwrap();
    let gains_path = dir.path().join("gains.json");
    let out = run(&[
        "synth",
        scenario("ex1.json").to_str().unwrap(),
        "--mode",
        "coupled",
        "--out",
        gains_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("invariance_ok true"), "{text}");
    assert!(text.contains("stability_ok true"), "{text}");
    let written = std::fs::read_to_string(&gains_path).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&written).unwrap();
    for key in ["L_upper", "L_lower", "K_upper", "K_lower"] {
        assert!(parsed.get(key).is_some(), "gains file missing {key}");
    }
}

#[test]
fn synth_positivization_succeeds() {
    let out = run(&[
        "synth",
        scenario("ex2.json").to_str().unwrap(),
        "--mode",
        "coupled",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_with_noise_conditions_succeeds_on_noisy_scenario() {
    let out = run(&["synth", scenario("ex3.json").to_str().unwrap(), "--noise"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("noise_ok true"), "{text}");
    assert!(text.contains("stability_ok true"), "{text}");
}

#[test]
fn simulate_writes_csv_with_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tr.csv");
    let out = run(&[
        "simulate",
        scenario("ex1.json").to_str().unwrap(),
        "--T",
        "50",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,xbar1,xlow1"));
    assert_eq!(text.lines().count(), 52); // header + 51 rows
    assert!(String::from_utf8_lossy(&out.stderr).contains("ordering: none"));
}

#[test]
fn simulate_full_emits_every_coordinate() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tr.csv");
    let out = run(&[
        "simulate",
        scenario("ex1.json").to_str().unwrap(),
        "--T",
        "5",
        "--full",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,x1,xbar1,xlow1,x2,xbar2,xlow2\n"));
}

#[test]
fn simulate_zero_presets_yield_zero_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zeros.json");
    let base = std::fs::read_to_string(scenario("ex1.json")).unwrap();
    let text = base
        .replace("\"uniform01\"", "\"zeros\"")
        .replace("\"ones\"", "\"zeros\"");
    std::fs::write(&path, text).unwrap();
    let csv = dir.path().join("tr.csv");
    let out = run(&[
        "simulate",
        path.to_str().unwrap(),
        "--T",
        "10",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    for line in std::fs::read_to_string(&csv).unwrap().lines().skip(1) {
        for field in line.split(',').skip(1) {
            assert_eq!(field.parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn noisy_simulation_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for csv in [&a, &b] {
        let out = run(&[
            "simulate",
            scenario("ex3.json").to_str().unwrap(),
            "--noisy",
            "--seed",
            "7",
            "--T",
            "80",
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn ensemble_runs_need_noisy_flag() {
    let out = run(&[
        "simulate",
        scenario("ex1.json").to_str().unwrap(),
        "--N",
        "10",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn fixed_point_scalar_benchmark() {
    let out = run(&["fixed-point", scenario("scalar.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("x_star 2.000000000000e-1"), "{text}");
    assert!(text.contains("xbar_star 2.333333333333e-1"), "{text}");
    assert!(text.contains("xlow_star 1.000000000000e-1"), "{text}");
    assert!(text.contains("in_cone true"), "{text}");
    assert!(text.contains("attracting true"), "{text}");
}

#[test]
fn fixed_point_flags_non_attracting_demo() {
    let out = run(&["fixed-point", scenario("ex3.json").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("attracting false"));
}

#[test]
fn repro_deterministic_demo_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["repro", "ex1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("cond6a 0.000000000000e0 pass"), "{text}");
    let csv = std::fs::read_to_string(dir.path().join("state_bounds.csv")).unwrap();
    assert!(csv.starts_with("t,x1,xbar1,xlow1\n"));
    assert_eq!(csv.lines().count(), 52);
    let script = std::fs::read_to_string(dir.path().join("plot_state_bounds.gp")).unwrap();
    assert!(script.contains("state_bounds.csv"));
}

#[test]
fn repro_positivized_demo_stays_nonnegative() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["repro", "ex2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("state_bounds.csv")).unwrap();
    for line in csv.lines().skip(1) {
        for field in line.split(',').skip(1) {
            assert!(field.parse::<f64>().unwrap() >= -1e-9);
        }
    }
}

#[test]
fn repro_noisy_demo_writes_noisy_artifacts_and_note() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["repro", "ex3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("cond17a 1.000000000000e-2 pass"), "{text}");
    assert!(text.contains("stability_ok false"), "{text}");
    assert!(text.contains("note:"), "{text}");
    assert!(dir.path().join("state_bounds_noisy.csv").exists());
    assert!(dir.path().join("plot_state_bounds_noisy.gp").exists());
}

#[test]
fn repro_rejects_unknown_id() {
    let out = run(&["repro", "ex9"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn shipped_scenarios_round_trip() {
    use posobs_cli::scenario::parse_scenario;
    for name in ["ex1.json", "ex2.json", "ex3.json", "scalar.json"] {
        let text = std::fs::read_to_string(scenario(name)).unwrap();
        let parsed = parse_scenario(&text).unwrap();
        let serialized = serde_json::to_string_pretty(&parsed).unwrap();
        let reparsed = parse_scenario(&serialized).unwrap();
        assert_eq!(parsed, reparsed, "{name}");
        parsed
            .system
            .to_model()
            .unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
