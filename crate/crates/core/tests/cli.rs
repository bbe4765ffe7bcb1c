use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use costly_alloc::dist::{Distribution, MPC_TOL};
use costly_alloc::oracle::OracleReport;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_costly-alloc"))
        .args(args)
        .output()
        .unwrap()
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn config(name: &str) -> String {
    root().join("../../configs").join(name).to_string_lossy().into_owned()
}

fn golden(name: &str) -> String {
    fs::read_to_string(root().join("tests/golden").join(name)).unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn example1_matches_golden_table() {
    assert_eq!(stdout(&run(&["example1"])), golden("example1.csv"));
}

#[test]
fn threshold_matches_golden_file() {
    let text = stdout(&run(&["threshold", "--config", &config("example1.json")]));
    assert_eq!(text, golden("threshold_example1.csv"));
    assert!(text.lines().nth(1).unwrap().starts_with("1,0.08,0.58,"));
    let one = stdout(&run(&[
        "threshold",
        "--config",
        &config("example1.json"),
        "--agent",
        "2",
    ]));
    assert_eq!(one.lines().count(), 2);
    assert!(one.lines().nth(1).unwrap().starts_with("2,"));
}

#[test]
fn zero_cost_threshold_is_the_bottom_of_the_support() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        r#"{"R": 0.5, "agents": [{"prior": {"lo": 0.2, "hi": 0.9, "pieces": [[0.2, 0.9, [1.4285714285714286, 0, 0, 0]]]}, "c": 0}]}"#,
    );
    let text = stdout(&run(&["threshold", "--config", &path]));
    assert_eq!(text.lines().nth(1).unwrap(), "1,0,0.2,0.2,0.5,false");
}

#[test]
fn malformed_configs_exit_with_code_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"R": 0.4, "agents": [{"prior": {"lo": 0, "hi": 1, "pieces": [[0, 1, [1, 0, 0, 0]]]}, "c": 0.1, "cost": 1}]}"#,
            "agents[0]",
        ),
        (
            r#"{"R": 0.4, "agents": [{"prior": {"lo": 0, "hi": 1, "pieces": [[0, 1, [1, 0, 0, 0]]]}, "c": -0.1}]}"#,
            "agents[0].c",
        ),
        (r#"{"R": "high", "agents": []}"#, "R"),
        (r#"{"R": 0.4, "agents": []}"#, "agents"),
        (
            r#"{"R": 0.4, "agents": [{"prior": {"lo": 0, "hi": 1, "pieces": [[0, 1, [1, 0, 0, 0]]]}, "c": 0.1}], "options": {"grid_n": 1}}"#,
            "options.grid_n",
        ),
    ];
    for (text, field) in cases {
        let path = write_config(dir.path(), text);
        let out = run(&["threshold", "--config", &path]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "{err} should name {field}");
    }
    let missing = run(&["threshold", "--config", "/nonexistent/scenario.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn design_writes_distributions_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("designs");
    let text = stdout(&run(&[
        "design",
        "--config",
        &config("uniform_single.json"),
        "--mode",
        "agent-optimal",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    assert_eq!(text, golden("design_agent_optimal.csv"));
    assert_eq!(fs::read_to_string(out_dir.join("design_report.csv")).unwrap(), text);
    let g: Distribution = serde_json::from_str(&fs::read_to_string(out_dir.join("agent1.json")).unwrap()).unwrap();
    let f = Distribution::uniform(0.0, 1.0).unwrap();
    assert!(g.is_mpc_of(&f, MPC_TOL).unwrap());
    assert!((g.atom_mass_near(0.6 + 0.08, 1e-12) - 0.64).abs() < 1e-9);

    let worst = stdout(&run(&[
        "design",
        "--config",
        &config("uniform_single.json"),
        "--mode",
        "principal-worst",
    ]));
    assert_eq!(worst.lines().nth(1).unwrap(), "1,0.58,0,0,false,true,false");
    let best = stdout(&run(&[
        "design",
        "--config",
        &config("uniform_single.json"),
        "--mode",
        "principal-optimal",
    ]));
    assert_eq!(best.lines().nth(1).unwrap(), "1,0.4,0.0512,0.32,false,false,true");
}

#[test]
fn aggregate_design_rejects_heterogeneous_costs() {
    let out = run(&[
        "design",
        "--config",
        &config("heterogeneous.json"),
        "--mode",
        "agent-optimal",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checking costs differ"));
    let ok = run(&[
        "design",
        "--config",
        &config("heterogeneous.json"),
        "--mode",
        "principal-optimal",
    ]);
    assert!(ok.status.success());
}

#[test]
fn simulate_is_seeded_and_consistent() {
    let args = [
        "simulate",
        "--config",
        &config("example1.json"),
        "--samples",
        "100000",
        "--seed",
        "3",
    ];
    let first = stdout(&run(&args));
    assert_eq!(first, golden("simulate_example1.csv"));
    assert_eq!(stdout(&run(&args)), first);
    let other = stdout(&run(&[
        "simulate",
        "--config",
        &config("example1.json"),
        "--samples",
        "100000",
        "--seed",
        "4",
    ]));
    assert_ne!(other, first);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sim.csv");
    let big = stdout(&run(&[
        "simulate",
        "--config",
        &config("example1.json"),
        "--samples",
        "1000000",
        "--seed",
        "1",
        "--tie",
        "lowest",
        "--out",
        csv.to_str().unwrap(),
    ]));
    assert_eq!(fs::read_to_string(&csv).unwrap(), big);
    let row: Vec<f64> = big
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((row[3] - 0.588).abs() <= 3.0 * row[4], "{} ± {}", row[3], row[4]);
}

#[test]
fn null_information_simulation_has_zero_variance() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        r#"{"R": 0.2, "agents": [{"prior": {"lo": 0, "hi": 1, "pieces": [[0, 1, [1, 0, 0, 0]]]}, "c": 0.1, "signal": {"lo": 0.5, "hi": 0.5, "atoms": [[0.5, 1]]}}]}"#,
    );
    let text = stdout(&run(&["simulate", "--config", &path, "--samples", "5000"]));
    assert_eq!(text.lines().nth(1).unwrap(), "0,0,0,0.5,0");
    assert_eq!(text.lines().nth(2).unwrap(), "1,1,0,0.5,0");
}

#[test]
fn oracle_matches_golden_files_and_writes_reports() {
    let text = stdout(&run(&[
        "oracle",
        "--config",
        &config("uniform_single.json"),
        "--grid",
        "100",
    ]));
    assert_eq!(text, golden("oracle_mechanism_n100.csv"));
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&run(&[
        "oracle",
        "--config",
        &config("uniform_single.json"),
        "--grid",
        "100",
        "--mode",
        "agent-win",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    assert_eq!(text, golden("oracle_agent_win_n100.csv"));
    let report: OracleReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("oracle_agent1.json")).unwrap()).unwrap();
    assert!((report.value - 0.64).abs() < 0.02);
    let masses = report.masses.unwrap();
    assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn oracle_covers_every_agent_and_objective() {
    for mode in ["mechanism", "agent-win", "principal-min", "principal-max"] {
        let text = stdout(&run(&[
            "oracle",
            "--config",
            &config("example1.json"),
            "--grid",
            "50",
            "--mode",
            mode,
        ]));
        assert_eq!(text.lines().count(), 3, "{mode}");
        assert!(text.lines().skip(1).all(|l| l.ends_with(",pass")), "{text}");
    }
}

#[test]
fn bad_arguments_are_usage_errors() {
    assert_eq!(run(&["simulate"]).status.code(), Some(2));
    assert_eq!(
        run(&["design", "--config", &config("example1.json"), "--mode", "sideways"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["threshold", "--config", &config("example1.json"), "--agent", "3"])
            .status
            .code(),
        Some(2)
    );
}
