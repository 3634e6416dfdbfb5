use std::path::Path;
use std::process::{Command, Output};

use hybrid_irb_cli::{execute, CliError, RunConfig, RunResult};

const RB: &str = r#"
schema_version = 1
protocol = "rb"
qubits = 1
seed = 7

[noise]
clifford = { type = "depolarizing", p = 0.99 }

[sequences]
lengths = [1, 4, 10, 25, 60]
m = 8
alpha = 0.1
delta = 0.05
rb_shots = 500
"#;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hybrid-irb")
}

fn run_cli(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let path = dir.join("config.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(bin())
        .arg(if config.contains("resource-report") { "report" } else { "run" })
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn rb_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(dir.path(), RB, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("out/decay.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next(),
        Some("protocol,y,phi_mean,phi_stderr,sequences,shots")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.starts_with("rb,")));
    assert!(dir.path().join("out/timing.json").exists());
}

#[test]
fn zero_alpha_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(dir.path(), &RB.replace("alpha = 0.1", "alpha = 0.0"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sequences.alpha"), "{err}");
}

#[test]
fn unknown_and_missing_fields_are_named() {
    let err = RunConfig::parse(&RB.replace("m = 8\n", "")).unwrap_err();
    assert!(matches!(&err, CliError::Config { field, .. } if field == "m"), "{err}");
    let err = RunConfig::parse(&RB.replace("qubits = 1", "qubits = 1\nqbits = 2")).unwrap_err();
    assert!(matches!(&err, CliError::Config { field, .. } if field == "qbits"), "{err}");
    let err = RunConfig::parse(&RB.replace("schema_version = 1", "schema_version = 9")).unwrap_err();
    assert!(matches!(&err, CliError::Config { field, .. } if field == "schema_version"));
    let err = RunConfig::parse(&RB.replace("p = 0.99", "p = 1.5")).unwrap_err();
    assert!(matches!(&err, CliError::Config { field, .. } if field == "noise.clifford.p"), "{err}");
}

#[test]
fn hybrid_requires_target() {
    let cfg = RB.replace("protocol = \"rb\"", "protocol = \"hybrid-irb\"");
    let err = RunConfig::parse(&cfg).unwrap_err();
    assert!(matches!(&err, CliError::Config { field, .. } if field == "target"));
}

#[test]
fn fit_errors_exit_with_two() {
    let e = CliError::from(hybrid_irb::Error::FitFailure("x".into()));
    assert_eq!(e.exit_code(), 2);
    let e = CliError::from(hybrid_irb::Error::DegenerateFit("x".into()));
    assert_eq!(e.exit_code(), 2);
    let e = CliError::from(hybrid_irb::Error::EmptySequence);
    assert_eq!(e.exit_code(), 1);
}

#[test]
fn result_round_trips() {
    let cfg = RunConfig::parse(
        &RB.replace("protocol = \"rb\"", "protocol = \"hybrid-irb\"")
            .replace("[sequences]", "[target]\ngate = \"t\"\n\n[sequences]")
            .replace("delta = 0.05", "delta = 0.2\nalpha_mc = { policy = \"constant\", alpha_mc = 0.3 }"),
    )
    .unwrap();
    let result = execute(&cfg).unwrap();
    let back = RunResult::from_json(&result.to_json()).unwrap();
    assert_eq!(back, result);
    assert_eq!(back.to_json(), result.to_json());
    // the echoed config reproduces the run
    assert_eq!(execute(&back.config).unwrap(), result);
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    run_cli(dir.path(), RB, &[]);
    let a = std::fs::read(dir.path().join("out/result.json")).unwrap();
    run_cli(dir.path(), RB, &["--seed", "8"]);
    let b = std::fs::read(dir.path().join("out/result.json")).unwrap();
    assert_ne!(a, b);
    run_cli(dir.path(), RB, &["--seed", "7"]);
    let c = std::fs::read(dir.path().join("out/result.json")).unwrap();
    assert_eq!(a, c);
}

#[test]
fn exact_flag_removes_shot_noise() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(dir.path(), RB, &["--exact"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("out/result.json")).unwrap();
    let result = RunResult::from_json(&text).unwrap();
    assert_eq!(result.total_shots, 0);
    let p = result.fits[0].fit.effective_decay().unwrap();
    assert!((p - 0.99).abs() < 1e-8, "{p}");
}

#[test]
fn degenerate_resource_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "schema_version = 1\nprotocol = \"resource-report\"\n[resource]\n\
               q = 1\nm = 1\neps = 1e-2\nalpha = 1e-3\nalpha_mc = 0.1\ndelta = 0.1\n";
    let out = run_cli(dir.path(), cfg, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("out/resources.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    assert!(lines[1].split(',').skip(4).all(|v| v.parse::<f64>().unwrap().is_finite()));
}

#[test]
fn report_rejects_other_protocols() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, RB).unwrap();
    let out = Command::new(bin())
        .args(["report", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn direct_mc_on_depolarizing_gate() {
    let cfg = RunConfig::parse(
        "schema_version = 1\nprotocol = \"direct-mc\"\nseed = 4\n\
         [noise]\ntarget = { type = \"depolarizing\", p = 0.99 }\n\
         [target]\ngate = \"h\"\n\
         [sequences]\nm = 1\nalpha = 0.05\ndelta = 0.05\n",
    )
    .unwrap();
    let result = execute(&cfg).unwrap();
    let est = result.direct.unwrap();
    assert!((est.average_fidelity - 0.995).abs() < 0.05);
    let bound = hybrid_irb::statistics::expected_experiments_bound(0.05, 0.05, 2, 1, 1);
    assert!(est.shots as f64 <= bound);
}
