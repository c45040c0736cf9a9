use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn init_prints_a_parseable_config() {
    let out = mdc(&["init", "mbb"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("problem = mbb"), "{text}");
    assert_eq!(mdc::parse_config(&text).unwrap(), mdc::RunConfig::defaults(mdc::ProblemKind::Mbb));
}

#[test]
fn init_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.cfg");
    let out = mdc(&["init", "short_beam_a", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(fs::read_to_string(path).unwrap().contains("problem = short_beam_a"));
}

#[test]
fn unknown_problem_is_a_config_error() {
    assert_eq!(mdc(&["init", "bridge"]).status.code(), Some(1));
}

#[test]
fn run_writes_artifacts_to_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "problem = custom\ninitial.cells_x = 2\ninitial.cells_y = 1\n");
    let out_dir = dir.path().join("result");
    let out = mdc(&["run", &cfg, "--output-dir", out_dir.to_str().unwrap(), "--max-iterations", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("iterations         4"), "{text}");
    assert!(text.contains("design variables   20"), "{text}");
    let history = fs::read_to_string(out_dir.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 5);
    for name in ["components.csv", "contour.svg", "cad.svg"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "problem = custom\noptimizer.max_iterations = 0\n");
    let out = mdc(&["run", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("optimizer.max_iterations"));

    let missing = dir.path().join("missing.cfg");
    assert_eq!(mdc(&["run", missing.to_str().unwrap()]).status.code(), Some(1));

    let good = write_config(dir.path(), "problem = custom\n");
    assert_eq!(mdc(&["run", &good, "--max-iterations", "0"]).status.code(), Some(1));
}

#[test]
fn unwritable_output_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let cfg = write_config(dir.path(), "problem = custom\n");
    let target = blocker.join("out");
    let out = mdc(&["run", &cfg, "--max-iterations", "1", "--output-dir", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn numerical_failures_exit_with_two() {
    // A subnormal modulus overflows the displacements.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "problem = custom\nmaterial.e = 1e-310\n");
    let out_dir = dir.path().join("out");
    let out = mdc(&["run", &cfg, "--max-iterations", "1", "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("iteration 1"));
}

#[test]
fn gradcheck_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "problem = custom\n");
    let out = mdc(&["gradcheck", &cfg]);
    assert!(out.status.success());
    let text = stdout(&out);
    let line = text
        .lines()
        .find(|l| l.starts_with("max relative error"))
        .unwrap();
    let err: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
    assert!(err <= 1e-3, "{text}");
}
