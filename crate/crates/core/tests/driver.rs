use std::fs;
use std::path::Path;

use mdc::config::{parse_config, ProblemKind, RunConfig};
use mdc::driver::{optimize, run_from, run_optimization, Analysis};
use mdc::export::{COMPONENT_HEADER, HISTORY_HEADER};
use mdc::{Component, Error};
use proptest::prelude::*;

fn small_cantilever(dir: &Path, iterations: usize) -> RunConfig {
    let mut c = RunConfig::defaults(ProblemKind::Custom);
    c.initial.cells_x = 2;
    c.initial.cells_y = 1;
    c.optimizer.max_iterations = iterations;
    c.output.dir = dir.to_path_buf();
    c
}

#[test]
fn repeated_runs_write_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_optimization(&small_cantilever(a.path(), 15)).unwrap();
    run_optimization(&small_cantilever(b.path(), 15)).unwrap();
    for name in ["history.csv", "components.csv", "contour.svg", "cad.svg"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn zero_move_limit_freezes_the_design() {
    let mut cfg = RunConfig::defaults(ProblemKind::Custom);
    cfg.optimizer.move_limit_fraction = 0.0;
    cfg.optimizer.max_iterations = 1;
    let analysis = Analysis::new(&cfg).unwrap();
    let start = vec![Component::new(1.0, 0.5, 2.0, 0.5, 0.0)];
    let mut proposed = Vec::new();
    let result = optimize(&cfg, &analysis, start.clone(), |_, comps| {
        proposed = comps.to_vec();
        Ok(())
    })
    .unwrap();
    assert_eq!(result.history.len(), 1);
    for (p, s) in proposed.iter().zip(&start) {
        let (a, b) = (p.to_vars(), s.to_vars());
        for k in 0..5 {
            assert!((a[k] - b[k]).abs() <= 1e-12, "{p:?} vs {s:?}");
        }
    }
}

#[test]
fn artifacts_describe_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_cantilever(dir.path(), 12);
    cfg.output.snapshot_every = 5;
    let result = run_optimization(&cfg).unwrap();

    let history = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some(HISTORY_HEADER));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), result.history.len());
    for (row, rec) in rows.iter().zip(&result.history) {
        assert_eq!(row[0] as usize, rec.iteration);
        assert_eq!(row[1], rec.compliance, "history must round-trip exactly");
        assert_eq!(row[4], rec.constraint_value);
    }

    let table = fs::read_to_string(dir.path().join("components.csv")).unwrap();
    assert_eq!(table.lines().next(), Some(COMPONENT_HEADER));
    assert_eq!(table.lines().count(), 1 + result.components.len());

    for name in ["contour.svg", "cad.svg", "snapshot_0005.svg", "snapshot_0010.svg"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(doc.root_element().tag_name().name(), "svg");
    }
    assert!(!dir.path().join("snapshot_0015.svg").exists());
    let cad = fs::read_to_string(dir.path().join("cad.svg")).unwrap();
    let doc = roxmltree::Document::parse(&cad).unwrap();
    let polygons = doc.descendants().filter(|n| n.has_tag_name("polygon")).count();
    assert_eq!(polygons, result.components.len());
}

#[test]
fn reported_design_is_a_feasible_history_row() {
    let dir = tempfile::tempdir().unwrap();
    let result = run_optimization(&small_cantilever(dir.path(), 40)).unwrap();
    let row = &result.history[result.final_iteration - 1];
    assert_eq!(row.compliance, result.final_compliance);
    assert_eq!(row.volume, result.final_volume);
    assert!(result.feasible);
    assert!(row.constraint_value <= 1e-3);
    assert!(result.final_compliance < result.history[0].compliance);
    assert_eq!(result.design_variable_count, 5 * result.components.len());
}

#[test]
fn benchmark_design_variable_counts() {
    for (kind, n) in [(ProblemKind::ShortBeamA, 80), (ProblemKind::ShortBeamB, 80), (ProblemKind::Mbb, 120)] {
        let mut cfg = RunConfig::defaults(kind);
        cfg.optimizer.max_iterations = 1;
        cfg.optimizer.move_limit_fraction = 0.0;
        let analysis = Analysis::new(&cfg).unwrap();
        let initial = mdc::driver::initial_design(&cfg, &analysis).unwrap();
        let result = optimize(&cfg, &analysis, initial, |_, _| Ok(())).unwrap();
        assert_eq!(result.design_variable_count, n, "{}", kind.name());
    }
}

#[test]
fn unwritable_output_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let cfg = small_cantilever(&blocker.join("out"), 1);
    let analysis = Analysis::new(&cfg).unwrap();
    let start = vec![Component::new(1.0, 0.5, 2.0, 0.5, 0.0)];
    match run_from(&cfg, &analysis, start) {
        Err(Error::Io(_)) => {}
        other => panic!("expected an i/o error, got {other:?}"),
    }
}

#[test]
fn empty_design_is_rejected() {
    let cfg = RunConfig::defaults(ProblemKind::Custom);
    let analysis = Analysis::new(&cfg).unwrap();
    assert!(matches!(
        optimize(&cfg, &analysis, Vec::new(), |_, _| Ok(())),
        Err(Error::InvalidDesign(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialized_configs_parse_back(
        kind in prop_oneof![
            Just(ProblemKind::ShortBeamA),
            Just(ProblemKind::ShortBeamB),
            Just(ProblemKind::Mbb),
            Just(ProblemKind::Custom),
        ],
        iterations in 1usize..1000,
        move_limit in 0.0f64..=1.0,
        eps in 0.1f64..10.0,
        n_half in 1u32..6,
        angle in -0.99f64..0.99,
        volume_factor in 0.8f64..=1.2,
        seed in any::<u64>(),
    ) {
        let mut c = RunConfig::defaults(kind);
        c.optimizer.max_iterations = iterations;
        c.optimizer.move_limit_fraction = move_limit;
        c.regularization.epsilon_factor = eps;
        c.regularization.n_exp = 2 * n_half;
        c.initial.angle_p = angle;
        c.initial.volume_factor = volume_factor;
        c.seed = seed;
        prop_assert_eq!(parse_config(&c.serialize()).unwrap(), c);
    }
}
