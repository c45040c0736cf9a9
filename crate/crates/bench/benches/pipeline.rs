use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mdc::config::ProblemKind;
use mdc::fem::{assemble_and_solve, element_densities};
use mdc::geometry::{component_tdf_gradient, structure_tdf};
use mdc::mma::{mma_update, Bounds, MmaSettings, MmaState};
use mdc::{Component, Point};
use mdc_bench::Fixture;

fn geometry(c: &mut Criterion) {
    let comp = Component::new(1.0, 0.5, 1.2, 0.2, 0.3);
    let pt = Point::new(1.2, 0.55);
    c.bench_function("tdf_gradient", |b| {
        b.iter(|| component_tdf_gradient(black_box(&comp), black_box(pt), 6))
    });
    let f = Fixture::new(ProblemKind::ShortBeamA);
    c.bench_function("structure_tdf/16", |b| {
        b.iter(|| structure_tdf(black_box(&f.design), black_box(pt), 6))
    });
    c.bench_function("element_densities/short_beam", |b| {
        b.iter(|| element_densities(black_box(&f.design), &f.analysis.mesh, &f.analysis.reg))
    });
}

fn analysis(c: &mut Criterion) {
    let mut g = c.benchmark_group("analysis");
    g.sample_size(20);
    for (name, kind) in [("short_beam", ProblemKind::ShortBeamA), ("mbb", ProblemKind::Mbb)] {
        let f = Fixture::new(kind);
        let a = &f.analysis;
        let weights = a.stiffness_weights(&f.eval.densities);
        g.bench_function(format!("solve/{name}"), |b| {
            b.iter(|| assemble_and_solve(&a.mesh, black_box(&weights), &a.bc, &a.material))
        });
        g.bench_function(format!("gradients/{name}"), |b| {
            b.iter(|| a.gradients(black_box(&f.design), &f.eval))
        });
        g.bench_function(format!("evaluate/{name}"), |b| {
            b.iter(|| a.evaluate(black_box(&f.design)))
        });
    }
    g.finish();
}

fn optimizer(c: &mut Criterion) {
    let n = 120;
    let bounds = Bounds::with_move_fraction(vec![0.0; n], vec![1.0; n], 0.02).unwrap();
    let x: Vec<f64> = (0..n).map(|k| 0.2 + 0.6 * k as f64 / n as f64).collect();
    let df: Vec<f64> = (0..n).map(|k| ((k as f64) * 0.7).sin()).collect();
    let dg = vec![vec![1.0 / n as f64; n]];
    c.bench_function("mma_update/120", |b| {
        b.iter(|| {
            let mut st = MmaState::new(n);
            mma_update(black_box(&x), 1.0, &df, &[0.01], &dg, &bounds, &mut st, &MmaSettings::default())
        })
    });
}

criterion_group!(benches, geometry, analysis, optimizer);
criterion_main!(benches);
