mod common;

use mdc::geometry::{component_tdf, component_tdf_gradient, Component, Point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Entrywise relative error; entries below 1e-6 in magnitude are compared
/// absolutely, since the finite differences cannot resolve them.
fn entry_error(a: &[f64; 5], f: &[f64; 5]) -> f64 {
    a.iter()
        .zip(f)
        .map(|(a, f)| (a - f).abs() / f.abs().max(1e-6))
        .fold(0.0, f64::max)
}

#[test]
fn thousand_random_pairs_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (c, pt) = common::random_pair(&mut rng, 0.9);
        let a = component_tdf_gradient(&c, pt, 6).unwrap();
        let f = common::tdf_fd_gradient(&c, pt, 6);
        worst = worst.max(entry_error(&a, &f));
    }
    assert!(worst <= 1e-5, "worst relative error {worst:e}");
}

#[test]
fn other_exponents_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [2, 4, 8] {
        for _ in 0..200 {
            let (c, pt) = common::random_pair(&mut rng, 0.9);
            let a = component_tdf_gradient(&c, pt, n).unwrap();
            let f = common::tdf_fd_gradient(&c, pt, n);
            let err = entry_error(&a, &f);
            assert!(err <= 1e-5, "n = {n}: {err:e} at {c:?} {pt:?}");
        }
    }
}

#[test]
fn reference_point_central_difference() {
    let c = Component::new(0.0, 0.0, 1.0, 0.2, 0.3);
    let pt = Point::new(0.2, 0.1);
    let a = component_tdf_gradient(&c, pt, 6).unwrap();
    let v = c.to_vars();
    for k in 0..5 {
        let h = 1e-6;
        let (mut up, mut dn) = (v, v);
        up[k] += h;
        dn[k] -= h;
        let fd = (component_tdf(&Component::from_vars(&up), pt, 6)
            - component_tdf(&Component::from_vars(&dn), pt, 6))
            / (2.0 * h);
        assert!((a[k] - fd).abs() <= 1e-6 * fd.abs().max(1e-3), "k = {k}: {} vs {fd}", a[k]);
    }
}

#[test]
fn axis_endpoint_length_derivative() {
    for (l, n) in [(1.0, 6), (0.4, 4), (2.5, 8)] {
        let c = Component::new(0.3, -0.2, l, 0.2, 0.0);
        let g = component_tdf_gradient(&c, Point::new(0.3 + l / 2.0, -0.2), n).unwrap();
        assert!((g[2] - n as f64 / l).abs() <= 1e-12 * (n as f64 / l));
        assert_eq!(g[1], 0.0);
        assert_eq!(g[3], 0.0);
    }
}
