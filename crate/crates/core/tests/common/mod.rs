#![allow(dead_code)]

use mdc::fem::Mesh;
use mdc::geometry::{component_tdf, Component, Point, Regularization};
use rand::Rng;

/// Five-point central-difference gradient of `component_tdf` in (x0, y0, L, t, p).
pub fn tdf_fd_gradient(c: &Component, pt: Point, n: u32) -> [f64; 5] {
    let base = c.to_vars();
    // Natural scales of each variable: the field varies over the smaller side
    // and a rotation dp moves points by about (larger side) * dp.
    let (lo, hi) = (c.length.min(c.thickness), c.length.max(c.thickness));
    let scales = [lo, lo, c.length, c.thickness, lo / hi];
    std::array::from_fn(|k| {
        let h = 3e-4 * scales[k];
        let at = |s: f64| {
            let mut v = base;
            v[k] += s * h;
            component_tdf(&Component::from_vars(&v), pt, n)
        };
        (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h)
    })
}

/// Random component with |p| <= `p_max` and a query point in its vicinity.
pub fn random_pair<R: Rng>(rng: &mut R, p_max: f64) -> (Component, Point) {
    let c = Component::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(0.1..2.0),
        rng.random_range(0.02..0.5),
        rng.random_range(-p_max..p_max),
    );
    let u = rng.random_range(-0.6..0.6) * c.length;
    let v = rng.random_range(-0.6..0.6) * c.thickness;
    let (p, q) = (c.p, c.q());
    (c, Point::new(c.x0 + q * u - p * v, c.y0 + p * u + q * v))
}

/// Gauss points of `mesh` lying in the smoothing band of two or more
/// components at once; the overlap rule is approximate only there.
pub fn shared_band_points(comps: &[Component], mesh: &Mesh, reg: &Regularization) -> usize {
    (0..mesh.element_count())
        .flat_map(|e| mesh.gauss_points(e))
        .filter(|&pt| {
            comps
                .iter()
                .filter(|c| component_tdf(c, pt, reg.n_exp).abs() < reg.epsilon)
                .count()
                >= 2
        })
        .count()
}
