//! Zero level-set extraction by marching squares.

use std::collections::HashMap;

use crate::fem::Mesh;
use crate::geometry::{structure_phi, Component, Point};

/// Grid edge between two padded nodes: horizontal edges start at (i, j) and
/// run to (i + 1, j), vertical ones run to (i, j + 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    H(usize, usize),
    V(usize, usize),
}

/// Closed polygons bounding `{phi > 0}` for samples on a regular grid.
///
/// `values[j * (nx + 1) + i]` is the field at `coords` with the same index.
/// The grid is padded with a ring of negative samples placed on the boundary
/// nodes, so regions touching the domain edge close along it. Saddle cells
/// are resolved with `center(i, j)`, the field at the center of cell (i, j).
pub fn zero_contours<C>(
    nx: usize,
    ny: usize,
    values: &[f64],
    coords: &[Point],
    center: C,
) -> Vec<Vec<Point>>
where
    C: Fn(usize, usize) -> f64,
{
    let pw = nx + 3;
    let ph = ny + 3;
    // Padded node (pi, pj) maps to the interior node clamped into range.
    let interior = |pi: usize, pj: usize| -> (usize, usize, bool) {
        let inside = pi >= 1 && pi <= nx + 1 && pj >= 1 && pj <= ny + 1;
        let i = pi.clamp(1, nx + 1) - 1;
        let j = pj.clamp(1, ny + 1) - 1;
        (i, j, inside)
    };
    let value = |pi: usize, pj: usize| -> f64 {
        let (i, j, inside) = interior(pi, pj);
        if inside {
            values[j * (nx + 1) + i]
        } else {
            -1.0
        }
    };
    let coord = |pi: usize, pj: usize| -> Point {
        let (i, j, _) = interior(pi, pj);
        coords[j * (nx + 1) + i]
    };
    let crossing = |a: (usize, usize), b: (usize, usize)| -> Point {
        let va = value(a.0, a.1);
        let vb = value(b.0, b.1);
        let pa = coord(a.0, a.1);
        let pb = coord(b.0, b.1);
        let t = if va == vb { 0.5 } else { va / (va - vb) };
        Point::new(pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y))
    };

    let mut segments: Vec<[EdgeKey; 2]> = Vec::new();
    for cj in 0..ph - 1 {
        for ci in 0..pw - 1 {
            let inside = [
                value(ci, cj) > 0.0,
                value(ci + 1, cj) > 0.0,
                value(ci + 1, cj + 1) > 0.0,
                value(ci, cj + 1) > 0.0,
            ];
            let case = inside
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k));
            let bottom = EdgeKey::H(ci, cj);
            let right = EdgeKey::V(ci + 1, cj);
            let top = EdgeKey::H(ci, cj + 1);
            let left = EdgeKey::V(ci, cj);
            let saddle_center = || {
                let (i, j, _) = interior(ci, cj);
                center(i, j) > 0.0
            };
            match case {
                0 | 15 => {}
                1 | 14 => segments.push([left, bottom]),
                2 | 13 => segments.push([bottom, right]),
                3 | 12 => segments.push([left, right]),
                4 | 11 => segments.push([right, top]),
                6 | 9 => segments.push([bottom, top]),
                7 | 8 => segments.push([left, top]),
                5 => {
                    if saddle_center() {
                        segments.push([bottom, right]);
                        segments.push([top, left]);
                    } else {
                        segments.push([left, bottom]);
                        segments.push([right, top]);
                    }
                }
                10 => {
                    if saddle_center() {
                        segments.push([left, bottom]);
                        segments.push([right, top]);
                    } else {
                        segments.push([bottom, right]);
                        segments.push([top, left]);
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let mut by_edge: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        for e in seg {
            by_edge.entry(*e).or_default().push(s);
        }
    }
    let point_of = |e: EdgeKey| match e {
        EdgeKey::H(i, j) => crossing((i, j), (i + 1, j)),
        EdgeKey::V(i, j) => crossing((i, j), (i, j + 1)),
    };

    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let first = segments[start][0];
        let mut pts = vec![point_of(first)];
        let mut current = start;
        let mut edge = segments[start][1];
        while edge != first {
            pts.push(point_of(edge));
            let next = by_edge[&edge].iter().copied().find(|&s| s != current && !used[s]);
            let Some(next) = next else { break };
            used[next] = true;
            edge = if segments[next][0] == edge {
                segments[next][1]
            } else {
                segments[next][0]
            };
            current = next;
        }
        loops.push(pts);
    }
    loops
}

/// Zero contours of the structure TDF sampled on the mesh nodes.
pub fn structure_contours(comps: &[Component], mesh: &Mesh, n_exp: u32) -> Vec<Vec<Point>> {
    let values: Vec<f64> = mesh
        .nodes
        .iter()
        .map(|&p| structure_phi(comps, p, n_exp))
        .collect();
    let h = mesh.h;
    zero_contours(mesh.nx, mesh.ny, &values, &mesh.nodes, |i, j| {
        let pt = Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
        structure_phi(comps, pt, n_exp)
    })
}
