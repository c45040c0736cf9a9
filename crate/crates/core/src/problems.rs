//! Benchmark problems and initial component layouts.

use crate::error::{Error, Result};
use crate::fem::{build_mesh, element_densities, volume, BoundaryConditions, Mesh};
use crate::geometry::{Component, Point, Regularization, P_MAX};
use crate::mma::Bounds;

/// Displacement supports of a rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Supports {
    /// Both displacement components fixed along the left edge.
    ClampedLeftEdge,
    /// Half model of a simply supported beam: horizontal displacement fixed
    /// along the left (symmetry) edge, vertical displacement fixed at the
    /// bottom-right corner.
    MbbHalf,
}

impl Supports {
    pub fn name(&self) -> &'static str {
        match self {
            Supports::ClampedLeftEdge => "clamped_left_edge",
            Supports::MbbHalf => "mbb_half",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "clamped_left_edge" => Some(Supports::ClampedLeftEdge),
            "mbb_half" => Some(Supports::MbbHalf),
            _ => None,
        }
    }
}

/// Mirror axis of a symmetric problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MirrorAxis {
    /// The line x = value.
    Vertical(f64),
    /// The line y = value.
    Horizontal(f64),
}

/// A point force applied at the mesh node nearest to `at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLoad {
    pub at: Point,
    pub force: [f64; 2],
}

/// A compliance-minimization problem on a rectangular domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub supports: Supports,
    pub loads: Vec<PointLoad>,
    /// Upper bound on material volume as a fraction of the domain area.
    pub volume_fraction_max: f64,
    pub symmetry: Option<MirrorAxis>,
}

/// Load location of the short-beam example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShortBeamLoad {
    /// Middle of the right edge.
    A,
    /// Bottom-right corner.
    B,
}

/// 2 x 1 cantilever clamped on the left with a unit downward load.
pub fn short_beam_problem(load: ShortBeamLoad) -> ProblemSpec {
    let at = match load {
        ShortBeamLoad::A => Point::new(2.0, 0.5),
        ShortBeamLoad::B => Point::new(2.0, 0.0),
    };
    ProblemSpec {
        width: 2.0,
        height: 1.0,
        nx: 100,
        ny: 50,
        supports: Supports::ClampedLeftEdge,
        loads: vec![PointLoad {
            at,
            force: [0.0, -1.0],
        }],
        volume_fraction_max: 0.5,
        symmetry: None,
    }
}

/// Right half of the simply supported MBB beam, loaded at the top of the
/// symmetry line.
pub fn mbb_problem() -> ProblemSpec {
    ProblemSpec {
        width: 3.0,
        height: 1.0,
        nx: 120,
        ny: 40,
        supports: Supports::MbbHalf,
        loads: vec![PointLoad {
            at: Point::new(0.0, 1.0),
            force: [0.0, -1.0],
        }],
        volume_fraction_max: 0.4,
        symmetry: Some(MirrorAxis::Vertical(0.0)),
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::InvalidProblem("domain size must be positive".into()));
        }
        if !(self.volume_fraction_max > 0.0 && self.volume_fraction_max < 1.0) {
            return Err(Error::InvalidProblem(format!(
                "volume fraction {} must lie in (0, 1)",
                self.volume_fraction_max
            )));
        }
        if self.loads.is_empty() {
            return Err(Error::InvalidProblem("no loads".into()));
        }
        for l in &self.loads {
            let inside = (0.0..=self.width).contains(&l.at.x) && (0.0..=self.height).contains(&l.at.y);
            if !inside {
                return Err(Error::InvalidProblem(format!(
                    "load at ({}, {}) outside the domain",
                    l.at.x, l.at.y
                )));
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Admissible material volume.
    pub fn volume_budget(&self) -> f64 {
        self.volume_fraction_max * self.area()
    }

    pub fn mesh(&self) -> Result<Mesh> {
        build_mesh(self.width, self.height, self.nx, self.ny)
    }

    pub fn boundary_conditions(&self, mesh: &Mesh) -> BoundaryConditions {
        let mut fixed = Vec::new();
        match self.supports {
            Supports::ClampedLeftEdge => {
                for j in 0..=mesh.ny {
                    let n = mesh.node_index(0, j);
                    fixed.extend([2 * n, 2 * n + 1]);
                }
            }
            Supports::MbbHalf => {
                for j in 0..=mesh.ny {
                    fixed.push(2 * mesh.node_index(0, j));
                }
                fixed.push(2 * mesh.node_index(mesh.nx, 0) + 1);
            }
        }
        let loads = self
            .loads
            .iter()
            .map(|l| (mesh.nearest_node(l.at), l.force))
            .collect();
        BoundaryConditions::new(fixed, loads)
    }

    /// Per-variable box bounds for `nc` components.
    pub fn variable_bounds(&self, nc: usize, move_fraction: f64) -> Result<Bounds> {
        let diag = self.width.hypot(self.height);
        let lo = [0.0, 0.0, 0.02 * self.width.max(self.height), 0.01, -P_MAX];
        let hi = [self.width, self.height, diag, 0.5 * self.height, P_MAX];
        let lower = (0..nc).flat_map(|_| lo).collect();
        let upper = (0..nc).flat_map(|_| hi).collect();
        Bounds::with_move_fraction(lower, upper, move_fraction)
    }
}

/// Smallest admissible component thickness (and length).
pub const T_MIN: f64 = 0.01;

/// Crossed pairs of components on a `cells_x x cells_y` grid.
///
/// Each cell holds two components through its center inclined at `+angle_p`
/// and `-angle_p` (as sines). Their common thickness is chosen by bisection
/// so the initial material volume is `volume_factor` times the volume budget;
/// the factor must lie in `[0.8, 1.2]`.
pub fn grid_initial_design(
    cells_x: usize,
    cells_y: usize,
    spec: &ProblemSpec,
    angle_p: f64,
    volume_factor: f64,
    reg: &Regularization,
    expected_count: Option<usize>,
) -> Result<Vec<Component>> {
    if !(0.8..=1.2).contains(&volume_factor) {
        return Err(Error::InvalidDesign(format!(
            "initial volume factor {volume_factor} outside [0.8, 1.2]"
        )));
    }
    let count = 2 * cells_x * cells_y;
    if count == 0 {
        return Err(Error::InvalidDesign("empty initial grid".into()));
    }
    if let Some(n) = expected_count {
        if n != count {
            return Err(Error::InvalidDesign(format!(
                "grid {cells_x} x {cells_y} gives {count} components, expected {n}"
            )));
        }
    }
    if angle_p.abs() > P_MAX {
        return Err(Error::NearVertical {
            index: 0,
            p: angle_p,
            p_max: P_MAX,
        });
    }
    let cw = spec.width / cells_x as f64;
    let ch = spec.height / cells_y as f64;
    let length = (0.9 * cw.hypot(ch)).min(spec.width.hypot(spec.height));
    let layout = |t: f64| -> Vec<Component> {
        let mut comps = Vec::with_capacity(count);
        for j in 0..cells_y {
            for i in 0..cells_x {
                let x0 = (i as f64 + 0.5) * cw;
                let y0 = (j as f64 + 0.5) * ch;
                comps.push(Component::new(x0, y0, length, t, angle_p));
                comps.push(Component::new(x0, y0, length, t, -angle_p));
            }
        }
        comps
    };

    let mesh = spec.mesh()?;
    let budget = volume_factor * spec.volume_budget();
    let vol = |t: f64| volume(&element_densities(&layout(t), &mesh, reg), &mesh);
    let (mut lo, mut hi) = (T_MIN, (0.5 * spec.height).min(length));
    let v_lo = vol(lo);
    let v_hi = vol(hi);
    let range = spec.volume_budget();
    if v_lo > 1.2 * range || v_hi < 0.8 * range {
        return Err(Error::InvalidDesign(format!(
            "initial volume range [{v_lo}, {v_hi}] cannot meet the budget {budget}"
        )));
    }
    let t = if v_lo >= budget {
        lo
    } else if v_hi <= budget {
        hi
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if vol(mid) < budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(layout(t))
}
