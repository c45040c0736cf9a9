//! Fixed-grid plane-stress finite element analysis.
//!
//! The design domain is covered by a uniform grid of bilinear square
//! elements. Voids are represented by an ersatz material: each element's
//! stiffness is scaled by its density, the mean of the smoothed Heaviside of
//! the structure TDF over the element's 2x2 Gauss points.

use crate::error::{Error, Result};
use crate::geometry::{smoothed_heaviside, structure_phi, Component, Point, Regularization};

/// Gauss abscissa of the 2-point rule on [-1, 1].
pub const GAUSS_2: f64 = 0.577_350_269_189_625_8;

/// Reference coordinates of the element Gauss points, counterclockwise.
pub const GAUSS_POINTS_REF: [(f64, f64); 4] = [
    (-GAUSS_2, -GAUSS_2),
    (GAUSS_2, -GAUSS_2),
    (GAUSS_2, GAUSS_2),
    (-GAUSS_2, GAUSS_2),
];

/// Uniform grid of square bilinear elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    /// Element edge length.
    pub h: f64,
    /// Node (i, j) sits at (i h, j h) with index `j (nx + 1) + i`.
    pub nodes: Vec<Point>,
    /// Counterclockwise node indices, element (i, j) at index `j nx + i`.
    pub elements: Vec<[usize; 4]>,
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn dof_count(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.h
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.h
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Lower-left corner of element `e`.
    #[inline]
    pub fn element_origin(&self, e: usize) -> Point {
        self.nodes[self.elements[e][0]]
    }

    pub fn element_center(&self, e: usize) -> Point {
        let o = self.element_origin(e);
        Point::new(o.x + 0.5 * self.h, o.y + 0.5 * self.h)
    }

    /// Physical Gauss point coordinates of element `e`.
    pub fn gauss_points(&self, e: usize) -> [Point; 4] {
        let c = self.element_center(e);
        let hh = 0.5 * self.h;
        GAUSS_POINTS_REF.map(|(xi, eta)| Point::new(c.x + hh * xi, c.y + hh * eta))
    }

    /// Nearest node to `pt`; ties go to the lower index.
    pub fn nearest_node(&self, pt: Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, n) in self.nodes.iter().enumerate() {
            let d = (n.x - pt.x).powi(2) + (n.y - pt.y).powi(2);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }

    /// Global DOF indices of element `e` as (ux, uy) per node.
    #[inline]
    pub fn element_dofs(&self, e: usize) -> [usize; 8] {
        let n = self.elements[e];
        [
            2 * n[0],
            2 * n[0] + 1,
            2 * n[1],
            2 * n[1] + 1,
            2 * n[2],
            2 * n[2] + 1,
            2 * n[3],
            2 * n[3] + 1,
        ]
    }
}

/// Builds a uniform mesh of square elements over `[0, width] x [0, height]`.
pub fn build_mesh(width: f64, height: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidMesh("element counts must be at least 1".into()));
    }
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::InvalidMesh("domain size must be positive".into()));
    }
    let hx = width / nx as f64;
    let hy = height / ny as f64;
    if (hx - hy).abs() > 1e-9 * hx.max(hy) {
        return Err(Error::InvalidMesh(format!(
            "elements are not square: {hx} x {hy}"
        )));
    }
    let h = hx;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Point::new(i as f64 * h, j as f64 * h));
        }
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let n0 = j * (nx + 1) + i;
            let n3 = (j + 1) * (nx + 1) + i;
            elements.push([n0, n0 + 1, n3 + 1, n3]);
        }
    }
    Ok(Mesh {
        nx,
        ny,
        h,
        nodes,
        elements,
    })
}

/// Isotropic linear elastic material under plane stress, unit thickness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub e: f64,
    pub nu: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self { e: 1.0, nu: 0.3 }
    }
}

impl Material {
    pub fn new(e: f64, nu: f64) -> Result<Self> {
        let m = Self { e, nu };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e > 0.0 && self.e.is_finite()) {
            return Err(Error::InvalidMaterial(format!(
                "Young's modulus {} must be positive",
                self.e
            )));
        }
        if !(self.nu > -1.0 && self.nu < 0.5) {
            return Err(Error::InvalidMaterial(format!(
                "Poisson's ratio {} must lie in (-1, 0.5)",
                self.nu
            )));
        }
        Ok(())
    }

    /// Plane-stress constitutive matrix in Voigt order (xx, yy, xy).
    pub fn constitutive(&self) -> [[f64; 3]; 3] {
        let c = self.e / (1.0 - self.nu * self.nu);
        [
            [c, c * self.nu, 0.0],
            [c * self.nu, c, 0.0],
            [0.0, 0.0, c * 0.5 * (1.0 - self.nu)],
        ]
    }
}

/// Strain-displacement matrix of a square element of side `h` at (xi, eta).
pub fn strain_displacement(xi: f64, eta: f64, h: f64) -> [[f64; 8]; 3] {
    // Shape function derivatives w.r.t. reference coords, nodes CCW from
    // (-1, -1); dx/dxi = h/2.
    let dxi = [-(1.0 - eta), 1.0 - eta, 1.0 + eta, -(1.0 + eta)];
    let deta = [-(1.0 - xi), -(1.0 + xi), 1.0 + xi, 1.0 - xi];
    let s = 0.25 * 2.0 / h;
    let mut b = [[0.0; 8]; 3];
    for a in 0..4 {
        let nx = dxi[a] * s;
        let ny = deta[a] * s;
        b[0][2 * a] = nx;
        b[1][2 * a + 1] = ny;
        b[2][2 * a] = ny;
        b[2][2 * a + 1] = nx;
    }
    b
}

/// 8x8 element stiffness matrix of a unit-density square element, integrated
/// with 2x2 Gauss quadrature.
pub fn element_stiffness(mat: &Material, h: f64) -> [[f64; 8]; 8] {
    let d = mat.constitutive();
    let det_j = 0.25 * h * h;
    let mut k = [[0.0; 8]; 8];
    for &(xi, eta) in &GAUSS_POINTS_REF {
        let b = strain_displacement(xi, eta, h);
        let mut db = [[0.0; 8]; 3];
        for r in 0..3 {
            for c in 0..8 {
                db[r][c] = (0..3).map(|m| d[r][m] * b[m][c]).sum();
            }
        }
        for r in 0..8 {
            for c in 0..8 {
                k[r][c] += det_j * (0..3).map(|m| b[m][r] * db[m][c]).sum::<f64>();
            }
        }
    }
    // Exact symmetry.
    for r in 0..8 {
        for c in 0..r {
            let v = 0.5 * (k[r][c] + k[c][r]);
            k[r][c] = v;
            k[c][r] = v;
        }
    }
    k
}

/// Homogeneous Dirichlet supports and nodal point loads.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryConditions {
    /// Sorted, deduplicated constrained DOF indices.
    pub fixed_dofs: Vec<usize>,
    /// (node index, force vector).
    pub point_loads: Vec<(usize, [f64; 2])>,
}

impl BoundaryConditions {
    pub fn new(mut fixed_dofs: Vec<usize>, point_loads: Vec<(usize, [f64; 2])>) -> Self {
        fixed_dofs.sort_unstable();
        fixed_dofs.dedup();
        Self {
            fixed_dofs,
            point_loads,
        }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.fixed_dofs.is_empty() {
            return Err(Error::InvalidBoundary("no fixed degrees of freedom".into()));
        }
        if let Some(&d) = self.fixed_dofs.iter().find(|&&d| d >= mesh.dof_count()) {
            return Err(Error::InvalidBoundary(format!("fixed dof {d} outside mesh")));
        }
        if let Some((n, _)) = self.point_loads.iter().find(|(n, _)| *n >= mesh.node_count()) {
            return Err(Error::InvalidBoundary(format!("load node {n} outside mesh")));
        }
        Ok(())
    }

    /// Global load vector.
    pub fn load_vector(&self, mesh: &Mesh) -> Vec<f64> {
        let mut f = vec![0.0; mesh.dof_count()];
        for &(n, [fx, fy]) in &self.point_loads {
            f[2 * n] += fx;
            f[2 * n + 1] += fy;
        }
        f
    }
}

/// Per-element densities: the mean smoothed Heaviside of the structure TDF
/// over the element's Gauss points.
pub fn element_densities(comps: &[Component], mesh: &Mesh, reg: &Regularization) -> Vec<f64> {
    (0..mesh.element_count())
        .map(|e| {
            let gp = mesh.gauss_points(e);
            0.25 * gp
                .iter()
                .map(|&pt| smoothed_heaviside(structure_phi(comps, pt, reg.n_exp), reg))
                .sum::<f64>()
        })
        .collect()
}

/// Material volume of a density field.
pub fn volume(densities: &[f64], mesh: &Mesh) -> f64 {
    densities.iter().sum::<f64>() * mesh.h * mesh.h
}

/// Result of one equilibrium solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FemSolution {
    /// Nodal displacements, (ux, uy) per node.
    pub displacements: Vec<f64>,
    /// Work of the external loads, f^T u.
    pub compliance: f64,
    /// Unit-density element strain energy u_e^T K_e u_e.
    pub element_energy: Vec<f64>,
    /// Unit-density strain energy density at each Gauss point.
    pub gauss_energy_density: Vec<[f64; 4]>,
    /// Relative residual reached by the solver.
    pub residual: f64,
}

impl FemSolution {
    pub fn element_displacements(&self, mesh: &Mesh, e: usize) -> [f64; 8] {
        mesh.element_dofs(e).map(|d| self.displacements[d])
    }
}

/// Target relative residual `|f - K u| / |f|` of the linear solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;
/// Accepted normwise backward error `|r| / (|K| |u| + |f|)` (infinity norms)
/// when the relative residual is limited by rounding.
pub const BACKWARD_TOLERANCE: f64 = 1e-10;

/// Assembles `K = sum_e rho_e K_e`, eliminates fixed DOFs and solves `K u = f`.
pub fn assemble_and_solve(
    mesh: &Mesh,
    densities: &[f64],
    bc: &BoundaryConditions,
    mat: &Material,
) -> Result<FemSolution> {
    if densities.len() != mesh.element_count() {
        return Err(Error::DimensionMismatch {
            what: "densities",
            expected: mesh.element_count(),
            got: densities.len(),
        });
    }
    if densities.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("densities"));
    }
    mat.validate()?;
    bc.validate(mesh)?;
    let ke = element_stiffness(mat, mesh.h);
    let f = bc.load_vector(mesh);
    let ndof = mesh.dof_count();

    let f_norm = norm(&f);
    let mut u = vec![0.0; ndof];
    let mut residual = 0.0;
    if f_norm > 0.0 {
        let system = ReducedSystem::new(mesh, bc);
        let factor = system.assemble(mesh, densities, &ke).factorize()?;
        let mut rhs: Vec<f64> = system.free.iter().map(|&d| f[d]).collect();
        let mut x = factor.solve(&rhs);
        system.scatter(&x, &mut u);
        let k_norm = 4.0
            * densities.iter().fold(0.0f64, |m, d| m.max(d.abs()))
            * ke.iter()
                .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max);
        let f_inf = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut backward = f64::INFINITY;
        // Iterative refinement; a direct solve normally needs none. The
        // acceptance test is the normwise backward error, since the plain
        // relative residual bottoms out at rounding level once void regions
        // make the displacements large.
        for pass in 0..4 {
            if pass > 0 {
                let ku = apply_stiffness(mesh, densities, &ke, &u);
                for (k, &d) in system.free.iter().enumerate() {
                    rhs[k] = f[d] - ku[d];
                }
                let dx = factor.solve(&rhs);
                for (xi, di) in x.iter_mut().zip(&dx) {
                    *xi += di;
                }
                system.scatter(&x, &mut u);
            }
            let r = residual_vector(mesh, densities, &ke, &f, &u, bc);
            residual = norm(&r) / f_norm;
            let u_inf = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let r_inf = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            backward = r_inf / (k_norm * u_inf + f_inf);
            if residual <= SOLVE_TOLERANCE || backward <= BACKWARD_TOLERANCE {
                break;
            }
        }
        if !(backward <= BACKWARD_TOLERANCE || residual <= SOLVE_TOLERANCE) {
            return Err(Error::SolverDiverged { residual });
        }
    }

    let d = mat.constitutive();
    let mut element_energy = Vec::with_capacity(mesh.element_count());
    let mut gauss_energy_density = Vec::with_capacity(mesh.element_count());
    let bs = GAUSS_POINTS_REF.map(|(xi, eta)| strain_displacement(xi, eta, mesh.h));
    for e in 0..mesh.element_count() {
        let ue = mesh.element_dofs(e).map(|k| u[k]);
        element_energy.push(quadratic_form(&ke, &ue));
        gauss_energy_density.push(std::array::from_fn(|g| {
            let strain: [f64; 3] = std::array::from_fn(|r| dot(&bs[g][r], &ue));
            (0..3)
                .map(|r| strain[r] * (0..3).map(|c| d[r][c] * strain[c]).sum::<f64>())
                .sum()
        }));
    }
    // f^T u and u^T K u agree at the exact solution; their combination is
    // stationary in the solve error, which keeps finite differences of the
    // compliance clean.
    let work = f.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
    let energy = densities
        .iter()
        .zip(&element_energy)
        .map(|(w, e)| w * e)
        .sum::<f64>();
    let compliance = 2.0 * work - energy;
    Ok(FemSolution {
        displacements: u,
        compliance,
        element_energy,
        gauss_energy_density,
        residual,
    })
}

/// Computes `K u` element by element.
pub fn apply_stiffness(mesh: &Mesh, densities: &[f64], ke: &[[f64; 8]; 8], u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for e in 0..mesh.element_count() {
        let dofs = mesh.element_dofs(e);
        let ue = dofs.map(|k| u[k]);
        for r in 0..8 {
            out[dofs[r]] += densities[e] * dot(&ke[r], &ue);
        }
    }
    out
}

fn residual_vector(
    mesh: &Mesh,
    densities: &[f64],
    ke: &[[f64; 8]; 8],
    f: &[f64],
    u: &[f64],
    bc: &BoundaryConditions,
) -> Vec<f64> {
    let mut r: Vec<f64> = apply_stiffness(mesh, densities, ke, u)
        .iter()
        .zip(f)
        .map(|(ku, fi)| fi - ku)
        .collect();
    for &d in &bc.fixed_dofs {
        r[d] = 0.0;
    }
    r
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn quadratic_form(k: &[[f64; 8]; 8], u: &[f64; 8]) -> f64 {
    (0..8).map(|r| u[r] * dot(&k[r], u)).sum()
}

/// Free-DOF numbering of a mesh, ordered to keep the matrix bandwidth low.
struct ReducedSystem {
    /// Global DOF of each equation.
    free: Vec<usize>,
    /// Equation number of each global DOF, `usize::MAX` when fixed.
    equation: Vec<usize>,
    bandwidth: usize,
}

impl ReducedSystem {
    fn new(mesh: &Mesh, bc: &BoundaryConditions) -> Self {
        let ndof = mesh.dof_count();
        // Number nodes along the shorter grid direction first.
        let node_order: Vec<usize> = if mesh.nx > mesh.ny {
            (0..=mesh.nx)
                .flat_map(|i| (0..=mesh.ny).map(move |j| (i, j)))
                .map(|(i, j)| mesh.node_index(i, j))
                .collect()
        } else {
            (0..mesh.node_count()).collect()
        };
        let mut fixed = vec![false; ndof];
        for &d in &bc.fixed_dofs {
            fixed[d] = true;
        }
        let mut free = Vec::with_capacity(ndof);
        let mut equation = vec![usize::MAX; ndof];
        for n in node_order {
            for d in [2 * n, 2 * n + 1] {
                if !fixed[d] {
                    equation[d] = free.len();
                    free.push(d);
                }
            }
        }
        let mut bandwidth = 0;
        for e in 0..mesh.element_count() {
            let eqs = mesh.element_dofs(e).map(|d| equation[d]);
            let mut lo = usize::MAX;
            let mut hi = 0;
            for q in eqs.into_iter().filter(|&q| q != usize::MAX) {
                lo = lo.min(q);
                hi = hi.max(q);
            }
            if lo != usize::MAX {
                bandwidth = bandwidth.max(hi - lo);
            }
        }
        Self {
            free,
            equation,
            bandwidth,
        }
    }

    fn assemble(&self, mesh: &Mesh, densities: &[f64], ke: &[[f64; 8]; 8]) -> BandMatrix {
        let mut m = BandMatrix::zeros(self.free.len(), self.bandwidth);
        for e in 0..mesh.element_count() {
            let eqs = mesh.element_dofs(e).map(|d| self.equation[d]);
            let rho = densities[e];
            for r in 0..8 {
                if eqs[r] == usize::MAX {
                    continue;
                }
                for c in 0..8 {
                    if eqs[c] == usize::MAX || eqs[c] > eqs[r] {
                        continue;
                    }
                    *m.at_mut(eqs[r], eqs[c]) += rho * ke[r][c];
                }
            }
        }
        m
    }

    fn scatter(&self, x: &[f64], u: &mut [f64]) {
        for (k, &d) in self.free.iter().enumerate() {
            u[d] = x[k];
        }
    }
}

/// Lower band of a symmetric matrix, row `i` storing columns `i - bw ..= i`.
struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    /// In-place banded Cholesky factorization.
    fn factorize(mut self) -> Result<BandCholesky> {
        let bw = self.bw;
        let w = bw + 1;
        let max_diag = (0..self.n)
            .map(|i| self.data[self.idx(i, i)])
            .fold(0.0f64, f64::max);
        let tiny = 1e-12 * max_diag;
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                // Columns shared by rows i and j that precede j.
                let k0 = j0.max(j.saturating_sub(bw));
                let (head, tail) = self.data.split_at_mut(i * w);
                let row_i = &tail[..w];
                let s = if j == i {
                    let seg = &row_i[(k0 + bw - i)..(j + bw - i)];
                    seg.iter().map(|v| v * v).sum::<f64>()
                } else {
                    let row_j = &head[j * w..(j + 1) * w];
                    let a = &row_i[(k0 + bw - i)..(j + bw - i)];
                    let b = &row_j[(k0 + bw - j)..bw];
                    dot(a, b)
                };
                let aij = tail[j + bw - i] - s;
                if j == i {
                    if !(aij > tiny) {
                        return Err(Error::SingularSystem {
                            equation: i,
                            pivot: aij,
                        });
                    }
                    tail[bw] = aij.sqrt();
                } else {
                    let ljj = head[j * w + bw];
                    tail[j + bw - i] = aij / ljj;
                }
            }
        }
        Ok(BandCholesky { m: self })
    }
}

struct BandCholesky {
    m: BandMatrix,
}

impl BandCholesky {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.m.n;
        let bw = self.m.bw;
        let w = bw + 1;
        let d = &self.m.data;
        let mut y = b.to_vec();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let row = &d[i * w..(i + 1) * w];
            let s = dot(&row[(j0 + bw - i)..bw], &y[j0..i]);
            y[i] = (y[i] - s) / row[bw];
        }
        for i in (0..n).rev() {
            y[i] /= d[i * w + bw];
            let yi = y[i];
            let j0 = i.saturating_sub(bw);
            let row = &d[i * w..(i + 1) * w];
            for j in j0..i {
                y[j] -= row[j + bw - i] * yi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cantilever_bc(mesh: &Mesh, load: Point) -> BoundaryConditions {
        let mut fixed = Vec::new();
        for j in 0..=mesh.ny {
            let n = mesh.node_index(0, j);
            fixed.extend([2 * n, 2 * n + 1]);
        }
        BoundaryConditions::new(fixed, vec![(mesh.nearest_node(load), [0.0, -1.0])])
    }

    #[test]
    fn mesh_sizes() {
        let m = build_mesh(2.0, 1.0, 100, 50).unwrap();
        assert_eq!((m.element_count(), m.node_count()), (5000, 5151));
        assert_relative_eq!(m.h, 0.02);
        let m = build_mesh(3.0, 1.0, 120, 40).unwrap();
        assert_eq!((m.element_count(), m.node_count()), (4800, 4961));
        assert_relative_eq!(m.h, 0.025);
        let m = build_mesh(1.0, 1.0, 1, 1).unwrap();
        assert_eq!((m.element_count(), m.node_count()), (1, 4));
        assert!(build_mesh(2.0, 1.0, 10, 10).is_err());
        assert!(build_mesh(2.0, 1.0, 0, 10).is_err());
    }

    #[test]
    fn mesh_layout() {
        let m = build_mesh(3.0, 2.0, 3, 2).unwrap();
        assert_eq!(m.nodes[m.node_index(2, 1)], Point::new(2.0, 1.0));
        assert_eq!(m.elements[4], [5, 6, 10, 9]);
        assert_eq!(m.nearest_node(Point::new(0.5, 0.5)), 0);
        assert_eq!(m.nearest_node(Point::new(3.0, 1.0)), 7);
    }

    #[test]
    fn volume_cases() {
        let m = build_mesh(2.0, 1.0, 4, 2).unwrap();
        assert_relative_eq!(volume(&[1.0; 8], &m), 2.0);
        assert_relative_eq!(volume(&[1e-3; 8], &m), 2e-3);
        let m = build_mesh(1.0, 1.0, 2, 2).unwrap();
        let rho = [1.0, 1e-3, 1.0, 1e-3];
        assert_relative_eq!(volume(&rho, &m), 0.5 + 0.5e-3, max_relative = 1e-14);
    }

    #[test]
    fn densities_saturate_and_floor() {
        let reg = Regularization::new(6, 0.04, 1e-3).unwrap();
        let m = build_mesh(2.0, 1.0, 4, 2).unwrap();
        let big = Component::new(1.0, 0.5, 10.0, 10.0, 0.0);
        assert!(element_densities(&[big], &m, &reg).iter().all(|&r| r == 1.0));
        let far = Component::new(50.0, 50.0, 0.1, 0.1, 0.0);
        assert!(element_densities(&[far], &m, &reg).iter().all(|&r| r == 1e-3));
        // A component edge through the element's vertical midline: two Gauss
        // points deep inside, two well outside.
        let m = build_mesh(1.0, 1.0, 1, 1).unwrap();
        let half = Component::new(0.0, 0.5, 1.0, 4.0, 0.0);
        let rho = element_densities(&[half], &m, &reg);
        assert_relative_eq!(rho[0], 0.5 * (1.0 + 1e-3), max_relative = 1e-14);
    }

    #[test]
    fn element_stiffness_symmetric_with_rigid_modes() {
        let mat = Material::new(1.0, 0.3).unwrap();
        let k = element_stiffness(&mat, 1.0);
        for r in 0..8 {
            for c in 0..8 {
                assert!((k[r][c] - k[c][r]).abs() <= 1e-14);
            }
        }
        let xs = [0.0, 1.0, 1.0, 0.0];
        let ys = [0.0, 0.0, 1.0, 1.0];
        let modes: [[f64; 8]; 3] = [
            std::array::from_fn(|i| if i % 2 == 0 { 1.0 } else { 0.0 }),
            std::array::from_fn(|i| if i % 2 == 1 { 1.0 } else { 0.0 }),
            std::array::from_fn(|i| if i % 2 == 0 { -ys[i / 2] } else { xs[i / 2] }),
        ];
        for m in &modes {
            for r in 0..8 {
                assert!(dot(&k[r], m).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn zero_load_gives_zero_response() {
        let m = build_mesh(2.0, 1.0, 4, 2).unwrap();
        let mut bc = cantilever_bc(&m, Point::new(2.0, 0.5));
        bc.point_loads[0].1 = [0.0, 0.0];
        let s = assemble_and_solve(&m, &[1.0; 8], &bc, &Material::default()).unwrap();
        assert_eq!(s.compliance, 0.0);
        assert!(s.displacements.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn energy_identity_and_fixed_dofs() {
        let m = build_mesh(2.0, 1.0, 20, 10).unwrap();
        let bc = cantilever_bc(&m, Point::new(2.0, 0.5));
        let rho: Vec<f64> = (0..m.element_count())
            .map(|e| 0.001 + 0.999 * ((e * 37 % 11) as f64 / 10.0))
            .collect();
        let mat = Material::default();
        let s = assemble_and_solve(&m, &rho, &bc, &mat).unwrap();
        assert!(s.compliance > 0.0);
        let energy: f64 = rho.iter().zip(&s.element_energy).map(|(r, e)| r * e).sum();
        assert_relative_eq!(s.compliance, energy, max_relative = 1e-9);
        for &d in &bc.fixed_dofs {
            assert_eq!(s.displacements[d], 0.0);
        }
        assert!(s.residual <= SOLVE_TOLERANCE);
        // Gauss-point densities integrate to the element energy.
        let w = 0.25 * m.h * m.h;
        let e_max = s.element_energy.iter().cloned().fold(0.0, f64::max);
        for (g, e) in s.gauss_energy_density.iter().zip(&s.element_energy) {
            assert!((w * g.iter().sum::<f64>() - e).abs() <= 1e-10 * e_max);
        }
    }

    #[test]
    fn unconstrained_system_is_singular() {
        let m = build_mesh(2.0, 1.0, 4, 2).unwrap();
        let bc = BoundaryConditions::new(vec![0], vec![(14, [0.0, -1.0])]);
        let err = assemble_and_solve(&m, &[1.0; 8], &bc, &Material::default()).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { .. }));
        let bc = BoundaryConditions::new(vec![], vec![(14, [0.0, -1.0])]);
        assert!(assemble_and_solve(&m, &[1.0; 8], &bc, &Material::default()).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = build_mesh(2.0, 1.0, 4, 2).unwrap();
        let bc = cantilever_bc(&m, Point::new(2.0, 0.5));
        assert!(matches!(
            assemble_and_solve(&m, &[1.0; 3], &bc, &Material::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn raising_density_never_increases_compliance() {
        let m = build_mesh(2.0, 1.0, 8, 4).unwrap();
        let bc = cantilever_bc(&m, Point::new(2.0, 0.0));
        let base: Vec<f64> = (0..32).map(|e| 0.05 + 0.9 * ((e * 7 % 5) as f64 / 4.0)).collect();
        let mat = Material::default();
        let c0 = assemble_and_solve(&m, &base, &bc, &mat).unwrap().compliance;
        for e in 0..32 {
            let mut rho = base.clone();
            rho[e] = (rho[e] + 0.3).min(1.0);
            let c = assemble_and_solve(&m, &rho, &bc, &mat).unwrap().compliance;
            assert!(c <= c0 * (1.0 + 1e-12), "element {e}: {c} > {c0}");
        }
    }

    #[test]
    fn mirror_symmetric_displacements() {
        // Clamped at both ends, loaded at mid-span: symmetric about x = 1.
        let m = build_mesh(2.0, 1.0, 10, 5).unwrap();
        let mut fixed = Vec::new();
        for j in 0..=m.ny {
            for i in [0, m.nx] {
                let n = m.node_index(i, j);
                fixed.extend([2 * n, 2 * n + 1]);
            }
        }
        let load = m.nearest_node(Point::new(1.0, 1.0));
        let bc = BoundaryConditions::new(fixed, vec![(load, [0.0, -1.0])]);
        let rho: Vec<f64> = (0..m.element_count())
            .map(|e| {
                let c = m.element_center(e);
                if (c.x - 1.0).abs() < 0.5 || c.y < 0.3 { 1.0 } else { 0.01 }
            })
            .collect();
        let s = assemble_and_solve(&m, &rho, &bc, &Material::default()).unwrap();
        for j in 0..=m.ny {
            for i in 0..=m.nx {
                let a = m.node_index(i, j);
                let b = m.node_index(m.nx - i, j);
                let (ua, ub) = (&s.displacements[2 * a..2 * a + 2], &s.displacements[2 * b..2 * b + 2]);
                assert!((ua[0] + ub[0]).abs() <= 1e-9 * s.compliance);
                assert!((ua[1] - ub[1]).abs() <= 1e-9 * s.compliance);
            }
        }
    }

    #[test]
    fn band_cholesky_matches_dense_solution() {
        // Small SPD band matrix vs. a hand-solved tridiagonal system.
        let mut a = BandMatrix::zeros(4, 1);
        for i in 0..4 {
            *a.at_mut(i, i) = 2.0;
            if i > 0 {
                *a.at_mut(i, i - 1) = -1.0;
            }
        }
        let x = a.factorize().unwrap().solve(&[1.0, 0.0, 0.0, 1.0]);
        for v in x {
            assert_relative_eq!(v, 1.0, max_relative = 1e-14);
        }
    }
}
