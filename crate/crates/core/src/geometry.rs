//! Component geometry and level-set description.
//!
//! Each component is a rectangle-like superellipse described by its center,
//! full length, full thickness and the sine of its inclination angle. Its
//! topology description function (TDF) is
//!
//! ```text
//! phi(x, y) = 1 - (u / (L/2))^n - (v / (t/2))^n
//! u =  q (x - x0) + p (y - y0)
//! v = -p (x - x0) + q (y - y0),   q = sqrt(1 - p^2)
//! ```
//!
//! which is positive inside the component, zero on its boundary and negative
//! outside. The structure TDF is the pointwise maximum over all components.

use crate::error::{Error, Result};

/// Largest admissible |p|. Keeps `q = sqrt(1 - p^2)` away from zero.
pub const P_MAX: f64 = 0.995;

/// Ratios are clamped to this magnitude before exponentiation.
const RATIO_CLAMP: f64 = 1.0e6;

/// A point in the design domain.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Number of design variables carried by one component.
pub const VARS_PER_COMPONENT: usize = 5;

/// One rectangular building block of the structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    /// Center abscissa.
    pub x0: f64,
    /// Center ordinate.
    pub y0: f64,
    /// Full length along the component axis.
    pub length: f64,
    /// Full thickness across the component axis.
    pub thickness: f64,
    /// Sine of the inclination angle.
    pub p: f64,
}

impl Component {
    pub const fn new(x0: f64, y0: f64, length: f64, thickness: f64, p: f64) -> Self {
        Self {
            x0,
            y0,
            length,
            thickness,
            p,
        }
    }

    /// Builds a component from an inclination angle in radians.
    pub fn from_angle(x0: f64, y0: f64, length: f64, thickness: f64, theta: f64) -> Self {
        Self::new(x0, y0, length, thickness, theta.sin())
    }

    /// Cosine of the inclination angle, always the nonnegative root.
    #[inline]
    pub fn q(&self) -> f64 {
        (1.0 - self.p * self.p).max(0.0).sqrt()
    }

    pub fn center(&self) -> Point {
        Point::new(self.x0, self.y0)
    }

    /// Checks the size and orientation invariants.
    pub fn validate(&self, t_min: f64) -> Result<()> {
        let finite = [self.x0, self.y0, self.length, self.thickness, self.p]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("component parameters"));
        }
        if self.length < t_min || self.thickness < t_min {
            return Err(Error::InvalidDesign(format!(
                "component size L = {}, t = {} below minimum {}",
                self.length, self.thickness, t_min
            )));
        }
        if self.p.abs() > P_MAX {
            return Err(Error::NearVertical {
                index: 0,
                p: self.p,
                p_max: P_MAX,
            });
        }
        Ok(())
    }

    /// Writes the five design variables in (x0, y0, L, t, p) order.
    pub fn to_vars(&self) -> [f64; VARS_PER_COMPONENT] {
        [self.x0, self.y0, self.length, self.thickness, self.p]
    }

    pub fn from_vars(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }
}

#[inline]
fn clamped(r: f64) -> f64 {
    r.clamp(-RATIO_CLAMP, RATIO_CLAMP)
}

/// Evaluates the TDF of one component at `pt`.
pub fn component_tdf(comp: &Component, pt: Point, n_exp: u32) -> f64 {
    let q = comp.q();
    let dx = pt.x - comp.x0;
    let dy = pt.y - comp.y0;
    let u = q * dx + comp.p * dy;
    let v = -comp.p * dx + q * dy;
    let ru = clamped(u / (0.5 * comp.length));
    let rv = clamped(v / (0.5 * comp.thickness));
    let n = n_exp as i32;
    1.0 - ru.powi(n) - rv.powi(n)
}

/// Derivatives of the component TDF at `pt` with respect to
/// (x0, y0, L, t, p).
pub fn component_tdf_gradient(comp: &Component, pt: Point, n_exp: u32) -> Result<[f64; 5]> {
    if comp.p.abs() > P_MAX {
        return Err(Error::NearVertical {
            index: 0,
            p: comp.p,
            p_max: P_MAX,
        });
    }
    Ok(tdf_gradient_unchecked(comp, pt, n_exp))
}

#[inline]
pub(crate) fn tdf_gradient_unchecked(comp: &Component, pt: Point, n_exp: u32) -> [f64; 5] {
    let p = comp.p;
    let q = comp.q();
    let dx = pt.x - comp.x0;
    let dy = pt.y - comp.y0;
    let a = 0.5 * comp.length;
    let b = 0.5 * comp.thickness;
    let u = q * dx + p * dy;
    let v = -p * dx + q * dy;
    let ru = clamped(u / a);
    let rv = clamped(v / b);
    let n = n_exp as f64;
    let ni = n_exp as i32;
    // n (u/a)^(n-1) and n (v/b)^(n-1)
    let gu = n * ru.powi(ni - 1);
    let gv = n * rv.powi(ni - 1);

    let d_x0 = gu * q / a - gv * p / b;
    let d_y0 = gu * p / a + gv * q / b;
    let d_len = gu * ru / comp.length;
    let d_thk = gv * rv / comp.thickness;
    let du_dp = -p * dx / q + dy;
    let dv_dp = -dx - p * dy / q;
    let d_p = -gu * du_dp / a - gv * dv_dp / b;
    [d_x0, d_y0, d_len, d_thk, d_p]
}

/// Heaviside/Dirac smoothing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    /// Superellipse exponent; even and at least 2.
    pub n_exp: u32,
    /// Half-width of the smoothing band in TDF units.
    pub epsilon: f64,
    /// Void floor of the smoothed Heaviside.
    pub alpha: f64,
}

impl Regularization {
    pub fn new(n_exp: u32, epsilon: f64, alpha: f64) -> Result<Self> {
        let reg = Self {
            n_exp,
            epsilon,
            alpha,
        };
        reg.validate()?;
        Ok(reg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_exp < 2 || !self.n_exp.is_multiple_of(2) {
            return Err(Error::InvalidRegularization(format!(
                "exponent {} must be an even integer >= 2",
                self.n_exp
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidRegularization(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 0.01) {
            return Err(Error::InvalidRegularization(format!(
                "alpha {} must lie in (0, 0.01]",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn heaviside(&self, phi: f64) -> f64 {
        smoothed_heaviside(phi, self)
    }

    pub fn delta(&self, phi: f64) -> f64 {
        smoothed_delta(phi, self)
    }
}

/// Piecewise-cubic smoothed Heaviside with range `[alpha, 1]`.
pub fn smoothed_heaviside(phi: f64, reg: &Regularization) -> f64 {
    let eps = reg.epsilon;
    let alpha = reg.alpha;
    if phi >= eps {
        1.0
    } else if phi <= -eps {
        alpha
    } else {
        let s = phi / eps;
        0.75 * (1.0 - alpha) * (s - s * s * s / 3.0) + 0.5 * (1.0 + alpha)
    }
}

/// Derivative of [`smoothed_heaviside`] with respect to `phi`.
pub fn smoothed_delta(phi: f64, reg: &Regularization) -> f64 {
    let eps = reg.epsilon;
    if phi.abs() >= eps {
        0.0
    } else {
        let s = phi / eps;
        0.75 * (1.0 - reg.alpha) / eps * (1.0 - s * s)
    }
}

/// Per-component and structure TDF values at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub phi_per_component: Vec<f64>,
    pub phi_structure: f64,
    pub argmax_component: usize,
}

/// Evaluates every component TDF at `pt` and their maximum.
pub fn structure_tdf(comps: &[Component], pt: Point, n_exp: u32) -> Result<FieldSample> {
    if comps.is_empty() {
        return Err(Error::InvalidDesign("no components".into()));
    }
    let mut phi = Vec::with_capacity(comps.len());
    let (phi_s, arg) = structure_tdf_into(comps, pt, n_exp, &mut phi);
    Ok(FieldSample {
        phi_per_component: phi,
        phi_structure: phi_s,
        argmax_component: arg,
    })
}

/// Allocation-free variant of [`structure_tdf`]; `comps` must be nonempty.
pub(crate) fn structure_tdf_into(
    comps: &[Component],
    pt: Point,
    n_exp: u32,
    out: &mut Vec<f64>,
) -> (f64, usize) {
    out.clear();
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, c) in comps.iter().enumerate() {
        let v = component_tdf(c, pt, n_exp);
        if v > best {
            best = v;
            arg = i;
        }
        out.push(v);
    }
    (best, arg)
}

/// Structure TDF value only.
pub fn structure_phi(comps: &[Component], pt: Point, n_exp: u32) -> f64 {
    comps
        .iter()
        .map(|c| component_tdf(c, pt, n_exp))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Corner points of the rectangle spanned by a component, counterclockwise.
pub fn component_corners(comp: &Component) -> [Point; 4] {
    let q = comp.q();
    let p = comp.p;
    let a = 0.5 * comp.length;
    let b = 0.5 * comp.thickness;
    // Axis direction (q, p), normal direction (-p, q).
    let corner = |su: f64, sv: f64| {
        Point::new(
            comp.x0 + su * a * q - sv * b * p,
            comp.y0 + su * a * p + sv * b * q,
        )
    };
    [
        corner(-1.0, -1.0),
        corner(1.0, -1.0),
        corner(1.0, 1.0),
        corner(-1.0, 1.0),
    ]
}
