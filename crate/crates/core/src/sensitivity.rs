//! Analytic design sensitivities of compliance and volume.
//!
//! Both gradients are boundary-band integrals over the element Gauss points:
//!
//! ```text
//! dJ/dd_ik = sum_g w_g * F_g * delta_i(g) * dphi_i/dd_ik(g)
//! delta_i  = min(delta(phi_i), delta(phi_s))
//! ```
//!
//! with field weight `F = 1` for the volume and `F = -(strain energy
//! density)` for the compliance, which is self-adjoint. The Gauss points and
//! regularization are the ones used to build the element densities, so the
//! result is the derivative of the discrete objective.

use crate::design;
use crate::error::{Error, Result};
use crate::fem::{FemSolution, Mesh};
use crate::geometry::{
    smoothed_delta, structure_tdf_into, tdf_gradient_unchecked, Component, Regularization, P_MAX,
};
use crate::mma::Bounds;

/// Compliance and volume gradients for a design.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub d_compliance: Vec<f64>,
    pub d_volume: Vec<f64>,
}

/// Accumulates `sum_g w_g * weight(e) * delta_i * dphi_i/dd` for every
/// component. `weight` is the field weight of element `e`, constant over its
/// Gauss points.
pub fn band_integral<W>(
    comps: &[Component],
    mesh: &Mesh,
    reg: &Regularization,
    weight: W,
) -> Result<Vec<f64>>
where
    W: Fn(usize) -> f64,
{
    if comps.is_empty() {
        return Err(Error::InvalidDesign("no components".into()));
    }
    if let Some((index, c)) = comps.iter().enumerate().find(|(_, c)| c.p.abs() > P_MAX) {
        return Err(Error::NearVertical {
            index,
            p: c.p,
            p_max: P_MAX,
        });
    }
    let nc = comps.len();
    let mut grad = vec![0.0; design::VARS * nc];
    let wg = 0.25 * mesh.h * mesh.h;
    let mut phi = Vec::with_capacity(nc);
    let mut elem = vec![0.0; design::VARS * nc];
    for e in 0..mesh.element_count() {
        let mut touched = false;
        for pt in mesh.gauss_points(e) {
            let (phi_s, _) = structure_tdf_into(comps, pt, reg.n_exp, &mut phi);
            let delta_s = smoothed_delta(phi_s, reg);
            if delta_s == 0.0 {
                continue;
            }
            for (i, c) in comps.iter().enumerate() {
                let delta_i = smoothed_delta(phi[i], reg).min(delta_s);
                if delta_i == 0.0 {
                    continue;
                }
                let dphi = tdf_gradient_unchecked(c, pt, reg.n_exp);
                for (k, d) in dphi.iter().enumerate() {
                    elem[design::VARS * i + k] += delta_i * d;
                }
                touched = true;
            }
        }
        if touched {
            let f = wg * weight(e);
            for (g, v) in grad.iter_mut().zip(elem.iter_mut()) {
                *g += f * *v;
                *v = 0.0;
            }
        }
    }
    Ok(grad)
}

/// Gradient of the compliance `f^T u` with respect to all design variables.
///
/// `stiffness_slope` is `d(stiffness weight)/d(density)`; it is 1 when the
/// element stiffness is scaled directly by the density.
pub fn compliance_gradient(
    comps: &[Component],
    mesh: &Mesh,
    reg: &Regularization,
    solution: &FemSolution,
    stiffness_slope: f64,
) -> Result<Vec<f64>> {
    if solution.element_energy.len() != mesh.element_count() {
        return Err(Error::DimensionMismatch {
            what: "solution energies",
            expected: mesh.element_count(),
            got: solution.element_energy.len(),
        });
    }
    let inv_area = 1.0 / (mesh.h * mesh.h);
    // Element-mean energy density: the density is the Gauss mean of H, so
    // each Gauss point sees the whole element energy.
    band_integral(comps, mesh, reg, |e| {
        -stiffness_slope * solution.element_energy[e] * inv_area
    })
}

/// Gradient of the material volume with respect to all design variables.
pub fn volume_gradient(comps: &[Component], mesh: &Mesh, reg: &Regularization) -> Result<Vec<f64>> {
    band_integral(comps, mesh, reg, |_| 1.0)
}

/// Central-difference gradient of `objective` at `d`.
///
/// Variable `k` uses step `step * (upper_k - lower_k)` when `bounds` is given
/// and `step` otherwise. Near a bound the difference falls back to a
/// one-sided formula that stays inside it.
pub fn finite_difference_oracle<F>(
    mut objective: F,
    d: &[f64],
    step: f64,
    bounds: Option<&Bounds>,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidBounds(format!("step {step} must be positive")));
    }
    let mut eval = |x: &[f64]| -> Result<f64> {
        let v = objective(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("objective"))
        }
    };
    let mut x = d.to_vec();
    let mut grad = Vec::with_capacity(d.len());
    for k in 0..d.len() {
        let (lo, hi, hk) = match bounds {
            Some(b) => (b.lower[k], b.upper[k], step * (b.upper[k] - b.lower[k])),
            None => (f64::NEG_INFINITY, f64::INFINITY, step),
        };
        let xk = d[k];
        let g = if xk - hk >= lo && xk + hk <= hi {
            x[k] = xk + hk;
            let fp = eval(&x)?;
            x[k] = xk - hk;
            let fm = eval(&x)?;
            (fp - fm) / (2.0 * hk)
        } else if xk + hk <= hi {
            x[k] = xk;
            let f0 = eval(&x)?;
            x[k] = xk + hk;
            let f1 = eval(&x)?;
            x[k] = xk + 2.0 * hk;
            let f2 = eval(&x)?;
            (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * hk)
        } else {
            x[k] = xk;
            let f0 = eval(&x)?;
            x[k] = xk - hk;
            let f1 = eval(&x)?;
            x[k] = xk - 2.0 * hk;
            let f2 = eval(&x)?;
            (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * hk)
        };
        x[k] = xk;
        grad.push(g);
    }
    Ok(grad)
}

/// Largest entrywise relative error between an analytic gradient and a
/// reference, with `floor` as the smallest denominator.
pub fn max_relative_error(analytic: &[f64], reference: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(reference)
        .map(|(a, r)| (a - r).abs() / r.abs().max(a.abs()).max(floor))
        .fold(0.0, f64::max)
}
