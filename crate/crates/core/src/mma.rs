//! Method of Moving Asymptotes for inequality-constrained problems.
//!
//! Each update builds the separable convex rational approximation of the
//! objective and constraints around the current iterate, then solves the
//! subproblem through its dual by bisection on the multipliers. Constraints
//! are feasible when `g <= 0`.

use crate::error::{Error, Result};

/// Per-variable box bounds and move limits.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Largest step per update; zero freezes the variable.
    pub move_limit: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, move_limit: Vec<f64>) -> Result<Self> {
        let b = Self {
            lower,
            upper,
            move_limit,
        };
        b.validate()?;
        Ok(b)
    }

    /// Bounds with a move limit that is a fixed fraction of each range.
    pub fn with_move_fraction(lower: Vec<f64>, upper: Vec<f64>, fraction: f64) -> Result<Self> {
        let move_limit = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| fraction * (u - l))
            .collect();
        Self::new(lower, upper, move_limit)
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lower.len();
        if self.upper.len() != n || self.move_limit.len() != n {
            return Err(Error::InvalidBounds("array lengths differ".into()));
        }
        for k in 0..n {
            if !(self.lower[k] < self.upper[k]) {
                return Err(Error::InvalidBounds(format!(
                    "variable {k}: lower {} not below upper {}",
                    self.lower[k], self.upper[k]
                )));
            }
            if !(self.move_limit[k] >= 0.0) {
                return Err(Error::InvalidBounds(format!(
                    "variable {k}: negative move limit {}",
                    self.move_limit[k]
                )));
            }
        }
        Ok(())
    }

    /// Maps `x` into [0, 1]^n.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, v)| (v - self.lower[k]) / (self.upper[k] - self.lower[k]))
            .collect()
    }

    pub fn from_unit(&self, s: &[f64]) -> Vec<f64> {
        s.iter()
            .enumerate()
            .map(|(k, v)| self.lower[k] + v * (self.upper[k] - self.lower[k]))
            .collect()
    }

    /// Converts a gradient in original variables to unit variables.
    pub fn gradient_to_unit(&self, g: &[f64]) -> Vec<f64> {
        g.iter()
            .enumerate()
            .map(|(k, v)| v * (self.upper[k] - self.lower[k]))
            .collect()
    }

    /// Unit-cube bounds with the move limits rescaled accordingly.
    pub fn unit(&self) -> Bounds {
        let n = self.len();
        Bounds {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
            move_limit: (0..n)
                .map(|k| self.move_limit[k] / (self.upper[k] - self.lower[k]))
                .collect(),
        }
    }
}

/// What to do when the convex subproblem admits no feasible point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InfeasiblePolicy {
    /// Fail with [`Error::Infeasible`].
    #[default]
    Error,
    /// Take the least-violating point within the move limits.
    LeastViolation,
}

/// Tuning constants of the update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmaSettings {
    /// Initial asymptote distance as a fraction of the bound range.
    pub asy_init: f64,
    pub asy_incr: f64,
    pub asy_decr: f64,
    /// Fraction of the asymptote gap kept free on either side of the iterate.
    pub margin: f64,
    /// Regularization added to the rational coefficients.
    pub raa0: f64,
    /// Relative tolerance of the multiplier bisection.
    pub dual_tol: f64,
    pub infeasible: InfeasiblePolicy,
}

impl Default for MmaSettings {
    fn default() -> Self {
        Self {
            asy_init: 0.5,
            asy_incr: 1.2,
            asy_decr: 0.7,
            margin: 0.1,
            raa0: 1e-5,
            dual_tol: 1e-10,
            infeasible: InfeasiblePolicy::Error,
        }
    }
}

/// Asymptotes and iterate history carried between updates.
#[derive(Debug, Clone, PartialEq)]
pub struct MmaState {
    pub lower_asymptotes: Vec<f64>,
    pub upper_asymptotes: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub x_prev2: Vec<f64>,
    pub iteration: usize,
}

impl MmaState {
    pub fn new(n: usize) -> Self {
        Self {
            lower_asymptotes: vec![0.0; n],
            upper_asymptotes: vec![0.0; n],
            x_prev: vec![0.0; n],
            x_prev2: vec![0.0; n],
            iteration: 0,
        }
    }
}

/// Separable rational approximation: for each function i and variable j,
/// `p[i][j] / (U_j - x_j) + q[i][j] / (x_j - L_j)`.
struct Subproblem<'a> {
    low: &'a [f64],
    upp: &'a [f64],
    alpha: Vec<f64>,
    beta: Vec<f64>,
    p0: Vec<f64>,
    q0: Vec<f64>,
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl Subproblem<'_> {
    /// Primal minimizer for fixed multipliers.
    fn primal(&self, lambda: &[f64], x: &mut [f64]) {
        for j in 0..x.len() {
            let mut pj = self.p0[j];
            let mut qj = self.q0[j];
            for (i, l) in lambda.iter().enumerate() {
                pj += l * self.p[i][j];
                qj += l * self.q[i][j];
            }
            let sp = pj.sqrt();
            let sq = qj.sqrt();
            let xj = (sp * self.low[j] + sq * self.upp[j]) / (sp + sq);
            x[j] = xj.clamp(self.alpha[j], self.beta[j]);
        }
    }

    /// Approximated constraint values minus their bounds.
    fn constraints(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..x.len() {
                s += self.p[i][j] / (self.upp[j] - x[j]) + self.q[i][j] / (x[j] - self.low[j]);
            }
            *o = s - self.b[i];
        }
    }
}

/// Largest multiplier tried before declaring the subproblem infeasible.
const LAMBDA_MAX: f64 = 1e20;

/// One MMA update. Returns the new iterate and advances `state`.
///
/// `dg[i]` is the gradient of constraint `g[i]`.
#[allow(clippy::too_many_arguments)]
pub fn mma_update(
    x: &[f64],
    f: f64,
    df: &[f64],
    g: &[f64],
    dg: &[Vec<f64>],
    bounds: &Bounds,
    state: &mut MmaState,
    settings: &MmaSettings,
) -> Result<Vec<f64>> {
    let n = x.len();
    let m = g.len();
    if df.len() != n {
        return Err(Error::DimensionMismatch {
            what: "objective gradient",
            expected: n,
            got: df.len(),
        });
    }
    if bounds.len() != n {
        return Err(Error::DimensionMismatch {
            what: "bounds",
            expected: n,
            got: bounds.len(),
        });
    }
    if dg.len() != m {
        return Err(Error::DimensionMismatch {
            what: "constraint gradients",
            expected: m,
            got: dg.len(),
        });
    }
    if let Some(row) = dg.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            what: "constraint gradient",
            expected: n,
            got: row.len(),
        });
    }
    if state.x_prev.len() != n {
        return Err(Error::DimensionMismatch {
            what: "optimizer state",
            expected: n,
            got: state.x_prev.len(),
        });
    }
    let finite = f.is_finite()
        && df.iter().all(|v| v.is_finite())
        && g.iter().all(|v| v.is_finite())
        && dg.iter().flatten().all(|v| v.is_finite());
    if !finite {
        return Err(Error::NonFinite("objective or constraint gradient"));
    }
    if m == 0 {
        return Err(Error::DimensionMismatch {
            what: "constraint count",
            expected: 1,
            got: 0,
        });
    }

    // Asymptote update.
    let s = settings;
    for j in 0..n {
        let range = bounds.upper[j] - bounds.lower[j];
        let (low, upp) = if state.iteration < 2 {
            (x[j] - s.asy_init * range, x[j] + s.asy_init * range)
        } else {
            let x1 = state.x_prev[j];
            let x2 = state.x_prev2[j];
            let zz = (x[j] - x1) * (x1 - x2);
            let gamma = if zz > 0.0 {
                s.asy_incr
            } else if zz < 0.0 {
                s.asy_decr
            } else {
                1.0
            };
            let low = x[j] - gamma * (x1 - state.lower_asymptotes[j]);
            let upp = x[j] + gamma * (state.upper_asymptotes[j] - x1);
            (
                low.clamp(x[j] - 10.0 * range, x[j] - 0.01 * range),
                upp.clamp(x[j] + 0.01 * range, x[j] + 10.0 * range),
            )
        };
        state.lower_asymptotes[j] = low;
        state.upper_asymptotes[j] = upp;
    }
    let low = &state.lower_asymptotes;
    let upp = &state.upper_asymptotes;

    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    for j in 0..n {
        alpha[j] = bounds.lower[j]
            .max(low[j] + s.margin * (x[j] - low[j]))
            .max(x[j] - bounds.move_limit[j]);
        beta[j] = bounds.upper[j]
            .min(upp[j] - s.margin * (upp[j] - x[j]))
            .min(x[j] + bounds.move_limit[j]);
        if alpha[j] > beta[j] {
            // Iterate outside its box: pin to the nearest admissible value.
            let v = x[j].clamp(bounds.lower[j], bounds.upper[j]);
            alpha[j] = v;
            beta[j] = v;
        }
    }

    let coeffs = |grad: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        for j in 0..n {
            let ux1 = upp[j] - x[j];
            let xl1 = x[j] - low[j];
            let reg = s.raa0 / (bounds.upper[j] - bounds.lower[j]);
            let pos = grad[j].max(0.0);
            let neg = (-grad[j]).max(0.0);
            p[j] = ux1 * ux1 * (1.001 * pos + 0.001 * neg + reg);
            q[j] = xl1 * xl1 * (0.001 * pos + 1.001 * neg + reg);
        }
        (p, q)
    };
    let (p0, q0) = coeffs(df);
    let mut p = Vec::with_capacity(m);
    let mut q = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for i in 0..m {
        let (pi, qi) = coeffs(&dg[i]);
        let at_x: f64 = (0..n)
            .map(|j| pi[j] / (upp[j] - x[j]) + qi[j] / (x[j] - low[j]))
            .sum();
        b.push(at_x - g[i]);
        p.push(pi);
        q.push(qi);
    }
    let sub = Subproblem {
        low,
        upp,
        alpha,
        beta,
        p0,
        q0,
        p,
        q,
        b,
    };

    let xnew = solve_dual(&sub, n, m, s)?;

    state.x_prev2 = std::mem::replace(&mut state.x_prev, x.to_vec());
    state.iteration += 1;
    Ok(xnew)
}

/// Maximizes the dual by cyclic bisection on each multiplier.
fn solve_dual(sub: &Subproblem<'_>, n: usize, m: usize, s: &MmaSettings) -> Result<Vec<f64>> {
    let mut lambda = vec![0.0; m];
    let mut x = vec![0.0; n];
    let mut h = vec![0.0; m];
    let sweeps = if m == 1 { 1 } else { 200 };
    for _ in 0..sweeps {
        let before = lambda.clone();
        for i in 0..m {
            lambda[i] = 0.0;
            sub.primal(&lambda, &mut x);
            sub.constraints(&x, &mut h);
            if h[i] <= 0.0 {
                continue;
            }
            // Bracket the root of the decreasing map lambda_i -> h_i.
            let mut lo = 0.0;
            let mut hi = 1.0;
            loop {
                lambda[i] = hi;
                sub.primal(&lambda, &mut x);
                sub.constraints(&x, &mut h);
                if h[i] <= 0.0 {
                    break;
                }
                if hi >= LAMBDA_MAX {
                    match s.infeasible {
                        InfeasiblePolicy::Error => {
                            return Err(Error::Infeasible {
                                constraint: i,
                                violation: h[i],
                            })
                        }
                        InfeasiblePolicy::LeastViolation => break,
                    }
                }
                lo = hi;
                hi *= 10.0;
            }
            if h[i] > 0.0 {
                continue;
            }
            while hi - lo > s.dual_tol * hi.max(1e-300) {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                lambda[i] = mid;
                sub.primal(&lambda, &mut x);
                sub.constraints(&x, &mut h);
                if h[i] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // Keep the feasible end of the bracket.
            lambda[i] = hi;
        }
        let moved = lambda
            .iter()
            .zip(&before)
            .any(|(a, b)| (a - b).abs() > s.dual_tol * a.abs().max(1.0));
        if !moved {
            break;
        }
    }
    sub.primal(&lambda, &mut x);
    if m > 1 && s.infeasible == InfeasiblePolicy::Error {
        sub.constraints(&x, &mut h);
        if let Some((i, &v)) = h
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 1e-8)
            .max_by(|a, b| a.1.total_cmp(b.1))
        {
            return Err(Error::Infeasible {
                constraint: i,
                violation: v,
            });
        }
    }
    Ok(x)
}
