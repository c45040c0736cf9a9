//! The optimization loop: analyze, differentiate, update, repeat.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::design;
use crate::error::{Error, Result};
use crate::export::{
    export_cad_svg, export_component_table, export_contour_svg, export_history_csv,
    IterationRecord,
};
use crate::fem::{
    assemble_and_solve, element_densities, volume, BoundaryConditions, FemSolution, Material, Mesh,
};
use crate::geometry::{Component, Point, Regularization};
use crate::mma::{mma_update, Bounds, InfeasiblePolicy, MmaSettings, MmaState};
use crate::problems::{grid_initial_design, ProblemSpec, Supports, T_MIN};
use crate::sensitivity::{
    compliance_gradient, finite_difference_oracle, max_relative_error, volume_gradient,
};

/// Consecutive small-change iterations required to stop.
pub const CONVERGENCE_STREAK: usize = 3;

/// Everything needed to evaluate a design on one problem.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub spec: ProblemSpec,
    pub mesh: Mesh,
    pub bc: BoundaryConditions,
    pub material: Material,
    pub reg: Regularization,
    /// Stiffness ratio of fully void elements.
    pub void_scale: f64,
}

/// Response of one design.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub densities: Vec<f64>,
    pub solution: FemSolution,
    pub compliance: f64,
    pub volume: f64,
}

impl Analysis {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let spec = config.problem_spec();
        spec.validate()?;
        let mesh = spec.mesh()?;
        let bc = spec.boundary_conditions(&mesh);
        let material = Material::new(config.material.e, config.material.nu)?;
        let reg = config.regularization(mesh.h)?;
        Ok(Self {
            spec,
            mesh,
            bc,
            material,
            reg,
            void_scale: config.material.void_scale,
        })
    }

    /// Maps element densities to stiffness weights so that fully void
    /// elements keep `void_scale` of the solid stiffness.
    pub fn stiffness_weights(&self, densities: &[f64]) -> Vec<f64> {
        let a = self.reg.alpha;
        if self.void_scale == a {
            return densities.to_vec();
        }
        densities
            .iter()
            .map(|r| self.void_scale + (1.0 - self.void_scale) * (r - a) / (1.0 - a))
            .collect()
    }

    /// Derivative of the stiffness weight with respect to the density.
    pub fn stiffness_slope(&self) -> f64 {
        if self.void_scale == self.reg.alpha {
            1.0
        } else {
            (1.0 - self.void_scale) / (1.0 - self.reg.alpha)
        }
    }

    pub fn evaluate(&self, comps: &[Component]) -> Result<Evaluation> {
        if comps.is_empty() {
            return Err(Error::InvalidDesign("no components".into()));
        }
        let densities = element_densities(comps, &self.mesh, &self.reg);
        let weights = self.stiffness_weights(&densities);
        let solution = assemble_and_solve(&self.mesh, &weights, &self.bc, &self.material)?;
        Ok(Evaluation {
            compliance: solution.compliance,
            volume: volume(&densities, &self.mesh),
            densities,
            solution,
        })
    }

    /// Compliance and volume gradients at an evaluated design.
    pub fn gradients(&self, comps: &[Component], eval: &Evaluation) -> Result<(Vec<f64>, Vec<f64>)> {
        let dc = compliance_gradient(
            comps,
            &self.mesh,
            &self.reg,
            &eval.solution,
            self.stiffness_slope(),
        )?;
        let dv = volume_gradient(comps, &self.mesh, &self.reg)?;
        Ok((dc, dv))
    }
}

/// Outcome of an optimization run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub components: Vec<Component>,
    pub history: Vec<IterationRecord>,
    pub final_compliance: f64,
    pub final_volume: f64,
    pub final_volume_fraction: f64,
    /// Iteration (1-based) whose design is reported.
    pub final_iteration: usize,
    /// Whether the reported design meets the volume constraint within
    /// `optimizer.feasibility_tol`.
    pub feasible: bool,
    pub converged: bool,
    pub design_variable_count: usize,
}

/// Initial design of a configuration.
pub fn initial_design(config: &RunConfig, analysis: &Analysis) -> Result<Vec<Component>> {
    grid_initial_design(
        config.initial.cells_x,
        config.initial.cells_y,
        &analysis.spec,
        config.initial.angle_p,
        config.initial.volume_factor,
        &analysis.reg,
        None,
    )
}

/// Runs the optimization from `initial`, calling `observer` after every
/// iteration with its record and the updated design.
pub fn optimize<F>(
    config: &RunConfig,
    analysis: &Analysis,
    initial: Vec<Component>,
    mut observer: F,
) -> Result<RunResult>
where
    F: FnMut(&IterationRecord, &[Component]) -> Result<()>,
{
    let nc = initial.len();
    if nc == 0 {
        return Err(Error::InvalidDesign("no components".into()));
    }
    let n = design::variable_count(nc);
    let bounds = analysis
        .spec
        .variable_bounds(nc, config.optimizer.move_limit_fraction)?;
    let unit = bounds.unit();
    let budget = analysis.spec.volume_budget();
    let area = analysis.spec.area();
    let settings = MmaSettings {
        infeasible: InfeasiblePolicy::LeastViolation,
        ..MmaSettings::default()
    };

    let mut x: Vec<f64> = bounds
        .to_unit(&design::flatten(&initial))
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    let mut state = MmaState::new(n);
    let mut history = Vec::new();
    let mut scale = None;
    let mut streak = 0;
    let mut converged = false;
    let mut last = None;
    let mut last_feasible = None;

    for iteration in 1..=config.optimizer.max_iterations {
        let at = |e: Error| Error::AtIteration {
            iteration,
            source: Box::new(e),
        };
        let comps = design::unflatten(&bounds.from_unit(&x)).map_err(at)?;
        let eval = analysis.evaluate(&comps).map_err(at)?;
        let (dc, dv) = analysis.gradients(&comps, &eval).map_err(at)?;
        let c0 = *scale.get_or_insert(eval.compliance.abs().max(f64::MIN_POSITIVE));

        let f = eval.compliance / c0;
        let df: Vec<f64> = bounds.gradient_to_unit(&dc).iter().map(|v| v / c0).collect();
        let g = eval.volume / budget - 1.0;
        let dg: Vec<f64> = bounds.gradient_to_unit(&dv).iter().map(|v| v / budget).collect();
        let next = mma_update(&x, f, &df, &[g], &[dg], &unit, &mut state, &settings).map_err(at)?;

        let change = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        let record = IterationRecord {
            iteration,
            compliance: eval.compliance,
            volume: eval.volume,
            volume_fraction: eval.volume / area,
            constraint_value: g,
            max_design_change: change,
        };
        history.push(record);
        let updated = design::unflatten(&bounds.from_unit(&x)).map_err(at)?;
        observer(&record, &updated).map_err(at)?;
        if g <= config.optimizer.feasibility_tol {
            last_feasible = Some((iteration, comps.clone(), eval.compliance, eval.volume));
        }
        last = Some((iteration, comps, eval.compliance, eval.volume));

        if change < config.optimizer.convergence_tol {
            streak += 1;
            if streak >= CONVERGENCE_STREAK {
                converged = true;
                break;
            }
        } else {
            streak = 0;
        }
    }

    // The reported design is the most recent analyzed iterate that meets the
    // volume constraint, so the result always matches a history row. Without
    // convergence the iterates oscillate about the constraint boundary.
    let feasible = last_feasible.is_some();
    let (final_iteration, components, compliance, volume) = last_feasible
        .or(last)
        .ok_or_else(|| Error::InvalidDesign("max_iterations must be at least 1".into()))?;
    Ok(RunResult {
        components,
        history,
        final_compliance: compliance,
        final_volume: volume,
        final_volume_fraction: volume / area,
        final_iteration,
        feasible,
        converged,
        design_variable_count: n,
    })
}

/// Runs the configured problem from its default initial layout and writes
/// the configured artifacts.
pub fn run_optimization(config: &RunConfig) -> Result<RunResult> {
    let analysis = Analysis::new(config)?;
    let initial = initial_design(config, &analysis)?;
    run_from(config, &analysis, initial)
}

/// Like [`run_optimization`] with an explicit initial design.
pub fn run_from(
    config: &RunConfig,
    analysis: &Analysis,
    initial: Vec<Component>,
) -> Result<RunResult> {
    let out = &config.output;
    let wants_files = out.history || out.components || out.contour || out.cad || out.snapshot_every > 0;
    if wants_files {
        fs::create_dir_all(&out.dir)
            .map_err(|e| Error::Io(format!("{}: {e}", out.dir.display())))?;
    }
    let every = out.snapshot_every;
    let result = optimize(config, analysis, initial, |rec, comps| {
        if every > 0 && rec.iteration % every == 0 {
            let path = out.dir.join(format!("snapshot_{:04}.svg", rec.iteration));
            export_contour_svg(&path, comps, &analysis.mesh, analysis.reg.n_exp)?;
        }
        Ok(())
    })?;
    write_artifacts(config, analysis, &result, &out.dir)?;
    Ok(result)
}

/// Writes history, component table and plots as configured.
pub fn write_artifacts(
    config: &RunConfig,
    analysis: &Analysis,
    result: &RunResult,
    dir: &Path,
) -> Result<()> {
    let out = &config.output;
    if out.history {
        export_history_csv(&dir.join("history.csv"), &result.history)?;
    }
    if out.components {
        export_component_table(&dir.join("components.csv"), &result.components)?;
    }
    if out.contour {
        export_contour_svg(
            &dir.join("contour.svg"),
            &result.components,
            &analysis.mesh,
            analysis.reg.n_exp,
        )?;
    }
    if out.cad {
        export_cad_svg(
            &dir.join("cad.svg"),
            &result.components,
            analysis.spec.width,
            analysis.spec.height,
            out.cad_threshold,
        )?;
    }
    Ok(())
}

/// Random components well inside the domain of `spec`.
pub fn random_design(spec: &ProblemSpec, count: usize, seed: u64) -> Vec<Component> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (spec.width, spec.height);
    let short = w.min(h);
    (0..count)
        .map(|_| {
            Component::new(
                rng.random_range(0.25 * w..0.75 * w),
                rng.random_range(0.25 * h..0.75 * h),
                rng.random_range(0.4 * short..0.9 * short),
                rng.random_range(0.1 * short..0.25 * short),
                rng.random_range(-0.8..0.8),
            )
        })
        .collect()
}

/// Seeded random chain of `count` overlapping components running from a
/// supported point to the first load, through randomly jittered waypoints.
///
/// Unlike [`random_design`] the structure carries the load, so compliance is
/// dominated by the components rather than the weak void material.
pub fn random_connected_design(spec: &ProblemSpec, count: usize, seed: u64) -> Vec<Component> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (spec.width, spec.height);
    let short = w.min(h);
    let start = match spec.supports {
        Supports::ClampedLeftEdge => Point::new(0.0, rng.random_range(0.25 * h..0.75 * h)),
        Supports::MbbHalf => Point::new(w, 0.0),
    };
    let end = spec
        .loads
        .first()
        .map_or(Point::new(w, 0.5 * h), |l| l.at);
    let jitter = 0.15 * short;
    let mut points = vec![start];
    for k in 1..count {
        let s = k as f64 / count as f64;
        let x = start.x + s * (end.x - start.x) + rng.random_range(-jitter..jitter);
        let y = start.y + s * (end.y - start.y) + rng.random_range(-jitter..jitter);
        points.push(Point::new(x.clamp(0.0, w), y.clamp(0.0, h)));
    }
    points.push(end);
    points
        .windows(2)
        .map(|seg| {
            let (a, b) = (seg[0], seg[1]);
            let t = rng.random_range(0.1 * short..0.2 * short);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len = dx.hypot(dy).max(T_MIN);
            // The component axis always points towards +x.
            let p = if dx >= 0.0 { dy / len } else { -dy / len };
            Component::new(
                0.5 * (a.x + b.x),
                0.5 * (a.y + b.y),
                len + t,
                t,
                p.clamp(-0.9, 0.9),
            )
        })
        .collect()
}

/// Analytic-versus-finite-difference comparison of both gradients.
#[derive(Debug, Clone)]
pub struct GradientCheck {
    pub components: Vec<Component>,
    pub analytic_compliance: Vec<f64>,
    pub fd_compliance: Vec<f64>,
    pub analytic_volume: Vec<f64>,
    pub fd_volume: Vec<f64>,
    pub max_rel_compliance: f64,
    pub max_rel_volume: f64,
}

impl GradientCheck {
    pub fn max_relative_error(&self) -> f64 {
        self.max_rel_compliance.max(self.max_rel_volume)
    }
}

/// Denominator floor of the relative gradient error.
pub const GRADCHECK_FLOOR: f64 = 1e-8;

/// Checks the gradients of `comps` against central differences.
pub fn gradient_check_design(
    analysis: &Analysis,
    comps: &[Component],
    step: f64,
    bounds: &Bounds,
) -> Result<GradientCheck> {
    let eval = analysis.evaluate(comps)?;
    let (dc, dv) = analysis.gradients(comps, &eval)?;
    let d = design::flatten(comps);
    let fd_c = finite_difference_oracle(
        |x| Ok(analysis.evaluate(&design::unflatten(x)?)?.compliance),
        &d,
        step,
        Some(bounds),
    )?;
    let fd_v = finite_difference_oracle(
        |x| {
            let comps = design::unflatten(x)?;
            Ok(volume(
                &element_densities(&comps, &analysis.mesh, &analysis.reg),
                &analysis.mesh,
            ))
        },
        &d,
        step,
        Some(bounds),
    )?;
    Ok(GradientCheck {
        components: comps.to_vec(),
        max_rel_compliance: max_relative_error(&dc, &fd_c, GRADCHECK_FLOOR),
        max_rel_volume: max_relative_error(&dv, &fd_v, GRADCHECK_FLOOR),
        analytic_compliance: dc,
        fd_compliance: fd_c,
        analytic_volume: dv,
        fd_volume: fd_v,
    })
}

/// Gradient check on the configured problem with a seeded random connected
/// design.
pub fn gradient_check(config: &RunConfig) -> Result<GradientCheck> {
    let analysis = Analysis::new(config)?;
    let comps = random_connected_design(&analysis.spec, config.gradcheck.components, config.seed);
    let bounds = analysis.spec.variable_bounds(comps.len(), 0.0)?;
    gradient_check_design(&analysis, &comps, config.gradcheck.step, &bounds)
}
