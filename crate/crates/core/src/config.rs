//! Run configuration in a flat `key = value` text format.
//!
//! One assignment per line, `#` starts a comment, and keys carry dotted
//! section prefixes such as `optimizer.move_limit_fraction`. Absent keys take
//! their defaults; unknown keys are rejected.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{Point, Regularization, P_MAX};
use crate::problems::{
    mbb_problem, short_beam_problem, PointLoad, ProblemSpec, ShortBeamLoad, Supports,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: malformed line {text:?} (expected `key = value`)")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}`: {message}")]
    InvalidValue {
        line: usize,
        key: String,
        message: String,
    },
    #[error("line {line}: `{key}` out of range: {message}")]
    OutOfRange {
        line: usize,
        key: String,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    ShortBeamA,
    ShortBeamB,
    Mbb,
    Custom,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::ShortBeamA => "short_beam_a",
            ProblemKind::ShortBeamB => "short_beam_b",
            ProblemKind::Mbb => "mbb",
            ProblemKind::Custom => "custom",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "short_beam_a" => Some(ProblemKind::ShortBeamA),
            "short_beam_b" => Some(ProblemKind::ShortBeamB),
            "mbb" => Some(ProblemKind::Mbb),
            "custom" => Some(ProblemKind::Custom),
            _ => None,
        }
    }

    /// Default crossed-pair grid of the problem.
    pub fn default_cells(&self) -> (usize, usize) {
        match self {
            ProblemKind::Mbb => (6, 2),
            _ => (4, 2),
        }
    }
}

/// Fields of a user-defined rectangular problem with one point load.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomProblem {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub supports: Supports,
    pub load_x: f64,
    pub load_y: f64,
    pub force_x: f64,
    pub force_y: f64,
    pub volume_fraction: f64,
}

impl Default for CustomProblem {
    fn default() -> Self {
        Self {
            width: 2.0,
            height: 1.0,
            nx: 20,
            ny: 10,
            supports: Supports::ClampedLeftEdge,
            load_x: 2.0,
            load_y: 0.5,
            force_x: 0.0,
            force_y: -1.0,
            volume_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationConfig {
    pub n_exp: u32,
    /// Heaviside half-bandwidth in multiples of the element size.
    pub epsilon_factor: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialConfig {
    pub e: f64,
    pub nu: f64,
    /// Stiffness ratio of fully void elements.
    pub void_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Move limit as a fraction of each variable's bound range.
    pub move_limit_fraction: f64,
    /// Largest normalized design change counted as converged.
    pub convergence_tol: f64,
    /// Largest relative volume excess `V/V̄ - 1` of a reportable design.
    pub feasibility_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub cells_x: usize,
    pub cells_y: usize,
    pub angle_p: f64,
    /// Initial material volume as a multiple of the budget, in `[0.8, 1.2]`.
    pub volume_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub history: bool,
    pub components: bool,
    pub contour: bool,
    pub cad: bool,
    /// Components thinner than this are left out of the CAD plot.
    pub cad_threshold: f64,
    /// Write contour snapshots every this many iterations; 0 disables.
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckConfig {
    pub components: usize,
    /// Finite-difference step as a fraction of each variable's range.
    pub step: f64,
}

/// Complete configuration of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub custom: CustomProblem,
    pub regularization: RegularizationConfig,
    pub material: MaterialConfig,
    pub optimizer: OptimizerConfig,
    pub initial: InitialConfig,
    pub output: OutputConfig,
    pub gradcheck: GradcheckConfig,
    /// Seed of the random designs used by `gradcheck`.
    pub seed: u64,
}

impl RunConfig {
    pub fn defaults(problem: ProblemKind) -> Self {
        let (cells_x, cells_y) = problem.default_cells();
        Self {
            problem,
            custom: CustomProblem::default(),
            regularization: RegularizationConfig {
                n_exp: 6,
                epsilon_factor: 2.0,
                alpha: 1e-3,
            },
            material: MaterialConfig {
                e: 1.0,
                nu: 0.3,
                void_scale: 1e-3,
            },
            optimizer: OptimizerConfig {
                max_iterations: 150,
                move_limit_fraction: 0.02,
                convergence_tol: 1e-3,
                feasibility_tol: 1e-3,
            },
            initial: InitialConfig {
                cells_x,
                cells_y,
                angle_p: std::f64::consts::FRAC_1_SQRT_2,
                volume_factor: 1.0,
            },
            output: OutputConfig {
                dir: PathBuf::from("output"),
                history: true,
                components: true,
                contour: true,
                cad: true,
                cad_threshold: 0.0,
                snapshot_every: 0,
            },
            gradcheck: GradcheckConfig {
                components: 3,
                step: 1e-5,
            },
            seed: 0,
        }
    }

    /// The problem this configuration describes.
    pub fn problem_spec(&self) -> ProblemSpec {
        match self.problem {
            ProblemKind::ShortBeamA => short_beam_problem(ShortBeamLoad::A),
            ProblemKind::ShortBeamB => short_beam_problem(ShortBeamLoad::B),
            ProblemKind::Mbb => mbb_problem(),
            ProblemKind::Custom => {
                let c = &self.custom;
                ProblemSpec {
                    width: c.width,
                    height: c.height,
                    nx: c.nx,
                    ny: c.ny,
                    supports: c.supports,
                    loads: vec![PointLoad {
                        at: Point::new(c.load_x, c.load_y),
                        force: [c.force_x, c.force_y],
                    }],
                    volume_fraction_max: c.volume_fraction,
                    symmetry: None,
                }
            }
        }
    }

    /// Regularization for a mesh with element size `h`.
    pub fn regularization(&self, h: f64) -> crate::Result<Regularization> {
        let r = &self.regularization;
        Regularization::new(r.n_exp, r.epsilon_factor * h, r.alpha)
    }

    /// Writes the configuration with every key explicit.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        for (key, value) in self.entries() {
            let _ = writeln!(s, "{key} = {value}");
        }
        s
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let c = &self.custom;
        let r = &self.regularization;
        let m = &self.material;
        let o = &self.optimizer;
        let i = &self.initial;
        let out = &self.output;
        vec![
            ("problem", self.problem.name().to_string()),
            ("custom.width", c.width.to_string()),
            ("custom.height", c.height.to_string()),
            ("custom.nx", c.nx.to_string()),
            ("custom.ny", c.ny.to_string()),
            ("custom.supports", c.supports.name().to_string()),
            ("custom.load_x", c.load_x.to_string()),
            ("custom.load_y", c.load_y.to_string()),
            ("custom.force_x", c.force_x.to_string()),
            ("custom.force_y", c.force_y.to_string()),
            ("custom.volume_fraction", c.volume_fraction.to_string()),
            ("regularization.n_exp", r.n_exp.to_string()),
            ("regularization.epsilon_factor", r.epsilon_factor.to_string()),
            ("regularization.alpha", r.alpha.to_string()),
            ("material.e", m.e.to_string()),
            ("material.nu", m.nu.to_string()),
            ("material.void_scale", m.void_scale.to_string()),
            ("optimizer.max_iterations", o.max_iterations.to_string()),
            ("optimizer.move_limit_fraction", o.move_limit_fraction.to_string()),
            ("optimizer.convergence_tol", o.convergence_tol.to_string()),
            ("optimizer.feasibility_tol", o.feasibility_tol.to_string()),
            ("initial.cells_x", i.cells_x.to_string()),
            ("initial.cells_y", i.cells_y.to_string()),
            ("initial.angle_p", i.angle_p.to_string()),
            ("initial.volume_factor", i.volume_factor.to_string()),
            ("output.dir", out.dir.display().to_string()),
            ("output.history", out.history.to_string()),
            ("output.components", out.components.to_string()),
            ("output.contour", out.contour.to_string()),
            ("output.cad", out.cad.to_string()),
            ("output.cad_threshold", out.cad_threshold.to_string()),
            ("output.snapshot_every", out.snapshot_every.to_string()),
            ("gradcheck.components", self.gradcheck.components.to_string()),
            ("gradcheck.step", self.gradcheck.step.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse().map_err(|_| ConfigError::InvalidValue {
        line,
        key: key.to_string(),
        message: format!("cannot parse {raw:?}"),
    })
}

fn range_err(line: usize, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::OutOfRange {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

/// Parses configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut pairs: Vec<(usize, String, String)> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError::Malformed {
                line,
                text: raw.to_string(),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() || k.contains(char::is_whitespace) {
            return Err(ConfigError::Malformed {
                line,
                text: raw.to_string(),
            });
        }
        if seen.insert(k.to_string(), line).is_some() {
            return Err(ConfigError::Duplicate {
                line,
                key: k.to_string(),
            });
        }
        pairs.push((line, k.to_string(), v.to_string()));
    }

    let problem = match pairs.iter().find(|(_, k, _)| k == "problem") {
        Some((line, key, v)) => ProblemKind::from_name(v).ok_or_else(|| ConfigError::InvalidValue {
            line: *line,
            key: key.clone(),
            message: format!("unknown problem {v:?} (short_beam_a, short_beam_b, mbb, custom)"),
        })?,
        None => ProblemKind::ShortBeamA,
    };
    let mut cfg = RunConfig::defaults(problem);

    for (line, key, raw) in &pairs {
        let (line, key, raw) = (*line, key.as_str(), raw.as_str());
        let c = &mut cfg;
        match key {
            "problem" => {}
            "custom.width" => c.custom.width = value(line, key, raw)?,
            "custom.height" => c.custom.height = value(line, key, raw)?,
            "custom.nx" => c.custom.nx = value(line, key, raw)?,
            "custom.ny" => c.custom.ny = value(line, key, raw)?,
            "custom.supports" => {
                c.custom.supports =
                    Supports::from_name(raw).ok_or_else(|| ConfigError::InvalidValue {
                        line,
                        key: key.to_string(),
                        message: format!("unknown supports {raw:?} (clamped_left_edge, mbb_half)"),
                    })?
            }
            "custom.load_x" => c.custom.load_x = value(line, key, raw)?,
            "custom.load_y" => c.custom.load_y = value(line, key, raw)?,
            "custom.force_x" => c.custom.force_x = value(line, key, raw)?,
            "custom.force_y" => c.custom.force_y = value(line, key, raw)?,
            "custom.volume_fraction" => c.custom.volume_fraction = value(line, key, raw)?,
            "regularization.n_exp" => c.regularization.n_exp = value(line, key, raw)?,
            "regularization.epsilon_factor" => {
                c.regularization.epsilon_factor = value(line, key, raw)?
            }
            "regularization.alpha" => c.regularization.alpha = value(line, key, raw)?,
            "material.e" => c.material.e = value(line, key, raw)?,
            "material.nu" => c.material.nu = value(line, key, raw)?,
            "material.void_scale" => c.material.void_scale = value(line, key, raw)?,
            "optimizer.max_iterations" => c.optimizer.max_iterations = value(line, key, raw)?,
            "optimizer.move_limit_fraction" => {
                c.optimizer.move_limit_fraction = value(line, key, raw)?
            }
            "optimizer.convergence_tol" => c.optimizer.convergence_tol = value(line, key, raw)?,
            "optimizer.feasibility_tol" => c.optimizer.feasibility_tol = value(line, key, raw)?,
            "initial.cells_x" => c.initial.cells_x = value(line, key, raw)?,
            "initial.cells_y" => c.initial.cells_y = value(line, key, raw)?,
            "initial.angle_p" => c.initial.angle_p = value(line, key, raw)?,
            "initial.volume_factor" => c.initial.volume_factor = value(line, key, raw)?,
            "output.dir" => c.output.dir = PathBuf::from(raw),
            "output.history" => c.output.history = value(line, key, raw)?,
            "output.components" => c.output.components = value(line, key, raw)?,
            "output.contour" => c.output.contour = value(line, key, raw)?,
            "output.cad" => c.output.cad = value(line, key, raw)?,
            "output.cad_threshold" => c.output.cad_threshold = value(line, key, raw)?,
            "output.snapshot_every" => c.output.snapshot_every = value(line, key, raw)?,
            "gradcheck.components" => c.gradcheck.components = value(line, key, raw)?,
            "gradcheck.step" => c.gradcheck.step = value(line, key, raw)?,
            "seed" => c.seed = value(line, key, raw)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }
    let line_of = |k: &str| seen.get(k).copied().unwrap_or(0);
    validate(&cfg, &line_of)?;
    Ok(cfg)
}

fn validate(c: &RunConfig, line_of: &dyn Fn(&str) -> usize) -> Result<(), ConfigError> {
    let check = |ok: bool, key: &str, msg: &str| -> Result<(), ConfigError> {
        if ok {
            Ok(())
        } else {
            Err(range_err(line_of(key), key, msg))
        }
    };
    let cu = &c.custom;
    check(cu.width > 0.0, "custom.width", "must be positive")?;
    check(cu.height > 0.0, "custom.height", "must be positive")?;
    check(cu.nx >= 1, "custom.nx", "must be at least 1")?;
    check(cu.ny >= 1, "custom.ny", "must be at least 1")?;
    check(
        (0.0..=cu.width).contains(&cu.load_x),
        "custom.load_x",
        "must lie inside the domain",
    )?;
    check(
        (0.0..=cu.height).contains(&cu.load_y),
        "custom.load_y",
        "must lie inside the domain",
    )?;
    check(cu.force_x.is_finite(), "custom.force_x", "must be finite")?;
    check(cu.force_y.is_finite(), "custom.force_y", "must be finite")?;
    check(
        cu.volume_fraction > 0.0 && cu.volume_fraction < 1.0,
        "custom.volume_fraction",
        "must lie in (0, 1)",
    )?;
    if c.problem == ProblemKind::Custom {
        let hx = cu.width / cu.nx as f64;
        let hy = cu.height / cu.ny as f64;
        check(
            (hx - hy).abs() <= 1e-9 * hx.max(hy),
            "custom.nx",
            "width/nx must equal height/ny (square elements)",
        )?;
    }
    let r = &c.regularization;
    check(
        r.n_exp >= 2 && r.n_exp.is_multiple_of(2) && r.n_exp <= 64,
        "regularization.n_exp",
        "must be an even integer in [2, 64]",
    )?;
    check(
        r.epsilon_factor > 0.0 && r.epsilon_factor.is_finite(),
        "regularization.epsilon_factor",
        "must be positive",
    )?;
    check(
        r.alpha > 0.0 && r.alpha <= 0.01,
        "regularization.alpha",
        "must lie in (0, 0.01]",
    )?;
    let m = &c.material;
    check(m.e > 0.0 && m.e.is_finite(), "material.e", "must be positive")?;
    check(m.nu > -1.0 && m.nu < 0.5, "material.nu", "must lie in (-1, 0.5)")?;
    check(
        m.void_scale > 0.0 && m.void_scale < 1.0,
        "material.void_scale",
        "must lie in (0, 1)",
    )?;
    let o = &c.optimizer;
    check(o.max_iterations >= 1, "optimizer.max_iterations", "must be at least 1")?;
    check(
        (0.0..=1.0).contains(&o.move_limit_fraction),
        "optimizer.move_limit_fraction",
        "must lie in [0, 1]",
    )?;
    check(
        o.convergence_tol > 0.0 && o.convergence_tol.is_finite(),
        "optimizer.convergence_tol",
        "must be positive",
    )?;
    check(
        o.feasibility_tol >= 0.0 && o.feasibility_tol.is_finite(),
        "optimizer.feasibility_tol",
        "must be non-negative",
    )?;
    let i = &c.initial;
    check(i.cells_x >= 1, "initial.cells_x", "must be at least 1")?;
    check(i.cells_y >= 1, "initial.cells_y", "must be at least 1")?;
    check(
        i.angle_p.abs() <= P_MAX,
        "initial.angle_p",
        "magnitude must not exceed 0.995",
    )?;
    check(
        (0.8..=1.2).contains(&i.volume_factor),
        "initial.volume_factor",
        "must lie in [0.8, 1.2]",
    )?;
    check(
        c.output.cad_threshold >= 0.0 && c.output.cad_threshold.is_finite(),
        "output.cad_threshold",
        "must be nonnegative",
    )?;
    check(
        !c.output.dir.as_os_str().is_empty(),
        "output.dir",
        "must not be empty",
    )?;
    check(c.gradcheck.components >= 1, "gradcheck.components", "must be at least 1")?;
    check(
        c.gradcheck.step > 0.0 && c.gradcheck.step < 0.1,
        "gradcheck.step",
        "must lie in (0, 0.1)",
    )?;
    Ok(())
}
