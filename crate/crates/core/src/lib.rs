//! Structural topology optimization with moving deformable components.
//!
//! A structure is the union of overlapping rectangular components, each
//! described by five parameters: center, length, thickness and the sine of
//! its inclination. Components are embedded in a fixed finite element grid
//! through a smoothed Heaviside of their level-set functions; compliance is
//! minimized under a volume constraint with the Method of Moving Asymptotes.
//!
//! ```no_run
//! use mdc::config::{RunConfig, ProblemKind};
//!
//! let config = RunConfig::defaults(ProblemKind::ShortBeamA);
//! let result = mdc::driver::run_optimization(&config).unwrap();
//! println!("compliance {}", result.final_compliance);
//! ```

pub mod config;
pub mod contour;
pub mod design;
pub mod driver;
pub mod error;
pub mod export;
pub mod fem;
pub mod geometry;
pub mod mma;
pub mod problems;
pub mod sensitivity;

pub use config::{parse_config, ConfigError, ProblemKind, RunConfig};
pub use driver::{run_optimization, RunResult};
pub use error::{Error, Result};
pub use export::IterationRecord;
pub use fem::{FemSolution, Material, Mesh};
pub use geometry::{Component, FieldSample, Point, Regularization};
pub use mma::{Bounds, MmaState};
pub use problems::ProblemSpec;
