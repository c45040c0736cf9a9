//! Shared fixtures for the benchmarks: the default layouts of the benchmark
//! problems, analyzed once.

use mdc::config::{ProblemKind, RunConfig};
use mdc::driver::{initial_design, Analysis, Evaluation};
use mdc::Component;

pub struct Fixture {
    pub config: RunConfig,
    pub analysis: Analysis,
    pub design: Vec<Component>,
    pub eval: Evaluation,
}

impl Fixture {
    pub fn new(kind: ProblemKind) -> Self {
        let config = RunConfig::defaults(kind);
        let analysis = Analysis::new(&config).expect("default configuration is valid");
        let design = initial_design(&config, &analysis).expect("default layout is valid");
        let eval = analysis.evaluate(&design).expect("default layout is solvable");
        Self {
            config,
            analysis,
            design,
            eval,
        }
    }
}
