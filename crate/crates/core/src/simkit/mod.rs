//! Integration, closed-loop scenario execution, Monte Carlo campaigns and logs.

pub mod closed_loop;
pub mod integrate;
pub mod log;
pub mod scenario;

pub use closed_loop::CoupledState;
pub use scenario::{monte_carlo, run_scenario, McRun, PreparedScenario, RunOptions, ScenarioConfig};
