//! Scenario runner for `orbitframe`: parses scenario files, runs the
//! certification and frame pipeline, and writes JSON/CSV reports.

pub mod bundled;
pub mod identities;
pub mod report;
pub mod runner;
pub mod scenario;

pub use bundled::{bundled, list_scenarios, BUNDLED};
pub use report::{Outcome, Report};
pub use runner::{run, RunOutput};
pub use scenario::{normalize, Scenario, ScenarioError};

/// Exit code for parse, I/O and setup errors.
pub const EXIT_INVALID: i32 = 1;

/// Loads a scenario from a path, falling back to a bundled name.
pub fn resolve(spec: &str) -> Result<Scenario, ScenarioError> {
    let path = std::path::Path::new(spec);
    if path.exists() {
        return Scenario::load(path);
    }
    match bundled(spec) {
        Some(s) => s,
        None => Scenario::load(path),
    }
}
