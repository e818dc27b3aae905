//! Scenario-file front end for `quasitraj-core`.

pub mod catalog;
pub mod run;
pub mod scenario;

pub use catalog::{example, UnknownExample};
pub use run::{run, RunError, RunReport};
pub use scenario::{ConfigError, Scenario};
