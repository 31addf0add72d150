//! Robustness workbench for stochastic parallel-machine schedules.

pub mod error;
pub mod experiment;
pub mod generate;
pub mod io;
pub mod lp;
pub mod measures;
pub mod model;
pub mod order;
pub mod rng;
pub mod simulate;
pub mod slack;
pub mod stats;
pub mod stochastic;
pub mod svg;

pub use error::{Error, Result};
pub use measures::{Measure, MeasureConfig, MeasureVector};
pub use model::{Deadlines, Instance, Job, Schedule, Violation};
pub use order::CombinedOrder;
pub use slack::SlackProfile;
pub use stochastic::{DistKind, DistributionSpec};
