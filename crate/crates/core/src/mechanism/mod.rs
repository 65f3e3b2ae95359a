//! Mechanism identification from amplitude-modulation data.
//!
//! The optimal field is scaled by a constant M, the final target population
//! is recorded over a grid of M values, and two quantities are recovered
//! from that curve alone: the minimum jump count (from the small-M power
//! law) and the mean jump count (from fits of a truncated moment series
//! over a searched set of fit windows).

mod dataset;
mod fit;
mod jmin;
mod lm;
mod model;
mod search;

pub use dataset::{measure, simulate_measurement, sweep, Measurement, ModulationDataset, SweepConfig};
pub use fit::{lm_fit, FitOptions, FitResult, FitSpace, FitWindow};
pub use jmin::{estimate_jmin, JminEstimate};
pub use lm::{levenberg_marquardt, LmOptions, LmOutcome};
pub use model::{model_amplitude, model_population, ModelParams};
pub use search::{range_search, select_best, Exclusion, PathologicalRule, RangeReport, WindowCell, WindowGrid};
