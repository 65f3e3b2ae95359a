//! Beable trajectories for optimally controlled few-level quantum systems.
//!
//! The crate propagates a finite-level system under a shaped field in the
//! interaction picture, unravels the dynamics into Bell's stochastic jump
//! trajectories over the level basis, reduces trajectory ensembles to
//! mechanism observables (pathways, jump moments, correlations), generates
//! optimal fields by adjoint gradient ascent, and extracts the minimum and
//! mean jump counts from amplitude-modulation data alone.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod field;
pub mod io;
pub mod linalg;
pub mod mechanism;
pub mod optimizer;
pub mod propagator;
pub mod sampler;
pub mod svg;
pub mod system;

pub use error::{Error, Result};
pub use exec::Workers;
pub use field::{Carrier, ControlField, Interpolation};
pub use propagator::{propagate, Propagation, QuantumState, StepOperator};
pub use system::LevelSystem;
