//! Elliptic solvers, capacity diagnostics and periodic homogenization on
//! irregular planar domains.

pub mod capacity;
pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod export;
pub mod geometry;
pub mod homogenize;
pub mod measures;
pub mod q1;
pub mod sparse;

pub use elliptic::{CoefficientField, FieldSolution};
pub use error::{Error, Result};
pub use geometry::{build_grid, DomainGrid, DomainSpec, NodeKind, Point};
pub use homogenize::{CellSolution, PeriodicCoefficient, PeriodicPreset};
pub use measures::{DensityFn, MeasureSpec, MorreyReport};
pub use sparse::{PreconditionerKind, SolverSettings};
pub use capacity::{BarrierReport, CapacityResult, CdcReport, CondenserSpec, HardyReport, PerfectnessReport, VdcReport};
pub use experiments::{HoelderReport, HoelderStudy, RadialReport, RateReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
