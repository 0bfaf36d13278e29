//! Measurement studies built on the solvers.

pub mod hoelder;
pub mod radial;
pub mod rate;
pub mod study;

pub use hoelder::{hoelder_seminorm, HoelderReport};
pub use radial::{radial_example, RadialReport};
pub use rate::{convergence_study, first_order_expansion, RateOptions, RateReport};
pub use study::{hoelder_estimate_study, HoelderStudy};
