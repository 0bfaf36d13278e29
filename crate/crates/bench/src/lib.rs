//! Shared fixtures for the benchmarks.

use cdch_core::{build_grid, DomainGrid, DomainSpec, MeasureSpec};

pub fn disk(resolution: usize) -> DomainGrid {
    build_grid(&DomainSpec::unit_disk(), resolution).expect("disk grid")
}

pub fn koch(level: usize, resolution: usize) -> DomainGrid {
    build_grid(&DomainSpec::koch(level), resolution).expect("koch grid")
}

pub fn unit_load() -> MeasureSpec {
    MeasureSpec::constant_density(1.0)
}
