//! Solve-and-measure study: Hölder seminorms of `u` against the
//! Morrey norm of the data.

use serde::{Deserialize, Serialize};

use crate::elliptic::{solve_dirichlet, CoefficientField, FieldSolution};
use crate::error::{Error, Result};
use crate::experiments::hoelder::{hoelder_seminorm, FitRange, HoelderReport};
use crate::geometry::DomainGrid;
use crate::measures::{morrey_norm, MeasureSpec, MorreyReport};
use crate::sparse::SolverSettings;

/// Default ladder of probed exponents `α₀`.
pub const DEFAULT_ALPHA0: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoelderStudy {
    pub solution: FieldSolution,
    pub morrey: MorreyReport,
    pub lambda: f64,
    /// One report per probed `α₀`, in ladder order.
    pub reports: Vec<HoelderReport>,
    /// `[u]_{α₀} / (⦀μ⦀_α / λ)` per `α₀`.
    pub ratios: Vec<f64>,
}

pub fn hoelder_estimate_study(
    grid: &DomainGrid,
    a: &CoefficientField,
    mu: &MeasureSpec,
    alpha: f64,
    alpha0: &[f64],
    fit: Option<FitRange>,
    settings: &SolverSettings,
) -> Result<HoelderStudy> {
    let morrey = morrey_norm(mu, grid, alpha)?;
    if morrey.divergent {
        return Err(Error::InvalidParams(format!("the data has divergent Morrey norm at alpha = {alpha}")));
    }
    if alpha0.is_empty() {
        return Err(Error::InvalidParams("no exponents to probe".into()));
    }
    let solution = solve_dirichlet(grid, a, mu, settings)?;
    let reports = alpha0.iter().map(|&a0| hoelder_seminorm(&solution.values, grid, a0, fit)).collect::<Result<Vec<_>>>()?;
    let scale = morrey.norm / a.lambda;
    let ratios = reports.iter().map(|r| if scale > 0.0 { r.seminorm / scale } else { 0.0 }).collect();
    Ok(HoelderStudy { solution, morrey, lambda: a.lambda, reports, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec};

    #[test]
    fn ratio_invariant_under_data_and_coefficient_scaling() {
        let grid = build_grid(&DomainSpec::UnitSquare, 32).unwrap();
        let a = CoefficientField::identity(&grid);
        let s = SolverSettings::with_tol(1e-10);
        let one = hoelder_estimate_study(&grid, &a, &MeasureSpec::constant_density(1.0), 1.0, &[0.5], None, &s).unwrap();
        let two = hoelder_estimate_study(&grid, &a, &MeasureSpec::constant_density(2.0), 1.0, &[0.5], None, &s).unwrap();
        assert!((one.ratios[0] - two.ratios[0]).abs() < 1e-9 * one.ratios[0]);
        let stiff = hoelder_estimate_study(&grid, &a.scaled(2.0), &MeasureSpec::constant_density(1.0), 1.0, &[0.5], None, &s).unwrap();
        assert!((stiff.reports[0].seminorm * 2.0 - one.reports[0].seminorm).abs() < 1e-10 * one.reports[0].seminorm);
        assert!((stiff.ratios[0] - one.ratios[0]).abs() < 1e-9 * one.ratios[0]);
    }

    #[test]
    fn divergent_data_rejected() {
        let grid = build_grid(&DomainSpec::UnitSquare, 64).unwrap();
        let a = CoefficientField::identity(&grid);
        let mu = MeasureSpec::point_mass([0.5, 0.5], 1.0);
        assert!(hoelder_estimate_study(&grid, &a, &mu, 0.5, &[0.5], None, &SolverSettings::default()).is_err());
    }
}
