//! ε-sweeps comparing `u_ε` with the homogenized solution, and the
//! first-order two-scale expansion.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::{solve_dirichlet, CoefficientField, FieldSolution};
use crate::error::{Error, Result};
use crate::experiments::hoelder::least_squares;
use crate::geometry::{build_grid_with_spacing, DomainGrid, DomainSpec};
use crate::homogenize::{oscillating_coefficient, solve_cell, CellSolution, PeriodicCoefficient};
use crate::measures::MeasureSpec;
use crate::q1::Mat2;
use crate::sparse::SolverSettings;

/// Below this many cells per period a sweep is refused.
pub const MIN_CELLS_PER_PERIOD: f64 = 8.0;

/// A sweep needs at least this many ε values.
pub const MIN_EPSILONS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    /// Cells per period of every `u_ε` grid (`h = ε / cells_per_period`).
    pub cells_per_period: usize,
    /// Spacing of the comparison node set; the reference `u₀` is
    /// extrapolated from spacings `h/2` and `h/4`.
    pub reference_h: f64,
    pub settings: SolverSettings,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions { cells_per_period: 16, reference_h: 1.0 / 128.0, settings: SolverSettings::with_tol(1e-10) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub epsilons: Vec<f64>,
    /// `max |u_ε − u₀|` over the comparison nodes.
    pub sup_errors: Vec<f64>,
    pub fitted_rate: f64,
    /// `exp(intercept)` of the fit.
    pub constant: f64,
    /// Same maximum restricted to `Ω_√ε` and to its complement.
    pub interior_errors: Vec<f64>,
    pub boundary_layer_errors: Vec<f64>,
    /// `‖u_ε − u₀‖` and `‖w_ε‖` on `Ω_√ε`, both against `u₀` solved on
    /// the `u_ε` grid.
    pub uncorrected_interior: Vec<f64>,
    pub corrected_interior: Vec<f64>,
    pub corrected_rate: f64,
    pub uncorrected_rate: f64,
    /// `max |u_{h/4} − u_ref|` on the comparison nodes.
    pub discretization_floor: f64,
    /// Whether the first point was left out of the fit.
    pub dropped_first: bool,
    #[serde(rename = "A0")]
    pub a0: Mat2,
    pub cells_per_period: usize,
    pub strictly_decreasing: bool,
    /// Decreasing up to a 10% slack per step.
    pub monotone: bool,
}

/// `w_ε = u_ε − u₀ − ε Σ χ_i(x/ε) ∂_i u₀` on the interior nodes (zero
/// elsewhere), with centred differences for `∇u₀`.
pub fn first_order_expansion(u_eps: &FieldSolution, u0: &FieldSolution, cell: &CellSolution, epsilon: f64, grid: &DomainGrid) -> Result<Vec<f64>> {
    let n = grid.node_count();
    if u_eps.values.len() != n || u0.values.len() != n {
        return Err(Error::DimensionMismatch(format!("fields have {} and {} values for {n} nodes", u_eps.values.len(), u0.values.len())));
    }
    let w = grid.nx + 1;
    let u = &u0.values;
    let diff = |i: usize, j: usize, axis: usize| -> f64 {
        let (len, pos) = if axis == 0 { (grid.nx, i) } else { (grid.ny, j) };
        let at = |p: usize| if axis == 0 { u[j * w + p] } else { u[p * w + i] };
        match (pos > 0, pos < len) {
            (true, true) => (at(pos + 1) - at(pos - 1)) / (2.0 * grid.h),
            (false, true) => (at(pos + 1) - at(pos)) / grid.h,
            (true, false) => (at(pos) - at(pos - 1)) / grid.h,
            (false, false) => 0.0,
        }
    };
    Ok((0..n)
        .into_par_iter()
        .map(|k| {
            if !grid.is_interior(k) {
                return 0.0;
            }
            let (i, j) = grid.ij(k);
            let x = grid.coords(k);
            let y = [x[0] / epsilon, x[1] / epsilon];
            let corr = cell.chi_at(0, y) * diff(i, j, 0) + cell.chi_at(1, y) * diff(i, j, 1);
            u_eps.values[k] - u0.values[k] - epsilon * corr
        })
        .collect())
}

fn check_sweep(epsilons: &[f64], opts: &RateOptions) -> Result<()> {
    if epsilons.len() < MIN_EPSILONS {
        return Err(Error::InvalidParams(format!("eps_list requires ≥ {MIN_EPSILONS} values")));
    }
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(Error::InvalidParams(format!("epsilon must lie in (0, 1], got {e}")));
    }
    let cpp = opts.cells_per_period as f64;
    if cpp < MIN_CELLS_PER_PERIOD {
        return Err(Error::UnderResolved { epsilon: epsilons[0], cells_per_period: cpp });
    }
    if !(opts.reference_h > 0.0) {
        return Err(Error::InvalidParams(format!("reference spacing must be positive, got {}", opts.reference_h)));
    }
    Ok(())
}

fn fit(epsilons: &[f64], errors: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = epsilons.iter().zip(errors).filter(|(_, e)| **e > 0.0).map(|(x, e)| (x.ln(), e.ln())).collect();
    if pts.len() < 2 {
        return (0.0, 0.0);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (a, b) = least_squares(&xs, &ys);
    (b, a.exp())
}

struct EpsilonRun {
    sup: f64,
    interior: f64,
    layer: f64,
    uncorrected: f64,
    corrected: f64,
}

/// Sweeps `ε`, comparing `u_ε` (solved with `A(x/ε)` at
/// `h = ε / cells_per_period`) against a Richardson-extrapolated `u₀`.
/// The homogenized tensor is taken from the cell problem at
/// `cells_per_period`, which is the discrete limit of the `u_ε` grids.
pub fn convergence_study(spec: &DomainSpec, a: &PeriodicCoefficient, mu: &MeasureSpec, epsilons: &[f64], opts: &RateOptions) -> Result<RateReport> {
    check_sweep(epsilons, opts)?;
    mu.validate()?;
    let mut epsilons = epsilons.to_vec();
    epsilons.sort_by(|x, y| y.total_cmp(x));
    let cpp = opts.cells_per_period;
    let cell_coef = match &a.preset {
        Some(p) => PeriodicCoefficient::from_preset(p, cpp)?,
        None => a.clone(),
    };
    let cell = solve_cell(&cell_coef, &opts.settings, false)?;
    let a0 = cell.a0;

    let coarse = build_grid_with_spacing(spec, opts.reference_h)?;
    let solve_u0 = |grid: &DomainGrid| -> Result<FieldSolution> {
        let field = CoefficientField::constant(grid.nx, grid.ny, a0)?;
        solve_dirichlet(grid, &field, mu, &opts.settings)
    };
    let (half, quarter) = rayon::join(
        || build_grid_with_spacing(spec, opts.reference_h / 2.0).and_then(|g| solve_u0(&g)),
        || build_grid_with_spacing(spec, opts.reference_h / 4.0).and_then(|g| solve_u0(&g)),
    );
    let (half, quarter) = (half?, quarter?);
    let nodes = coarse.interior_nodes();
    let reference: Vec<f64> = nodes
        .iter()
        .map(|&k| {
            let x = coarse.coords(k);
            (4.0 * quarter.value_at(x) - half.value_at(x)) / 3.0
        })
        .collect();
    let discretization_floor = nodes.iter().zip(&reference).map(|(&k, r)| (quarter.value_at(coarse.coords(k)) - r).abs()).fold(0.0, f64::max);

    let runs: Vec<EpsilonRun> = epsilons
        .par_iter()
        .map(|&eps| -> Result<EpsilonRun> {
            let grid = build_grid_with_spacing(spec, eps / cpp as f64)?;
            let coef = oscillating_coefficient(a, eps, &grid)?;
            let u_eps = solve_dirichlet(&grid, &coef, mu, &opts.settings)?;
            let radius = eps.sqrt();
            let (mut sup, mut interior, mut layer) = (0.0f64, 0.0f64, 0.0f64);
            for (&k, r) in nodes.iter().zip(&reference) {
                let e = (u_eps.value_at(coarse.coords(k)) - r).abs();
                sup = sup.max(e);
                if coarse.delta[k] >= radius {
                    interior = interior.max(e);
                } else {
                    layer = layer.max(e);
                }
            }
            let u0 = solve_u0(&grid)?;
            let w = first_order_expansion(&u_eps, &u0, &cell, eps, &grid)?;
            let (mut uncorrected, mut corrected) = (0.0f64, 0.0f64);
            for k in grid.interior_nodes() {
                if grid.delta[k] >= radius {
                    uncorrected = uncorrected.max((u_eps.values[k] - u0.values[k]).abs());
                    corrected = corrected.max(w[k].abs());
                }
            }
            Ok(EpsilonRun { sup, interior, layer, uncorrected, corrected })
        })
        .collect::<Result<_>>()?;

    let sup_errors: Vec<f64> = runs.iter().map(|r| r.sup).collect();
    // the first point is pre-asymptotic when it sits within 3x the floor
    let dropped_first = sup_errors[0] <= 3.0 * discretization_floor && epsilons.len() > MIN_EPSILONS;
    let skip = usize::from(dropped_first);
    let (fitted_rate, constant) = fit(&epsilons[skip..], &sup_errors[skip..]);
    let uncorrected_interior: Vec<f64> = runs.iter().map(|r| r.uncorrected).collect();
    let corrected_interior: Vec<f64> = runs.iter().map(|r| r.corrected).collect();
    let strictly_decreasing = sup_errors.windows(2).all(|w| w[1] < w[0]);
    let monotone = sup_errors.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    Ok(RateReport {
        fitted_rate,
        constant,
        interior_errors: runs.iter().map(|r| r.interior).collect(),
        boundary_layer_errors: runs.iter().map(|r| r.layer).collect(),
        corrected_rate: fit(&epsilons, &corrected_interior).0,
        uncorrected_rate: fit(&epsilons, &uncorrected_interior).0,
        uncorrected_interior,
        corrected_interior,
        discretization_floor,
        dropped_first,
        a0,
        cells_per_period: cpp,
        strictly_decreasing,
        monotone,
        epsilons,
        sup_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogenize::PeriodicPreset;

    #[test]
    fn sweep_preconditions() {
        let a = PeriodicCoefficient::from_preset(&PeriodicPreset::layered(), 16).unwrap();
        let mu = MeasureSpec::constant_density(1.0);
        let err = convergence_study(&DomainSpec::UnitSquare, &a, &mu, &[0.5, 0.25], &RateOptions::default()).unwrap_err();
        assert_eq!(err, Error::InvalidParams("eps_list requires ≥ 4 values".into()));
        let opts = RateOptions { cells_per_period: 4, ..Default::default() };
        let err = convergence_study(&DomainSpec::UnitSquare, &a, &mu, &[0.5, 0.25, 0.125, 0.0625], &opts).unwrap_err();
        assert!(matches!(err, Error::UnderResolved { .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn constant_coefficient_gives_noise_only() {
        let a = PeriodicCoefficient::from_preset(&PeriodicPreset::Constant { matrix: [2.0, 0.0, 0.0, 2.0] }, 8).unwrap();
        let mu = MeasureSpec::constant_density(1.0);
        let opts = RateOptions { cells_per_period: 8, reference_h: 1.0 / 32.0, ..Default::default() };
        let rep = convergence_study(&DomainSpec::UnitSquare, &a, &mu, &[1.0, 0.5, 0.25, 0.125], &opts).unwrap();
        assert!(rep.sup_errors.iter().all(|e| *e < 1e-3), "{:?}", rep.sup_errors);
        assert!(rep.corrected_interior.iter().zip(&rep.uncorrected_interior).all(|(c, u)| (c - u).abs() < 1e-12));
    }
}
