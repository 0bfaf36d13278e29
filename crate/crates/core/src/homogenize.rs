//! Periodic cell problems, homogenized tensors, flux-corrector
//! potentials and oscillating coefficients `A(x/ε)`.
//!
//! The unit torus carries an `N × N` cell grid with nodes at `(i/N, j/N)`.
//! Coefficients are constant per cell; correctors are Q1 node fields.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::elliptic::{envelope, CoefficientField, ASYMMETRY_TOL};
use crate::error::{Error, Result};
use crate::experiments::hoelder::{hoelder_lattice, FitRange, HoelderReport, LatticeField};
use crate::geometry::{DomainGrid, Point};
use crate::q1::{midpoint_gradient, Lattice, Mat2};
use crate::sparse::{self, Jacobi, SolverSettings};

/// Analytic periodic coefficients on `Y = [0, 1)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PeriodicPreset {
    Constant { matrix: Mat2 },
    /// `(mean + amplitude · sin 2πy₁) I`.
    Layered {
        #[serde(default = "two")]
        mean: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `a I` on the squares centred at `(0,0)` and `(½,½)`, `b I` on the
    /// other two.
    Checkerboard { a: f64, b: f64 },
    /// `(mean + amplitude · sin 2πy₁ sin 2πy₂) I`.
    SmoothProduct {
        #[serde(default = "two")]
        mean: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn scalar(s: f64) -> Mat2 {
    [s, 0.0, 0.0, s]
}

impl PeriodicPreset {
    pub fn layered() -> Self {
        PeriodicPreset::Layered { mean: 2.0, amplitude: 1.0 }
    }

    pub fn checkerboard(a: f64, b: f64) -> Self {
        PeriodicPreset::Checkerboard { a, b }
    }

    /// `A(y)`; `y` is reduced modulo the period.
    pub fn eval(&self, y: Point) -> Mat2 {
        let (y1, y2) = (y[0].rem_euclid(1.0), y[1].rem_euclid(1.0));
        match *self {
            PeriodicPreset::Constant { matrix } => matrix,
            PeriodicPreset::Layered { mean, amplitude } => scalar(mean + amplitude * (2.0 * PI * y1).sin()),
            PeriodicPreset::Checkerboard { a, b } => {
                let parity = ((2.0 * y1 + 0.5).floor() + (2.0 * y2 + 0.5).floor()) as i64;
                scalar(if parity.rem_euclid(2) == 0 { a } else { b })
            }
            PeriodicPreset::SmoothProduct { mean, amplitude } => {
                scalar(mean + amplitude * (2.0 * PI * y1).sin() * (2.0 * PI * y2).sin())
            }
        }
    }

    /// Exact `(λ, L)` of the continuous coefficient.
    pub fn envelope(&self) -> Result<(f64, f64)> {
        let (lo, hi) = match *self {
            PeriodicPreset::Constant { matrix } => envelope(&matrix),
            PeriodicPreset::Layered { mean, amplitude } | PeriodicPreset::SmoothProduct { mean, amplitude } => {
                (mean - amplitude.abs(), mean + amplitude.abs())
            }
            PeriodicPreset::Checkerboard { a, b } => (a.min(b), a.max(b)),
        };
        if !(lo > 0.0) || !hi.is_finite() {
            return Err(Error::InvalidParams(format!("periodic coefficient is not uniformly elliptic (lambda = {lo})")));
        }
        Ok((lo, hi))
    }
}

/// Per-cell coefficient on the `N × N` torus grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicCoefficient {
    pub n: usize,
    pub values: Vec<Mat2>,
    pub lambda: f64,
    #[serde(rename = "L")]
    pub big_l: f64,
    pub symmetric: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<PeriodicPreset>,
}

/// Default torus resolution.
pub const DEFAULT_CELL_RESOLUTION: usize = 256;

impl PeriodicCoefficient {
    pub fn from_preset(preset: &PeriodicPreset, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidParams(format!("torus resolution {n} is below 4")));
        }
        if matches!(preset, PeriodicPreset::Checkerboard { .. }) && n % 4 != 0 {
            return Err(Error::InvalidParams(format!("checkerboard needs a torus resolution divisible by 4, got {n}")));
        }
        let (lambda, big_l) = preset.envelope()?;
        let h = 1.0 / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for cj in 0..n {
            for ci in 0..n {
                values.push(preset.eval([(ci as f64 + 0.5) * h, (cj as f64 + 0.5) * h]));
            }
        }
        let mut coef = Self::with_envelope(n, values, lambda, big_l)?;
        coef.preset = Some(preset.clone());
        Ok(coef)
    }

    /// Coefficient with the tightest envelope of the given cell values.
    pub fn from_values(n: usize, values: Vec<Mat2>) -> Result<Self> {
        let field = CoefficientField::from_values(n, n, values)?;
        Ok(PeriodicCoefficient {
            n,
            values: field.values,
            lambda: field.lambda,
            big_l: field.big_l,
            symmetric: field.symmetric,
            preset: None,
        })
    }

    fn with_envelope(n: usize, values: Vec<Mat2>, lambda: f64, big_l: f64) -> Result<Self> {
        let field = CoefficientField::from_values(n, n, values)?.with_envelope(lambda, big_l)?;
        Ok(PeriodicCoefficient { n, values: field.values, lambda, big_l, symmetric: field.symmetric, preset: None })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// `A` at a point of the torus: the preset when known, otherwise the
    /// containing cell.
    pub fn at(&self, y: Point) -> Mat2 {
        if let Some(p) = &self.preset {
            return p.eval(y);
        }
        let n = self.n as f64;
        let ci = ((y[0].rem_euclid(1.0) * n).floor() as usize).min(self.n - 1);
        let cj = ((y[1].rem_euclid(1.0) * n).floor() as usize).min(self.n - 1);
        self.values[cj * self.n + ci]
    }

    fn lattice(&self) -> Lattice {
        Lattice::torus(self.n)
    }
}

/// A mean-free periodic corrector on the torus nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corrector {
    pub direction: usize,
    pub n: usize,
    pub values: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// `b_p = −∫ A e_i · ∇ψ_p`, assembled cell by cell.
fn cell_rhs(a: &PeriodicCoefficient, i: usize) -> Vec<f64> {
    let lat = a.lattice();
    let half_h = 0.5 * a.h();
    let mut b = vec![0.0; lat.node_count()];
    // ∫_cell ∇ψ for local nodes (0,0), (1,0), (0,1), (1,1)
    const SIGNS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]];
    for cj in 0..a.n {
        for ci in 0..a.n {
            let m = a.values[lat.cell(ci, cj)];
            let flux = [m[i], m[2 + i]];
            for (loc, node) in lat.cell_nodes(ci, cj).into_iter().enumerate() {
                b[node] -= half_h * (flux[0] * SIGNS[loc][0] + flux[1] * SIGNS[loc][1]);
            }
        }
    }
    b
}

/// Solves `∫_Y A(e_i + ∇χ_i)·∇φ = 0` for mean-free periodic `χ_i`;
/// `direction` is 0 or 1.
pub fn solve_cell_problem(a: &PeriodicCoefficient, direction: usize, settings: &SolverSettings) -> Result<Corrector> {
    if direction > 1 {
        return Err(Error::InvalidParams(format!("direction must be 0 or 1, got {direction}")));
    }
    let lat = a.lattice();
    let free = vec![true; lat.node_count()];
    let system = lat.assemble(&|c| a.values[c], &free, None);
    let b = cell_rhs(a, direction);
    let mut x = vec![0.0; b.len()];
    let pre = Jacobi::new(&system.matrix.diagonal());
    let project = |v: &mut [f64]| sparse::remove_mean(v);
    let report = sparse::pcg(&system.matrix, &pre, &b, &mut x, settings, Some(&project))?;
    sparse::remove_mean(&mut x);
    Ok(Corrector { direction, n: a.n, values: x, residual: report.residual, iterations: report.iterations })
}

/// Cell-midpoint gradients of a torus node field.
fn cell_gradients(n: usize, u: &[f64]) -> Vec<[f64; 2]> {
    let lat = Lattice::torus(n);
    let h = 1.0 / n as f64;
    let mut g = Vec::with_capacity(n * n);
    for cj in 0..n {
        for ci in 0..n {
            g.push(midpoint_gradient(lat.cell_nodes(ci, cj).map(|k| u[k]), h));
        }
    }
    g
}

/// Corrected flux `A(e_i + ∇χ_i)` per cell.
fn corrected_flux(a: &PeriodicCoefficient, chi: &Corrector) -> Vec<[f64; 2]> {
    let grads = cell_gradients(a.n, &chi.values);
    let i = chi.direction;
    a.values
        .iter()
        .zip(grads)
        .map(|(m, g)| {
            let z = [g[0] + if i == 0 { 1.0 } else { 0.0 }, g[1] + if i == 1 { 1.0 } else { 0.0 }];
            [m[0] * z[0] + m[1] * z[1], m[2] * z[0] + m[3] * z[1]]
        })
        .collect()
}

fn mean_flux(flux: &[[f64; 2]]) -> [f64; 2] {
    let n = flux.len() as f64;
    let s = flux.iter().fold([0.0, 0.0], |acc, f| [acc[0] + f[0], acc[1] + f[1]]);
    [s[0] / n, s[1] / n]
}

/// `A₀ e_i = ∫_Y A(e_i + ∇χ_i)` by midpoint quadrature.
pub fn homogenized_matrix(a: &PeriodicCoefficient, chi: &[Corrector; 2]) -> Result<Mat2> {
    if chi.iter().any(|c| c.n != a.n) {
        return Err(Error::DimensionMismatch("corrector and coefficient torus sizes differ".into()));
    }
    let c0 = mean_flux(&corrected_flux(a, &chi[0]));
    let c1 = mean_flux(&corrected_flux(a, &chi[1]));
    // column i holds A₀ e_i
    Ok([c0[0], c1[0], c0[1], c1[1]])
}

/// Skew potentials `V_{ijk} = ∂_k φ_{ij} − ∂_j φ_{ik}` with
/// `Δφ_{ij} = d_{ij}`, for one direction `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxPotential {
    pub direction: usize,
    pub n: usize,
    /// Mean-free flux `d_{ij}` per cell, indexed `[j]`.
    pub d: [Vec<f64>; 2],
    /// Periodic Poisson potentials per cell, indexed `[j]`.
    pub phi: [Vec<f64>; 2],
    /// Node fields `V_{ijk}`, indexed `[j][k]`.
    pub v: [[Vec<f64>; 2]; 2],
    pub v_inf: f64,
    /// Relative L² mismatch between `Σ_k ∂_k V_{ijk}` and `d_{ij}`.
    pub divergence_error: f64,
    /// `‖V‖_∞ / L`.
    pub bound_ratio: f64,
}

fn fft2(data: &mut [Complex<f64>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = data[r * n + c];
        }
        fft.process(&mut col);
        for r in 0..n {
            data[r * n + c] = col[r];
        }
    }
    if inverse {
        let s = 1.0 / (n * n) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Solves `Σ_k D_k D_k φ = d` on the cell grid, where `D_k` are the
/// averaged cell-to-node and node-to-cell differences. The constant and
/// the `(π, π)` checkerboard mode lie in the kernel and are set to zero.
fn periodic_poisson(n: usize, d: &[f64]) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let mut data: Vec<Complex<f64>> = d.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(&mut data, n, false);
    for ky in 0..n {
        let ty = PI * ky as f64 / n as f64;
        let (sy, cy) = (ty.sin().powi(2), ty.cos().powi(2));
        for kx in 0..n {
            let tx = PI * kx as f64 / n as f64;
            let (sx, cx) = (tx.sin().powi(2), tx.cos().powi(2));
            let symbol = -4.0 / (h * h) * (sx * cy + cx * sy);
            let k = ky * n + kx;
            if symbol.abs() < 1e-12 / (h * h) {
                data[k] = Complex::new(0.0, 0.0);
            } else {
                data[k] /= symbol;
            }
        }
    }
    fft2(&mut data, n, true);
    data.iter().map(|c| c.re).collect()
}

/// Cell field to node field: averaged difference along axis `k`.
fn diff_cell_to_node(n: usize, phi: &[f64], k: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let c = |i: usize, j: usize| phi[(j % n) * n + (i % n)];
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let (im, jm) = (i + n - 1, j + n - 1);
            out[j * n + i] = if k == 0 {
                (c(i, j) + c(i, jm) - c(im, j) - c(im, jm)) / (2.0 * h)
            } else {
                (c(i, j) + c(im, j) - c(i, jm) - c(im, jm)) / (2.0 * h)
            };
        }
    }
    out
}

/// Node field to cell field: averaged difference along axis `k`.
fn diff_node_to_cell(n: usize, v: &[f64], k: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let p = |i: usize, j: usize| v[(j % n) * n + (i % n)];
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            out[j * n + i] = if k == 0 {
                (p(i + 1, j) + p(i + 1, j + 1) - p(i, j) - p(i, j + 1)) / (2.0 * h)
            } else {
                (p(i, j + 1) + p(i + 1, j + 1) - p(i, j) - p(i + 1, j)) / (2.0 * h)
            };
        }
    }
    out
}

/// Builds `V_i` for the corrector `chi` and checks its divergence.
pub fn flux_corrector(a: &PeriodicCoefficient, chi: &Corrector) -> Result<FluxPotential> {
    if chi.n != a.n {
        return Err(Error::DimensionMismatch("corrector and coefficient torus sizes differ".into()));
    }
    let n = a.n;
    let flux = corrected_flux(a, chi);
    let c = mean_flux(&flux);
    let d: [Vec<f64>; 2] = [0, 1].map(|j| flux.iter().map(|f| f[j] - c[j]).collect());
    let phi: [Vec<f64>; 2] = [0, 1].map(|j| periodic_poisson(n, &d[j]));
    let grad: [[Vec<f64>; 2]; 2] = [0, 1].map(|j| [0, 1].map(|k| diff_cell_to_node(n, &phi[j], k)));
    let v: [[Vec<f64>; 2]; 2] = [0, 1].map(|j| {
        [0, 1].map(|k| grad[j][k].iter().zip(&grad[k][j]).map(|(a, b)| a - b).collect::<Vec<f64>>())
    });
    let v_inf = v.iter().flatten().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut err2 = 0.0;
    let mut ref2 = 0.0;
    for j in 0..2 {
        let div0 = diff_node_to_cell(n, &v[j][0], 0);
        let div1 = diff_node_to_cell(n, &v[j][1], 1);
        for c in 0..n * n {
            let div = div0[c] + div1[c];
            err2 += (div - d[j][c]).powi(2);
            ref2 += d[j][c].powi(2);
        }
    }
    // a flux that is constant up to round-off has nothing to reproduce
    let floor = 1e-9 * a.big_l * (2.0 * (n * n) as f64).sqrt();
    let divergence_error = (err2 / ref2.max(floor * floor)).sqrt();
    Ok(FluxPotential { direction: chi.direction, n, d, phi, v, v_inf, divergence_error, bound_ratio: v_inf / a.big_l })
}

/// Correctors, homogenized tensor and (optionally) flux potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSolution {
    pub n: usize,
    pub chi: [Corrector; 2],
    #[serde(rename = "A0")]
    pub a0: Mat2,
    pub potentials: Option<[FluxPotential; 2]>,
}

impl CellSolution {
    pub fn residuals(&self) -> [f64; 2] {
        [self.chi[0].residual, self.chi[1].residual]
    }

    /// `A₀` as a coefficient on `grid`.
    pub fn a0_field(&self, grid: &DomainGrid) -> Result<CoefficientField> {
        CoefficientField::constant(grid.nx, grid.ny, self.a0)
    }

    /// `χ_i(y)` by bilinear interpolation on the torus.
    pub fn chi_at(&self, direction: usize, y: Point) -> f64 {
        let n = self.n;
        let u = &self.chi[direction].values;
        let sx = y[0].rem_euclid(1.0) * n as f64;
        let sy = y[1].rem_euclid(1.0) * n as f64;
        let (i, j) = ((sx.floor() as usize).min(n - 1), (sy.floor() as usize).min(n - 1));
        let (tx, ty) = (sx - i as f64, sy - j as f64);
        let v = |a: usize, b: usize| u[(b % n) * n + (a % n)];
        (1.0 - tx) * (1.0 - ty) * v(i, j) + tx * (1.0 - ty) * v(i + 1, j) + (1.0 - tx) * ty * v(i, j + 1) + tx * ty * v(i + 1, j + 1)
    }
}

/// Both cell problems (concurrently), `A₀`, and optionally `V_1`, `V_2`.
pub fn solve_cell(a: &PeriodicCoefficient, settings: &SolverSettings, with_potentials: bool) -> Result<CellSolution> {
    let (c0, c1) = rayon::join(|| solve_cell_problem(a, 0, settings), || solve_cell_problem(a, 1, settings));
    let chi = [c0?, c1?];
    let a0 = homogenized_matrix(a, &chi)?;
    let potentials = if with_potentials {
        let (v0, v1) = rayon::join(|| flux_corrector(a, &chi[0]), || flux_corrector(a, &chi[1]));
        Some([v0?, v1?])
    } else {
        None
    };
    Ok(CellSolution { n: a.n, chi, a0, potentials })
}

/// True if `m` satisfies the `(λ, L)` envelope on the sampled directions.
pub fn within_envelope(m: &Mat2, lambda: f64, big_l: f64, slack: f64) -> bool {
    let (lo, hi) = envelope(m);
    lo >= lambda * (1.0 - slack) && hi <= big_l * (1.0 + slack)
}

/// `|A₀ − A₀ᵀ|` relative to `|A₀|`.
pub fn asymmetry(m: &Mat2) -> f64 {
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 { 0.0 } else { (m[1] - m[2]).abs() / scale }
}

/// True when the stored matrix is symmetric to the crate tolerance.
pub fn is_symmetric(m: &Mat2) -> bool {
    asymmetry(m) <= ASYMMETRY_TOL
}

/// Hölder report of a corrector under the torus metric.
pub fn corrector_regularity(chi: &Corrector, alpha: f64, fit: Option<FitRange>) -> Result<HoelderReport> {
    hoelder_lattice(&LatticeField::torus(&chi.values, chi.n), alpha, fit)
}

/// `A_ε(x) = A(x/ε)` sampled at the cell midpoints of `grid`, carrying
/// the envelope of `A`.
pub fn oscillating_coefficient(a: &PeriodicCoefficient, epsilon: f64, grid: &DomainGrid) -> Result<CoefficientField> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParams(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let mut values = Vec::with_capacity(grid.cell_count());
    for cj in 0..grid.ny {
        for ci in 0..grid.nx {
            let x = grid.cell_center(ci, cj);
            values.push(a.at([x[0] / epsilon, x[1] / epsilon]));
        }
    }
    CoefficientField::from_values(grid.nx, grid.ny, values)?.with_envelope(a.lambda, a.big_l)
}
