//! Dirichlet problems `−div(A∇u) = μ` in Ω, `u = 0` on ∂Ω, discretized
//! with Q1 elements on the masked grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainGrid, NodeKind, Point};
use crate::measures::{MeasureSpec, PreparedMeasure};
use crate::q1::{Assembled, Lattice, Mat2, IDENTITY};
use crate::sparse::{self, CsrMatrix, Jacobi, NormalOperator, SolverSettings};

/// Directions used for the ellipticity spot check.
pub const ENVELOPE_DIRECTIONS: usize = 16;

/// Relative asymmetry above which a matrix counts as nonsymmetric.
pub const ASYMMETRY_TOL: f64 = 1e-12;

/// `(min_z Az·z, max_z |Az|)` over unit directions `z`.
pub fn envelope(a: &Mat2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for k in 0..ENVELOPE_DIRECTIONS {
        let t = std::f64::consts::PI * k as f64 / ENVELOPE_DIRECTIONS as f64;
        let z = [t.cos(), t.sin()];
        let az = [a[0] * z[0] + a[1] * z[1], a[2] * z[0] + a[3] * z[1]];
        lo = lo.min(az[0] * z[0] + az[1] * z[1]);
        hi = hi.max((az[0] * az[0] + az[1] * az[1]).sqrt());
    }
    (lo, hi)
}

/// Per-cell coefficient matrices with an ellipticity envelope `(λ, L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<Mat2>,
    pub lambda: f64,
    #[serde(rename = "L")]
    pub big_l: f64,
    pub symmetric: bool,
}

impl CoefficientField {
    /// Builds the field with the tightest envelope over its cells.
    pub fn from_values(nx: usize, ny: usize, values: Vec<Mat2>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::DimensionMismatch(format!("{} matrices for {nx}x{ny} cells", values.len())));
        }
        let mut lambda = f64::INFINITY;
        let mut big_l: f64 = 0.0;
        let mut symmetric = true;
        for (cell, a) in values.iter().enumerate() {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::EllipticityViolation { cell, detail: "non-finite entry".into() });
            }
            let (lo, hi) = envelope(a);
            if !(lo > 0.0) {
                return Err(Error::EllipticityViolation { cell, detail: format!("min Az·z = {lo:.3e} is not positive") });
            }
            lambda = lambda.min(lo);
            big_l = big_l.max(hi);
            let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if (a[1] - a[2]).abs() > ASYMMETRY_TOL * scale {
                symmetric = false;
            }
        }
        Ok(CoefficientField { nx, ny, values, lambda, big_l, symmetric })
    }

    pub fn constant(nx: usize, ny: usize, a: Mat2) -> Result<Self> {
        Self::from_values(nx, ny, vec![a; nx * ny])
    }

    pub fn identity(grid: &DomainGrid) -> Self {
        Self::constant(grid.nx, grid.ny, IDENTITY).expect("identity is elliptic")
    }

    /// Samples `a(x)` at cell midpoints.
    pub fn from_fn(grid: &DomainGrid, a: impl Fn(Point) -> Mat2) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.cell_count());
        for cj in 0..grid.ny {
            for ci in 0..grid.nx {
                values.push(a(grid.cell_center(ci, cj)));
            }
        }
        Self::from_values(grid.nx, grid.ny, values)
    }

    /// Replaces the envelope by declared bounds, which must hold on
    /// every cell.
    pub fn with_envelope(mut self, lambda: f64, big_l: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= big_l) {
            return Err(Error::InvalidParams(format!("need 0 < lambda <= L, got ({lambda}, {big_l})")));
        }
        self.lambda = lambda;
        self.big_l = big_l;
        self.check()?;
        Ok(self)
    }

    /// Spot-checks the envelope on every cell.
    pub fn check(&self) -> Result<()> {
        let slack = 1e-12;
        for (cell, a) in self.values.iter().enumerate() {
            let (lo, hi) = envelope(a);
            if lo < self.lambda * (1.0 - slack) {
                return Err(Error::EllipticityViolation {
                    cell,
                    detail: format!("min Az·z = {lo:.6e} < lambda = {:.6e}", self.lambda),
                });
            }
            if hi > self.big_l * (1.0 + slack) {
                return Err(Error::EllipticityViolation {
                    cell,
                    detail: format!("max |Az| = {hi:.6e} > L = {:.6e}", self.big_l),
                });
            }
        }
        Ok(())
    }

    /// `c·A` with the envelope scaled accordingly.
    pub fn scaled(&self, c: f64) -> Self {
        CoefficientField {
            nx: self.nx,
            ny: self.ny,
            values: self.values.iter().map(|a| a.map(|v| v * c)).collect(),
            lambda: self.lambda * c,
            big_l: self.big_l * c,
            symmetric: self.symmetric,
        }
    }

    #[inline]
    pub fn get(&self, cell: usize) -> Mat2 {
        self.values[cell]
    }
}

/// Assembled Dirichlet operator on the interior nodes of a grid.
#[derive(Debug, Clone)]
pub struct EllipticOperator {
    pub system: Assembled,
    pub symmetric: bool,
    pub node_count: usize,
}

impl EllipticOperator {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.system.matrix
    }

    pub fn dofs(&self) -> usize {
        self.system.dof_nodes.len()
    }
}

pub fn assemble(grid: &DomainGrid, a: &CoefficientField) -> Result<EllipticOperator> {
    if a.nx != grid.nx || a.ny != grid.ny {
        return Err(Error::DimensionMismatch(format!(
            "coefficient has {}x{} cells, grid has {}x{}",
            a.nx, a.ny, grid.nx, grid.ny
        )));
    }
    a.check()?;
    let free: Vec<bool> = grid.mask.iter().map(|k| *k == NodeKind::Interior).collect();
    if !free.iter().any(|f| *f) {
        return Err(Error::EmptyInterior { resolution: grid.nx.max(grid.ny) });
    }
    let lattice = Lattice::open(grid.nx, grid.ny);
    let system = lattice.assemble(&|c| a.values[c], &free, None);
    let symmetric = a.symmetric || system.matrix.max_asymmetry() <= ASYMMETRY_TOL;
    Ok(EllipticOperator { system, symmetric, node_count: grid.node_count() })
}

/// Cell containing `p` and the bilinear weights of its four nodes.
fn bilinear(grid: &DomainGrid, p: Point) -> ([usize; 4], [f64; 4]) {
    let sx = ((p[0] - grid.origin[0]) / grid.h).clamp(0.0, grid.nx as f64);
    let sy = ((p[1] - grid.origin[1]) / grid.h).clamp(0.0, grid.ny as f64);
    let ci = (sx.floor() as usize).min(grid.nx - 1);
    let cj = (sy.floor() as usize).min(grid.ny - 1);
    let (tx, ty) = (sx - ci as f64, sy - cj as f64);
    let nodes = [grid.index(ci, cj), grid.index(ci + 1, cj), grid.index(ci, cj + 1), grid.index(ci + 1, cj + 1)];
    let w = [(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty];
    (nodes, w)
}

/// Minimum number of quadrature samples on a circle term.
pub const MIN_ARC_SAMPLES: usize = 64;

/// `∫ φ_i dμ` for every node; entries on non-interior nodes are zeroed.
pub fn load_vector(grid: &DomainGrid, mu: &MeasureSpec) -> Result<Vec<f64>> {
    Ok(load_vector_prepared(grid, &mu.prepare(grid)?))
}

pub fn load_vector_prepared(grid: &DomainGrid, mu: &PreparedMeasure) -> Vec<f64> {
    let mut b = vec![0.0; grid.node_count()];
    if let Some(density) = &mu.density {
        let quarter = 0.25 * grid.h * grid.h;
        for cj in 0..grid.ny {
            for ci in 0..grid.nx {
                let f = density[grid.cell_index(ci, cj)];
                if f == 0.0 {
                    continue;
                }
                for node in [grid.index(ci, cj), grid.index(ci + 1, cj), grid.index(ci, cj + 1), grid.index(ci + 1, cj + 1)] {
                    b[node] += f * quarter;
                }
            }
        }
    }
    for &(p, w) in &mu.points {
        let (nodes, weights) = bilinear(grid, p);
        for (n, t) in nodes.iter().zip(weights) {
            b[*n] += w * t;
        }
    }
    for arc in &mu.arcs {
        let count = MIN_ARC_SAMPLES.max((8.0 * arc.radius / grid.h).ceil() as usize);
        let dtheta = 2.0 * std::f64::consts::PI / count as f64;
        for k in 0..count {
            let theta = (k as f64 + 0.5) * dtheta;
            if !arc.admits_angle(theta) {
                continue;
            }
            let (nodes, weights) = bilinear(grid, arc.point_at(theta));
            let mass = arc.weight * arc.radius * dtheta;
            for (n, t) in nodes.iter().zip(weights) {
                b[*n] += mass * t;
            }
        }
    }
    for (v, k) in b.iter_mut().zip(&grid.mask) {
        if *k != NodeKind::Interior {
            *v = 0.0;
        }
    }
    b
}

/// Nodal solution of a Dirichlet problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSolution {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Values on all `(nx+1)(ny+1)` nodes, zero off the interior.
    pub values: Vec<f64>,
    /// `‖b − Ku‖ / ‖b‖` of the final iterate.
    pub residual_norm: f64,
    /// Discrete `∫ A∇u·∇u`.
    pub energy: f64,
    pub iterations: usize,
}

impl FieldSolution {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn node_point(&self, idx: usize) -> Point {
        let w = self.nx + 1;
        [self.origin[0] + (idx % w) as f64 * self.h, self.origin[1] + (idx / w) as f64 * self.h]
    }

    /// Bilinear interpolation at `p`.
    pub fn value_at(&self, p: Point) -> f64 {
        let sx = ((p[0] - self.origin[0]) / self.h).clamp(0.0, self.nx as f64);
        let sy = ((p[1] - self.origin[1]) / self.h).clamp(0.0, self.ny as f64);
        let ci = (sx.floor() as usize).min(self.nx - 1);
        let cj = (sy.floor() as usize).min(self.ny - 1);
        let (tx, ty) = (sx - ci as f64, sy - cj as f64);
        let w = self.nx + 1;
        let v = |i: usize, j: usize| self.values[j * w + i];
        (1.0 - tx) * (1.0 - ty) * v(ci, cj) + tx * (1.0 - ty) * v(ci + 1, cj) + (1.0 - tx) * ty * v(ci, cj + 1) + tx * ty * v(ci + 1, cj + 1)
    }
}

/// Restarts allowed when the true residual misses the tolerance.
const RESTARTS: usize = 4;

fn check_tol(settings: &SolverSettings) -> Result<()> {
    if !(settings.tol > 0.0 && settings.tol <= 1e-6) {
        return Err(Error::InvalidParams(format!("tol must lie in (0, 1e-6], got {}", settings.tol)));
    }
    Ok(())
}

/// Solves `K u = b` on the interior nodes; `load` is a full nodal vector.
pub fn solve(grid: &DomainGrid, op: &EllipticOperator, load: &[f64], settings: &SolverSettings) -> Result<FieldSolution> {
    check_tol(settings)?;
    if load.len() != op.node_count {
        return Err(Error::DimensionMismatch(format!("load has {} entries, grid has {} nodes", load.len(), op.node_count)));
    }
    let k = op.matrix();
    let b = op.system.gather(load);
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = sparse::norm2(&b);
    let mut iterations = 0;
    if bnorm > 0.0 {
        // the recursive residual drifts from the true one (and on the
        // normal equations does not bound it at all), so tighten and restart
        let mut local = *settings;
        let normal = (!op.symmetric).then(|| {
            let kt = k.transpose();
            let mut rhs = vec![0.0; n];
            kt.matvec(&b, &mut rhs);
            let diag: Vec<f64> = (0..n).map(|i| kt.row(i).map(|(_, v)| v * v).sum()).collect();
            (kt, rhs, Jacobi::new(&diag))
        });
        for _ in 0..RESTARTS {
            iterations += match &normal {
                None => sparse::solve_spd(k, &b, &mut x, &local)?.iterations,
                Some((kt, rhs, pre)) => sparse::pcg(&NormalOperator { a: k, at: kt }, pre, rhs, &mut x, &local, None)?.iterations,
            };
            let res = true_residual(k, &b, &x) / bnorm;
            if res <= settings.tol {
                break;
            }
            local.tol = (local.tol * settings.tol / res * 0.5).max(1e-15);
        }
    }
    let residual_norm = if bnorm > 0.0 { true_residual(k, &b, &x) / bnorm } else { 0.0 };
    if residual_norm > settings.tol {
        return Err(Error::NoConvergence { iterations, residual: residual_norm });
    }
    let mut kx = vec![0.0; n];
    k.matvec(&x, &mut kx);
    let energy = sparse::dot(&x, &kx);
    Ok(FieldSolution {
        origin: grid.origin,
        h: grid.h,
        nx: grid.nx,
        ny: grid.ny,
        values: op.system.scatter(&x, None),
        residual_norm,
        energy,
        iterations,
    })
}

fn true_residual(k: &CsrMatrix, b: &[f64], x: &[f64]) -> f64 {
    let mut r = vec![0.0; b.len()];
    k.matvec(x, &mut r);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    sparse::norm2(&r)
}

/// Assemble, load and solve in one call.
pub fn solve_dirichlet(grid: &DomainGrid, a: &CoefficientField, mu: &MeasureSpec, settings: &SolverSettings) -> Result<FieldSolution> {
    let op = assemble(grid, a)?;
    let b = load_vector(grid, mu)?;
    solve(grid, &op, &b, settings)
}

/// True iff `u ≤ v + tol` at every node.
pub fn comparison_check(u: &FieldSolution, v: &FieldSolution, tol: f64) -> bool {
    u.values.len() == v.values.len() && u.values.iter().zip(&v.values).all(|(a, b)| *a <= *b + tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec};
    use crate::measures::DensityFn;
    use std::f64::consts::PI;

    #[test]
    fn envelope_of_diagonal_matrix() {
        let (lo, hi) = envelope(&[1.0, 0.0, 0.0, 3.0]);
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
        assert!(CoefficientField::constant(2, 2, [1.0, 0.0, 0.0, -1.0]).is_err());
        let f = CoefficientField::constant(2, 2, [2.0, 0.0, 0.0, 2.0]).unwrap();
        assert!(f.clone().with_envelope(3.0, 4.0).is_err());
        assert!(f.with_envelope(1.0, 4.0).is_ok());
    }

    #[test]
    fn operator_is_linear_in_coefficient() {
        let grid = build_grid(&DomainSpec::UnitSquare, 16).unwrap();
        let one = assemble(&grid, &CoefficientField::identity(&grid)).unwrap();
        let two = assemble(&grid, &CoefficientField::identity(&grid).scaled(2.0)).unwrap();
        for i in 0..one.dofs() {
            for (j, v) in one.matrix().row(i) {
                assert!((two.matrix().get(i, j) - 2.0 * v).abs() < 1e-14);
            }
        }
        assert!(one.symmetric);
    }

    #[test]
    fn load_of_unit_density_is_h_squared() {
        let grid = build_grid(&DomainSpec::UnitSquare, 32).unwrap();
        let b = load_vector(&grid, &MeasureSpec::constant_density(1.0)).unwrap();
        let k = grid.index(16, 16);
        assert!((b[k] - grid.h * grid.h).abs() < 1e-15);
        assert_eq!(b[grid.index(0, 5)], 0.0);
    }

    #[test]
    fn point_mass_on_node_loads_unit_vector() {
        let grid = build_grid(&DomainSpec::UnitSquare, 32).unwrap();
        let p = grid.point(10, 7);
        let b = load_vector(&grid, &MeasureSpec::point_mass(p, 1.0)).unwrap();
        let k = grid.index(10, 7);
        assert!((b[k] - 1.0).abs() < 1e-12);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn manufactured_solution_on_coarse_grid() {
        let grid = build_grid(&DomainSpec::UnitSquare, 32).unwrap();
        let mu = MeasureSpec::density(DensityFn::SinSin { amplitude: 2.0 * PI * PI });
        let u = solve_dirichlet(&grid, &CoefficientField::identity(&grid), &mu, &SolverSettings::default()).unwrap();
        let err = (0..grid.node_count())
            .map(|k| {
                let p = grid.coords(k);
                (u.values[k] - (PI * p[0]).sin() * (PI * p[1]).sin()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-2, "{err}");
        assert!(u.residual_norm <= 1e-10);
    }

    #[test]
    fn nonsymmetric_coefficient_goes_through_normal_form() {
        let grid = build_grid(&DomainSpec::UnitSquare, 16).unwrap();
        // a constant skew part integrates to zero; a varying one does not
        let a = CoefficientField::from_fn(&grid, |p| [2.0, 0.5 * p[0], -0.5 * p[0], 1.0]).unwrap();
        assert!(!a.symmetric);
        let op = assemble(&grid, &a).unwrap();
        assert!(!op.symmetric);
        let b = load_vector(&grid, &MeasureSpec::constant_density(1.0)).unwrap();
        let u = solve(&grid, &op, &b, &SolverSettings::with_tol(1e-9)).unwrap();
        assert!(u.residual_norm <= 1e-9);
        let work: f64 = b.iter().zip(&u.values).map(|(b, u)| b * u).sum();
        assert!((u.energy - work).abs() < 1e-7 * work);

        let skew = CoefficientField::constant(grid.nx, grid.ny, [2.0, 0.5, -0.5, 1.0]).unwrap();
        assert!(assemble(&grid, &skew).unwrap().symmetric);
    }

    #[test]
    fn tolerance_outside_range_rejected() {
        let grid = build_grid(&DomainSpec::UnitSquare, 8).unwrap();
        let op = assemble(&grid, &CoefficientField::identity(&grid)).unwrap();
        let b = vec![0.0; grid.node_count()];
        assert!(solve(&grid, &op, &b, &SolverSettings::with_tol(1e-3)).is_err());
        let z = solve(&grid, &op, &b, &SolverSettings::default()).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }
}
