//! Compressed sparse row matrices and preconditioned conjugate gradients.
//!
//! Reductions are accumulated over fixed-size chunks and combined in
//! index order, so results do not depend on the rayon thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from per-row `(column, value)` lists. Columns
    /// within a row must be strictly increasing.
    pub fn from_rows(nrows: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), nrows);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                cols.push(c as u32);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { nrows, row_ptr, cols, vals }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().zip(&self.vals[range]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, ys)| {
            let base = c * CHUNK;
            for (k, yi) in ys.iter_mut().enumerate() {
                let i = base + k;
                let mut acc = 0.0;
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[p] * x[self.cols[p] as usize];
                }
                *yi = acc;
            }
        });
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.nrows];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                rows[j].push((i, v));
            }
        }
        CsrMatrix::from_rows(self.nrows, rows)
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn max_asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                if j > i {
                    worst = worst.max((v - self.get(j, i)).abs());
                }
            }
        }
        worst / scale
    }

    pub fn scaled(&self, factor: f64) -> CsrMatrix {
        CsrMatrix { vals: self.vals.iter().map(|v| v * factor).collect(), ..self.clone() }
    }
}

/// `y = A x` for some symmetric positive (semi)definite operator.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }
}

/// `AᵀA` applied matrix-free, for nonsymmetric systems.
pub struct NormalOperator<'a> {
    pub a: &'a CsrMatrix,
    pub at: &'a CsrMatrix,
}

impl LinearOperator for NormalOperator<'_> {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut tmp = vec![0.0; x.len()];
        self.a.matvec(x, &mut tmp);
        self.at.matvec(&tmp, y);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerKind {
    #[default]
    Jacobi,
    Ssor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Relative residual `‖b − Ax‖ / ‖b‖` at which iteration stops.
    pub tol: f64,
    /// Iteration cap; `None` uses `50·√N·ln(1/tol)`.
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub precond: PreconditionerKind,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tol: 1e-10, max_iter: None, precond: PreconditionerKind::Jacobi }
    }
}

impl SolverSettings {
    pub fn with_tol(tol: f64) -> Self {
        SolverSettings { tol, ..Default::default() }
    }

    pub fn iteration_cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| {
            let cap = 50.0 * (n as f64).sqrt() * (1.0 / self.tol).ln().max(1.0);
            (cap as usize).max(100)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub residual: f64,
}

pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(diag: &[f64]) -> Self {
        Jacobi { inv_diag: diag.iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect() }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.par_iter_mut().zip(r.par_iter()).zip(self.inv_diag.par_iter()).for_each(|((z, r), d)| *z = r * d);
    }
}

/// Symmetric successive over-relaxation with relaxation `omega`.
pub struct Ssor<'a> {
    a: &'a CsrMatrix,
    diag: Vec<f64>,
    omega: f64,
}

impl<'a> Ssor<'a> {
    pub fn new(a: &'a CsrMatrix, omega: f64) -> Self {
        Ssor { a, diag: a.diagonal(), omega }
    }
}

impl Preconditioner for Ssor<'_> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        let w = self.omega;
        // forward: (D/ω + L) y = r
        for i in 0..n {
            let mut acc = r[i];
            for (j, v) in self.a.row(i) {
                if j < i {
                    acc -= v * z[j];
                }
            }
            z[i] = acc * w / self.diag[i];
        }
        // scale by (2 − ω)/ω · D/ω
        for i in 0..n {
            z[i] *= (2.0 - w) / w * self.diag[i] / w;
        }
        // backward: (D/ω + U) z = y
        for i in (0..n).rev() {
            let mut acc = z[i];
            for (j, v) in self.a.row(i) {
                if j > i {
                    acc -= v * z[j];
                }
            }
            z[i] = acc * w / self.diag[i];
        }
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    let partial: Vec<f64> = x
        .par_chunks(CHUNK)
        .zip(y.par_chunks(CHUNK))
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_chunks_mut(CHUNK).zip(x.par_chunks(CHUNK)).for_each(|(ys, xs)| {
        for (y, x) in ys.iter_mut().zip(xs) {
            *y += alpha * x;
        }
    });
}

/// Subtracts the arithmetic mean; the projector used for problems whose
/// kernel is the constants.
pub fn remove_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

/// Preconditioned conjugate gradients for `A x = b` starting from `x`.
///
/// With `project`, iterates are kept in the range of the projector
/// (e.g. mean-free vectors for singular periodic operators); `b` is
/// projected before iterating.
pub fn pcg(
    op: &dyn LinearOperator,
    precond: &dyn Preconditioner,
    b: &[f64],
    x: &mut [f64],
    settings: &SolverSettings,
    project: Option<&dyn Fn(&mut [f64])>,
) -> Result<CgReport> {
    let n = op.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let mut rhs = b.to_vec();
    if let Some(p) = project {
        p(&mut rhs);
        p(x);
    }
    let bnorm = norm2(&rhs);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport { iterations: 0, residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    r.par_iter_mut().zip(rhs.par_iter()).for_each(|(r, b)| *r = b - *r);
    let mut res = norm2(&r) / bnorm;
    if res <= settings.tol {
        return Ok(CgReport { iterations: 0, residual: res });
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    if let Some(p) = project {
        p(&mut z);
    }
    let mut p_dir = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let cap = settings.iteration_cap(n);
    for it in 1..=cap {
        op.apply(&p_dir, &mut ap);
        let pap = dot(&p_dir, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence { iterations: it, residual: res });
        }
        let alpha = rz / pap;
        axpy(alpha, &p_dir, x);
        axpy(-alpha, &ap, &mut r);
        res = norm2(&r) / bnorm;
        if res <= settings.tol {
            if let Some(p) = project {
                p(x);
            }
            return Ok(CgReport { iterations: it, residual: res });
        }
        precond.apply(&r, &mut z);
        if let Some(p) = project {
            p(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p_dir.par_chunks_mut(CHUNK).zip(z.par_chunks(CHUNK)).for_each(|(ps, zs)| {
            for (p, z) in ps.iter_mut().zip(zs) {
                *p = z + beta * *p;
            }
        });
    }
    Err(Error::NoConvergence { iterations: cap, residual: res })
}

/// Solves `A x = b` for a symmetric matrix with the configured
/// preconditioner.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], x: &mut [f64], settings: &SolverSettings) -> Result<CgReport> {
    match settings.precond {
        PreconditionerKind::Jacobi => pcg(a, &Jacobi::new(&a.diagonal()), b, x, settings, None),
        PreconditionerKind::Ssor => pcg(a, &Ssor::new(a, 1.5), b, x, settings, None),
    }
}
