//! Sampled Hölder seminorms and modulus-of-continuity fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainGrid, NodeKind, Point};

const DIRECTIONS: [(i64, i64); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];

/// Nodal values on a rectangular (optionally periodic) lattice.
#[derive(Debug, Clone, Copy)]
pub struct LatticeField<'a> {
    pub values: &'a [f64],
    pub nodes_x: usize,
    pub nodes_y: usize,
    pub h: f64,
    pub origin: Point,
    pub periodic: bool,
    /// Nodes taking part in the sample; `None` means all.
    pub include: Option<&'a [bool]>,
}

impl<'a> LatticeField<'a> {
    /// Nodes of `grid` in Ω̄ (interior and boundary).
    pub fn on_grid(grid: &DomainGrid, values: &'a [f64], include: &'a [bool]) -> Self {
        LatticeField { values, nodes_x: grid.nx + 1, nodes_y: grid.ny + 1, h: grid.h, origin: grid.origin, periodic: false, include: Some(include) }
    }

    /// An `n × n` torus field of period one.
    pub fn torus(values: &'a [f64], n: usize) -> Self {
        LatticeField { values, nodes_x: n, nodes_y: n, h: 1.0 / n as f64, origin: [0.0, 0.0], periodic: true, include: None }
    }

    fn point(&self, i: usize, j: usize) -> Point {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }
}

/// Mask of nodes in Ω̄.
pub fn closure_mask(grid: &DomainGrid) -> Vec<bool> {
    grid.mask.iter().map(|k| *k != NodeKind::Exterior).collect()
}

/// Largest oscillation over sampled pairs at one separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusSample {
    pub separation: f64,
    pub oscillation: f64,
    pub witnesses: [Point; 2],
}

/// Max oscillation at dyadic lattice separations `2^k h` along the axes
/// and diagonals. On a torus the distance is the wrapped one, so
/// separations stop at half a period.
pub fn modulus_of_continuity(field: &LatticeField) -> Vec<ModulusSample> {
    let (nx, ny) = (field.nodes_x as i64, field.nodes_y as i64);
    let limit = if field.periodic { nx.min(ny) / 2 } else { (nx - 1).max(ny - 1) };
    let included = |i: i64, j: i64| -> Option<usize> {
        let (i, j) = if field.periodic {
            (i.rem_euclid(nx), j.rem_euclid(ny))
        } else if i < 0 || j < 0 || i >= nx || j >= ny {
            return None;
        } else {
            (i, j)
        };
        let k = (j * nx + i) as usize;
        match field.include {
            Some(m) if !m[k] => None,
            _ => Some(k),
        }
    };
    let mut out = Vec::new();
    let mut s: i64 = 1;
    while s <= limit {
        for diag in [false, true] {
            let mut best = ModulusSample { separation: 0.0, oscillation: 0.0, witnesses: [[0.0; 2]; 2] };
            for &(di, dj) in DIRECTIONS.iter().filter(|d| (d.0 != 0 && d.1 != 0) == diag) {
                for j in 0..ny {
                    for i in 0..nx {
                        let Some(p) = included(i, j) else { continue };
                        let Some(q) = included(i + s * di, j + s * dj) else { continue };
                        let osc = (field.values[p] - field.values[q]).abs();
                        if osc > best.oscillation {
                            best.oscillation = osc;
                            best.witnesses = [field.point(i as usize, j as usize), {
                                let (a, b) = ((i + s * di).rem_euclid(nx), (j + s * dj).rem_euclid(ny));
                                field.point(a as usize, b as usize)
                            }];
                        }
                    }
                }
            }
            best.separation = s as f64 * field.h * if diag { std::f64::consts::SQRT_2 } else { 1.0 };
            out.push(best);
        }
        s *= 2;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoelderReport {
    pub alpha: f64,
    /// `max |u(x) − u(y)| / |x − y|^α` over the sampled pairs.
    pub seminorm: f64,
    /// Least-squares slope of log oscillation against log separation.
    pub fitted_alpha: f64,
    /// `exp(intercept)` of the same fit.
    pub fit_constant: f64,
    pub witnesses: [Point; 2],
    pub modulus: Vec<ModulusSample>,
}

/// Physical separation window for the exponent fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRange {
    pub min: f64,
    pub max: f64,
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParams(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// Ordinary least squares `y = a + b x`; returns `(a, b)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// Seminorm and fitted exponent from a precomputed modulus.
pub fn report_from_modulus(modulus: Vec<ModulusSample>, alpha: f64, fit: FitRange) -> HoelderReport {
    let mut seminorm = 0.0;
    let mut witnesses = [[0.0; 2]; 2];
    for m in &modulus {
        let v = m.oscillation / m.separation.powf(alpha);
        if v > seminorm {
            seminorm = v;
            witnesses = m.witnesses;
        }
    }
    let pts: Vec<(f64, f64)> = modulus
        .iter()
        .filter(|m| m.oscillation > 0.0 && m.separation >= fit.min * (1.0 - 1e-9) && m.separation <= fit.max * (1.0 + 1e-9))
        .map(|m| (m.separation.ln(), m.oscillation.ln()))
        .collect();
    let (fitted_alpha, fit_constant) = if pts.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let (a, b) = least_squares(&xs, &ys);
        (b.clamp(0.0, 1.05), a.exp())
    } else {
        (0.0, 0.0)
    };
    HoelderReport { alpha, seminorm, fitted_alpha, fit_constant, witnesses, modulus }
}

/// Default fit window: from two cells to an eighth of the extent.
pub fn default_fit(field: &LatticeField) -> FitRange {
    let extent = if field.periodic { 1.0 } else { (field.nodes_x.max(field.nodes_y) - 1) as f64 * field.h };
    FitRange { min: 2.0 * field.h, max: extent / 8.0 }
}

pub fn hoelder_lattice(field: &LatticeField, alpha: f64, fit: Option<FitRange>) -> Result<HoelderReport> {
    check_alpha(alpha)?;
    let fit = fit.unwrap_or_else(|| default_fit(field));
    Ok(report_from_modulus(modulus_of_continuity(field), alpha, fit))
}

/// `[u]_α` over pairs of nodes in Ω̄ at dyadic separations.
pub fn hoelder_seminorm(values: &[f64], grid: &DomainGrid, alpha: f64, fit: Option<FitRange>) -> Result<HoelderReport> {
    if values.len() != grid.node_count() {
        return Err(Error::DimensionMismatch(format!("{} values for {} nodes", values.len(), grid.node_count())));
    }
    let mask = closure_mask(grid);
    hoelder_lattice(&LatticeField::on_grid(grid, values, &mask), alpha, fit)
}
