//! Signed Radon measures built from grid densities, point masses and
//! circle surface measures; ball masses, Morrey norms and truncations.
//!
//! A [`MeasureSpec`] is resolution independent. Before any numerics it
//! is bound to a grid as a [`PreparedMeasure`]: densities are sampled at
//! cell midpoints and circle terms become unions of angular arcs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, DomainGrid, Point};

/// Resolution-independent density `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DensityFn {
    Constant { value: f64 },
    /// `amplitude · sin(πx) sin(πy)`.
    SinSin { amplitude: f64 },
    /// `scale · δ(x)^exponent`.
    DeltaPower {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Explicit per-cell values on an `nx × ny` cell grid, row-major.
    Values { nx: usize, ny: usize, values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

fn plus_one() -> i8 {
    1
}

impl DensityFn {
    /// Per-cell samples at cell midpoints; zero outside the domain.
    pub fn sample(&self, grid: &DomainGrid) -> Result<Vec<f64>> {
        if let DensityFn::Values { nx, ny, values } = self {
            if *nx != grid.nx || *ny != grid.ny || values.len() != nx * ny {
                return Err(Error::DimensionMismatch(format!(
                    "density has {nx}x{ny} cells, grid has {}x{}",
                    grid.nx, grid.ny
                )));
            }
        }
        let mut out = vec![0.0; grid.cell_count()];
        for cj in 0..grid.ny {
            for ci in 0..grid.nx {
                let c = grid.cell_center(ci, cj);
                let d = grid.delta_at(c);
                if d <= 0.0 {
                    continue;
                }
                out[grid.cell_index(ci, cj)] = match self {
                    DensityFn::Constant { value } => *value,
                    DensityFn::SinSin { amplitude } => amplitude * (PI * c[0]).sin() * (PI * c[1]).sin(),
                    DensityFn::DeltaPower { exponent, scale } => scale * d.powf(*exponent),
                    DensityFn::Values { values, .. } => values[grid.cell_index(ci, cj)],
                };
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermKind {
    GridDensity { density: DensityFn },
    PointMass { location: Point, weight: f64 },
    /// `weight · H¹` restricted to the circle `|x − center| = radius`.
    CircleSurface {
        #[serde(default)]
        center: Point,
        radius: f64,
        #[serde(default = "one")]
        weight: f64,
    },
}

/// One signed term, optionally restricted to `{min_delta < δ}` and/or
/// `{δ ≤ max_delta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(flatten)]
    pub kind: TermKind,
    #[serde(default = "plus_one")]
    pub sign: i8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_delta: Option<f64>,
}

impl Term {
    pub fn new(kind: TermKind) -> Self {
        Term { kind, sign: 1, min_delta: None, max_delta: None }
    }

    pub fn negated(mut self) -> Self {
        self.sign = -self.sign;
        self
    }

    fn admits(&self, delta: f64) -> bool {
        delta > 0.0 && self.min_delta.map_or(true, |m| delta > m) && self.max_delta.map_or(true, |m| delta <= m)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub terms: Vec<Term>,
}

impl MeasureSpec {
    pub fn zero() -> Self {
        MeasureSpec::default()
    }

    pub fn density(density: DensityFn) -> Self {
        MeasureSpec { terms: vec![Term::new(TermKind::GridDensity { density })] }
    }

    pub fn constant_density(value: f64) -> Self {
        Self::density(DensityFn::Constant { value })
    }

    pub fn point_mass(location: Point, weight: f64) -> Self {
        MeasureSpec { terms: vec![Term::new(TermKind::PointMass { location, weight })] }
    }

    pub fn circle(center: Point, radius: f64, weight: f64) -> Self {
        MeasureSpec { terms: vec![Term::new(TermKind::CircleSurface { center, radius, weight })] }
    }

    pub fn plus(mut self, other: MeasureSpec) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (k, t) in self.terms.iter().enumerate() {
            if t.sign != 1 && t.sign != -1 {
                return Err(Error::InvalidParams(format!("term {k}: sign must be 1 or -1")));
            }
            if let TermKind::CircleSurface { radius, .. } = t.kind {
                if !(radius > 0.0) {
                    return Err(Error::InvalidParams(format!("term {k}: circle radius must be positive")));
                }
            }
        }
        Ok(())
    }

    /// Binds the measure to `grid`.
    pub fn prepare(&self, grid: &DomainGrid) -> Result<PreparedMeasure> {
        self.validate()?;
        let mut density = vec![0.0; grid.cell_count()];
        let mut has_density = false;
        let mut points = Vec::new();
        let mut arcs = Vec::new();
        for term in &self.terms {
            let s = term.sign as f64;
            match &term.kind {
                TermKind::GridDensity { density: f } => {
                    has_density = true;
                    let vals = f.sample(grid)?;
                    for cj in 0..grid.ny {
                        for ci in 0..grid.nx {
                            let c = grid.cell_index(ci, cj);
                            if vals[c] != 0.0 && term.admits(grid.delta_at(grid.cell_center(ci, cj))) {
                                density[c] += s * vals[c];
                            }
                        }
                    }
                }
                TermKind::PointMass { location, weight } => {
                    if term.admits(grid.delta_at(*location)) {
                        points.push((*location, s * weight));
                    }
                }
                TermKind::CircleSurface { center, radius, weight } => {
                    let intervals = admitted_arcs(grid, term, *center, *radius);
                    if !intervals.is_empty() {
                        arcs.push(CircleArcs { center: *center, radius: *radius, weight: s * weight, intervals });
                    }
                }
            }
        }
        let density = if has_density && density.iter().any(|v| *v != 0.0) { Some(density) } else { None };
        let abs_prefix = density.as_ref().map(|d| RowPrefix::new(grid, |c| d[c].abs()));
        Ok(PreparedMeasure { origin: grid.origin, h: grid.h, nx: grid.nx, ny: grid.ny, density, abs_prefix, points, arcs })
    }

    /// `μ_k = 1_{Ω_k} μ` with `Ω_k = {δ > 1/k}`.
    pub fn truncate(&self, k: usize) -> Result<MeasureSpec> {
        if k == 0 {
            return Err(Error::InvalidParams("truncation level k must be >= 1".into()));
        }
        let cut = 1.0 / k as f64;
        Ok(MeasureSpec {
            terms: self
                .terms
                .iter()
                .cloned()
                .map(|mut t| {
                    t.min_delta = Some(t.min_delta.map_or(cut, |m| m.max(cut)));
                    t
                })
                .collect(),
        })
    }

    /// `μ − μ_k`, the part of `μ` on `{δ ≤ 1/k}`.
    pub fn truncation_remainder(&self, k: usize) -> Result<MeasureSpec> {
        if k == 0 {
            return Err(Error::InvalidParams("truncation level k must be >= 1".into()));
        }
        let cut = 1.0 / k as f64;
        Ok(MeasureSpec {
            terms: self
                .terms
                .iter()
                .cloned()
                .map(|mut t| {
                    t.max_delta = Some(t.max_delta.map_or(cut, |m| m.min(cut)));
                    t
                })
                .collect(),
        })
    }
}

/// Circle term reduced to the angular intervals it charges.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleArcs {
    pub center: Point,
    pub radius: f64,
    pub weight: f64,
    /// Disjoint sub-intervals of `[0, 2π]`.
    pub intervals: Vec<[f64; 2]>,
}

impl CircleArcs {
    pub fn point_at(&self, theta: f64) -> Point {
        [self.center[0] + self.radius * theta.cos(), self.center[1] + self.radius * theta.sin()]
    }

    pub fn admits_angle(&self, theta: f64) -> bool {
        let t = theta.rem_euclid(2.0 * PI);
        self.intervals.iter().any(|[a, b]| *a <= t && t <= *b)
    }

    /// Length of the charged arc inside the open ball `B(x, r)`.
    pub fn length_in_ball(&self, x: Point, r: f64) -> f64 {
        let d = dist(x, self.center);
        let big_r = self.radius;
        let ball: Vec<[f64; 2]> = if d == 0.0 {
            if big_r < r { vec![[0.0, 2.0 * PI]] } else { vec![] }
        } else {
            let kappa = (big_r * big_r + d * d - r * r) / (2.0 * big_r * d);
            if kappa >= 1.0 {
                vec![]
            } else if kappa <= -1.0 {
                vec![[0.0, 2.0 * PI]]
            } else {
                let half = kappa.acos();
                let phi = (x[1] - self.center[1]).atan2(x[0] - self.center[0]);
                split_interval(phi - half, phi + half)
            }
        };
        let mut total = 0.0;
        for [a, b] in &ball {
            for [c, e] in &self.intervals {
                let lo = a.max(*c);
                let hi = b.min(*e);
                if hi > lo {
                    total += hi - lo;
                }
            }
        }
        total * big_r
    }
}

/// Splits `(a, b)` with `b − a ≤ 2π` into pieces inside `[0, 2π]`.
fn split_interval(a: f64, b: f64) -> Vec<[f64; 2]> {
    let tau = 2.0 * PI;
    let a0 = a.rem_euclid(tau);
    let b0 = a0 + (b - a);
    if b0 <= tau {
        vec![[a0, b0]]
    } else {
        vec![[a0, tau], [0.0, b0 - tau]]
    }
}

const ARC_SCAN: usize = 4096;

fn admitted_arcs(grid: &DomainGrid, term: &Term, center: Point, radius: f64) -> Vec<[f64; 2]> {
    let at = |theta: f64| -> bool {
        let p = [center[0] + radius * theta.cos(), center[1] + radius * theta.sin()];
        term.admits(grid.delta_at(p))
    };
    let step = 2.0 * PI / ARC_SCAN as f64;
    let flags: Vec<bool> = (0..ARC_SCAN).map(|k| at(k as f64 * step)).collect();
    if flags.iter().all(|f| *f) {
        return vec![[0.0, 2.0 * PI]];
    }
    if !flags.iter().any(|f| *f) {
        return vec![];
    }
    // locate transitions between consecutive samples by bisection
    let refine = |lo: f64, hi: f64| -> f64 {
        let (mut lo, mut hi) = (lo, hi);
        let inside_lo = at(lo);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if at(mid) == inside_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut edges: Vec<(f64, bool)> = Vec::new(); // (angle, entering)
    for k in 0..ARC_SCAN {
        let next = (k + 1) % ARC_SCAN;
        if flags[k] != flags[next] {
            let theta = refine(k as f64 * step, (k + 1) as f64 * step);
            edges.push((theta, flags[next]));
        }
    }
    let mut intervals = Vec::new();
    let mut start: Option<f64> = if flags[0] { Some(0.0) } else { None };
    for (theta, entering) in edges {
        if entering {
            start = Some(theta);
        } else if let Some(s) = start.take() {
            intervals.push([s, theta.min(2.0 * PI)]);
        }
    }
    if let Some(s) = start {
        intervals.push([s, 2.0 * PI]);
    }
    intervals
}

/// Row-wise prefix sums over cell values, for fast sums over discs.
#[derive(Debug, Clone, PartialEq)]
struct RowPrefix {
    nx: usize,
    sums: Vec<f64>,
}

impl RowPrefix {
    fn new(grid: &DomainGrid, value: impl Fn(usize) -> f64) -> Self {
        let nx = grid.nx;
        let mut sums = vec![0.0; (nx + 1) * grid.ny];
        for cj in 0..grid.ny {
            let base = cj * (nx + 1);
            for ci in 0..nx {
                sums[base + ci + 1] = sums[base + ci] + value(grid.cell_index(ci, cj));
            }
        }
        RowPrefix { nx, sums }
    }

    fn row_sum(&self, cj: usize, lo: usize, hi: usize) -> f64 {
        let base = cj * (self.nx + 1);
        self.sums[base + hi + 1] - self.sums[base + lo]
    }
}

/// Row-wise sparse tables for range maxima.
struct RowMax {
    nx: usize,
    levels: Vec<Vec<f64>>,
}

impl RowMax {
    fn new(nx: usize, ny: usize, values: &[f64]) -> Self {
        let mut levels = vec![values.to_vec()];
        let mut span = 1;
        while 2 * span <= nx {
            let prev = levels.last().unwrap();
            let mut next = vec![f64::NEG_INFINITY; nx * ny];
            for cj in 0..ny {
                for ci in 0..=nx - 2 * span {
                    let k = cj * nx + ci;
                    next[k] = prev[k].max(prev[k + span]);
                }
            }
            levels.push(next);
            span *= 2;
        }
        RowMax { nx, levels }
    }

    fn row_max(&self, cj: usize, lo: usize, hi: usize) -> f64 {
        let len = hi - lo + 1;
        let lvl = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let span = 1 << lvl;
        let t = &self.levels[lvl];
        t[cj * self.nx + lo].max(t[cj * self.nx + hi + 1 - span])
    }
}

/// Iterates, per cell row, over the inclusive column range of cells whose
/// midpoints lie in the open disc `B(x, r)`.
fn disc_rows(origin: Point, h: f64, nx: usize, ny: usize, x: Point, r: f64, mut f: impl FnMut(usize, usize, usize)) {
    let cy = |cj: usize| origin[1] + (cj as f64 + 0.5) * h;
    let cx = |ci: usize| origin[0] + (ci as f64 + 0.5) * h;
    let j_lo = (((x[1] - r - origin[1]) / h - 0.5).floor().max(0.0)) as usize;
    let j_hi = (((x[1] + r - origin[1]) / h - 0.5).ceil().max(0.0) as usize).min(ny.saturating_sub(1));
    for cj in j_lo..=j_hi {
        let dy = cy(cj) - x[1];
        let w2 = r * r - dy * dy;
        if w2 <= 0.0 {
            continue;
        }
        let w = w2.sqrt();
        let lo_f = ((x[0] - w - origin[0]) / h - 0.5).floor().max(0.0);
        let hi_f = ((x[0] + w - origin[0]) / h - 0.5).ceil();
        if hi_f < 0.0 {
            continue;
        }
        let mut lo = lo_f as usize;
        let mut hi = (hi_f as usize).min(nx - 1);
        let inside = |ci: usize| {
            let dx = cx(ci) - x[0];
            dx * dx + dy * dy < r * r
        };
        while lo <= hi && !inside(lo) {
            lo += 1;
        }
        while hi >= lo && !inside(hi) {
            if hi == 0 {
                break;
            }
            hi -= 1;
        }
        if lo <= hi && inside(lo) && inside(hi) {
            f(cj, lo, hi);
        }
    }
}

/// A measure bound to a specific grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedMeasure {
    origin: Point,
    h: f64,
    nx: usize,
    ny: usize,
    /// Net signed density per cell.
    pub density: Option<Vec<f64>>,
    abs_prefix: Option<RowPrefix>,
    pub points: Vec<(Point, f64)>,
    pub arcs: Vec<CircleArcs>,
}

impl PreparedMeasure {
    pub fn is_zero(&self) -> bool {
        self.density.is_none() && self.points.iter().all(|p| p.1 == 0.0) && self.arcs.iter().all(|a| a.weight == 0.0)
    }

    /// Total variation `|μ|(B(center, r))` of the open ball.
    pub fn ball_mass(&self, center: Point, r: f64) -> f64 {
        let mut total = 0.0;
        if let Some(prefix) = &self.abs_prefix {
            let cell_area = self.h * self.h;
            disc_rows(self.origin, self.h, self.nx, self.ny, center, r, |cj, lo, hi| {
                total += prefix.row_sum(cj, lo, hi) * cell_area;
            });
        }
        for (p, w) in &self.points {
            if dist(*p, center) < r {
                total += w.abs();
            }
        }
        for arc in &self.arcs {
            total += arc.weight.abs() * arc.length_in_ball(center, r);
        }
        total
    }

    /// Total variation `|μ|(Ω)`.
    pub fn total_variation(&self) -> f64 {
        let cell_area = self.h * self.h;
        let dens = self.density.as_ref().map_or(0.0, |d| d.iter().map(|v| v.abs()).sum::<f64>() * cell_area);
        let pts: f64 = self.points.iter().map(|p| p.1.abs()).sum();
        let arcs: f64 = self
            .arcs
            .iter()
            .map(|a| a.weight.abs() * a.radius * a.intervals.iter().map(|[s, e]| e - s).sum::<f64>())
            .sum();
        dens + pts + arcs
    }
}

/// `|μ|(B(center, r))` for a measure on a grid.
pub fn ball_mass(mu: &MeasureSpec, grid: &DomainGrid, center: Point, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!("ball radius must be positive, got {r}")));
    }
    Ok(mu.prepare(grid)?.ball_mass(center, r))
}

/// Result of a sampled Morrey-type supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorreyReport {
    pub alpha: f64,
    /// The sampled supremum, `+∞` when divergence was detected
    /// (serialized as `null`).
    pub norm: f64,
    pub divergent: bool,
    /// Largest finite sampled value, regardless of the divergence flag.
    pub sampled_max: f64,
    pub argmax_center: Point,
    pub argmax_radius: f64,
    /// Number of `(x, r)` pairs evaluated.
    pub samples: usize,
}

/// Dyadic radii `δ/2 · 2^{−j}` (shrunk by one ulp-scale factor so the
/// bound `r < δ/2` is strict), down to `2h`.
pub fn dyadic_radii(delta: f64, h: f64) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = 0.5 * delta * (1.0 - 1e-12);
    while r >= 2.0 * h {
        radii.push(r);
        r *= 0.5;
    }
    radii
}

const GROWTH: f64 = 1.0 + 1e-9;

/// Shared driver for the Morrey-type suprema: `value(x, r)` is evaluated
/// on every interior node and its dyadic radii.
fn morrey_scan(grid: &DomainGrid, alpha: f64, value: impl Fn(Point, f64) -> f64 + Sync) -> MorreyReport {
    use rayon::prelude::*;
    let nodes = grid.interior_nodes();
    struct Local {
        best: f64,
        center: Point,
        radius: f64,
        samples: usize,
        grows: bool,
        delta: f64,
    }
    let locals: Vec<Local> = nodes
        .par_iter()
        .map(|&idx| {
            let x = grid.coords(idx);
            let radii = dyadic_radii(grid.delta[idx], grid.h);
            let vals: Vec<f64> = radii.iter().map(|&r| value(x, r)).collect();
            let mut best = 0.0;
            let mut radius = radii.first().copied().unwrap_or(0.0);
            for (v, r) in vals.iter().zip(&radii) {
                if *v > best {
                    best = *v;
                    radius = *r;
                }
            }
            // growth through the last three dyadic levels
            let n = vals.len();
            let grows = n >= 3 && vals[n - 3] > 0.0 && vals[n - 2] > vals[n - 3] * GROWTH && vals[n - 1] > vals[n - 2] * GROWTH;
            Local { best, center: x, radius, samples: vals.len(), grows, delta: grid.delta[idx] }
        })
        .collect();

    let mut report = MorreyReport {
        alpha,
        norm: 0.0,
        divergent: false,
        sampled_max: 0.0,
        argmax_center: locals.first().map_or([0.0, 0.0], |l| l.center),
        argmax_radius: locals.first().map_or(0.0, |l| l.radius),
        samples: 0,
    };
    for l in &locals {
        report.samples += l.samples;
        if l.best > report.sampled_max {
            report.sampled_max = l.best;
            report.argmax_center = l.center;
            report.argmax_radius = l.radius;
        }
        if l.grows {
            report.divergent = true;
        }
    }
    // growth toward the boundary: shell suprema over δ ∈ [D 2^{-k-1}, D 2^{-k})
    let dmax = locals.iter().map(|l| l.delta).fold(0.0, f64::max);
    if dmax > 0.0 {
        let mut shells: Vec<f64> = Vec::new();
        let mut k = 0;
        loop {
            let hi = dmax * 0.5f64.powi(k);
            let lo = hi * 0.5;
            if lo < 4.0 * grid.h {
                break;
            }
            let s = locals
                .iter()
                .filter(|l| l.delta >= lo && (l.delta < hi || k == 0))
                .map(|l| l.best)
                .fold(0.0, f64::max);
            shells.push(s);
            k += 1;
        }
        let n = shells.len();
        if n >= 3 && shells[n - 3] > 0.0 && shells[n - 2] > shells[n - 3] * GROWTH && shells[n - 1] > shells[n - 2] * GROWTH {
            report.divergent = true;
        }
    }
    report.norm = if report.divergent { f64::INFINITY } else { report.sampled_max };
    report
}

/// `⦀μ⦀_α = sup r^{−α} |μ|(B(x, r))` over interior nodes `x` and dyadic
/// `r < δ(x)/2` (two-dimensional exponent `2 − n − α = −α`).
pub fn morrey_norm(mu: &MeasureSpec, grid: &DomainGrid, alpha: f64) -> Result<MorreyReport> {
    check_alpha(alpha)?;
    let prepared = mu.prepare(grid)?;
    Ok(morrey_norm_prepared(&prepared, grid, alpha))
}

pub fn morrey_norm_prepared(prepared: &PreparedMeasure, grid: &DomainGrid, alpha: f64) -> MorreyReport {
    if prepared.is_zero() {
        let mut rep = morrey_scan(grid, alpha, |_, _| 0.0);
        rep.divergent = false;
        rep.norm = 0.0;
        return rep;
    }
    morrey_scan(grid, alpha, |x, r| r.powf(-alpha) * prepared.ball_mass(x, r))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParams(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// `M = sup r^{2−α−n/q} ‖f‖_{L^q(B(x, r))}` on the same sampling as
/// [`morrey_norm`]; `q = ∞` is `f64::INFINITY`.
pub fn morrey_from_density(f: &DensityFn, grid: &DomainGrid, q: f64, alpha: f64) -> Result<MorreyReport> {
    check_alpha(alpha)?;
    if !(q >= 1.0) {
        return Err(Error::InvalidParams(format!("integrability q must lie in [1, ∞], got {q}")));
    }
    let vals = f.sample(grid)?;
    if vals.iter().all(|v| *v == 0.0) {
        let mut rep = morrey_scan(grid, alpha, |_, _| 0.0);
        rep.norm = 0.0;
        rep.divergent = false;
        return Ok(rep);
    }
    let (origin, h, nx, ny) = (grid.origin, grid.h, grid.nx, grid.ny);
    let cell_area = h * h;
    if q.is_infinite() {
        let abs: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
        let table = RowMax::new(nx, ny, &abs);
        Ok(morrey_scan(grid, alpha, |x, r| {
            let mut m = 0.0f64;
            disc_rows(origin, h, nx, ny, x, r, |cj, lo, hi| m = m.max(table.row_max(cj, lo, hi)));
            r.powf(2.0 - alpha) * m
        }))
    } else {
        let prefix = RowPrefix::new(grid, |c| vals[c].abs().powf(q));
        Ok(morrey_scan(grid, alpha, |x, r| {
            let mut s = 0.0;
            disc_rows(origin, h, nx, ny, x, r, |cj, lo, hi| s += prefix.row_sum(cj, lo, hi));
            r.powf(2.0 - alpha - 2.0 / q) * (s * cell_area).powf(1.0 / q)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, DomainSpec};

    fn square(res: usize) -> DomainGrid {
        build_grid(&DomainSpec::UnitSquare, res).unwrap()
    }

    #[test]
    fn lebesgue_ball_mass_is_disc_area() {
        let grid = square(128);
        let m = ball_mass(&MeasureSpec::constant_density(1.0), &grid, [0.5, 0.5], 0.2).unwrap();
        assert!((m - PI * 0.04).abs() < 2.0 * PI * 0.2 * grid.h, "{m}");
    }

    #[test]
    fn disc_rows_matches_brute_force() {
        let grid = square(32);
        for &(x, r) in &[([0.5, 0.5], 0.2), ([0.1, 0.03], 0.11), ([0.0, 1.0], 0.3), ([0.5, 0.5], 2.0)] {
            let mut fast = 0usize;
            disc_rows(grid.origin, grid.h, grid.nx, grid.ny, x, r, |_, lo, hi| fast += hi - lo + 1);
            let mut brute = 0usize;
            for cj in 0..grid.ny {
                for ci in 0..grid.nx {
                    if dist(grid.cell_center(ci, cj), x) < r {
                        brute += 1;
                    }
                }
            }
            assert_eq!(fast, brute, "{x:?} {r}");
        }
    }

    #[test]
    fn point_mass_containment() {
        let grid = square(32);
        let mu = MeasureSpec::point_mass([0.5, 0.5], 3.0);
        assert_eq!(ball_mass(&mu, &grid, [0.5, 0.5], 0.1).unwrap(), 3.0);
        assert_eq!(ball_mass(&mu, &grid, [0.8, 0.5], 0.1).unwrap(), 0.0);
        assert!(ball_mass(&mu, &grid, [0.5, 0.5], 0.0).is_err());
    }

    #[test]
    fn circle_arc_in_ball_matches_chord_angle() {
        let grid = build_grid(&DomainSpec::unit_disk(), 64).unwrap();
        let mu = MeasureSpec::circle([0.0, 0.0], 0.5, 1.0);
        for r in [0.1, 0.05, 0.3] {
            let m = ball_mass(&mu, &grid, [0.5, 0.0], r).unwrap();
            // ball centred on the circle: half-angle 2·asin(r / 2R)
            let oracle = 2.0 * 0.5 * 2.0 * (r / (2.0 * 0.5)).asin();
            assert!((m - oracle).abs() < 1e-12, "{m} vs {oracle}");
        }
        let m = ball_mass(&mu, &grid, [0.5, 0.0], 0.1).unwrap();
        assert!((m - 0.2).abs() < 1e-3);
    }

    #[test]
    fn ball_mass_monotone_in_radius() {
        let grid = square(64);
        let mu = MeasureSpec::constant_density(1.0)
            .plus(MeasureSpec::point_mass([0.3, 0.3], 0.5))
            .plus(MeasureSpec::circle([0.5, 0.5], 0.2, 2.0));
        let prepared = mu.prepare(&grid).unwrap();
        let mut last = 0.0;
        for k in 1..60 {
            let m = prepared.ball_mass([0.41, 0.47], k as f64 * 0.01);
            assert!(m >= last);
            last = m;
        }
    }

    #[test]
    fn morrey_of_lebesgue_on_square() {
        let grid = square(64);
        let rep = morrey_norm(&MeasureSpec::constant_density(1.0), &grid, 1.0).unwrap();
        assert!(!rep.divergent);
        // sup of π r over r < 1/4
        assert!((rep.norm - PI / 4.0).abs() < 0.05 * PI / 4.0, "{}", rep.norm);
        assert!(rep.argmax_radius < grid.delta[grid.nearest_node(rep.argmax_center)] / 2.0);
    }

    #[test]
    fn morrey_of_zero_and_point_mass() {
        let grid = square(64);
        let zero = morrey_norm(&MeasureSpec::zero(), &grid, 0.5).unwrap();
        assert_eq!(zero.norm, 0.0);
        assert!(!zero.divergent);
        let point = morrey_norm(&MeasureSpec::point_mass([0.5, 0.5], 1.0), &grid, 0.5).unwrap();
        assert!(point.divergent);
        assert!(point.norm.is_infinite());
        assert!(morrey_norm(&MeasureSpec::zero(), &grid, 0.0).is_err());
    }

    #[test]
    fn density_bound_of_constant() {
        let grid = square(64);
        let f = DensityFn::Constant { value: 1.0 };
        let rep = morrey_from_density(&f, &grid, f64::INFINITY, 1.0).unwrap();
        assert!((rep.norm - 0.25).abs() < 0.05 * 0.25, "{}", rep.norm);
        let zero = morrey_from_density(&DensityFn::Constant { value: 0.0 }, &grid, 2.0, 1.0).unwrap();
        assert_eq!(zero.norm, 0.0);
    }

    #[test]
    fn truncation_of_lebesgue_on_square() {
        let grid = square(64);
        let mu = MeasureSpec::constant_density(1.0);
        assert!(mu.truncate(1).unwrap().prepare(&grid).unwrap().is_zero());
        let t4 = mu.truncate(4).unwrap().prepare(&grid).unwrap();
        let d = t4.density.as_ref().unwrap();
        // cells whose midpoints lie in the open square (1/4, 3/4)^2
        for cj in 0..grid.ny {
            for ci in 0..grid.nx {
                let c = grid.cell_center(ci, cj);
                let inside = c[0] > 0.25 && c[0] < 0.75 && c[1] > 0.25 && c[1] < 0.75;
                assert_eq!(d[grid.cell_index(ci, cj)] != 0.0, inside);
            }
        }
        assert!((t4.total_variation() - 0.25).abs() < 1e-12);
        assert!(mu.truncate(0).is_err());
    }

    #[test]
    fn deep_circle_survives_truncation() {
        let grid = build_grid(&DomainSpec::unit_disk(), 64).unwrap();
        let mu = MeasureSpec::circle([0.0, 0.0], 0.9, 1.0);
        let full = mu.prepare(&grid).unwrap();
        let cut = mu.truncate(20).unwrap().prepare(&grid).unwrap();
        assert_eq!(full.arcs, cut.arcs);
        let rest = mu.truncation_remainder(20).unwrap().prepare(&grid).unwrap();
        assert!(rest.is_zero());
    }

    #[test]
    fn partial_arc_restriction() {
        // circle of radius 0.5 centred at (0.5, 0.5) in the square touches
        // the boundary; only arcs with δ > 0.1 survive
        let grid = square(64);
        let mu = MeasureSpec::circle([0.5, 0.5], 0.45, 1.0);
        let cut = mu.truncate(10).unwrap().prepare(&grid).unwrap();
        let rest = mu.truncation_remainder(10).unwrap().prepare(&grid).unwrap();
        let full = mu.prepare(&grid).unwrap();
        let sum = cut.total_variation() + rest.total_variation();
        assert!((sum - full.total_variation()).abs() < 1e-9);
        // δ > 0.1 ⇔ |cos θ|, |sin θ| < 0.4 / 0.45
        let c = 0.4f64 / 0.45;
        let per_quadrant = c.asin() - c.acos();
        assert!((cut.total_variation() - 4.0 * 0.45 * per_quadrant).abs() < 1e-9, "{}", cut.total_variation());
    }

    #[test]
    fn json_shape() {
        let text = r#"{"terms":[{"kind":"grid_density","density":{"type":"constant","value":1.0},"sign":1},
                     {"kind":"point_mass","location":[0.5,0.5],"weight":2.0,"sign":-1},
                     {"kind":"circle_surface","radius":0.5}]}"#;
        let mu: MeasureSpec = serde_json::from_str(text).unwrap();
        assert_eq!(mu.terms.len(), 3);
        assert_eq!(mu.terms[1].sign, -1);
        let back: MeasureSpec = serde_json::from_value(serde_json::to_value(&mu).unwrap()).unwrap();
        assert_eq!(back, mu);
        let bad = MeasureSpec { terms: vec![Term { sign: 2, ..Term::new(TermKind::PointMass { location: [0.0, 0.0], weight: 1.0 }) }] };
        assert!(bad.validate().is_err());
    }
}
