//! Variational capacities of condensers and the boundary diagnostics
//! built on them: capacity and volume density scans, uniform
//! perfectness, Hardy constants and strong barriers.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_grid, dist, Ball, DomainGrid, DomainSpec, NodeKind, Point};
use crate::q1::{Lattice, Mat2, IDENTITY};
use crate::sparse::{self, SolverSettings};

/// Seed of the boundary subsample.
pub const SAMPLE_SEED: u64 = 42;

/// Default number of boundary samples.
pub const DEFAULT_SAMPLES: usize = 512;

const IDENTITY_COEF: &(dyn Fn(usize) -> Mat2 + Sync) = &|_| IDENTITY;

fn capacity_settings() -> SolverSettings {
    SolverSettings::with_tol(1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Free,
    Plate,
    Ground,
}

/// Dirichlet energy of the discrete potential on a `(2m+1)²` lattice
/// window: 1 on plate nodes, 0 on ground nodes, harmonic elsewhere.
/// Returns `(energy, plate nodes, free nodes)`.
fn window_energy(m: usize, role: impl Fn(i64, i64) -> Role) -> Result<(f64, usize, usize)> {
    let lat = Lattice::open(2 * m, 2 * m);
    let n = lat.node_count();
    let mut free = vec![false; n];
    let mut fixed = vec![0.0; n];
    let (mut plates, mut frees) = (0, 0);
    for j in 0..=2 * m {
        for i in 0..=2 * m {
            let k = lat.node(i, j);
            // the window's outer ring is always grounded
            let on_edge = i == 0 || j == 0 || i == 2 * m || j == 2 * m;
            match role(i as i64 - m as i64, j as i64 - m as i64) {
                Role::Plate => {
                    fixed[k] = 1.0;
                    plates += 1;
                }
                Role::Free if !on_edge => {
                    free[k] = true;
                    frees += 1;
                }
                _ => {}
            }
        }
    }
    if plates == 0 || frees == 0 {
        return Ok((0.0, plates, frees));
    }
    let system = lat.assemble(IDENTITY_COEF, &free, Some(&fixed));
    let mut x = vec![0.0; system.dof_nodes.len()];
    sparse::solve_spd(&system.matrix, &system.lifting, &mut x, &capacity_settings())?;
    let u = system.scatter(&x, Some(&fixed));
    Ok((lat.energy(IDENTITY_COEF, &u), plates, frees))
}

/// Compact plate of a condenser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompactSpec {
    Empty,
    /// Closed disc.
    Disk { center: Point, radius: f64 },
    /// The lattice nodes nearest to the given points.
    Nodes { points: Vec<Point> },
}

/// Condenser `(K, U)` with `U` an open ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondenserSpec {
    pub k: CompactSpec,
    pub u: Ball,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity: f64,
    pub h: f64,
    pub plate_nodes: usize,
    pub free_nodes: usize,
}

/// `cap(K, U)` as the Dirichlet energy of the discrete condenser
/// potential on a lattice with `resolution` cells across `U`, centred at
/// the centre of `U`.
pub fn variational_capacity(cond: &CondenserSpec, resolution: usize) -> Result<CapacityResult> {
    if resolution < 8 || resolution % 2 != 0 {
        return Err(Error::InvalidParams(format!("resolution must be even and >= 8, got {resolution}")));
    }
    let ub = cond.u;
    if !(ub.radius > 0.0) {
        return Err(Error::DegenerateCondenser("U has non-positive radius".into()));
    }
    let m = resolution / 2 + 1;
    let h = 2.0 * ub.radius / resolution as f64;
    let at = |i: i64, j: i64| [ub.center[0] + i as f64 * h, ub.center[1] + j as f64 * h];
    let snapped: Vec<(i64, i64)> = match &cond.k {
        CompactSpec::Nodes { points } => points
            .iter()
            .map(|p| (((p[0] - ub.center[0]) / h).round() as i64, ((p[1] - ub.center[1]) / h).round() as i64))
            .collect(),
        _ => Vec::new(),
    };
    let in_k = |i: i64, j: i64| -> bool {
        match &cond.k {
            CompactSpec::Empty => false,
            CompactSpec::Disk { center, radius } => dist(at(i, j), *center) <= *radius * (1.0 + 1e-12),
            CompactSpec::Nodes { .. } => snapped.contains(&(i, j)),
        }
    };
    if matches!(cond.k, CompactSpec::Empty) {
        return Ok(CapacityResult { capacity: 0.0, h, plate_nodes: 0, free_nodes: 0 });
    }
    // plate nodes must keep two cells of clearance from ∂U
    let span = m as i64;
    for j in -span..=span {
        for i in -span..=span {
            if in_k(i, j) && dist(at(i, j), ub.center) > ub.radius - 2.0 * h + 1e-12 {
                return Err(Error::DegenerateCondenser("K is not compactly contained in U at this resolution".into()));
            }
        }
    }
    let (capacity, plate_nodes, free_nodes) = window_energy(m, |i, j| {
        if in_k(i, j) {
            Role::Plate
        } else if dist(at(i, j), ub.center) < ub.radius {
            Role::Free
        } else {
            Role::Ground
        }
    })?;
    if plate_nodes == 0 {
        return Err(Error::DegenerateCondenser("K rasterizes to no lattice node".into()));
    }
    if free_nodes == 0 {
        return Err(Error::DegenerateCondenser("U minus K rasterizes to no lattice node".into()));
    }
    Ok(CapacityResult { capacity, h, plate_nodes, free_nodes })
}

/// Boundary nodes used as scan centres: all of them when there are at
/// most `samples`, else a seeded uniform subsample.
pub fn boundary_samples(grid: &DomainGrid, samples: usize, seed: u64) -> Vec<usize> {
    let all = grid.boundary_nodes();
    if all.len() <= samples {
        return all;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, all.len(), samples).into_iter().map(|k| all[k]).collect();
    picked.sort_unstable();
    picked
}

/// Dyadic radii from `diam/4` down to `8h`, at most `scales` of them.
pub fn scan_radii(grid: &DomainGrid, scales: usize) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = grid.diameter() / 4.0;
    while r >= 8.0 * grid.h * (1.0 - 1e-9) && radii.len() < scales {
        radii.push(r);
        r *= 0.5;
    }
    radii
}

/// Options shared by the boundary scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub samples: usize,
    pub scales: usize,
    /// Explicit centres, snapped to the nearest node; overrides sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Point>>,
    /// Explicit radii; overrides the dyadic ladder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    SAMPLE_SEED
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { samples: DEFAULT_SAMPLES, scales: usize::MAX, points: None, radii: None, seed: SAMPLE_SEED }
    }
}

fn scan_centres(grid: &DomainGrid, opts: &ScanOptions) -> Vec<usize> {
    match &opts.points {
        Some(pts) => pts.iter().map(|p| grid.nearest_node(*p)).collect(),
        None => boundary_samples(grid, opts.samples, opts.seed),
    }
}

fn scan_scales(grid: &DomainGrid, opts: &ScanOptions) -> Vec<f64> {
    opts.radii.clone().unwrap_or_else(|| scan_radii(grid, opts.scales))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub xi: Point,
    pub radius: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdcReport {
    pub samples: Vec<ScanSample>,
    pub gamma_min: f64,
    /// `(R, min over ξ)` per scale.
    pub gamma_by_scale: Vec<(f64, f64)>,
    /// `(R, cap(B̄_R, B_2R))` as computed on the same lattice.
    pub denominators: Vec<(f64, f64)>,
    /// Largest `|ρ(ξ,R) − ρ(ξ,R/2)| / max` over centres and consecutive
    /// scales.
    pub scale_variation: f64,
}

fn window_for(grid: &DomainGrid, radius: f64) -> usize {
    (2.0 * radius / grid.h).ceil() as usize + 1
}

/// `cap(B̄(ξ,R) ∖ Ω, B(ξ,2R)) / cap(B̄(ξ,R), B(ξ,2R))` at boundary
/// centres and dyadic radii.
pub fn cdc_scan(grid: &DomainGrid, opts: &ScanOptions) -> Result<CdcReport> {
    let centres = scan_centres(grid, opts);
    let radii = scan_scales(grid, opts);
    if centres.is_empty() || radii.is_empty() {
        return Err(Error::InvalidParams("cdc scan has no centres or no admissible radii".into()));
    }
    let h = grid.h;
    let denominators: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| {
            let m = window_for(grid, r);
            window_energy(m, |i, j| {
                let d = h * ((i * i + j * j) as f64).sqrt();
                if d <= r * (1.0 + 1e-12) {
                    Role::Plate
                } else if d < 2.0 * r {
                    Role::Free
                } else {
                    Role::Ground
                }
            })
            .map(|(e, _, _)| (r, e))
        })
        .collect::<Result<_>>()?;
    let den: HashMap<u64, f64> = denominators.iter().map(|(r, e)| (r.to_bits(), *e)).collect();
    let pairs: Vec<(usize, f64)> = centres.iter().flat_map(|&c| radii.iter().map(move |&r| (c, r))).collect();
    let samples: Vec<ScanSample> = pairs
        .par_iter()
        .map(|&(c, r)| {
            let (ci, cj) = grid.ij(c);
            let (ci, cj) = (ci as i64, cj as i64);
            let m = window_for(grid, r);
            let (num, _, _) = window_energy(m, |i, j| {
                let d = h * ((i * i + j * j) as f64).sqrt();
                if d <= r * (1.0 + 1e-12) && !grid.lattice_is_interior(ci + i, cj + j) {
                    Role::Plate
                } else if d < 2.0 * r {
                    Role::Free
                } else {
                    Role::Ground
                }
            })?;
            Ok(ScanSample { xi: grid.coords(c), radius: r, ratio: num / den[&r.to_bits()] })
        })
        .collect::<Result<_>>()?;
    let gamma_min = samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
    let gamma_by_scale = radii
        .iter()
        .map(|&r| (r, samples.iter().filter(|s| s.radius == r).map(|s| s.ratio).fold(f64::INFINITY, f64::min)))
        .collect();
    let mut scale_variation: f64 = 0.0;
    for (k, _) in centres.iter().enumerate() {
        let row = &samples[k * radii.len()..(k + 1) * radii.len()];
        for w in row.windows(2) {
            let hi = w[0].ratio.max(w[1].ratio);
            if hi > 0.0 {
                scale_variation = scale_variation.max((w[0].ratio - w[1].ratio).abs() / hi);
            }
        }
    }
    Ok(CdcReport { samples, gamma_min, gamma_by_scale, denominators, scale_variation })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdcReport {
    pub samples: Vec<ScanSample>,
    /// `min |B̄(ξ,R) ∖ Ω| / R²`.
    pub ratio_min: f64,
}

/// Whether the cell with lower-left lattice corner `(ci, cj)` lies
/// outside Ω, judged at its midpoint.
fn cell_outside(grid: &DomainGrid, ci: i64, cj: i64) -> bool {
    let p = [grid.origin[0] + (ci as f64 + 0.5) * grid.h, grid.origin[1] + (cj as f64 + 0.5) * grid.h];
    match grid.shape() {
        Some(shape) => !shape.contains(p),
        None => (0..4).all(|k| !grid.lattice_is_interior(ci + (k % 2), cj + (k / 2))),
    }
}

/// `|B̄(ξ,R) ∖ Ω| / R²` by counting cells whose midpoints lie in the
/// closed ball and outside Ω.
pub fn vdc_scan(grid: &DomainGrid, opts: &ScanOptions) -> Result<VdcReport> {
    let centres = scan_centres(grid, opts);
    let radii = scan_scales(grid, opts);
    if centres.is_empty() || radii.is_empty() {
        return Err(Error::InvalidParams("vdc scan has no centres or no admissible radii".into()));
    }
    let pairs: Vec<(usize, f64)> = centres.iter().flat_map(|&c| radii.iter().map(move |&r| (c, r))).collect();
    let samples: Vec<ScanSample> = pairs
        .par_iter()
        .map(|&(c, r)| {
            let (ci, cj) = grid.ij(c);
            let xi = grid.coords(c);
            let m = (r / grid.h).ceil() as i64 + 1;
            let mut count = 0usize;
            for dj in -m..m {
                for di in -m..m {
                    let (a, b) = (ci as i64 + di, cj as i64 + dj);
                    let mid = [grid.origin[0] + (a as f64 + 0.5) * grid.h, grid.origin[1] + (b as f64 + 0.5) * grid.h];
                    if dist(mid, xi) <= r && cell_outside(grid, a, b) {
                        count += 1;
                    }
                }
            }
            ScanSample { xi, radius: r, ratio: count as f64 * grid.h * grid.h / (r * r) }
        })
        .collect();
    let ratio_min = samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
    Ok(VdcReport { samples, ratio_min })
}

/// A failed annulus `B(x,R) ∖ B(x,cR)` with no point of `E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusWitness {
    pub x: Point,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfectnessReport {
    pub perfect: bool,
    pub c: f64,
    pub checked: usize,
    pub worst: Option<AnnulusWitness>,
}

fn check_ratio(c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParams(format!("annulus ratio c must lie in (0, 1), got {c}")));
    }
    Ok(())
}

/// Dyadic radii `r_max/2^k ≥ r_min`.
fn dyadic_between(r_max: f64, r_min: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r_max;
    while r >= r_min {
        out.push(r);
        r *= 0.5;
    }
    out
}

/// Uniform perfectness of a finite set: every `x ∈ E` and dyadic
/// `R ∈ [r_min, diam E)` must see a point of `E` with `cR ≤ |y−x| < R`.
pub fn uniform_perfectness_points(e: &[Point], c: f64, r_min: f64) -> Result<PerfectnessReport> {
    check_ratio(c)?;
    let mut diam: f64 = 0.0;
    for a in e {
        for b in e {
            diam = diam.max(dist(*a, *b));
        }
    }
    let radii = dyadic_between(diam * (1.0 - 1e-12), r_min);
    let mut checked = 0;
    for x in e {
        let mut ds: Vec<f64> = e.iter().map(|y| dist(*x, *y)).collect();
        ds.sort_by(f64::total_cmp);
        for &r in &radii {
            checked += 1;
            let lo = ds.partition_point(|d| *d < c * r);
            if !(lo < ds.len() && ds[lo] < r) {
                return Ok(PerfectnessReport { perfect: false, c, checked, worst: Some(AnnulusWitness { x: *x, radius: r }) });
            }
        }
    }
    Ok(PerfectnessReport { perfect: true, c, checked, worst: None })
}

/// Uniform perfectness of `E = ℝ² ∖ Ω` as seen on the grid. Lattice
/// nodes beyond the grid count as points of `E` (the unbounded side),
/// so radii run from `diam(bbox)` down to the resolution limit.
pub fn uniform_perfectness_scan(grid: &DomainGrid, samples: usize, c: f64, seed: u64) -> Result<PerfectnessReport> {
    check_ratio(c)?;
    let e_nodes: Vec<usize> = (0..grid.node_count()).filter(|&k| grid.mask[k] != NodeKind::Interior).collect();
    let mut centres = boundary_samples(grid, samples, seed);
    // isolated points of E decide the test, keep them whatever the sample
    for &k in &e_nodes {
        let (i, j) = grid.ij(k);
        if grid.mask[k] == NodeKind::Boundary && grid.neighbors8(i, j).all(|q| grid.is_interior(q)) && !centres.contains(&k) {
            centres.push(k);
        }
    }
    let (w, hgt) = (grid.nx as f64 * grid.h, grid.ny as f64 * grid.h);
    let r_max = (w * w + hgt * hgt).sqrt();
    let r_min = 4.0 * grid.h / (1.0 - c);
    let radii = dyadic_between(r_max, r_min);
    let results: Vec<(usize, Option<AnnulusWitness>)> = centres
        .par_iter()
        .map(|&k| {
            let x = grid.coords(k);
            let mut ds: Vec<f64> = e_nodes.iter().map(|&q| dist(x, grid.coords(q))).collect();
            ds.sort_by(f64::total_cmp);
            // first lattice ring beyond the grid
            let out = [x[0] - grid.origin[0], grid.origin[0] + w - x[0], x[1] - grid.origin[1], grid.origin[1] + hgt - x[1]]
                .iter()
                .fold(f64::INFINITY, |m, v| m.min(*v))
                + grid.h;
            let mut checked = 0;
            for &r in &radii {
                checked += 1;
                let lo = ds.partition_point(|d| *d < c * r);
                let inside = lo < ds.len() && ds[lo] < r;
                if !inside && !(r > out + grid.h) {
                    return (checked, Some(AnnulusWitness { x, radius: r }));
                }
            }
            (checked, None)
        })
        .collect();
    let checked = results.iter().map(|r| r.0).sum();
    let worst = results.iter().filter_map(|r| r.1).max_by(|a, b| a.radius.total_cmp(&b.radius));
    Ok(PerfectnessReport { perfect: worst.is_none(), c, checked, worst })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    /// Smallest generalized eigenvalue found (an upper bound for the
    /// discrete Hardy constant).
    pub estimate: f64,
    /// Minimizing nodal field, normalized to unit weighted norm.
    pub eigenfield: Vec<f64>,
    pub iterations: usize,
    /// `(resolution, estimate)` when computed over a refinement ladder.
    pub trace: Vec<(usize, f64)>,
}

/// Iteration cap of the inverse power method.
pub const HARDY_MAX_ITER: usize = 200;

/// Lumped `1/δ²` weight, clipped at `δ ≥ h/2`.
fn hardy_weight(grid: &DomainGrid, node: usize) -> f64 {
    let d = grid.delta[node].max(0.5 * grid.h);
    grid.h * grid.h / (d * d)
}

/// Discretization of the `1/δ²` mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HardyMass {
    /// Nodal weights `h²/max(δ, h/2)²`.
    Lumped,
    /// `∫ w ψ_a ψ_b` with `w = 1/max(δ, h/2)²` at 2×2 Gauss points.
    #[default]
    Consistent,
}

const GAUSS: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];

fn consistent_mass(grid: &DomainGrid, system: &crate::q1::Assembled) -> sparse::CsrMatrix {
    let lat = Lattice::open(grid.nx, grid.ny);
    let h = grid.h;
    // per cell: weights at the four Gauss points
    let cell_w: Vec<[f64; 4]> = (0..grid.nx * grid.ny)
        .into_par_iter()
        .map(|c| {
            let (ci, cj) = (c % grid.nx, c / grid.nx);
            let mut w = [0.0; 4];
            for (g, wg) in w.iter_mut().enumerate() {
                let (s, t) = (GAUSS[g % 2], GAUSS[g / 2]);
                let p = [grid.origin[0] + (ci as f64 + s) * h, grid.origin[1] + (cj as f64 + t) * h];
                let d = grid.delta_at(p).max(0.5 * h);
                *wg = 0.25 * h * h / (d * d);
            }
            w
        })
        .collect();
    let shape = |a: usize, s: f64, t: f64| -> f64 {
        let sx = if a % 2 == 0 { 1.0 - s } else { s };
        let ty = if a / 2 == 0 { 1.0 - t } else { t };
        sx * ty
    };
    let rows: Vec<Vec<(usize, f64)>> = system
        .dof_nodes
        .par_iter()
        .map(|&node| {
            let (i, j) = grid.ij(node);
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(9);
            for (dci, a) in [(-1i64, 1usize), (0, 0)] {
                for (dcj, b) in [(-1i64, 1usize), (0, 0)] {
                    let (ci, cj) = (i as i64 + dci, j as i64 + dcj);
                    if ci < 0 || cj < 0 || ci >= grid.nx as i64 || cj >= grid.ny as i64 {
                        continue;
                    }
                    let (ci, cj) = (ci as usize, cj as usize);
                    let local = b * 2 + a;
                    let w = &cell_w[cj * grid.nx + ci];
                    for (other, &q) in lat.cell_nodes(ci, cj).iter().enumerate() {
                        let dof = system.node_dof[q];
                        if dof == crate::q1::NO_DOF {
                            continue;
                        }
                        let mut v = 0.0;
                        for g in 0..4 {
                            let (s, t) = (GAUSS[g % 2], GAUSS[g / 2]);
                            v += w[g] * shape(local, s, t) * shape(other, s, t);
                        }
                        row.push((dof as usize, v));
                    }
                }
            }
            row.sort_by_key(|e| e.0);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            row
        })
        .collect();
    sparse::CsrMatrix::from_rows(system.dof_nodes.len(), rows)
}

/// Smallest eigenvalue of `K φ = λ M φ` with `K` the Dirichlet stiffness
/// and `M` the `1/δ²` mass, by inverse power iteration from `δ^{1/2}`.
/// Stops when the Rayleigh quotient moves by less than `tol` relatively.
pub fn hardy_constant(grid: &DomainGrid, tol: f64) -> Result<HardyReport> {
    hardy_constant_with(grid, tol, HardyMass::default())
}

pub fn hardy_constant_with(grid: &DomainGrid, tol: f64, mass: HardyMass) -> Result<HardyReport> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParams(format!("tol must lie in (0, 1), got {tol}")));
    }
    let free: Vec<bool> = grid.mask.iter().map(|k| *k == NodeKind::Interior).collect();
    if !free.iter().any(|f| *f) {
        return Err(Error::EmptyInterior { resolution: grid.nx.max(grid.ny) });
    }
    let lat = Lattice::open(grid.nx, grid.ny);
    let system = lat.assemble(IDENTITY_COEF, &free, None);
    let k = &system.matrix;
    let m = match mass {
        HardyMass::Lumped => {
            let rows = system.dof_nodes.iter().enumerate().map(|(d, &n)| vec![(d, hardy_weight(grid, n))]).collect();
            sparse::CsrMatrix::from_rows(system.dof_nodes.len(), rows)
        }
        HardyMass::Consistent => consistent_mass(grid, &system),
    };
    let mut x: Vec<f64> = system.dof_nodes.iter().map(|&q| grid.delta[q].sqrt()).collect();
    let mut mx = vec![0.0; x.len()];
    let rayleigh = |x: &[f64], mx: &mut [f64]| -> (f64, f64) {
        let mut kx = vec![0.0; x.len()];
        k.matvec(x, &mut kx);
        m.matvec(x, mx);
        let den = sparse::dot(x, mx);
        (sparse::dot(x, &kx) / den, den)
    };
    let (mut lambda, den) = rayleigh(&x, &mut mx);
    let s = den.sqrt();
    x.iter_mut().for_each(|v| *v /= s);
    mx.iter_mut().for_each(|v| *v /= s);
    let settings = SolverSettings::with_tol(1e-8);
    let mut y = x.clone();
    let mut last_move = f64::INFINITY;
    for it in 1..=HARDY_MAX_ITER {
        // warm start: K⁻¹Mx ≈ x/λ
        y.iter_mut().zip(&x).for_each(|(y, x)| *y = x / lambda);
        sparse::solve_spd(k, &mx, &mut y, &settings)?;
        let (next, den) = rayleigh(&y, &mut mx);
        let s = den.sqrt();
        x.iter_mut().zip(&y).for_each(|(x, y)| *x = y / s);
        mx.iter_mut().for_each(|v| *v /= s);
        let moved = (lambda - next).abs() / next.abs().max(f64::MIN_POSITIVE);
        lambda = next;
        last_move = moved;
        if moved < tol {
            return Ok(HardyReport { estimate: lambda, eigenfield: system.scatter(&x, None), iterations: it, trace: Vec::new() });
        }
    }
    Err(Error::NoConvergence { iterations: HARDY_MAX_ITER, residual: last_move })
}

/// Hardy estimates over a list of resolutions; the report carries the
/// finest run plus the whole trace.
pub fn hardy_refinement(spec: &DomainSpec, resolutions: &[usize], tol: f64) -> Result<HardyReport> {
    let mut trace = Vec::new();
    let mut last = None;
    for &res in resolutions {
        let grid = build_grid(spec, res)?;
        let rep = hardy_constant(&grid, tol)?;
        trace.push((res, rep.estimate));
        last = Some(rep);
    }
    let mut rep = last.ok_or_else(|| Error::InvalidParams("no resolutions given".into()))?;
    rep.trace = trace;
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub alpha: f64,
    /// Largest `c` with `(KU)_p ≥ c (MU)_p` at every checked node.
    pub c_feasible: f64,
    /// Node attaining `c_feasible`.
    pub witness: Point,
    /// Smallest `C` with `δ^α/C ≤ U ≤ C δ^α` on the checked nodes.
    pub pinching_constant: f64,
    /// Whether `c_feasible ≥ c` for the requested `c`.
    pub satisfied: bool,
    pub checked: usize,
}

/// Checks `∫∇U·∇φ ≥ c ∫ (U/δ²) φ` for all nonnegative hat functions on
/// interior nodes (optionally only those with `δ ≥ min_delta`), and the
/// pinching `δ^α/C ≤ U ≤ C δ^α`.
pub fn verify_strong_barrier(grid: &DomainGrid, u: &[f64], c: f64, alpha: f64, min_delta: Option<f64>) -> Result<BarrierReport> {
    if u.len() != grid.node_count() {
        return Err(Error::DimensionMismatch(format!("{} values for {} nodes", u.len(), grid.node_count())));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParams(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let nodes: Vec<usize> = grid
        .interior_nodes()
        .into_iter()
        .filter(|&k| min_delta.map_or(true, |m| grid.delta[k] >= m))
        .collect();
    if nodes.iter().any(|&k| !(u[k] > 0.0)) {
        return Err(Error::InvalidParams("barrier candidate must be positive on interior nodes".into()));
    }
    let lat = Lattice::open(grid.nx, grid.ny);
    let ku = lat.apply_at(IDENTITY_COEF, u, &nodes);
    let mut c_feasible = f64::INFINITY;
    let mut witness = [0.0; 2];
    let mut pinch: f64 = 1.0;
    for (&k, kv) in nodes.iter().zip(&ku) {
        let ratio = kv / (hardy_weight(grid, k) * u[k]);
        if ratio < c_feasible {
            c_feasible = ratio;
            witness = grid.coords(k);
        }
        let da = grid.delta[k].powf(alpha);
        pinch = pinch.max(u[k] / da).max(da / u[k]);
    }
    Ok(BarrierReport { alpha, c_feasible, witness, pinching_constant: pinch, satisfied: c_feasible >= c, checked: nodes.len() })
}

/// `δ^α` on every node (zero off the interior).
pub fn distance_power(grid: &DomainGrid, alpha: f64) -> Vec<f64> {
    grid.delta.iter().map(|d| if *d > 0.0 { d.powf(alpha) } else { 0.0 }).collect()
}
