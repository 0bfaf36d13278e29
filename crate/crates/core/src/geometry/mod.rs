//! Domains, masked Cartesian grids and distance-to-boundary fields.
//!
//! A [`DomainSpec`] names one of the supported planar domains. It is
//! turned into a [`Shape`] (exact membership and distance queries) and
//! rasterized onto a uniform node lattice as a [`DomainGrid`]. Nodes are
//! classified as interior (inside the open set), boundary (not interior
//! but touching an interior node through a shared cell) or exterior.

mod eikonal;
mod polygon;

pub use eikonal::eikonal_distance;
pub use polygon::{segment_distance, Polygon};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Closed or open disk `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    #[serde(default)]
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn dist_to_center(&self, p: Point) -> f64 {
        dist(p, self.center)
    }
}

pub fn dist(p: Point, q: Point) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// The domain zoo.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    UnitSquare,
    /// `[0, width] × [0, height]`.
    Rectangle { width: f64, height: f64 },
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    KochPrefractal { level: usize, side: f64 },
    /// `B(0, radius)` with the horizontal diameter removed except on the
    /// closed `openings` intervals.
    Slit { radius: f64, openings: Vec<[f64; 2]> },
    PuncturedDisk { radius: f64 },
    /// The open set `U \ K` of a condenser `(K, U)`.
    Condenser { k: Ball, u: Ball },
}

impl DomainSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            DomainSpec::UnitSquare => "unit_square",
            DomainSpec::Rectangle { .. } => "rectangle",
            DomainSpec::Disk { .. } => "disk",
            DomainSpec::Annulus { .. } => "annulus",
            DomainSpec::KochPrefractal { .. } => "koch_prefractal",
            DomainSpec::Slit { .. } => "slit",
            DomainSpec::PuncturedDisk { .. } => "punctured_disk",
            DomainSpec::Condenser { .. } => "condenser",
        }
    }

    pub fn unit_disk() -> Self {
        DomainSpec::Disk { radius: 1.0 }
    }

    pub fn koch(level: usize) -> Self {
        DomainSpec::KochPrefractal { level, side: 1.0 }
    }

    /// Default slit domain: openings around `±3/8` so that the slit
    /// covers a neighbourhood of the origin.
    pub fn default_slit() -> Self {
        DomainSpec::Slit { radius: 1.0, openings: vec![[-0.5, -0.25], [0.25, 0.5]] }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match self {
            DomainSpec::UnitSquare => Ok(()),
            DomainSpec::Rectangle { width, height } => {
                if !(*width > 0.0 && *height > 0.0) {
                    return bad(format!("rectangle needs positive sides, got {width} x {height}"));
                }
                Ok(())
            }
            DomainSpec::Disk { radius } | DomainSpec::PuncturedDisk { radius } => {
                if !(*radius > 0.0) {
                    return bad(format!("radius must be positive, got {radius}"));
                }
                Ok(())
            }
            DomainSpec::Annulus { inner, outer } => {
                if !(*inner > 0.0 && inner < outer) {
                    return bad(format!("annulus needs 0 < inner < outer, got {inner}, {outer}"));
                }
                Ok(())
            }
            DomainSpec::KochPrefractal { level, side } => {
                if *level > 7 {
                    return bad(format!("koch level {level} is beyond the supported range 0..=7"));
                }
                if !(*side > 0.0) {
                    return bad(format!("koch side must be positive, got {side}"));
                }
                Ok(())
            }
            DomainSpec::Slit { radius, openings } => {
                if !(*radius > 0.0) {
                    return bad(format!("radius must be positive, got {radius}"));
                }
                for [a, b] in openings {
                    if !(a <= b) || !a.is_finite() || !b.is_finite() {
                        return bad(format!("slit opening [{a}, {b}] is not a closed interval"));
                    }
                }
                Ok(())
            }
            DomainSpec::Condenser { k, u } => {
                if !(k.radius > 0.0 && u.radius > 0.0) {
                    return bad("condenser balls need positive radii".into());
                }
                if dist(k.center, u.center) + k.radius >= u.radius {
                    return bad("condenser K must be compactly contained in U".into());
                }
                Ok(())
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let params = match self {
            DomainSpec::UnitSquare => json!({}),
            DomainSpec::Rectangle { width, height } => json!({"width": width, "height": height}),
            DomainSpec::Disk { radius } | DomainSpec::PuncturedDisk { radius } => json!({"radius": radius}),
            DomainSpec::Annulus { inner, outer } => json!({"inner": inner, "outer": outer}),
            DomainSpec::KochPrefractal { level, side } => json!({"level": level, "side": side}),
            DomainSpec::Slit { radius, openings } => json!({"radius": radius, "openings": openings}),
            DomainSpec::Condenser { k, u } => json!({"k": k, "u": u}),
        };
        json!({"kind": self.kind(), "params": params})
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let kind = value
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::InvalidSpec("domain needs a string \"kind\"".into()))?;
        let empty = json!({});
        let params = value.get("params").unwrap_or(&empty);
        let num = |key: &str, default: Option<f64>| -> Result<f64> {
            match params.get(key) {
                Some(v) => v
                    .as_f64()
                    .ok_or_else(|| Error::InvalidSpec(format!("{kind}.{key} must be a number"))),
                None => default.ok_or_else(|| Error::InvalidSpec(format!("{kind} requires \"{key}\""))),
            }
        };
        let ball = |key: &str| -> Result<Ball> {
            let v = params
                .get(key)
                .ok_or_else(|| Error::InvalidSpec(format!("{kind} requires \"{key}\"")))?;
            serde_json::from_value(v.clone()).map_err(|e| Error::InvalidSpec(format!("{kind}.{key}: {e}")))
        };
        let spec = match kind {
            "unit_square" => DomainSpec::UnitSquare,
            "rectangle" => DomainSpec::Rectangle { width: num("width", None)?, height: num("height", None)? },
            "disk" => DomainSpec::Disk { radius: num("radius", Some(1.0))? },
            "punctured_disk" => DomainSpec::PuncturedDisk { radius: num("radius", Some(1.0))? },
            "annulus" => DomainSpec::Annulus { inner: num("inner", None)?, outer: num("outer", None)? },
            "koch_prefractal" => {
                let level = params
                    .get("level")
                    .and_then(Value::as_i64)
                    .ok_or_else(|| Error::InvalidSpec("koch_prefractal requires integer \"level\"".into()))?;
                if level < 0 {
                    return Err(Error::InvalidSpec(format!("koch level must be >= 0, got {level}")));
                }
                DomainSpec::KochPrefractal { level: level as usize, side: num("side", Some(1.0))? }
            }
            "slit" => {
                let openings = match params.get("openings") {
                    Some(v) => serde_json::from_value(v.clone())
                        .map_err(|e| Error::InvalidSpec(format!("slit.openings: {e}")))?,
                    None => match DomainSpec::default_slit() {
                        DomainSpec::Slit { openings, .. } => openings,
                        _ => unreachable!(),
                    },
                };
                DomainSpec::Slit { radius: num("radius", Some(1.0))?, openings }
            }
            "condenser" => DomainSpec::Condenser { k: ball("k")?, u: ball("u")? },
            other => return Err(Error::InvalidSpec(format!("unknown domain kind \"{other}\""))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for DomainSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DomainSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        DomainSpec::from_json(&value).map_err(serde::de::Error::custom)
    }
}

/// Exact geometric realization of a domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Rectangle { lo: Point, hi: Point },
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    Polygon(Polygon),
    /// Disk minus the closed horizontal segments listed in `slits`.
    Slit { radius: f64, slits: Vec<[f64; 2]> },
    PuncturedDisk { radius: f64, puncture: Point },
    Condenser { k: Ball, u: Ball },
}

const ON_LINE: f64 = 1e-12;

impl Shape {
    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            DomainSpec::UnitSquare => Shape::Rectangle { lo: [0.0, 0.0], hi: [1.0, 1.0] },
            DomainSpec::Rectangle { width, height } => Shape::Rectangle { lo: [0.0, 0.0], hi: [*width, *height] },
            DomainSpec::Disk { radius } => Shape::Disk { radius: *radius },
            DomainSpec::Annulus { inner, outer } => Shape::Annulus { inner: *inner, outer: *outer },
            DomainSpec::KochPrefractal { level, side } => Shape::Polygon(Polygon::koch_snowflake(*level, *side)),
            DomainSpec::Slit { radius, openings } => Shape::Slit { radius: *radius, slits: slit_segments(*radius, openings) },
            DomainSpec::PuncturedDisk { radius } => Shape::PuncturedDisk { radius: *radius, puncture: [0.0, 0.0] },
            DomainSpec::Condenser { k, u } => Shape::Condenser { k: *k, u: *u },
        })
    }

    pub fn bbox(&self) -> (Point, Point) {
        match self {
            Shape::Rectangle { lo, hi } => (*lo, *hi),
            Shape::Disk { radius } | Shape::PuncturedDisk { radius, .. } | Shape::Slit { radius, .. } => {
                ([-radius, -radius], [*radius, *radius])
            }
            Shape::Annulus { outer, .. } => ([-outer, -outer], [*outer, *outer]),
            Shape::Polygon(poly) => poly.bbox(),
            Shape::Condenser { u, .. } => (
                [u.center[0] - u.radius, u.center[1] - u.radius],
                [u.center[0] + u.radius, u.center[1] + u.radius],
            ),
        }
    }

    /// Membership in the open set.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Shape::Rectangle { lo, hi } => lo[0] < p[0] && p[0] < hi[0] && lo[1] < p[1] && p[1] < hi[1],
            Shape::Disk { radius } => norm(p) < *radius,
            Shape::Annulus { inner, outer } => {
                let r = norm(p);
                *inner < r && r < *outer
            }
            Shape::Polygon(poly) => poly.contains(p) && poly.distance(p) > 0.0,
            Shape::Slit { radius, slits } => {
                norm(p) < *radius
                    && !(p[1].abs() <= ON_LINE && slits.iter().any(|[a, b]| *a <= p[0] && p[0] <= *b))
            }
            Shape::PuncturedDisk { radius, puncture } => norm(p) < *radius && dist(p, *puncture) > ON_LINE,
            Shape::Condenser { k, u } => u.dist_to_center(p) < u.radius && k.dist_to_center(p) > k.radius,
        }
    }

    /// Distance to the boundary for points of the open set, 0 elsewhere.
    pub fn distance(&self, p: Point) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        match self {
            Shape::Rectangle { lo, hi } => (p[0] - lo[0]).min(hi[0] - p[0]).min(p[1] - lo[1]).min(hi[1] - p[1]),
            Shape::Disk { radius } => radius - norm(p),
            Shape::Annulus { inner, outer } => {
                let r = norm(p);
                (outer - r).min(r - inner)
            }
            Shape::Polygon(poly) => poly.distance(p),
            Shape::Slit { radius, slits } => slits
                .iter()
                .map(|[a, b]| segment_distance(p, [*a, 0.0], [*b, 0.0]))
                .fold(radius - norm(p), f64::min),
            Shape::PuncturedDisk { radius, puncture } => (radius - norm(p)).min(dist(p, *puncture)),
            Shape::Condenser { k, u } => (u.radius - u.dist_to_center(p)).min(k.dist_to_center(p) - k.radius),
        }
    }
}

fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

/// Closed intervals of `[-radius, radius]` not covered by the openings.
fn slit_segments(radius: f64, openings: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut open: Vec<[f64; 2]> = openings.to_vec();
    open.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut merged: Vec<[f64; 2]> = Vec::new();
    for iv in open {
        match merged.last_mut() {
            Some(last) if iv[0] <= last[1] => last[1] = last[1].max(iv[1]),
            _ => merged.push(iv),
        }
    }
    let mut slits = Vec::new();
    let mut start = -radius;
    for [a, b] in merged {
        if a > start {
            slits.push([start, a.min(radius)]);
        }
        start = start.max(b);
    }
    if start < radius {
        slits.push([start, radius]);
    }
    slits.retain(|[a, b]| b > a);
    slits
}

/// Per-node classification; the integer codes are used by grid dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

impl NodeKind {
    pub fn code(self) -> u8 {
        match self {
            NodeKind::Interior => 0,
            NodeKind::Boundary => 1,
            NodeKind::Exterior => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(NodeKind::Interior),
            1 => Some(NodeKind::Boundary),
            2 => Some(NodeKind::Exterior),
            _ => None,
        }
    }
}

/// Uniform Cartesian node lattice with `(nx + 1) × (ny + 1)` nodes,
/// node `(i, j)` at `origin + h·(i, j)`, stored row-major in `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGrid {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub mask: Vec<NodeKind>,
    pub delta: Vec<f64>,
    spec: Option<DomainSpec>,
    shape: Option<Shape>,
}

pub const MIN_RESOLUTION: usize = 8;

/// Rasterizes `spec` with cell width `max(bbox side) / resolution`.
pub fn build_grid(spec: &DomainSpec, resolution: usize) -> Result<DomainGrid> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidSpec(format!("resolution {resolution} is below {MIN_RESOLUTION}")));
    }
    let shape = Shape::from_spec(spec)?;
    let (lo, hi) = shape.bbox();
    let h = (hi[0] - lo[0]).max(hi[1] - lo[1]) / resolution as f64;
    build_grid_inner(spec, shape, h, resolution)
}

/// Rasterizes `spec` with a prescribed cell width. The lattice origin is
/// the bounding-box corner, so grids whose spacings differ by powers of
/// two are nested.
pub fn build_grid_with_spacing(spec: &DomainSpec, h: f64) -> Result<DomainGrid> {
    if !(h > 0.0) {
        return Err(Error::InvalidSpec(format!("cell width must be positive, got {h}")));
    }
    let shape = Shape::from_spec(spec)?;
    let (lo, hi) = shape.bbox();
    let resolution = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / h).round() as usize;
    build_grid_inner(spec, shape, h, resolution)
}

fn build_grid_inner(spec: &DomainSpec, mut shape: Shape, h: f64, resolution: usize) -> Result<DomainGrid> {
    let (lo, hi) = shape.bbox();
    let cells = |extent: f64| ((extent / h) - 1e-9).ceil().max(1.0) as usize;
    let nx = cells(hi[0] - lo[0]);
    let ny = cells(hi[1] - lo[1]);
    if let Shape::PuncturedDisk { puncture, .. } = &mut shape {
        // the puncture is the lattice node nearest the centre
        let i = ((0.0 - lo[0]) / h).round();
        let j = ((0.0 - lo[1]) / h).round();
        *puncture = [lo[0] + i * h, lo[1] + j * h];
    }
    let mut grid = DomainGrid {
        origin: lo,
        h,
        nx,
        ny,
        mask: Vec::new(),
        delta: Vec::new(),
        spec: Some(spec.clone()),
        shape: Some(shape),
    };
    grid.classify();
    if !grid.mask.iter().any(|k| *k == NodeKind::Interior) {
        return Err(Error::EmptyInterior { resolution });
    }
    Ok(grid)
}

impl DomainGrid {
    /// Grid from an explicit mask (e.g. a loaded dump). Distances come
    /// from eikonal sweeping since no exact shape is known.
    pub fn from_mask(origin: Point, h: f64, nx: usize, ny: usize, mask: Vec<NodeKind>) -> Result<Self> {
        if mask.len() != (nx + 1) * (ny + 1) {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} entries, lattice has {}",
                mask.len(),
                (nx + 1) * (ny + 1)
            )));
        }
        if !mask.iter().any(|k| *k == NodeKind::Interior) {
            return Err(Error::EmptyInterior { resolution: nx.max(ny) });
        }
        let mut grid = DomainGrid { origin, h, nx, ny, mask, delta: Vec::new(), spec: None, shape: None };
        grid.delta = distance_field(&grid);
        Ok(grid)
    }

    fn classify(&mut self) {
        let shape = self.shape.as_ref().expect("classify needs a shape");
        let n = self.node_count();
        let mut inside = vec![false; n];
        let mut delta = vec![0.0; n];
        for idx in 0..n {
            let p = self.coords(idx);
            let d = shape.distance(p);
            if d > 0.0 {
                inside[idx] = true;
                delta[idx] = d;
            }
        }
        let mut mask = vec![NodeKind::Exterior; n];
        for j in 0..=self.ny {
            for i in 0..=self.nx {
                let idx = self.index(i, j);
                mask[idx] = if inside[idx] {
                    NodeKind::Interior
                } else if self.neighbors8(i, j).any(|q| inside[q]) {
                    NodeKind::Boundary
                } else {
                    NodeKind::Exterior
                };
            }
        }
        self.mask = mask;
        self.delta = delta;
    }

    pub fn spec(&self) -> Option<&DomainSpec> {
        self.spec.as_ref()
    }

    pub fn shape(&self) -> Option<&Shape> {
        self.shape.as_ref()
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % (self.nx + 1), idx / (self.nx + 1))
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Point {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> Point {
        let (i, j) = self.ij(idx);
        self.point(i, j)
    }

    /// Midpoint of cell `(ci, cj)`, whose lower-left node is `(ci, cj)`.
    #[inline]
    pub fn cell_center(&self, ci: usize, cj: usize) -> Point {
        [
            self.origin[0] + (ci as f64 + 0.5) * self.h,
            self.origin[1] + (cj as f64 + 0.5) * self.h,
        ]
    }

    #[inline]
    pub fn cell_index(&self, ci: usize, cj: usize) -> usize {
        cj * self.nx + ci
    }

    pub fn neighbors8(&self, i: usize, j: usize) -> impl Iterator<Item = usize> + '_ {
        let (nx, ny) = (self.nx as i64, self.ny as i64);
        (-1i64..=1)
            .flat_map(move |dj| (-1i64..=1).map(move |di| (di, dj)))
            .filter(|&(di, dj)| di != 0 || dj != 0)
            .filter_map(move |(di, dj)| {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                (a >= 0 && b >= 0 && a <= nx && b <= ny).then(|| self.index(a as usize, b as usize))
            })
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.mask[idx] == NodeKind::Interior
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&k| self.is_interior(k)).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&k| self.mask[k] == NodeKind::Boundary).collect()
    }

    /// Lattice node `(i, j)` with indices allowed outside the grid.
    pub fn lattice_point(&self, i: i64, j: i64) -> Point {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    /// Whether lattice node `(i, j)` lies in the open set. Nodes outside
    /// the grid are never interior.
    pub fn lattice_is_interior(&self, i: i64, j: i64) -> bool {
        if i < 0 || j < 0 || i > self.nx as i64 || j > self.ny as i64 {
            return false;
        }
        self.is_interior(self.index(i as usize, j as usize))
    }

    /// Nearest lattice node to `p`, clamped to the grid.
    pub fn nearest_node(&self, p: Point) -> usize {
        let i = ((p[0] - self.origin[0]) / self.h).round().clamp(0.0, self.nx as f64) as usize;
        let j = ((p[1] - self.origin[1]) / self.h).round().clamp(0.0, self.ny as f64) as usize;
        self.index(i, j)
    }

    /// Largest distance between two boundary nodes, which is the
    /// diameter of the rasterized closure.
    pub fn diameter(&self) -> f64 {
        let pts: Vec<Point> = self.boundary_nodes().into_iter().map(|k| self.coords(k)).collect();
        pts.par_iter()
            .enumerate()
            .map(|(a, p)| pts[a + 1..].iter().map(|q| dist(*p, *q)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }

    pub fn interior_area(&self) -> f64 {
        self.mask.iter().filter(|k| **k == NodeKind::Interior).count() as f64 * self.h * self.h
    }

    /// Distance to the boundary at an arbitrary point, exact when the
    /// grid carries a shape and bilinearly interpolated otherwise.
    pub fn delta_at(&self, p: Point) -> f64 {
        if let Some(shape) = &self.shape {
            return shape.distance(p);
        }
        let x = ((p[0] - self.origin[0]) / self.h).clamp(0.0, self.nx as f64);
        let y = ((p[1] - self.origin[1]) / self.h).clamp(0.0, self.ny as f64);
        let (i, j) = ((x.floor() as usize).min(self.nx.saturating_sub(1)), (y.floor() as usize).min(self.ny.saturating_sub(1)));
        let (s, t) = (x - i as f64, y - j as f64);
        (1.0 - s) * (1.0 - t) * self.delta[self.index(i, j)]
            + s * (1.0 - t) * self.delta[self.index(i + 1, j)]
            + (1.0 - s) * t * self.delta[self.index(i, j + 1)]
            + s * t * self.delta[self.index(i + 1, j + 1)]
    }

    /// JSON node dump `{origin, h, nx, ny, mask, delta}`.
    pub fn to_dump(&self) -> GridDump {
        GridDump {
            origin: self.origin,
            h: self.h,
            nx: self.nx,
            ny: self.ny,
            mask: self.mask.iter().map(|k| k.code()).collect(),
            delta: self.delta.clone(),
        }
    }
}

/// Recomputes the per-node distance to the boundary: exact from the
/// shape when one is attached, eikonal sweeping on the mask otherwise.
pub fn distance_field(grid: &DomainGrid) -> Vec<f64> {
    match grid.shape() {
        Some(shape) => (0..grid.node_count())
            .map(|idx| if grid.is_interior(idx) { shape.distance(grid.coords(idx)) } else { 0.0 })
            .collect(),
        None => eikonal_distance(&grid.mask, grid.nx, grid.ny, grid.h),
    }
}

/// Node set `Ω_R = {δ > R}`.
pub fn interior_subdomain(grid: &DomainGrid, radius: f64) -> Vec<usize> {
    (0..grid.node_count())
        .filter(|&idx| grid.is_interior(idx) && grid.delta[idx] > radius)
        .collect()
}

/// Serializable node dump; `mask` uses codes 0 = interior, 1 = boundary,
/// 2 = exterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDump {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub mask: Vec<u8>,
    pub delta: Vec<f64>,
}

const DUMP_MAGIC: &[u8; 8] = b"CDCHGRID";

impl GridDump {
    /// Little-endian binary layout: magic, `nx`, `ny` as u64, `origin`
    /// and `h` as f64, one mask byte per node, one f64 per node.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(48 + self.mask.len() * 9);
        out.extend_from_slice(DUMP_MAGIC);
        out.extend_from_slice(&(self.nx as u64).to_le_bytes());
        out.extend_from_slice(&(self.ny as u64).to_le_bytes());
        for v in [self.origin[0], self.origin[1], self.h] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.mask);
        for v in &self.delta {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |m: &str| Error::InvalidSpec(format!("grid dump: {m}"));
        if bytes.len() < 48 || &bytes[..8] != DUMP_MAGIC {
            return Err(fail("bad header"));
        }
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let nx = u64_at(8) as usize;
        let ny = u64_at(16) as usize;
        let nodes = (nx + 1) * (ny + 1);
        if bytes.len() != 48 + nodes * 9 {
            return Err(fail("length does not match lattice size"));
        }
        let mask = bytes[48..48 + nodes].to_vec();
        let delta = (0..nodes).map(|k| f64_at(48 + nodes + 8 * k)).collect();
        Ok(GridDump { origin: [f64_at(24), f64_at(32)], h: f64_at(40), nx, ny, mask, delta })
    }

    pub fn into_grid(self) -> Result<DomainGrid> {
        let mask = self
            .mask
            .iter()
            .map(|&c| NodeKind::from_code(c).ok_or_else(|| Error::InvalidSpec(format!("bad mask code {c}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut grid = DomainGrid::from_mask(self.origin, self.h, self.nx, self.ny, mask)?;
        if self.delta.len() == grid.node_count() {
            grid.delta = self.delta;
        }
        Ok(grid)
    }
}
