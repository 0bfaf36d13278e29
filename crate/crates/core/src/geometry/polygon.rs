//! Closed polygons: Koch prefractal construction, point location and
//! exact point-to-boundary distance.

use super::Point;

/// A simple closed polygon stored as its vertex loop (counterclockwise).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        let mut poly = Polygon { vertices };
        if poly.signed_area() < 0.0 {
            poly.vertices.reverse();
        }
        poly
    }

    /// Level-`level` Koch snowflake prefractal built on an equilateral
    /// triangle of side `side` whose centroid is the origin.
    pub fn koch_snowflake(level: usize, side: f64) -> Self {
        let circumradius = side / 3f64.sqrt();
        let mut vertices: Vec<Point> = (0..3)
            .map(|k| {
                let theta = std::f64::consts::FRAC_PI_2 + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
                [circumradius * theta.cos(), circumradius * theta.sin()]
            })
            .collect();
        for _ in 0..level {
            vertices = koch_refine(&vertices);
        }
        Polygon::new(vertices)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    /// Shoelace formula.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut twice = 0.0;
        for k in 0..n {
            let [x0, y0] = self.vertices[k];
            let [x1, y1] = self.vertices[(k + 1) % n];
            twice += x0 * y1 - x1 * y0;
        }
        0.5 * twice
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    /// Crossing-number test. Points on an edge may land on either side;
    /// callers combine this with [`Polygon::distance`] to resolve ties.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let t = (p[1] - a[1]) / (b[1] - a[1]);
                let x = a[0] + t * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean distance from `p` to the polygon boundary.
    pub fn distance(&self, p: Point) -> f64 {
        self.edges()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

fn koch_refine(vertices: &[Point]) -> Vec<Point> {
    let n = vertices.len();
    let mut out = Vec::with_capacity(4 * n);
    for k in 0..n {
        let a = vertices[k];
        let b = vertices[(k + 1) % n];
        let d = [b[0] - a[0], b[1] - a[1]];
        let p1 = [a[0] + d[0] / 3.0, a[1] + d[1] / 3.0];
        let p3 = [a[0] + 2.0 * d[0] / 3.0, a[1] + 2.0 * d[1] / 3.0];
        // counterclockwise loop: the outward normal is d rotated clockwise
        let bump = 3f64.sqrt() / 6.0;
        let peak = [
            a[0] + 0.5 * d[0] + bump * d[1],
            a[1] + 0.5 * d[1] - bump * d[0],
        ];
        out.extend_from_slice(&[a, p1, peak, p3]);
    }
    out
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn koch_vertex_counts_and_area_growth() {
        let side = 1.0;
        let tri = 3f64.sqrt() / 4.0 * side * side;
        for level in 0..4 {
            let poly = Polygon::koch_snowflake(level, side);
            assert_eq!(poly.vertices().len(), 3 * 4usize.pow(level as u32));
            // each level adds 3·4^(l-1) triangles of area tri/9^l
            let expected = tri * (1.0 + (1..=level).map(|l| 3.0 * 4f64.powi(l as i32 - 1) / 9f64.powi(l as i32)).sum::<f64>());
            assert!((poly.area() - expected).abs() < 1e-12, "level {level}");
        }
    }

    #[test]
    fn koch_bumps_point_outward() {
        let l0 = Polygon::koch_snowflake(0, 1.0);
        let l1 = Polygon::koch_snowflake(1, 1.0);
        assert!(l1.area() > l0.area());
        // every level-0 vertex is still a vertex of level 1
        for v in l0.vertices() {
            assert!(l1.vertices().iter().any(|w| (w[0] - v[0]).abs() < 1e-14 && (w[1] - v[1]).abs() < 1e-14));
        }
    }

    #[test]
    fn point_location_and_distance() {
        let square = Polygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]);
        assert!(square.signed_area() > 0.0);
        assert!(square.contains([0.5, 0.5]));
        assert!(!square.contains([1.5, 0.5]));
        assert!((square.distance([0.25, 0.5]) - 0.25).abs() < 1e-15);
        assert!((square.distance([2.0, 2.0]) - 2f64.sqrt()).abs() < 1e-15);
    }
}
