//! The spherically symmetric example `u_R` on the unit ball of ℝⁿ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::hoelder::{hoelder_lattice, HoelderReport, LatticeField};

/// Nodes of the sampled profile on `[0, 1]`.
pub const PROFILE_NODES: usize = 1025;

const PAIR_GRID: usize = 256;
const GOLDEN_STEPS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialFunction {
    pub n: usize,
    pub alpha: f64,
    pub radius: f64,
}

impl RadialFunction {
    pub fn new(n: usize, alpha: f64, radius: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParams(format!("dimension must be at least 3, got {n}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParams(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::InvalidParams(format!("R must lie in (0, 1), got {radius}")));
        }
        Ok(RadialFunction { n, alpha, radius })
    }

    fn slope(&self) -> f64 {
        (1.0 - self.radius).powf(self.alpha) / (self.radius.powf(2.0 - self.n as f64) - 1.0)
    }

    pub fn value(&self, r: f64) -> f64 {
        if r > self.radius && r < 1.0 {
            self.slope() * (r.powf(2.0 - self.n as f64) - 1.0)
        } else if r >= 1.0 {
            0.0
        } else {
            (1.0 - self.radius).powf(self.alpha)
        }
    }

    /// `u_R′(r)`, zero inside the plateau.
    pub fn derivative(&self, r: f64) -> f64 {
        if r > self.radius && r < 1.0 {
            -(self.n as f64 - 2.0) * self.slope() * r.powf(1.0 - self.n as f64)
        } else {
            0.0
        }
    }

    /// `(n−2)(1−R)^{2α}/(R^{2−n}−1)`, which is `∫|u′|² r^{n−1} dr`.
    pub fn energy_formula(&self) -> f64 {
        (self.n as f64 - 2.0) * (1.0 - self.radius).powf(2.0 * self.alpha) / (self.radius.powf(2.0 - self.n as f64) - 1.0)
    }

    fn quotient(&self, s: f64, t: f64) -> f64 {
        if t <= s {
            return 0.0;
        }
        (self.value(s) - self.value(t)).abs() / (t - s).powf(self.alpha)
    }

    /// `[u_R]_α` on the closed ball. The function is radial and monotone,
    /// so the supremum is attained on a ray and reduces to pairs
    /// `R ≤ s < t ≤ 1`; a grid search is polished by alternating golden
    /// sections.
    pub fn seminorm(&self) -> (f64, [f64; 2]) {
        let r0 = self.radius;
        let at = |k: usize| r0 + (1.0 - r0) * k as f64 / PAIR_GRID as f64;
        let mut best = (0.0, [r0, 1.0]);
        for a in 0..PAIR_GRID {
            for b in a + 1..=PAIR_GRID {
                let (s, t) = (at(a), at(b));
                let q = self.quotient(s, t);
                if q > best.0 {
                    best = (q, [s, t]);
                }
            }
        }
        let step = (1.0 - r0) / PAIR_GRID as f64;
        let [mut s, mut t] = best.1;
        for _ in 0..4 {
            s = golden_max(|x| self.quotient(x, t), (s - step).max(r0), (s + step).min(t));
            t = golden_max(|x| self.quotient(s, x), (t - step).max(s), (t + step).min(1.0));
        }
        let polished = self.quotient(s, t);
        if polished > best.0 {
            best = (polished, [s, t]);
        }
        best
    }

    /// Uniform profile on `[0, 1]`.
    pub fn profile(&self, nodes: usize) -> Vec<(f64, f64)> {
        (0..nodes)
            .map(|k| {
                let r = k as f64 / (nodes - 1) as f64;
                (r, self.value(r))
            })
            .collect()
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_STEPS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd { c } else { d }
}

/// Surface area of the unit sphere in ℝⁿ, by `ω_n = 2π ω_{n−2} / (n−2)`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI * sphere_area(n - 2) / (n - 2) as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialReport {
    pub n: usize,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    /// `‖u_R‖_∞ = (1−R)^α`.
    pub sup_norm: f64,
    pub seminorm: f64,
    /// Radii of the pair attaining `seminorm`.
    pub seminorm_pair: [f64; 2],
    /// `‖u‖_∞ + diam^α [u]_α` with `diam = 2`.
    pub c_alpha_norm: f64,
    /// `(u(R) − u(1)) / (1 − R)^α`.
    pub boundary_ratio: f64,
    /// Closed form `(n−2)(1−R)^{2α}/(R^{2−n}−1)`.
    pub energy: f64,
    /// `∫_B |∇u_R|²`, the closed form times the sphere area.
    pub full_energy: f64,
    /// Dyadic-pair estimate on the sampled profile.
    pub profile_hoelder: HoelderReport,
    pub profile: Vec<(f64, f64)>,
}

pub fn radial_example(n: usize, alpha: f64, radius: f64) -> Result<RadialReport> {
    let f = RadialFunction::new(n, alpha, radius)?;
    let (seminorm, seminorm_pair) = f.seminorm();
    let sup_norm = f.value(0.0);
    let profile = f.profile(PROFILE_NODES);
    let values: Vec<f64> = profile.iter().map(|p| p.1).collect();
    let field = LatticeField {
        values: &values,
        nodes_x: PROFILE_NODES,
        nodes_y: 1,
        h: 1.0 / (PROFILE_NODES - 1) as f64,
        origin: [0.0, 0.0],
        periodic: false,
        include: None,
    };
    let profile_hoelder = hoelder_lattice(&field, alpha, None)?;
    let energy = f.energy_formula();
    Ok(RadialReport {
        n,
        alpha,
        radius,
        sup_norm,
        seminorm,
        seminorm_pair,
        c_alpha_norm: sup_norm + 2f64.powf(alpha) * seminorm,
        boundary_ratio: (f.value(radius) - f.value(1.0)) / (1.0 - radius).powf(alpha),
        energy,
        full_energy: energy * sphere_area(n),
        profile_hoelder,
        profile,
    })
}
