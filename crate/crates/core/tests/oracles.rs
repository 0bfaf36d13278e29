//! Comparisons against closed forms computed here, independently of the
//! library.

use std::f64::consts::PI;

use cdch_core::capacity::{distance_power, variational_capacity, vdc_scan, verify_strong_barrier, CompactSpec, CondenserSpec, ScanOptions};
use cdch_core::elliptic::solve_dirichlet;
use cdch_core::experiments::radial_example;
use cdch_core::geometry::Ball;
use cdch_core::homogenize::solve_cell;
use cdch_core::measures::morrey_norm;
use cdch_core::{build_grid, CoefficientField, DomainSpec, MeasureSpec, PeriodicCoefficient, PeriodicPreset, SolverSettings};

fn settings() -> SolverSettings {
    SolverSettings::with_tol(1e-10)
}

fn simpson(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut s = f(0.0) + f(1.0);
    for k in 1..n {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn torsion_function_of_the_disk() {
    let mut errors = Vec::new();
    for res in [64, 128] {
        let grid = build_grid(&DomainSpec::unit_disk(), res).unwrap();
        let u = solve_dirichlet(&grid, &CoefficientField::identity(&grid), &MeasureSpec::constant_density(1.0), &settings()).unwrap();
        let err = grid
            .interior_nodes()
            .into_iter()
            .map(|k| {
                let p = grid.coords(k);
                (u.values[k] - (1.0 - p[0] * p[0] - p[1] * p[1]) / 4.0).abs()
            })
            .fold(0.0, f64::max);
        errors.push(err);
    }
    assert!(errors[1] < errors[0] && errors[1] < 0.01, "{errors:?}");
}

#[test]
fn green_function_of_the_disk() {
    let grid = build_grid(&DomainSpec::unit_disk(), 128).unwrap();
    let u = solve_dirichlet(&grid, &CoefficientField::identity(&grid), &MeasureSpec::point_mass([0.0, 0.0], 1.0), &settings()).unwrap();
    for r in [0.25f64, 0.5, 0.75] {
        let exact = -r.ln() / (2.0 * PI);
        let got = u.value_at([r, 0.0]);
        assert!((got - exact).abs() < 0.03 * exact, "r={r}: {got} vs {exact}");
    }
}

#[test]
fn annulus_capacity_at_ratio_four() {
    let cond = CondenserSpec { k: CompactSpec::Disk { center: [0.0, 0.0], radius: 0.25 }, u: Ball::new([0.0, 0.0], 1.0) };
    let cap = variational_capacity(&cond, 256).unwrap().capacity;
    let exact = 2.0 * PI / 4f64.ln();
    assert!((cap - exact).abs() < 0.03 * exact, "{cap} vs {exact}");
}

#[test]
fn laminate_with_anisotropic_layers() {
    // A(y) = diag(a(y₁), b(y₁)): harmonic mean of a across the layers, arithmetic of b along them
    let a = |t: f64| 3.0 + (2.0 * PI * t).cos();
    let b = |t: f64| 1.5 + 0.5 * (2.0 * PI * t).sin();
    let n = 256;
    let values = (0..n * n)
        .map(|c| {
            let t = ((c % n) as f64 + 0.5) / n as f64;
            [a(t), 0.0, 0.0, b(t)]
        })
        .collect();
    let coef = PeriodicCoefficient::from_values(n, values).unwrap();
    let a0 = solve_cell(&coef, &settings(), false).unwrap().a0;
    let harmonic = 1.0 / simpson(|t| 1.0 / a(t), 4096);
    let arithmetic = simpson(b, 4096);
    assert!((a0[0] - harmonic).abs() < 1e-3 * harmonic, "{} vs {harmonic}", a0[0]);
    assert!((a0[3] - arithmetic).abs() < 1e-3 * arithmetic, "{} vs {arithmetic}", a0[3]);
    assert!(a0[1].abs() < 1e-9 && a0[2].abs() < 1e-9);
}

#[test]
fn checkerboard_tensor_is_isotropic() {
    let coef = PeriodicCoefficient::from_preset(&PeriodicPreset::checkerboard(1.0, 9.0), 128).unwrap();
    let a0 = solve_cell(&coef, &settings(), false).unwrap().a0;
    assert!((a0[0] - a0[3]).abs() < 1e-8 * a0[0]);
    // between the harmonic and arithmetic means of the two phases
    assert!(a0[0] > 1.8 && a0[0] < 5.0, "{a0:?}");
}

#[test]
fn distance_power_barrier_on_a_strip() {
    // U = δ^α away from corners is one-dimensional: −U″ = α(1−α) U / δ²
    let grid = build_grid(&DomainSpec::Rectangle { width: 4.0, height: 1.0 }, 256).unwrap();
    for alpha in [0.3, 0.5, 0.8] {
        let u = distance_power(&grid, alpha);
        let rep = verify_strong_barrier(&grid, &u, 0.0, alpha, Some(4.0 * grid.h)).unwrap();
        let exact = alpha * (1.0 - alpha);
        assert!((rep.c_feasible - exact).abs() < 0.03 * exact, "alpha={alpha}: {} vs {exact}", rep.c_feasible);
        assert!((rep.pinching_constant - 1.0).abs() < 1e-12);
    }
}

#[test]
fn volume_density_at_edge_and_corner() {
    let grid = build_grid(&DomainSpec::UnitSquare, 256).unwrap();
    let opts = |p: [f64; 2]| ScanOptions { points: Some(vec![p]), radii: Some(vec![0.125]), ..Default::default() };
    let edge = vdc_scan(&grid, &opts([0.5, 0.0])).unwrap().ratio_min;
    let corner = vdc_scan(&grid, &opts([0.0, 0.0])).unwrap().ratio_min;
    assert!((edge - PI / 2.0).abs() < 0.03 * PI / 2.0, "{edge}");
    assert!((corner - 3.0 * PI / 4.0).abs() < 0.03 * 3.0 * PI / 4.0, "{corner}");
}

#[test]
fn morrey_norm_of_area_measure() {
    // sup over r < δ/2 of r^{−α} π r² is approached at the centre
    let grid = build_grid(&DomainSpec::UnitSquare, 128).unwrap();
    for alpha in [0.5, 1.0] {
        let rep = morrey_norm(&MeasureSpec::constant_density(1.0), &grid, alpha).unwrap();
        let sup = PI * 0.25f64.powf(2.0 - alpha);
        assert!(!rep.divergent);
        assert!(rep.norm <= sup * 1.02 && rep.norm >= 0.5 * sup, "alpha={alpha}: {} vs {sup}", rep.norm);
    }
}

#[test]
fn radial_energy_with_sphere_area() {
    // ∫_B |∇u|² in ℝ³ for (α, R) = (1/2, 1/2) is 4π · 1/2
    let rep = radial_example(3, 0.5, 0.5).unwrap();
    assert!((rep.full_energy - 2.0 * PI).abs() < 1e-12);
    assert!((rep.seminorm - 1.0).abs() < 1e-9, "{}", rep.seminorm);
    assert!((rep.sup_norm - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn distance_power_fails_at_reentrant_corners() {
    // near a reentrant corner δ = r and Δ r^α = α² r^{α−2} > 0, so no
    // positive c exists for U = δ^α
    let grid = build_grid(&DomainSpec::koch(2), 128).unwrap();
    let u = distance_power(&grid, 0.3);
    let rep = verify_strong_barrier(&grid, &u, 0.0, 0.3, Some(4.0 * grid.h)).unwrap();
    assert!(rep.c_feasible < 0.0, "{}", rep.c_feasible);
    assert!(!rep.satisfied);
}
