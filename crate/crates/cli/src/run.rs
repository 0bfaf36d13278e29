//! Binds manifests to the library operations.

use serde_json::{json, Value};

use cdch_core::capacity::{
    cdc_scan, distance_power, hardy_refinement, uniform_perfectness_scan, variational_capacity, vdc_scan, verify_strong_barrier, CompactSpec,
    CondenserSpec, ScanOptions, ScanSample, SAMPLE_SEED,
};
use cdch_core::elliptic::{solve_dirichlet, CoefficientField};
use cdch_core::experiments::hoelder::closure_mask;
use cdch_core::experiments::study::DEFAULT_ALPHA0;
use cdch_core::experiments::{convergence_study, hoelder_estimate_study, radial_example, RateOptions};
use cdch_core::export::{heatmap_svg, loglog_with_fit, nodal_csv, plot_svg, table_csv, NodeLayout, PlotSpec, Series};
use cdch_core::homogenize::{corrector_regularity, oscillating_coefficient, solve_cell, within_envelope, DEFAULT_CELL_RESOLUTION};
use cdch_core::measures::{morrey_from_density, morrey_norm, TermKind};
use cdch_core::{build_grid, DomainGrid, DomainSpec, Error, MeasureSpec, PeriodicCoefficient, SolverSettings};

use crate::manifest::{CoefficientSpec, Command, RunManifest};

/// A file to be written into the output directory.
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    fn text(name: &str, contents: String) -> Self {
        Artifact { name: name.to_string(), contents: contents.into_bytes() }
    }
}

pub struct Outcome {
    pub results: Value,
    pub artifacts: Vec<Artifact>,
}

/// Cell resolution used when only point values `A(x/ε)` are needed.
const SAMPLING_CELL_RESOLUTION: usize = 16;

pub struct Context {
    pub seed: u64,
}

impl Default for Context {
    fn default() -> Self {
        Context { seed: SAMPLE_SEED }
    }
}

fn settings(m: &RunManifest) -> SolverSettings {
    let mut s = SolverSettings::with_tol(m.tol());
    s.max_iter = m.numerics.max_iter;
    if let Some(p) = m.numerics.precond {
        s.precond = p;
    }
    s
}

fn domain(m: &RunManifest) -> Result<&DomainSpec, Error> {
    m.domain.as_ref().ok_or_else(|| Error::InvalidParams(format!("command {} requires a domain", m.command.name())))
}

fn grid(m: &RunManifest) -> Result<DomainGrid, Error> {
    build_grid(domain(m)?, m.resolution())
}

fn periodic(m: &RunManifest, n: usize) -> Result<(PeriodicCoefficient, Option<f64>), Error> {
    match &m.coefficient {
        Some(CoefficientSpec::Periodic { preset, epsilon }) => Ok((PeriodicCoefficient::from_preset(preset, n)?, *epsilon)),
        _ => Err(Error::InvalidParams(format!("command {} requires a periodic coefficient", m.command.name()))),
    }
}

fn coefficient(m: &RunManifest, grid: &DomainGrid) -> Result<CoefficientField, Error> {
    match &m.coefficient {
        None | Some(CoefficientSpec::Identity) => Ok(CoefficientField::identity(grid)),
        Some(CoefficientSpec::Constant { matrix }) => CoefficientField::constant(grid.nx, grid.ny, *matrix),
        Some(CoefficientSpec::Periodic { .. }) => {
            let (a, eps) = periodic(m, SAMPLING_CELL_RESOLUTION)?;
            oscillating_coefficient(&a, eps.unwrap_or(1.0), grid)
        }
    }
}

fn measure_or_unit(m: &RunManifest) -> MeasureSpec {
    m.measure.clone().unwrap_or_else(|| MeasureSpec::constant_density(1.0))
}

fn layout(grid: &DomainGrid) -> NodeLayout {
    NodeLayout { origin: grid.origin, h: grid.h, nodes_x: grid.nx + 1, nodes_y: grid.ny + 1 }
}

fn field_artifacts(grid: &DomainGrid, name: &str, values: &[f64]) -> Result<Vec<Artifact>, Error> {
    let mask = closure_mask(grid);
    let codes: Vec<f64> = grid.mask.iter().map(|k| f64::from(k.code())).collect();
    Ok(vec![
        Artifact::text(&format!("{name}.csv"), nodal_csv(&layout(grid), &[(name, values), ("mask", &codes)])?),
        Artifact::text(&format!("{name}.svg"), heatmap_svg(&layout(grid), values, Some(&mask), name)?),
    ])
}

fn grid_artifacts(grid: &DomainGrid) -> Result<Vec<Artifact>, Error> {
    let dump = grid.to_dump();
    let json = serde_json::to_string(&dump).map_err(|e| Error::InvalidParams(e.to_string()))?;
    Ok(vec![Artifact::text("grid.json", json), Artifact { name: "grid.bin".into(), contents: dump.to_bytes() }])
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn scan_options(m: &RunManifest, ctx: &Context) -> ScanOptions {
    ScanOptions {
        samples: m.samples(),
        scales: m.numerics.scales.unwrap_or(usize::MAX),
        points: m.numerics.points.clone(),
        radii: m.numerics.radii.clone(),
        seed: ctx.seed,
    }
}

fn scan_artifacts(prefix: &str, samples: &[ScanSample]) -> Result<Vec<Artifact>, Error> {
    let rows: Vec<Vec<f64>> = samples.iter().map(|s| vec![s.xi[0], s.xi[1], s.radius, s.ratio]).collect();
    let plot = plot_svg(&PlotSpec {
        title: format!("{prefix} ratios"),
        x_label: "R".into(),
        y_label: "ratio".into(),
        log_x: true,
        log_y: false,
        series: vec![Series { label: "(xi, R)".into(), points: samples.iter().map(|s| (s.radius, s.ratio)).collect(), markers: true, line: false }],
    });
    Ok(vec![Artifact::text(&format!("{prefix}.csv"), table_csv(&["x", "y", "R", "ratio"], &rows)?), Artifact::text(&format!("{prefix}.svg"), plot)])
}

pub fn execute(m: &RunManifest, ctx: &Context) -> Result<Outcome, Error> {
    match m.command {
        Command::Solve => {
            let grid = grid(m)?;
            let a = coefficient(m, &grid)?;
            let mu = m.measure.clone().unwrap_or_else(MeasureSpec::zero);
            let u = solve_dirichlet(&grid, &a, &mu, &settings(m))?;
            let mut artifacts = field_artifacts(&grid, "u", &u.values)?;
            artifacts.extend(grid_artifacts(&grid)?);
            let results = json!({
                "h": grid.h,
                "nodes": grid.node_count(),
                "max_abs": u.max_abs(),
                "energy": u.energy,
                "residual_norm": u.residual_norm,
                "iterations": u.iterations,
                "lambda": a.lambda,
                "L": a.big_l,
            });
            Ok(Outcome { results, artifacts })
        }
        Command::Morrey => {
            let grid = grid(m)?;
            let mu = m.measure.clone().unwrap_or_else(MeasureSpec::zero);
            let alpha = m.numerics.alpha.unwrap_or(1.0);
            let report = morrey_norm(&mu, &grid, alpha)?;
            let mut results = json!({ "morrey": to_value(&report) });
            if let (Some(q), [term]) = (m.numerics.q, mu.terms.as_slice()) {
                if let TermKind::GridDensity { density } = &term.kind {
                    results["from_density"] = to_value(&morrey_from_density(density, &grid, q, alpha)?);
                }
            }
            Ok(Outcome { results, artifacts: grid_artifacts(&grid)? })
        }
        Command::Capacity => {
            let Some(DomainSpec::Condenser { k, u }) = &m.domain else {
                return Err(Error::InvalidParams("command capacity requires a condenser domain".into()));
            };
            let k = match &m.numerics.points {
                Some(points) => CompactSpec::Nodes { points: points.clone() },
                None => CompactSpec::Disk { center: k.center, radius: k.radius },
            };
            let cond = CondenserSpec { k, u: *u };
            let cap = variational_capacity(&cond, m.resolution())?;
            Ok(Outcome { results: json!({ "condenser": to_value(&cond), "capacity": to_value(&cap) }), artifacts: Vec::new() })
        }
        Command::CdcScan => {
            let grid = grid(m)?;
            let report = cdc_scan(&grid, &scan_options(m, ctx))?;
            let mut results = json!({
                "gamma_min": report.gamma_min,
                "gamma_by_scale": report.gamma_by_scale,
                "denominators": report.denominators,
                "scale_variation": report.scale_variation,
                "samples": report.samples.len(),
            });
            if let Some(c) = m.numerics.c {
                results["uniform_perfectness"] = to_value(&uniform_perfectness_scan(&grid, m.samples(), c, ctx.seed)?);
            }
            Ok(Outcome { results, artifacts: scan_artifacts("cdc", &report.samples)? })
        }
        Command::VdcScan => {
            let grid = grid(m)?;
            let report = vdc_scan(&grid, &scan_options(m, ctx))?;
            let results = json!({ "ratio_min": report.ratio_min, "samples": report.samples.len() });
            Ok(Outcome { results, artifacts: scan_artifacts("vdc", &report.samples)? })
        }
        Command::Hardy => {
            let spec = domain(m)?;
            let resolutions = m.numerics.resolutions.clone().unwrap_or_else(|| vec![m.resolution()]);
            let tol = m.numerics.tol.unwrap_or(1e-6);
            let report = hardy_refinement(spec, &resolutions, tol)?;
            let finest = build_grid(spec, *resolutions.last().unwrap_or(&m.resolution()))?;
            let results = json!({ "estimate": report.estimate, "iterations": report.iterations, "trace": report.trace });
            Ok(Outcome { results, artifacts: field_artifacts(&finest, "eigenfield", &report.eigenfield)? })
        }
        Command::Barrier => {
            let grid = grid(m)?;
            let alpha = m.numerics.alpha.unwrap_or(0.5);
            let u = distance_power(&grid, alpha);
            let report = verify_strong_barrier(&grid, &u, m.numerics.c.unwrap_or(0.0), alpha, m.numerics.min_delta)?;
            Ok(Outcome { results: to_value(&report), artifacts: field_artifacts(&grid, "U", &u)? })
        }
        Command::Cell => {
            let n = m.numerics.cell_resolution.unwrap_or(DEFAULT_CELL_RESOLUTION);
            let (a, _) = periodic(m, n)?;
            let cell = solve_cell(&a, &settings(m), true)?;
            let alpha = m.numerics.alpha.unwrap_or(0.5);
            let mut potentials = Vec::new();
            for v in cell.potentials.iter().flatten() {
                potentials.push(json!({
                    "direction": v.direction,
                    "v_inf": v.v_inf,
                    "bound_ratio": v.bound_ratio,
                    "divergence_error": v.divergence_error,
                }));
            }
            let mut regularity = Vec::new();
            for chi in &cell.chi {
                let r = corrector_regularity(chi, alpha, None)?;
                regularity.push(json!({ "direction": chi.direction, "seminorm": r.seminorm, "fitted_alpha": r.fitted_alpha }));
            }
            let results = json!({
                "n": n,
                "A0": cell.a0,
                "lambda": a.lambda,
                "L": a.big_l,
                "within_envelope": within_envelope(&cell.a0, a.lambda, a.big_l, 1e-9),
                "residuals": cell.residuals(),
                "potentials": potentials,
                "regularity": regularity,
            });
            let torus = NodeLayout { origin: [0.0, 0.0], h: 1.0 / n as f64, nodes_x: n, nodes_y: n };
            let mut artifacts = vec![Artifact::text("A0.json", to_value(&json!({ "A0": cell.a0 })).to_string())];
            for chi in &cell.chi {
                let name = format!("chi{}", chi.direction + 1);
                artifacts.push(Artifact::text(&format!("{name}.csv"), nodal_csv(&torus, &[(&name, &chi.values)])?));
                artifacts.push(Artifact::text(&format!("{name}.svg"), heatmap_svg(&torus, &chi.values, None, &name)?));
            }
            Ok(Outcome { results, artifacts })
        }
        Command::Rate => {
            let mut opts = RateOptions { settings: settings(m), ..Default::default() };
            if let Some(cpp) = m.numerics.cells_per_period {
                opts.cells_per_period = cpp;
            }
            let (a, _) = periodic(m, opts.cells_per_period)?;
            let eps = m.numerics.eps_list.clone().unwrap_or_default();
            let report = convergence_study(domain(m)?, &a, &measure_or_unit(m), &eps, &opts)?;
            let rows: Vec<Vec<f64>> = report.epsilons.iter().zip(&report.sup_errors).map(|(e, s)| vec![*e, *s]).collect();
            let data: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
            let artifacts = vec![
                Artifact::text("rate.csv", table_csv(&["epsilon", "sup_error"], &rows)?),
                Artifact::text("rate.svg", loglog_with_fit("sup error against epsilon", "epsilon", "sup error", &data, Some((report.fitted_rate, report.constant)))),
            ];
            Ok(Outcome { results: to_value(&report), artifacts })
        }
        Command::Hoelder => {
            let grid = grid(m)?;
            let a = coefficient(m, &grid)?;
            let alpha = m.numerics.alpha.unwrap_or(1.0);
            let alpha0 = m.numerics.alpha0.clone().unwrap_or_else(|| DEFAULT_ALPHA0.to_vec());
            let study = hoelder_estimate_study(&grid, &a, &measure_or_unit(m), alpha, &alpha0, None, &settings(m))?;
            let probes: Vec<Value> = study
                .reports
                .iter()
                .zip(&study.ratios)
                .map(|(r, ratio)| json!({ "alpha0": r.alpha, "seminorm": r.seminorm, "fitted_alpha": r.fitted_alpha, "ratio": ratio, "witnesses": r.witnesses }))
                .collect();
            let results = json!({ "morrey": to_value(&study.morrey), "lambda": study.lambda, "probes": probes, "max_abs": study.solution.max_abs() });
            let mut artifacts = field_artifacts(&grid, "u", &study.solution.values)?;
            if let Some(r) = study.reports.first() {
                let rows: Vec<Vec<f64>> = r.modulus.iter().map(|s| vec![s.separation, s.oscillation]).collect();
                artifacts.push(Artifact::text("modulus.csv", table_csv(&["separation", "oscillation"], &rows)?));
                let data: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
                artifacts.push(Artifact::text("modulus.svg", loglog_with_fit("modulus of continuity", "separation", "oscillation", &data, Some((r.fitted_alpha, r.fit_constant)))));
            }
            Ok(Outcome { results, artifacts })
        }
        Command::Radial => {
            let num = &m.numerics;
            let missing = |k: &str| Error::InvalidParams(format!("radial requires {k}"));
            let report = radial_example(num.n.ok_or_else(|| missing("n"))?, num.alpha.ok_or_else(|| missing("alpha"))?, num.radius.ok_or_else(|| missing("R"))?)?;
            let rows: Vec<Vec<f64>> = report.profile.iter().map(|(r, u)| vec![*r, *u]).collect();
            let plot = plot_svg(&PlotSpec {
                title: "radial profile".into(),
                x_label: "r".into(),
                y_label: "u_R".into(),
                log_x: false,
                log_y: false,
                series: vec![Series { label: "u_R(r)".into(), points: report.profile.clone(), markers: false, line: true }],
            });
            let mut results = to_value(&report);
            if let Some(obj) = results.as_object_mut() {
                obj.remove("profile");
                if let Some(h) = obj.get_mut("profile_hoelder").and_then(Value::as_object_mut) {
                    h.remove("modulus");
                }
            }
            let artifacts = vec![Artifact::text("profile.csv", table_csv(&["r", "u"], &rows)?), Artifact::text("profile.svg", plot)];
            Ok(Outcome { results, artifacts })
        }
    }
}
