//! Run manifests and their validation.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use cdch_core::capacity::DEFAULT_SAMPLES;
use cdch_core::homogenize::PeriodicPreset;
use cdch_core::q1::Mat2;
use cdch_core::{DomainSpec, MeasureSpec, PreconditionerKind};

pub const RESOLUTION_MESSAGE: &str = "resolution must be a power of two in [32,1024]";
pub const EPS_MESSAGE: &str = "eps_list requires ≥ 4 values";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Morrey,
    Capacity,
    CdcScan,
    VdcScan,
    Hardy,
    Barrier,
    Cell,
    Rate,
    Hoelder,
    Radial,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Morrey => "morrey",
            Command::Capacity => "capacity",
            Command::CdcScan => "cdc-scan",
            Command::VdcScan => "vdc-scan",
            Command::Hardy => "hardy",
            Command::Barrier => "barrier",
            Command::Cell => "cell",
            Command::Rate => "rate",
            Command::Hoelder => "hoelder",
            Command::Radial => "radial",
        }
    }

    fn needs_domain(self) -> bool {
        !matches!(self, Command::Cell | Command::Radial)
    }

    fn needs_periodic(self) -> bool {
        matches!(self, Command::Cell | Command::Rate)
    }
}

/// Coefficient given inline or as a periodic preset (optionally
/// oscillating at `epsilon`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Identity,
    Constant { matrix: Mat2 },
    Periodic {
        preset: PeriodicPreset,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub resolution: Option<usize>,
    pub tol: Option<f64>,
    pub eps_list: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    /// Probed exponents of the Hölder study.
    pub alpha0: Option<Vec<f64>>,
    pub q: Option<f64>,
    pub n: Option<usize>,
    #[serde(rename = "R")]
    pub radius: Option<f64>,
    pub samples: Option<usize>,
    pub scales: Option<usize>,
    pub c: Option<f64>,
    pub max_iter: Option<usize>,
    pub precond: Option<PreconditionerKind>,
    /// Torus resolution of the cell problem.
    pub cell_resolution: Option<usize>,
    pub cells_per_period: Option<usize>,
    /// Refinement ladder for the Hardy estimate.
    pub resolutions: Option<Vec<usize>>,
    pub points: Option<Vec<[f64; 2]>>,
    pub radii: Option<Vec<f64>>,
    pub min_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<CoefficientSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

pub const DEFAULT_RESOLUTION: usize = 128;
pub const DEFAULT_TOL: f64 = 1e-10;

impl RunManifest {
    pub fn resolution(&self) -> usize {
        self.numerics.resolution.unwrap_or(DEFAULT_RESOLUTION)
    }

    pub fn tol(&self) -> f64 {
        self.numerics.tol.unwrap_or(DEFAULT_TOL)
    }

    pub fn samples(&self) -> usize {
        self.numerics.samples.unwrap_or(DEFAULT_SAMPLES)
    }
}

fn power_of_two_in_range(r: usize) -> bool {
    r.is_power_of_two() && (32..=1024).contains(&r)
}

/// Every reason `run` would refuse the document; empty iff it is
/// accepted.
pub fn validate(doc: &Value) -> Vec<String> {
    let manifest: RunManifest = match serde_json::from_value(doc.clone()) {
        Ok(m) => m,
        Err(e) => return vec![format!("manifest does not parse: {e}")],
    };
    check(&manifest)
}

pub fn check(m: &RunManifest) -> Vec<String> {
    let mut errs = Vec::new();
    let num = &m.numerics;
    if let Some(r) = num.resolution {
        if !power_of_two_in_range(r) {
            errs.push(RESOLUTION_MESSAGE.to_string());
        }
    }
    if let Some(rs) = &num.resolutions {
        if rs.is_empty() || rs.iter().any(|r| !power_of_two_in_range(*r)) {
            errs.push(RESOLUTION_MESSAGE.to_string());
        }
    }
    if let Some(tol) = num.tol {
        if !(tol > 0.0 && tol <= 1e-6) {
            errs.push("tol must lie in (0, 1e-6]".into());
        }
    }
    if m.command.needs_domain() && m.domain.is_none() {
        errs.push(format!("command {} requires a domain", m.command.name()));
    }
    if m.command == Command::Capacity && !matches!(m.domain, Some(DomainSpec::Condenser { .. }) | None) {
        errs.push("command capacity requires a condenser domain".into());
    }
    let periodic = matches!(m.coefficient, Some(CoefficientSpec::Periodic { .. }));
    if m.command.needs_periodic() && !periodic {
        errs.push(format!("command {} requires a periodic coefficient", m.command.name()));
    }
    if let Some(CoefficientSpec::Periodic { preset, epsilon }) = &m.coefficient {
        if let Err(e) = preset.envelope() {
            errs.push(e.to_string());
        }
        if let Some(e) = epsilon {
            if !(*e > 0.0 && *e <= 1.0) {
                errs.push("epsilon must lie in (0, 1]".into());
            }
        }
    }
    if let Some(CoefficientSpec::Constant { matrix }) = &m.coefficient {
        if cdch_core::elliptic::envelope(matrix).0 <= 0.0 {
            errs.push("constant coefficient is not elliptic".into());
        }
    }
    if let Some(mu) = &m.measure {
        if let Err(e) = mu.validate() {
            errs.push(e.to_string());
        }
    }
    let alpha_in = |a: f64, closed: bool| a > 0.0 && (a < 1.0 || (closed && a == 1.0));
    match m.command {
        Command::Rate => match &num.eps_list {
            Some(eps) if eps.len() >= 4 => {
                if eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
                    errs.push("eps_list values must lie in (0, 1]".into());
                }
            }
            _ => errs.push(EPS_MESSAGE.to_string()),
        },
        Command::Radial => {
            match num.n {
                Some(n) if n >= 3 => {}
                _ => errs.push("radial requires n ≥ 3".into()),
            }
            if !num.alpha.is_some_and(|a| alpha_in(a, false)) {
                errs.push("radial requires alpha in (0, 1)".into());
            }
            if !num.radius.is_some_and(|r| r > 0.0 && r < 1.0) {
                errs.push("radial requires R in (0, 1)".into());
            }
        }
        Command::Morrey | Command::Barrier | Command::Hoelder => {
            if !num.alpha.is_some_and(|a| alpha_in(a, true)) {
                errs.push(format!("{} requires alpha in (0, 1]", m.command.name()));
            }
        }
        _ => {}
    }
    if let Some(a0) = &num.alpha0 {
        if a0.is_empty() || a0.iter().any(|a| !alpha_in(*a, true)) {
            errs.push("alpha0 values must lie in (0, 1]".into());
        }
    }
    if let Some(c) = num.c {
        if m.command == Command::CdcScan || m.command == Command::VdcScan {
            if !(c > 0.0 && c < 1.0) {
                errs.push("c must lie in (0, 1)".into());
            }
        }
    }
    if let Some(q) = num.q {
        if !(q >= 1.0) {
            errs.push("q must lie in [1, ∞]".into());
        }
    }
    if num.samples == Some(0) {
        errs.push("samples must be positive".into());
    }
    if let Some(n) = num.cell_resolution {
        if n < 4 {
            errs.push("cell_resolution must be at least 4".into());
        }
    }
    if let Some(cpp) = num.cells_per_period {
        if cpp < 8 {
            errs.push("cells_per_period must be at least 8".into());
        }
    }
    errs.dedup();
    errs
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn layered_rate() -> Value {
        json!({
            "command": "rate",
            "domain": {"kind": "unit_square"},
            "coefficient": {"type": "periodic", "preset": {"kind": "layered"}},
            "measure": {"terms": [{"kind": "grid_density", "density": {"type": "constant", "value": 1.0}}]},
            "numerics": {"eps_list": [0.125, 0.0625, 0.03125, 0.015625]}
        })
    }

    #[test]
    fn valid_rate_manifest() {
        assert_eq!(validate(&layered_rate()), Vec::<String>::new());
    }

    #[test]
    fn bad_resolution() {
        let mut doc = layered_rate();
        doc["numerics"]["resolution"] = json!(33);
        assert_eq!(validate(&doc), vec![RESOLUTION_MESSAGE.to_string()]);
    }

    #[test]
    fn too_few_epsilons() {
        let mut doc = layered_rate();
        doc["numerics"]["eps_list"] = json!([0.5, 0.25]);
        assert_eq!(validate(&doc), vec![EPS_MESSAGE.to_string()]);
    }

    #[test]
    fn unknown_keys_and_commands() {
        assert_eq!(validate(&json!({"command": "fly"})).len(), 1);
        assert_eq!(validate(&json!({"command": "radial", "extra": 1})).len(), 1);
    }
}
