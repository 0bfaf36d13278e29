use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use cdch_cli::manifest::{check, validate, RunManifest};
use cdch_cli::report::{write_outputs, ErrorEntry, Provenance, Report};
use cdch_cli::run::{execute, Context};
use cdch_core::capacity::SAMPLE_SEED;

const EXIT_IO: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "cdch", version, about = "Elliptic solves, capacity scans and homogenization studies on planar domains")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a manifest and write report.json plus artifacts.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory; defaults to the manifest's `output` or `./out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a manifest without running it.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn read_manifest(path: &Path) -> Result<(Vec<u8>, Value), String> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let doc = serde_json::from_slice(&bytes).map_err(|e| format!("{} is not JSON: {e}", path.display()))?;
    Ok((bytes, doc))
}

fn cmd_validate(path: &Path) -> ExitCode {
    let doc = match read_manifest(path) {
        Ok((_, doc)) => doc,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let errs = validate(&doc);
    if errs.is_empty() {
        println!("ok");
        ExitCode::SUCCESS
    } else {
        for e in &errs {
            println!("{e}");
        }
        ExitCode::from(EXIT_INVALID)
    }
}

fn cmd_run(path: &Path, out: Option<PathBuf>, seed: Option<u64>, threads: Option<usize>) -> ExitCode {
    let (bytes, doc) = match read_manifest(path) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    if let Some(t) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("cannot configure {t} threads: {e}");
            return ExitCode::from(EXIT_IO);
        }
    }
    let seed = seed.unwrap_or(SAMPLE_SEED);
    let provenance = Provenance::new(&bytes, seed, rayon::current_num_threads());
    let command = doc.get("command").and_then(Value::as_str).unwrap_or_default().to_string();
    let parsed: Result<RunManifest, Vec<String>> = match serde_json::from_value::<RunManifest>(doc.clone()) {
        Ok(m) => {
            let errs = check(&m);
            if errs.is_empty() { Ok(m) } else { Err(errs) }
        }
        Err(_) => Err(validate(&doc)),
    };
    let out_dir = |m: Option<&RunManifest>| {
        out.clone().or_else(|| m.and_then(|m| m.output.clone()).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
    };
    let (report, artifacts, code) = match parsed {
        Err(errors) => {
            let errors = errors.into_iter().map(ErrorEntry::validation).collect();
            let report = Report { command, inputs: doc, results: Value::Null, provenance, errors };
            (report, Vec::new(), EXIT_INVALID)
        }
        Ok(m) => {
            let mut inputs = serde_json::to_value(&m).unwrap_or(doc);
            if let Some(num) = inputs.get_mut("numerics").and_then(Value::as_object_mut) {
                num.retain(|_, v| !v.is_null());
            }
            match execute(&m, &Context { seed }) {
                Ok(outcome) => {
                    let report = Report { command, inputs, results: outcome.results, provenance, errors: Vec::new() };
                    (report, outcome.artifacts, 0)
                }
                Err(e) => {
                    let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INVALID };
                    let report = Report { command, inputs, results: Value::Null, provenance, errors: vec![ErrorEntry::from_core(&e)] };
                    (report, Vec::new(), code)
                }
            }
        }
    };
    let dir = out_dir(serde_json::from_value::<RunManifest>(report.inputs.clone()).ok().as_ref());
    for e in &report.errors {
        eprintln!("{}", e.message);
    }
    if let Err(e) = write_outputs(&dir, &report, &artifacts) {
        eprintln!("cannot write {}: {e}", dir.display());
        return ExitCode::from(EXIT_IO);
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Cmd::Run { manifest, out, seed, threads } => cmd_run(&manifest, out, seed, threads),
        Cmd::Validate { manifest } => cmd_validate(&manifest),
    }
}
