//! Command-line front end: scenario files, the preset catalogue, sweeps and
//! CSV/JSON emission with provenance.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod scenario;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use phonon_bjj::{hamiltonian, BjjState};
use serde_json::{json, Value};

pub use config::{Analysis, Format, ModelKind, Scenario, ScenarioConfig, Setup};
pub use error::{CliError, Result};
pub use output::{Emitted, Table};
pub use scenario::{derive_params, run_contours, run_scenario, ResultBundle};

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "PHONON_BJJ_OUT";

/// Output directory used when neither flag, environment nor config sets one.
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Parser)]
#[command(
    name = "phonon-bjj",
    version,
    about = "Phononic Josephson junction simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Source {
    /// Name of a bundled preset.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub preset: Option<String>,
    /// Scenario file (JSON), or a provenance file written by an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Sink {
    /// Output directory.
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its trajectory, analyses and provenance.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sink: Sink,
    },
    /// Run a scenario once per value of one scalar parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path of the varied scalar, e.g. `params.g` or `initial.z`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; angles may be written as `pi/2`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[command(flatten)]
        sink: Sink,
    },
    /// Write the energy landscape `H(z, phi)` on the configured grid.
    Contours {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sink: Sink,
    },
    /// Map physical parameters to junction parameters and check the reduction.
    DeriveParams {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sink: Sink,
    },
    /// List the bundled presets.
    Presets,
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub stdout: String,
    pub inconclusive: Vec<String>,
}

pub fn load(source: &Source) -> Result<Value> {
    match (&source.preset, &source.config) {
        (Some(name), _) => presets::preset(name),
        (None, Some(path)) => read_document(path),
        (None, None) => Err(CliError::config(".", "need --preset or --config")),
    }
}

pub fn read_document(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    config::parse_document(&text)
}

/// Resolves one document, applying a format override.
pub fn resolve(doc: &Value, format: Option<Format>) -> Result<Scenario> {
    let mut s = ScenarioConfig::parse(doc)?.resolve(doc)?;
    if let Some(f) = format {
        s.format = f;
    }
    Ok(s)
}

fn out_dir(sink: &Sink, scenario: Option<&Scenario>) -> PathBuf {
    sink.out
        .clone()
        .or_else(|| scenario.and_then(|s| s.out_dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn write(dir: &Path, files: &[Emitted], outcome: &mut Outcome) -> Result<()> {
    output::write_all(dir, files)?;
    outcome
        .written
        .extend(files.iter().map(|f| dir.join(&f.name)));
    Ok(())
}

/// Member results of a family together with its summary files.
#[derive(Debug)]
pub struct FamilyRun {
    pub members: Vec<(Value, ResultBundle)>,
    pub summary: Vec<Emitted>,
}

/// Runs every member of `doc` (a single scenario counts as one member).
pub fn run_document(doc: &Value, format: Option<Format>) -> Result<(Vec<Scenario>, FamilyRun)> {
    let members = ScenarioConfig::members(doc)?;
    let is_family = members[0].0.is_some();
    let mut scenarios = Vec::with_capacity(members.len());
    for (_, m) in &members {
        scenarios.push(resolve(m, format)?);
    }
    let bundles = run_parallel(&scenarios)?;
    let mut run = FamilyRun {
        members: members
            .into_iter()
            .map(|(v, _)| v.unwrap_or(Value::Null))
            .zip(bundles)
            .collect(),
        summary: Vec::new(),
    };
    if is_family {
        let base = ScenarioConfig::parse(doc)?;
        let stem = base
            .output
            .stem
            .or(base.name)
            .unwrap_or_else(|| "scenario".into());
        let family = doc.get("family").cloned().unwrap_or(Value::Null);
        run.summary = summarize(
            &stem,
            &run.members,
            &scenarios,
            doc,
            &family,
            format.unwrap_or(base.output.format),
        );
    }
    Ok((scenarios, run))
}

/// Members run on scoped threads; results keep the member order.
fn run_parallel(scenarios: &[Scenario]) -> Result<Vec<ResultBundle>> {
    let results: Vec<Result<ResultBundle>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| scope.spawn(move || run_scenario(s)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("member run panicked"))
            .collect()
    });
    results.into_iter().collect()
}

fn initial_energy(s: &Scenario, b: &ResultBundle) -> Option<f64> {
    if let Some(h) = b
        .trajectory
        .as_ref()
        .and_then(|t| t.column("H"))
        .and_then(|c| c[0])
    {
        return Some(h);
    }
    match &s.setup {
        Setup::Junction {
            params,
            initial: Some(init),
        } => Some(hamiltonian(BjjState::new(init.z, init.phi), params)),
        _ => None,
    }
}

fn summarize(
    stem: &str,
    members: &[(Value, ResultBundle)],
    scenarios: &[Scenario],
    doc: &Value,
    family: &Value,
    format: Format,
) -> Vec<Emitted> {
    let axis = family
        .get("axis")
        .and_then(Value::as_str)
        .unwrap_or("value");
    let mut rows = Vec::with_capacity(members.len());
    for ((value, b), s) in members.iter().zip(scenarios) {
        let regime = b
            .record("regime")
            .and_then(|r| r.get(0))
            .cloned()
            .unwrap_or(Value::Null);
        rows.push(json!({
            "member": b.name,
            "value": value,
            "H0": initial_energy(s, b),
            "phase_mode": regime.get("phase_mode"),
            "self_trapped": regime.get("self_trapped"),
            "mean_z": regime.get("mean_z"),
            "sign_changes": regime.get("sign_changes"),
            "winding": regime.get("winding"),
            "dominant_freq": regime.get("dominant_freq"),
            "inconclusive": !b.inconclusive.is_empty(),
        }));
    }
    let name = format!("{stem}.sweep.{}", output::extension(format));
    let contents = match format {
        Format::Json => output::pretty(&json!({ "axis": axis, "rows": rows })),
        Format::Csv => summary_csv(&rows),
    };
    let files = vec![name];
    let prov = output::provenance("sweep", &config::echo_of(doc), None, &files);
    vec![
        Emitted {
            name: files[0].clone(),
            contents,
        },
        Emitted {
            name: format!("{stem}.sweep.provenance.json"),
            contents: prov,
        },
    ]
}

const SUMMARY_COLUMNS: [&str; 10] = [
    "member",
    "value",
    "H0",
    "phase_mode",
    "self_trapped",
    "mean_z",
    "sign_changes",
    "winding",
    "dominant_freq",
    "inconclusive",
];

fn summary_csv(rows: &[Value]) -> String {
    let mut out = SUMMARY_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = SUMMARY_COLUMNS
            .iter()
            .map(|c| match &r[*c] {
                Value::Null => String::new(),
                Value::String(s) => s.clone(),
                Value::Number(n) => match n.as_f64() {
                    Some(v) if !n.is_u64() && !n.is_i64() => output::fmt_f64(v),
                    _ => n.to_string(),
                },
                other => other.to_string(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    match cli.command {
        Command::Presets => {
            for (name, description) in presets::list() {
                outcome.stdout.push_str(&format!("{name}\t{description}\n"));
            }
        }
        Command::Simulate { source, sink } => {
            let doc = load(&source)?;
            simulate_document(&doc, &sink, &mut outcome)?;
        }
        Command::Sweep {
            config,
            axis,
            values,
            sink,
        } => {
            let mut doc = read_document(&config)?;
            let values: Vec<Value> = values
                .split(',')
                .filter(|v| !v.trim().is_empty())
                .map(config::axis_value)
                .collect();
            if values.is_empty() {
                return Err(CliError::config("--values", "no values given"));
            }
            let map = doc
                .as_object_mut()
                .ok_or_else(|| CliError::config(".", "scenario must be a JSON object"))?;
            map.insert("family".into(), json!({ "axis": axis, "values": values }));
            simulate_document(&doc, &sink, &mut outcome)?;
        }
        Command::Contours { source, sink } => {
            let doc = load(&source)?;
            let s = resolve(&doc, sink.format)?;
            let b = run_contours(&s)?;
            write(&out_dir(&sink, Some(&s)), &b.files, &mut outcome)?;
        }
        Command::DeriveParams { source, sink } => {
            let doc = load(&source)?;
            let s = resolve(&doc, sink.format)?;
            let (derived, b) = derive_params(&s)?;
            write(&out_dir(&sink, Some(&s)), &b.files, &mut outcome)?;
            outcome.stdout = output::pretty(&derived);
        }
    }
    Ok(outcome)
}

fn simulate_document(doc: &Value, sink: &Sink, outcome: &mut Outcome) -> Result<()> {
    let (scenarios, run) = run_document(doc, sink.format)?;
    let dir = out_dir(sink, scenarios.first());
    for (_, b) in &run.members {
        write(&dir, &b.files, outcome)?;
        outcome
            .inconclusive
            .extend(b.inconclusive.iter().map(|m| format!("{}: {m}", b.name)));
    }
    write(&dir, &run.summary, outcome)
}
