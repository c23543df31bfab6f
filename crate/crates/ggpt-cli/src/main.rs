//! Command-line front end: classify measurements, compute scales,
//! reconstruct states, predict statistics, verify the primal equation and
//! sweep the three-parameter family.
//!
//! Exit codes: 0 success, 1 I/O error, 2 validation failure, 3 solver
//! failure. All reports go to standard output with floats rounded to 12
//! significant digits; identical inputs and seeds give byte-identical output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ggpt::io;
use ggpt::measurement::Measurement;
use ggpt::model::ModelKind;
use ggpt::models::{self, SweepGrid};
use ggpt::scalable::ScalableError;
use ggpt::urgleichung;

#[derive(Parser)]
#[command(name = "ggpt", version, about = "Frame-theoretic measurement classification in GGPTs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Relative tolerance for all numeric decisions.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Output format; only `sweep` produces CSV.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct ModelArg {
    /// Model when the file embeds none, e.g. `quantum:2` or `classical:3`.
    /// A model embedded in the measurement file wins on conflict.
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a measurement: IC, morphophoric, tight IC, s-tight, chi-ray.
    Classify {
        /// Measurement file (JSON).
        #[arg(long)]
        povm: PathBuf,
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        common: Common,
    },
    /// Decide scalability of a measurement's traceless frame, or of a plain
    /// frame file.
    Scales {
        #[arg(long, conflicts_with = "frame", required_unless_present = "frame")]
        povm: Option<PathBuf>,
        /// Frame file (JSON: {"dim": d, "vectors": [[...], ...]}).
        #[arg(long)]
        frame: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct the state behind a probability vector.
    Reconstruct {
        #[arg(long)]
        povm: PathBuf,
        /// Probabilities, comma separated.
        #[arg(long, conflicts_with = "probs_file", required_unless_present = "probs_file")]
        probs: Option<String>,
        /// Probabilities as a JSON array file.
        #[arg(long)]
        probs_file: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        common: Common,
    },
    /// Predict the statistics of a second measurement from those of the first.
    Predict {
        #[arg(long)]
        povm: PathBuf,
        /// The measurement whose statistics are predicted.
        #[arg(long)]
        xi: PathBuf,
        #[arg(long, conflicts_with = "probs_file", required_unless_present = "probs_file")]
        probs: Option<String>,
        #[arg(long)]
        probs_file: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        common: Common,
    },
    /// Verify the primal equation on sampled random states.
    Verify {
        #[arg(long)]
        povm: PathBuf,
        #[arg(long)]
        xi: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        common: Common,
    },
    /// Classify the three-parameter family over a grid; CSV output.
    Sweep {
        /// Grid resolution, e.g. `50x50x50`.
        #[arg(long, value_parser = parse_grid)]
        grid: SweepGridArg,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy)]
struct SweepGridArg {
    na: usize,
    nb: usize,
    nc: usize,
}

fn parse_grid(s: &str) -> Result<SweepGridArg, String> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 3 {
        return Err("grid must look like 50x50x50".to_string());
    }
    let dims: Vec<usize> = parts
        .iter()
        .map(|p| p.parse().map_err(|_| format!("bad grid component {p}")))
        .collect::<Result<_, _>>()?;
    if dims.iter().any(|&d| d < 2) {
        return Err("grid step counts must be at least 2".to_string());
    }
    Ok(SweepGridArg { na: dims[0], nb: dims[1], nc: dims[2] })
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    let (kind, dim) = s
        .split_once(':')
        .ok_or_else(|| "model must look like quantum:2 or classical:3".to_string())?;
    let dim: usize = dim.parse().map_err(|_| format!("bad model dimension {dim}"))?;
    match kind {
        "quantum" if dim >= 2 => Ok(ModelKind::Quantum { d: dim }),
        "classical" if dim >= 2 => Ok(ModelKind::Classical { n: dim }),
        "quantum" | "classical" => Err("model dimension must be at least 2".to_string()),
        other => Err(format!("unknown model type {other}")),
    }
}

enum CliError {
    Io(String),
    Validation(String),
    Solver(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Validation(m) | CliError::Solver(m) => m,
        }
    }
}

impl From<io::FormatError> for CliError {
    fn from(e: io::FormatError) -> Self {
        match &e {
            io::FormatError::Measurement(ggpt::measurement::MeasurementError::Scalable(
                ScalableError::SolverStalled { .. },
            )) => CliError::Solver(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ScalableError> for CliError {
    fn from(e: ScalableError) -> Self {
        match e {
            ScalableError::SolverStalled { .. } => CliError::Solver(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<urgleichung::UrgleichungError> for CliError {
    fn from(e: urgleichung::UrgleichungError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn load_measurement(
    path: &Path,
    model: Option<ModelKind>,
    tol: f64,
) -> Result<Measurement, CliError> {
    let json = read_file(path)?;
    let (meas, warnings) = io::parse_measurement(&json, model, tol)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(meas)
}

fn parse_probs(
    probs: Option<&str>,
    probs_file: Option<&Path>,
) -> Result<Vec<f64>, CliError> {
    if let Some(list) = probs {
        return list
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Validation(format!("bad probability entry {p}")))
            })
            .collect();
    }
    let path = probs_file.expect("clap enforces one of the two");
    let json = read_file(path)?;
    serde_json::from_str(&json)
        .map_err(|e| CliError::Validation(format!("probability file is not a JSON array: {e}")))
}

fn check_format(common: &Common, supported: Format) -> Result<(), CliError> {
    if let Some(f) = common.format {
        if f != supported {
            let name = match supported {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            return Err(CliError::Validation(format!(
                "this command only produces {name} output"
            )));
        }
    }
    Ok(())
}

/// NNLS scales of the traceless frame, failing when the measurement is not
/// s-tight (there is then no dual-frame reconstruction).
fn s_tight_scales(meas: &Measurement, tol: f64) -> Result<(Vec<f64>, f64), CliError> {
    let result = ggpt::scalable::find_scales(&meas.traceless_frame(), tol)?;
    match (result.scalable, result.scales, result.frame_bound) {
        (true, Some(scales), Some(alpha)) => Ok((scales, alpha)),
        _ => Err(CliError::Validation(format!(
            "measurement is not s-tight (residual {:.3e}); no scales exist",
            result.residual
        ))),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Classify { povm, model, common } => {
            check_format(&common, Format::Json)?;
            let meas = load_measurement(&povm, model.model, common.tol)?;
            let report = meas.classify(common.tol);
            print!("{}", io::to_json_12(&report));
            Ok(())
        }
        Command::Scales { povm, frame, model, common } => {
            check_format(&common, Format::Json)?;
            let frame = match (povm, frame) {
                (Some(p), None) => {
                    load_measurement(&p, model.model, common.tol)?.traceless_frame()
                }
                (None, Some(f)) => io::parse_frame(&read_file(&f)?)?,
                _ => unreachable!("clap enforces exactly one input"),
            };
            let result = ggpt::scalable::find_scales(&frame, common.tol)?;
            print!("{}", io::to_json_12(&result));
            Ok(())
        }
        Command::Reconstruct { povm, probs, probs_file, model, common } => {
            check_format(&common, Format::Json)?;
            let meas = load_measurement(&povm, model.model, common.tol)?;
            let p = parse_probs(probs.as_deref(), probs_file.as_deref())?;
            let (scales, alpha) = s_tight_scales(&meas, common.tol)?;
            let rec = urgleichung::reconstruct_state(&meas, &scales, alpha, &p, common.tol)?;
            let mut out = BTreeMap::new();
            out.insert("state", serde_json::to_value(&rec.state).unwrap());
            out.insert("in_cone", serde_json::Value::Bool(rec.in_cone));
            out.insert("alpha", serde_json::to_value(alpha).unwrap());
            out.insert("scales", serde_json::to_value(&scales).unwrap());
            print!("{}", io::to_json_12(&out));
            Ok(())
        }
        Command::Predict { povm, xi, probs, probs_file, model, common } => {
            check_format(&common, Format::Json)?;
            let pi = load_measurement(&povm, model.model, common.tol)?;
            let xi = load_measurement(&xi, model.model, common.tol)?;
            let p = parse_probs(probs.as_deref(), probs_file.as_deref())?;
            let (scales, _) = s_tight_scales(&pi, common.tol)?;
            let predicted = urgleichung::predict_statistics(&pi, &xi, &scales, &p, common.tol)?;
            let mut out = BTreeMap::new();
            out.insert("probabilities", predicted.as_slice().to_vec());
            print!("{}", io::to_json_12(&out));
            Ok(())
        }
        Command::Verify { povm, xi, samples, seed, model, common } => {
            check_format(&common, Format::Json)?;
            let pi = load_measurement(&povm, model.model, common.tol)?;
            let xi = load_measurement(&xi, model.model, common.tol)?;
            // Use the s-tight scales when they exist; otherwise constant
            // scales expose the failure honestly.
            let scales = ggpt::scalable::find_scales(&pi.traceless_frame(), common.tol)
                .ok()
                .and_then(|r| r.scales)
                .unwrap_or_else(|| vec![1.0; pi.len()]);
            let residual =
                urgleichung::verify_primal_equation(&pi, &xi, &scales, samples, seed)?;
            let mut out = BTreeMap::new();
            out.insert("max_residual", serde_json::to_value(residual).unwrap());
            out.insert("pass", serde_json::Value::Bool(residual <= common.tol));
            out.insert("samples", serde_json::to_value(samples).unwrap());
            out.insert("seed", serde_json::to_value(seed).unwrap());
            out.insert("tol", serde_json::to_value(common.tol).unwrap());
            print!("{}", io::to_json_12(&out));
            Ok(())
        }
        Command::Sweep { grid, out, common } => {
            check_format(&common, Format::Csv)?;
            let records = models::sweep_family(
                SweepGrid { na: grid.na, nb: grid.nb, nc: grid.nc },
                common.tol,
            );
            let csv = io::sweep_csv(&records);
            match out {
                Some(path) => std::fs::write(&path, csv).map_err(|e| {
                    CliError::Io(format!("cannot write {}: {e}", path.display()))
                })?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
