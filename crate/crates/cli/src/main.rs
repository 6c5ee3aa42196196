#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod grid;
mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gic_bounds::analysis::{alpha_of, classify, delta_gap, delta_inf, g2_of_alpha, GapCeiling};
use gic_bounds::param_search::SearchOptions;
use gic_bounds::rate_region::{intersect_and_trace, outer_region, tdm_inner_region, OuterRegion, DEFAULT_REGION_POINTS};
use gic_bounds::verify::{run_suite, TolerancePolicy};
use gic_bounds::{ChannelParams, GicError, SignalKind};
use serde_json::{Map, Value};
use thiserror::Error;

use grid::{fmt_num, json_num, parse_range};
use sweep::{parse_bounds, rows};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Bounds(#[from] GicError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Parser)]
#[command(name = "gic-bounds", version, about = "Sum-rate and region bounds for the two-user Gaussian interference channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate sum-rate bounds of the symmetric channel over a (P, g^2) grid.
    Sweep(SweepArgs),
    /// Trace capacity-region boundaries.
    Region(RegionArgs),
    /// Gap between the best upper and lower sum-rate bounds.
    Gap(GapArgs),
    /// Run the acceptance suite and print a JSON report.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Real,
    Complex,
}

impl From<Mode> for SignalKind {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Real => SignalKind::Real,
            Mode::Complex => SignalKind::Complex,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct GridArgs {
    /// Power P, as a value or start:stop:step.
    #[arg(long = "p", allow_hyphen_values = true, conflicts_with = "snr_db", required_unless_present = "snr_db")]
    p: Option<String>,
    /// SNR in dB (P = 10^(x/10)), as a value or start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Cross gain squared, as a value or start:stop:step.
    #[arg(long, conflicts_with = "alpha", required_unless_present = "alpha")]
    g2: Option<String>,
    /// GDOF exponent, g^2 = P^(alpha - 1), as a value or start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
}

impl GridArgs {
    fn powers(&self) -> Result<Vec<f64>, CliError> {
        match (&self.p, &self.snr_db) {
            (Some(p), _) => parse_range(p),
            (None, Some(db)) => Ok(parse_range(db)?.into_iter().map(|x| 10f64.powf(x / 10.0)).collect()),
            (None, None) => Err(CliError::Usage("one of --p or --snr-db is required".into())),
        }
    }

    /// `(P, g^2)` pairs, P-major.
    fn points(&self) -> Result<Vec<(f64, f64)>, CliError> {
        let ps = self.powers()?;
        let mut out = Vec::new();
        match (&self.g2, &self.alpha) {
            (Some(g2), _) => {
                let g2s = parse_range(g2)?;
                for &p in &ps {
                    out.extend(g2s.iter().map(|&g2| (p, g2)));
                }
            }
            (None, Some(alpha)) => {
                let alphas = parse_range(alpha)?;
                for &p in &ps {
                    for &a in &alphas {
                        out.push((p, g2_of_alpha(p, a).map_err(|e| CliError::Usage(e.to_string()))?));
                    }
                }
            }
            (None, None) => return Err(CliError::Usage("one of --g2 or --alpha is required".into())),
        }
        Ok(out)
    }
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl OutputArgs {
    fn writer(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.output {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Comma-separated bound names, or "all".
    #[arg(long, default_value = "all")]
    bounds: String,
    #[arg(long, value_enum, default_value = "real")]
    mode: Mode,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long = "p")]
    p: f64,
    #[arg(long)]
    g2: f64,
    /// Comma-separated subset of etw, outer1, outer2, tdm.
    #[arg(long, default_value = "etw,outer1,outer2,tdm")]
    regions: String,
    /// Grid intervals per boundary (points = intervals + 1).
    #[arg(long, default_value_t = DEFAULT_REGION_POINTS)]
    points: usize,
    #[arg(long, value_enum, default_value = "real")]
    mode: Mode,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct GapArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ToleranceProfile {
    Default,
    /// Every tolerance set to zero.
    Zero,
}

#[derive(Args)]
struct VerifyArgs {
    /// Restrict to one criterion, by number or group name.
    #[arg(long)]
    only: Option<String>,
    #[arg(long, value_enum, default_value = "default")]
    tolerance: ToleranceProfile,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Writes a table as CSV or as a JSON array of records with the same keys.
fn write_table(out: &OutputArgs, header: &[String], records: &[Vec<Value>]) -> Result<(), CliError> {
    let mut w = out.writer()?;
    match out.format {
        Format::Csv => {
            let mut c = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut w);
            c.write_record(header)?;
            for r in records {
                c.write_record(r.iter().map(cell))?;
            }
            c.flush()?;
        }
        Format::Json => {
            let arr: Vec<Value> = records
                .iter()
                .map(|r| Value::Object(header.iter().cloned().zip(r.iter().cloned()).collect::<Map<_, _>>()))
                .collect();
            serde_json::to_writer_pretty(&mut w, &arr)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), fmt_num),
        other => other.to_string(),
    }
}

fn text(s: Option<&str>) -> Value {
    s.map_or(Value::Null, |s| Value::String(s.to_string()))
}

fn cmd_sweep(a: &SweepArgs) -> Result<ExitCode, CliError> {
    let columns = parse_bounds(&a.bounds)?;
    let points = a.grid.points()?;
    let opts = SearchOptions::default();
    let table = rows(&points, &columns, a.mode.into(), &opts)?;
    let mut header = vec!["p".to_string(), "g2".into(), "alpha".into()];
    header.extend(columns.iter().map(|c| c.name().to_string()));
    header.push("regime".into());
    let records: Vec<Vec<Value>> = table
        .into_iter()
        .map(|r| {
            let mut rec = vec![json_num(Some(r.p)), json_num(Some(r.g2)), json_num(r.alpha)];
            rec.extend(r.values.into_iter().map(json_num));
            rec.push(text(r.regime));
            rec
        })
        .collect();
    write_table(&a.out, &header, &records)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_region(a: &RegionArgs) -> Result<ExitCode, CliError> {
    if !(a.p > 0.0) || !(a.g2 > 0.0) || !a.p.is_finite() || !a.g2.is_finite() {
        return Err(CliError::Usage(format!("need finite P > 0 and g^2 > 0, got P = {}, g^2 = {}", a.p, a.g2)));
    }
    if a.points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    let mut wanted = Vec::new();
    for name in a.regions.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let known = ["etw", "outer1", "outer2", "tdm"];
        if !known.contains(&name) {
            return Err(CliError::Usage(format!("unknown region '{name}'; expected one of {}", known.join(", "))));
        }
        if !wanted.contains(&name) {
            wanted.push(name);
        }
    }
    if wanted.is_empty() {
        return Err(CliError::Usage("the region list is empty".into()));
    }
    let ch = ChannelParams::symmetric(a.p, a.g2.sqrt(), a.mode.into()).map_err(|e| CliError::Usage(e.to_string()))?;
    let opts = SearchOptions::default();
    let mut records = Vec::new();
    for name in wanted {
        let boundary = match OuterRegion::ALL.into_iter().find(|r| r.name() == name) {
            Some(region) => {
                let cs = outer_region(region, &ch, &opts).map_err(|e| CliError::Usage(e.to_string()))?;
                intersect_and_trace(&cs, a.points)?
            }
            None => tdm_inner_region(&ch, a.points)?,
        };
        for (r1, r2) in boundary.points {
            records.push(vec![Value::String(name.to_string()), json_num(Some(r1)), json_num(Some(r2))]);
        }
    }
    let header = ["region", "R1", "R2"].map(String::from);
    write_table(&a.out, &header, &records)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_gap(a: &GapArgs) -> Result<ExitCode, CliError> {
    let points = a.grid.points()?;
    let mut records = Vec::with_capacity(points.len());
    for (p, g2) in points {
        if !(p > 0.0) || !(g2 > 0.0) {
            return Err(CliError::Usage(format!("need P > 0 and g^2 > 0, got P = {p}, g^2 = {g2}")));
        }
        let g = g2.sqrt();
        let report = delta_gap(p, g).ok();
        records.push(vec![
            json_num(Some(p)),
            json_num(Some(g2)),
            json_num(alpha_of(p, g2)),
            text(classify(p, g).ok().map(|l| l.regime.as_str())),
            json_num(report.map(|r| r.delta)),
            json_num(report.map(|r| r.ceiling)),
            text(report.map(|r| match r.ceiling_kind {
                GapCeiling::LowPower => "low_power",
                GapCeiling::HighPower => "high_power",
            })),
            json_num(delta_inf(g).ok()),
        ]);
    }
    let header = ["p", "g2", "alpha", "regime", "delta", "ceiling", "ceiling_kind", "delta_inf"].map(String::from);
    write_table(&a.out, &header, &records)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: &VerifyArgs) -> Result<ExitCode, CliError> {
    let policy = match a.tolerance {
        ToleranceProfile::Default => TolerancePolicy::Default,
        ToleranceProfile::Zero => TolerancePolicy::Zero,
    };
    let report = run_suite(policy, a.only.as_deref()).map_err(|e| CliError::Usage(e.to_string()))?;
    let entries: Vec<&_> = report.entries().collect();
    let json = serde_json::json!({ "all_pass": report.all_pass, "entries": entries });
    let mut w: Box<dyn Write> = match &a.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    serde_json::to_writer_pretty(&mut w, &json)?;
    writeln!(w)?;
    w.flush()?;
    Ok(if report.all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("GIC_BOUNDS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("GIC_BOUNDS_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Region(a) => cmd_region(a),
        Command::Gap(a) => cmd_gap(a),
        Command::Verify(a) => cmd_verify(a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) | CliError::Bounds(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
