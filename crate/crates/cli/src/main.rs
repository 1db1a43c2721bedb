//! Command-line interface: scenario sweeps (CSV / JSON-lines) and single-point
//! bound reports for the OH-molecule field-estimation model.

mod config;
mod output;
mod sweep;

use clap::{Args, Parser, Subcommand};
use config::{Axis, AxisSpec, Format, Scenario, SweepConfig, Weight};
use std::io::Write;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "ohm",
    about = "Precision bounds and control simulations for an OH-molecule field probe",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a grid sweep and emit one row per point.
    Sweep(SweepArgs),
    /// Full bound report for a single grid point.
    Report(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario: stationary-ground | stationary-thermal | dynamic-aligned |
    /// dynamic-thermal | adaptive | hcrb-compare
    #[arg(long)]
    scenario: Option<String>,
    /// Grid axis, repeatable: axis=start:stop:count with an optional :log
    /// suffix (axes: b in gauss, e in kV/cm, theta in rad, temp in K,
    /// t in 1/K, tau, segments, eta)
    #[arg(long = "grid")]
    grid: Vec<String>,
    /// JSON config file mirroring the sweep configuration; flags override it.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Output path (default: stdout).
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// csv | jsonl
    #[arg(long)]
    format: Option<String>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for any randomized sub-procedures.
    #[arg(long)]
    seed: Option<u64>,
    /// Also evaluate the Holevo bound where applicable.
    #[arg(long = "with-hcrb", default_value_t = false)]
    with_hcrb: bool,
    /// Weight matrix: identity | msnr
    #[arg(long)]
    weight: Option<String>,
    /// Probe for dynamic-aligned / adaptive scenarios: psiA | psiB | psiOpt
    #[arg(long)]
    probe: Option<String>,
    /// Interpret time axes in nanoseconds (converted via k_B/hbar).
    #[arg(long = "time-ns", default_value_t = false)]
    time_ns: bool,
}

fn build_config(args: &SweepArgs) -> Result<(SweepConfig, Format), String> {
    let mut cfg: Option<SweepConfig> = None;
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        cfg = Some(serde_json::from_str(&text).map_err(|e| format!("config parse: {e}"))?);
    }
    let scenario = match (&args.scenario, &cfg) {
        (Some(s), _) => Scenario::from_str(s).map_err(|e| e.to_string())?,
        (None, Some(c)) => c.scenario,
        (None, None) => return Err("missing --scenario (or a config file)".into()),
    };
    let mut config = cfg.unwrap_or_else(|| SweepConfig::new(scenario));
    config.scenario = scenario;
    for g in &args.grid {
        let (axis_s, spec_s) = g
            .split_once('=')
            .ok_or_else(|| format!("bad --grid {g:?} (want axis=start:stop:count[:log])"))?;
        let axis = Axis::from_str(axis_s).map_err(|e| e.to_string())?;
        let spec = AxisSpec::parse(spec_s).map_err(|e| e.to_string())?;
        config.grid.insert(axis, spec);
    }
    if let Some(w) = &args.weight {
        config.weight = match w.as_str() {
            "identity" => Weight::Identity,
            "msnr" => Weight::Msnr,
            other => return Err(format!("unknown weight {other:?}")),
        };
    }
    if let Some(n) = args.workers {
        config.workers = n;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.with_hcrb {
        config.with_hcrb = true;
    }
    if let Some(p) = &args.probe {
        config.probe = Some(p.clone());
    }
    if args.time_ns {
        config.time_ns = true;
    }
    let format = match &args.format {
        Some(f) => Format::from_str(f).map_err(|e| e.to_string())?,
        None => Format::Csv,
    };
    let config = config.validated().map_err(|e| e.to_string())?;
    Ok((config, format))
}

fn open_out(path: &Option<std::path::PathBuf>) -> Result<Box<dyn Write>, String> {
    match path {
        None => Ok(Box::new(std::io::stdout().lock())),
        Some(p) => {
            let f = std::fs::File::create(p)
                .map_err(|e| format!("cannot create {}: {e}", p.display()))?;
            Ok(Box::new(std::io::BufWriter::new(f)))
        }
    }
}

fn run_sweep_cmd(args: &SweepArgs) -> ExitCode {
    let (config, format) = match build_config(args) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut out = match open_out(&args.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let columns = sweep::output_columns(&config);
    let (rows, failure) = sweep::run_sweep(&config);
    let mut emit = || -> std::io::Result<()> {
        let mut w = out.as_mut();
        match format {
            Format::Csv => {
                output::write_csv_header(&mut w, &columns)?;
                for row in rows.iter() {
                    output::write_csv_row(&mut w, &sweep::project_row(&config, row.clone()))?;
                }
            }
            Format::Jsonl => {
                for row in rows.iter() {
                    output::write_jsonl_row(&mut w, &sweep::project_row(&config, row.clone()))?;
                }
            }
        }
        w.flush()
    };
    if let Err(e) = emit() {
        eprintln!("output error: {e}");
        return ExitCode::from(3);
    }
    if let Some(err) = failure {
        eprintln!("numerical failure (partial output written): {err}");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}

fn run_report_cmd(args: &SweepArgs) -> ExitCode {
    let (config, _) = match build_config(args) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut out = match open_out(&args.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match sweep::report_point(&config) {
        Ok(doc) => {
            if writeln!(out, "{}", serde_json::to_string_pretty(&doc).unwrap()).is_err()
                || out.flush().is_err()
            {
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(3)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Sweep(args) => run_sweep_cmd(args),
        Command::Report(args) => run_report_cmd(args),
    }
}
