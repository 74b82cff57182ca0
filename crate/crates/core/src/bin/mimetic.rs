//! Command-line driver for manufactured-solution convergence studies.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mimetic::error::Error;
use mimetic::harness::cases::{case_by_name, CASE_NAMES};
use mimetic::harness::config::{load_config, parse_levels};
use mimetic::harness::{convergence_study, write_csv, ConvergenceReport};
use mimetic::solver::BcType;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "mimetic", version, about = "Mimetic spectral element convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an h-convergence study and write CSV rows.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// poisson-g2, poisson-g1, stokes-g1, stokes-mixed-curvi or bc-sweep
    #[arg(long)]
    case: Option<String>,
    /// Polynomial order N
    #[arg(long)]
    order: Option<String>,
    /// Comma-separated element counts per direction, e.g. 8,16,32
    #[arg(long)]
    levels: Option<String>,
    /// Uniform boundary condition type g1..g4 (bc-sweep runs all four when absent)
    #[arg(long)]
    bc: Option<String>,
    /// CSV destination; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Gauss points per direction beyond N
    #[arg(long = "quad-extra")]
    quad_extra: Option<String>,
    /// key = value file with the same keys as the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

struct Settings {
    case: String,
    order: usize,
    levels: Vec<usize>,
    bc: Option<BcType>,
    out: Option<PathBuf>,
    quad_extra: usize,
}

fn parse_count(key: &str, value: &str) -> Result<usize, Error> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Configuration(format!("{key}: expected a non-negative integer, got '{value}'")))
}

fn settings(args: RunArgs) -> Result<Settings, Error> {
    let file = match &args.config {
        Some(path) => load_config(path)?,
        None => BTreeMap::new(),
    };
    let pick = |flag: Option<String>, key: &str| flag.or_else(|| file.get(key).cloned());

    let case = pick(args.case, "case")
        .ok_or_else(|| Error::Configuration(format!("--case is required (one of {})", CASE_NAMES.join(", "))))?;
    let order = parse_count("order", &pick(args.order, "order").unwrap_or_else(|| "2".into()))?;
    if order == 0 {
        return Err(Error::Configuration("order must be at least 1".into()));
    }
    let levels = parse_levels(&pick(args.levels, "levels").unwrap_or_else(|| "8,16,32,64".into()))?;
    let bc = pick(args.bc, "bc").map(|s| BcType::parse(&s)).transpose()?;
    let out = args.out.or_else(|| file.get("out").map(PathBuf::from));
    let quad_extra = parse_count(
        "quad-extra",
        &pick(args.quad_extra, "quad-extra").unwrap_or_else(|| "6".into()),
    )?;
    Ok(Settings {
        case,
        order,
        levels,
        bc,
        out,
        quad_extra,
    })
}

fn studies(s: &Settings) -> Result<Vec<ConvergenceReport>, Error> {
    let kinds: Vec<Option<BcType>> = match (s.case.as_str(), s.bc) {
        ("bc-sweep", None) => BcType::ALL.iter().copied().map(Some).collect(),
        (_, bc) => vec![bc],
    };
    let mut reports = Vec::new();
    for bc in kinds {
        let case = case_by_name(&s.case, bc)?;
        let report = convergence_study(&case, s.order, &s.levels, s.quad_extra)?;
        for l in &report.levels {
            eprintln!(
                "{} [{}] N={} M={} {:.2}s",
                report.case, report.bc, s.order, l.m, l.seconds
            );
        }
        let stop = report.failure.is_some();
        reports.push(report);
        if stop {
            break;
        }
    }
    Ok(reports)
}

fn emit(s: &Settings, reports: &[ConvergenceReport]) -> io::Result<()> {
    match &s.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_csv(&mut w, reports)?;
            w.flush()
        }
        None => write_csv(&mut io::stdout().lock(), reports),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::IllPosed(_) | Error::Solver(_) => EXIT_SOLVER,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let Command::Run(args) = Cli::parse().command;
    let s = match settings(args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let reports = match studies(&s) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = emit(&s, &reports) {
        eprintln!("error: cannot write CSV: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match reports.iter().find_map(|r| r.failure.as_ref()) {
        Some((m, e)) => {
            eprintln!("error: study stopped at M={m}: {e}");
            ExitCode::from(exit_code(e))
        }
        None => ExitCode::SUCCESS,
    }
}
