mod commands;
mod table;

use clap::{Args, Parser, Subcommand};
use commands::{Failure, Output};
use gasket_walk::config::{Command, Format, LevelRange, Manifest, RunConfig, SchemeName};
use gasket_walk::observables::LimitChoice;
use gasket_walk::oracle::Absorb;
use gasket_walk::{CoinKind, WalkError};
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 2;
const EXIT_MATH: u8 = 3;
const EXIT_VALIDATION: u8 = 4;
const EXIT_IO: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "gasket", version, about = "Quantum and classical walks on the doubled Sierpinski gasket")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_coin)]
    coin: Option<CoinKind>,
    #[arg(long, global = true, value_parser = parse_scheme)]
    scheme: Option<SchemeName>,
    #[arg(long, global = true)]
    nodes: Option<usize>,
    #[arg(long, global = true)]
    mc_samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    /// Result file (standard output if absent).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Manifest file (defaults to `<output>.manifest.json`).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    conservation_tol: Option<f64>,
    #[arg(long, global = true)]
    limit_gap_tol: Option<f64>,
    #[arg(long, global = true)]
    imag_residue_tol: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct Levels {
    #[arg(long, value_parser = parse_levels, conflicts_with = "levels")]
    level: Option<LevelRange>,
    /// `n` or `a..b`.
    #[arg(long, value_parser = parse_levels)]
    levels: Option<LevelRange>,
}

#[derive(Args, Debug, Default)]
struct Fitting {
    #[arg(long, value_parser = parse_levels)]
    fit_range: Option<LevelRange>,
    #[arg(long, value_parser = parse_limit)]
    limit: Option<LimitChoice>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Site list of the doubled gasket.
    Lattice(#[command(flatten)] Levels),
    /// Exit probability matrices.
    ExitDist(#[command(flatten)] Levels),
    /// Integrals of the squared Green functions by level.
    Recurrence(#[command(flatten)] Levels),
    /// Localization and convergence exponents.
    Exponents {
        #[command(flatten)]
        levels: Levels,
        #[command(flatten)]
        fit: Fitting,
    },
    /// First passage to the outer corners.
    Passage {
        #[command(flatten)]
        levels: Levels,
        /// prob | etime
        #[arg(long)]
        observable: Option<String>,
    },
    /// Uniform-coin orbits and exponents.
    Classical {
        #[command(flatten)]
        levels: Levels,
        /// phi | triple | exponents
        #[arg(long)]
        observable: Option<String>,
    },
    /// Absorbing evolution by direct simulation.
    Oracle {
        #[command(flatten)]
        levels: Levels,
        /// `x,y,eK`
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        tmax: Option<u32>,
        #[arg(long, value_parser = parse_absorb)]
        absorb: Option<Absorb>,
    },
    /// Long-format `(n, -ln value, fitted_line)` series.
    PlotData {
        #[command(flatten)]
        levels: Levels,
        #[command(flatten)]
        fit: Fitting,
        /// exponents | phi
        #[arg(long)]
        family: Option<String>,
    },
}

fn parse_levels(s: &str) -> Result<LevelRange, String> {
    s.parse().map_err(|e: WalkError| e.to_string())
}

fn parse_coin(s: &str) -> Result<CoinKind, String> {
    match s {
        "quantum" | "grover" => Ok(CoinKind::Quantum),
        "classical" | "uniform" => Ok(CoinKind::Classical),
        _ => Err(format!("unknown coin {s:?} (quantum|classical)")),
    }
}

fn parse_scheme(s: &str) -> Result<SchemeName, String> {
    match s {
        "trapezoid" => Ok(SchemeName::Trapezoid),
        "mc" => Ok(SchemeName::Mc),
        _ => Err(format!("unknown scheme {s:?} (trapezoid|mc)")),
    }
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(format!("unknown format {s:?} (csv|json)")),
    }
}

fn parse_limit(s: &str) -> Result<LimitChoice, String> {
    match s {
        "deepest" => Ok(LimitChoice::Deepest),
        "analytic" => Ok(LimitChoice::Analytic),
        _ => Err(format!("unknown limit {s:?} (deepest|analytic)")),
    }
}

fn parse_absorb(s: &str) -> Result<Absorb, String> {
    s.parse().map_err(|e: WalkError| e.to_string())
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Math(#[from] Failure),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Math(f) if matches!(f.source, WalkError::Config(_)) => EXIT_USAGE,
            CliError::Math(_) => EXIT_MATH,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

fn over<T>(dst: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *dst = v;
    }
}

fn over_opt<T>(dst: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *dst = v;
    }
}

/// File config (or defaults) with every given flag laid over it.
fn merge(cli: Cli) -> Result<RunConfig, CliError> {
    let c = cli.common;
    let mut cfg = match &c.config {
        Some(p) => {
            let s = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str::<RunConfig>(&s).map_err(|e| CliError::Usage(format!("bad config {}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    over(&mut cfg.coin, c.coin);
    over(&mut cfg.quadrature.scheme, c.scheme);
    over(&mut cfg.quadrature.nodes, c.nodes);
    over(&mut cfg.quadrature.mc_samples, c.mc_samples);
    over(&mut cfg.quadrature.seed, c.seed);
    over(&mut cfg.output.format, c.format);
    over_opt(&mut cfg.output.path, c.output);
    over_opt(&mut cfg.output.manifest, c.manifest);
    over(&mut cfg.tolerances.conservation, c.conservation_tol);
    over(&mut cfg.tolerances.limit_gap, c.limit_gap_tol);
    over(&mut cfg.tolerances.imag_residue, c.imag_residue_tol);

    let (command, levels) = match cli.cmd {
        Cmd::Lattice(l) => (Command::Lattice, l),
        Cmd::ExitDist(l) => (Command::ExitDist, l),
        Cmd::Recurrence(l) => (Command::Recurrence, l),
        Cmd::Exponents { levels, fit } => {
            over_opt(&mut cfg.fit_range, fit.fit_range);
            over_opt(&mut cfg.limit, fit.limit);
            (Command::Exponents, levels)
        }
        Cmd::PlotData { levels, fit, family } => {
            over_opt(&mut cfg.fit_range, fit.fit_range);
            over_opt(&mut cfg.limit, fit.limit);
            over_opt(&mut cfg.observable, family);
            (Command::PlotData, levels)
        }
        Cmd::Passage { levels, observable } => {
            over_opt(&mut cfg.observable, observable);
            (Command::Passage, levels)
        }
        Cmd::Classical { levels, observable } => {
            over_opt(&mut cfg.observable, observable);
            (Command::Classical, levels)
        }
        Cmd::Oracle { levels, start, tmax, absorb } => {
            over(&mut cfg.start, start);
            over(&mut cfg.t_max, tmax);
            over(&mut cfg.absorb, absorb);
            (Command::Oracle, levels)
        }
    };
    cfg.command = Some(command);
    over_opt(&mut cfg.levels, levels.level.or(levels.levels));
    if command == Command::Oracle && cfg.output.format == Format::Csv && c.format.is_none() {
        cfg.output.format = Format::Json;
    }
    Ok(cfg)
}

fn emit(cfg: &RunConfig, out: &Output) -> Result<Vec<u8>, CliError> {
    let io = |e: &dyn std::fmt::Display| CliError::Io(format!("cannot encode output: {e}"));
    let mut buf = Vec::new();
    match (out, cfg.output.format) {
        (Output::Table(t), Format::Csv) => t.write_csv(&mut buf).map_err(|e| io(&e))?,
        (Output::Table(t), Format::Json) => {
            serde_json::to_writer_pretty(&mut buf, &t.to_json()).map_err(|e| io(&e))?;
            buf.push(b'\n');
        }
        (Output::Json(v), _) => {
            serde_json::to_writer_pretty(&mut buf, v).map_err(|e| io(&e))?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Runs the command, writes result and manifest, returns the failed checks.
fn execute(cfg: RunConfig) -> Result<Vec<String>, CliError> {
    let mut manifest = Manifest::new(cfg.clone());
    let out = commands::run(&cfg, &mut manifest)?;
    let bytes = emit(&cfg, &out)?;
    match &cfg.output.path {
        Some(p) => {
            write_file(p, &bytes)?;
            manifest.outputs.push(p.clone());
        }
        None => io::stdout().write_all(&bytes).map_err(|e| CliError::Io(format!("cannot write output: {e}")))?,
    }
    let failed = manifest.failed().iter().map(|c| format!("{} = {:e} exceeds tolerance {:e}", c.name, c.value, c.tolerance)).collect();
    if let Some(mp) = cfg.output.manifest_path() {
        let mut s = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        s.push(b'\n');
        write_file(&mp, &s)?;
    }
    Ok(failed)
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("GASKET_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| CliError::Usage(format!("GASKET_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| merge(cli)).and_then(execute);
    match result {
        Ok(failed) if failed.is_empty() => ExitCode::SUCCESS,
        Ok(failed) => {
            for f in failed {
                eprintln!("validation failed: {f}");
            }
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
