mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::{parse_range, RunConfig};
use dirac_spectra::Error;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

/// Spectra, Green kernels and basis diagnostics for 1D Dirac operators.
#[derive(Parser, Debug)]
#[command(name = "dirac-spectra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run config; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for report.json and CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Use the reduced gap ratio for lacunary constructions.
    #[arg(long, global = true)]
    desk_scale: bool,

    /// Index range LO:HI (inclusive).
    #[arg(long, global = true, value_parser = parse_range, allow_hyphen_values = true)]
    n_range: Option<[i64; 2]>,

    /// Root tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Classify the boundary conditions.
    Classify,
    /// Locate eigenvalues over the index range.
    Spectrum,
    /// Decide the basis property.
    Diagnose,
    /// Sample the Green function and kernel at one lambda.
    Green,
    /// Build and verify the lacunary counterexample.
    Counterexample,
    /// Compare endpoint entries with their asymptotic forms.
    AsymCheck,
    /// Expand a function in the root functions.
    Expand,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Spectrum => "spectrum",
            Command::Diagnose => "diagnose",
            Command::Green => "green",
            Command::Counterexample => "counterexample",
            Command::AsymCheck => "asym-check",
            Command::Expand => "expand",
        }
    }
}

const EXIT_OTHER: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Json(_) => EXIT_PARSE,
        Error::DependentRows | Error::NotRegular | Error::Precondition(_) | Error::Invalid(_) => EXIT_PRECONDITION,
        Error::Io(_) => EXIT_OTHER,
        _ => EXIT_NUMERICAL,
    }
}

fn load(cli: &Cli) -> Result<RunConfig, (u8, String)> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| (EXIT_OTHER, format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| (EXIT_PARSE, format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(r) = cli.n_range {
        cfg.n_range = r;
    }
    if let Some(t) = cli.tol {
        cfg.spectrum.tol_root = t;
    }
    if cli.desk_scale {
        cfg.apply_desk_scale();
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("DIRAC_SPECTRA_THREADS") {
        let n: usize = v.parse().map_err(|_| format!("DIRAC_SPECTRA_THREADS={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), (u8, String)> {
    configure_threads().map_err(|e| (EXIT_PARSE, e))?;
    let cfg = load(cli)?;
    let result = match cli.command {
        Command::Classify => commands::classify(&cfg),
        Command::Spectrum => commands::spectrum_cmd(&cfg),
        Command::Diagnose => commands::diagnose(&cfg),
        Command::Green => commands::green(&cfg),
        Command::Counterexample => commands::counterexample(&cfg),
        Command::AsymCheck => commands::asym_check(&cfg),
        Command::Expand => commands::expand(&cfg),
    };
    let out = result.map_err(|e| (exit_code(&e), e.to_string()))?;
    let report = json!({
        "command": cli.command.name(),
        "config": cfg,
        "result": out.report,
    });
    let text = serde_json::to_string_pretty(&report).expect("reports serialize");
    if let Some(dir) = &cli.out {
        let io = |e: std::io::Error| (EXIT_OTHER, format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("report.json"), &text).map_err(io)?;
        for (name, bytes) in &out.files {
            std::fs::write(dir.join(name), bytes).map_err(io)?;
        }
    }
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
