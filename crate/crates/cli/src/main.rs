use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use atomic_bands::config::load_config;
use atomic_bands::run::run;
use atomic_bands::Error;

/// Worker threads for parallel k-sweeps; defaults to all cores.
const THREADS_ENV: &str = "ATOMIC_BANDS_THREADS";

/// Band structures, Chern numbers, ribbon spectra and driven dynamics of
/// two-dimensional atomic dipole lattices.
///
/// Exit codes: 0 success, 2 invalid configuration or input, 3 numerical
/// failure (convergence, degeneracy, resolution), 1 anything else.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    mode: ModeArg,
    /// TOML configuration file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set scheme.zeeman=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum ModeArg {
    /// Bands along a path through the zone.
    Bands,
    /// Chern numbers on a zone grid.
    Chern,
    /// Spectrum of a ribbon periodic along x.
    Strip,
    /// Driven evolution of a finite patch.
    Evolve,
    /// Reflected Weyl tensor of a surface.
    GreensProbe,
}

impl ModeArg {
    fn key(self) -> &'static str {
        match self {
            ModeArg::Bands => "bands",
            ModeArg::Chern => "chern",
            ModeArg::Strip => "strip",
            ModeArg::Evolve => "evolve",
            ModeArg::GreensProbe => "greens-probe",
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        return 3;
    }
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::InvalidLattice(_)
        | Error::UnknownWaypoint { .. }
        | Error::PermittivityRange { .. }
        | Error::PermittivityTable(_)
        | Error::OverlappingPartitions { .. }
        | Error::MemoryGuard { .. }
        | Error::Domain(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got `{v}`");
                return ExitCode::from(2);
            }
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let mut overrides = cli.overrides.clone();
    overrides.push(format!("mode=\"{}\"", cli.mode.key()));
    let cfg = match &cli.config {
        Some(p) => load_config(p, &overrides)?,
        None => atomic_bands::config::parse_with_overrides("", &overrides)?,
    };
    let out = run(&cfg)?;
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    for p in out.write(&dir)? {
        println!("{}", p.display());
    }
    Ok(())
}
