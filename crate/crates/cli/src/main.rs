//! `dxray`: evaluation, zero scans, X-ray tracing and numerical experiments
//! for general Dirichlet series.
//!
//! Exit codes: 0 success, 1 numerical or experiment failure, 2 usage error.

mod cache;
mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cache::Cache;
use config::RunConfig;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] UsageError),
    #[error(transparent)]
    Numeric(#[from] dxray_core::Error),
}

/// Everything a command produces; cached as a unit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub ok: bool,
    pub stdout: String,
    pub stderr: String,
    /// `(file name, bytes)`, written under `out_dir`.
    pub artifacts: Vec<(String, Vec<u8>)>,
}

#[derive(Parser)]
#[command(name = "dxray", version, about = "General Dirichlet series: evaluation, zeros, X-rays, experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key=value file; flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the resolved configuration and exit
    #[arg(long, global = true)]
    dump_config: bool,
    #[arg(long, global = true)]
    out_dir: Option<String>,
    /// Ignore XRAY_CACHE_DIR for this run
    #[arg(long, global = true)]
    no_cache: bool,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    workers: Option<String>,
}

#[derive(Args, Default)]
struct Flags {
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    /// sigma_min,sigma_max,t_min,t_max
    #[arg(long, allow_hyphen_values = true)]
    region: Option<String>,
    /// sigma_min,sigma_max,t_min,t_max
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// t_min,t_max for strips; a height for ratio-trace
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sigma_range: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sigma_ref: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    grid_step: Option<String>,
    #[arg(long)]
    arc_step: Option<String>,
    #[arg(long)]
    corrector_tol: Option<String>,
    #[arg(long)]
    max_points: Option<String>,
    #[arg(long)]
    primes: Option<String>,
    /// 1-based off-line pair index, or t=<height>
    #[arg(long)]
    pair: Option<String>,
    #[arg(long)]
    deriv_tol: Option<String>,
    #[arg(long)]
    seg_tol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    expect_re: Option<String>,
    #[arg(long)]
    expect_tol: Option<String>,
    #[arg(long)]
    cutoffs: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Value, error bound and functional-equation residual at s
    Eval {
        handle: Option<String>,
        #[arg(allow_hyphen_values = true)]
        point: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Locate and pair zeros in a region (CSV on stdout)
    Zeros {
        handle: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Trace real-axis and unit-circle pre-images (SVG + CSV)
    Xray {
        handle: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Strip intercepts of gamma_k0 curves with sigma = sigma_ref
    Strips {
        handle: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Euler product against partial sum, plus sieve-step bounds
    VerifyEuler {
        handle: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Derivative zero between a pair of off-line zeros
    Theorem2 {
        handle: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Partial products of Euler-factor ratios at 1-sigma+it over sigma+it
    RatioTrace {
        handle: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// One-shot reproduction run for the Davenport-Heilbronn experiments
    DhRepro {
        #[command(flatten)]
        flags: Flags,
    },
}

impl Command {
    fn into_parts(self) -> (&'static str, Option<String>, Flags) {
        match self {
            Command::Eval { handle, point, mut flags } => {
                if point.is_some() {
                    flags.s = point;
                }
                ("eval", handle, flags)
            }
            Command::Zeros { handle, flags } => ("zeros", handle, flags),
            Command::Xray { handle, flags } => ("xray", handle, flags),
            Command::Strips { handle, flags } => ("strips", handle, flags),
            Command::VerifyEuler { handle, flags } => ("verify-euler", handle, flags),
            Command::Theorem2 { handle, flags } => ("theorem2", handle, flags),
            Command::RatioTrace { handle, flags } => ("ratio-trace", handle, flags),
            Command::DhRepro { flags } => ("dh-repro", None, flags),
        }
    }
}

fn resolve(cli: Cli) -> Result<(RunConfig, bool, bool), UsageError> {
    let (name, handle, f) = cli.command.into_parts();
    let file = match &cli.config {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| UsageError(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let overrides = [
        ("handle", handle),
        ("s", f.s),
        ("region", f.region),
        ("window", f.window),
        ("t", f.t),
        ("sigma_range", f.sigma_range),
        ("sigma_ref", f.sigma_ref),
        ("sigma", f.sigma),
        ("tol", f.tol),
        ("grid_step", f.grid_step),
        ("arc_step", f.arc_step),
        ("corrector_tol", f.corrector_tol),
        ("max_points", f.max_points),
        ("primes", f.primes),
        ("pair", f.pair),
        ("deriv_tol", f.deriv_tol),
        ("seg_tol", f.seg_tol),
        ("expect_re", f.expect_re),
        ("expect_tol", f.expect_tol),
        ("cutoffs", f.cutoffs),
        ("out_dir", cli.out_dir),
        ("workers", cli.workers),
    ];
    let cfg = RunConfig::resolve(name, file.as_deref(), &overrides)?;
    Ok((cfg, cli.dump_config, cli.no_cache))
}

fn emit(cfg: &RunConfig, o: &Outcome) -> Result<(), UsageError> {
    if !o.artifacts.is_empty() {
        let dir = PathBuf::from(cfg.get("out_dir").unwrap_or("."));
        fs::create_dir_all(&dir).map_err(|e| UsageError(format!("{}: {e}", dir.display())))?;
        for (name, bytes) in &o.artifacts {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        }
    }
    print!("{}", o.stdout);
    eprint!("{}", o.stderr);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (cfg, dump, no_cache) = match resolve(cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("dxray: {e}");
            return ExitCode::from(2);
        }
    };
    if dump {
        print!("{}", cfg.dump());
        return ExitCode::SUCCESS;
    }
    match cfg.parsed::<usize>("workers") {
        Ok(0) => {}
        Ok(n) => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Err(e) => {
            eprintln!("dxray: {e}");
            return ExitCode::from(2);
        }
    }
    let cache = match cfg.flag("cache") {
        Ok(true) if !no_cache => Cache::from_env(),
        Ok(_) => None,
        Err(e) => {
            eprintln!("dxray: {e}");
            return ExitCode::from(2);
        }
    };
    let key = Cache::key(&cfg.cache_material());
    let cached = cache.as_ref().and_then(|c| c.load(&key));
    let outcome = match cached {
        Some(o) => o,
        None => match commands::run(&cfg) {
            Ok(o) => {
                if let Some(c) = &cache {
                    if let Err(e) = c.store(&key, &o) {
                        eprintln!("dxray: cache write to {} failed: {e}", c.dir().display());
                    }
                }
                o
            }
            Err(CliError::Usage(e)) => {
                eprintln!("dxray: {e}");
                return ExitCode::from(2);
            }
            Err(CliError::Numeric(e)) => {
                eprintln!("dxray: {e}");
                return ExitCode::from(1);
            }
        },
    };
    if let Err(e) = emit(&cfg, &outcome) {
        eprintln!("dxray: {e}");
        return ExitCode::from(1);
    }
    if outcome.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
