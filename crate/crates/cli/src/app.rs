//! Argument parsing and subcommand dispatch behind the `knlab` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use knlab_core::experiments::{Settings, Workbench};

use crate::error::{CliError, Result};
use crate::run::{run, RunOptions, RunStatus};
use crate::{delta_csv, listing, parse_family, RunConfig};

#[derive(Parser)]
#[command(name = "knlab", version, about = "Eigenfunction concentration experiments")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; KNLAB_OUT takes precedence.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Quadrature resolution multiplier, overriding the configuration.
    #[arg(long, global = true)]
    resolution_scale: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run configuration.
    Run { config: PathBuf },
    /// List registered experiments and their parameters.
    List,
    /// Print delta(p) as CSV.
    DeltaTable,
    /// Kakeya-Nikodym value of one field, as JSON.
    Kn { family: String, k: usize },
}

/// Runs the command line `args` (program name first) and returns the exit
/// status. `env_out` is the value of `KNLAB_OUT`.
pub fn main_with<I, T>(args: I, env_out: Option<PathBuf>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render().ansi());
            return e.exit_code() as u8;
        }
    };
    match dispatch(cli, env_out, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "knlab: {e}");
            e.exit_code() as u8
        }
    }
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::io("stdout", e)
}

fn dispatch(cli: Cli, env_out: Option<PathBuf>, stdout: &mut dyn Write) -> Result<u8> {
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(CliError::config("--jobs", "must be positive"));
    }
    if let Some(r) = cli.resolution_scale {
        if !(r.is_finite() && r > 0.0) {
            return Err(CliError::config(
                "--resolution-scale",
                format!("must be positive, got {r}"),
            ));
        }
    }
    match cli.command {
        Command::List => {
            write!(stdout, "{}", listing()).map_err(out_err)?;
            Ok(0)
        }
        Command::DeltaTable => {
            write!(stdout, "{}", delta_csv()?).map_err(out_err)?;
            Ok(0)
        }
        Command::Kn { family, k } => {
            let ladder = parse_family(&family, cli.seed.unwrap_or(0))?;
            let mut settings = Settings::default();
            if let Some(r) = cli.resolution_scale {
                settings.resolution_scale = r;
            }
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
            let wb = Workbench::new(settings);
            let (lambda, kn) = pool.install(|| -> knlab_core::Result<_> {
                let cell = wb.cell(&ladder, k)?;
                Ok((cell.lambda(), wb.kn(&cell)?))
            })?;
            let out = serde_json::json!({
                "family": ladder.label(),
                "k": k,
                "lambda": lambda,
                "value": kn.value,
                "volume": kn.volume,
                "normalized": kn.value / kn.volume,
                "sampler": settings.sampler,
            });
            writeln!(stdout, "{}", serde_json::to_string_pretty(&out)?).map_err(out_err)?;
            Ok(0)
        }
        Command::Run { config } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(r) = cli.resolution_scale {
                cfg.settings.resolution_scale = r;
            }
            let out = env_out
                .or(cli.out)
                .or_else(|| cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from("knlab-out"));
            let manifest = run(&cfg, &RunOptions { out: out.clone(), jobs })?;
            for e in &manifest.experiments {
                writeln!(stdout, "{:<20} {}  ({:.1} s)", e.name, e.verdict, e.seconds).map_err(out_err)?;
            }
            writeln!(stdout, "artifacts in {}", out.display()).map_err(out_err)?;
            Ok(match manifest.status {
                RunStatus::Pass => 0,
                _ => 1,
            })
        }
    }
}
