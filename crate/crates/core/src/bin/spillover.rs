use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spillover::harness::{self, io, OutputPaths, RunConfig};
use spillover::sensitivity::{sensitivity_report, SensitivityConfig};
use spillover::{presets, Result};

#[derive(Parser)]
#[command(name = "spillover", version, about = "Treatment-effect simulations under network interference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated experiments and write results, diagnostics and metadata.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Directory for relative output paths.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run a grid of network sizes and fit log-log MSE slopes.
    MseSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Bin one estimator's results and attach the theoretical overlays.
    Histogram {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        metadata: PathBuf,
        #[arg(long)]
        estimator: String,
        /// Grid size to use when the results cover several.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Histogram CSV; the overlay JSON is written next to it.
        #[arg(long, default_value = "histogram.csv")]
        out: PathBuf,
    },
    /// Invert the interference-robust test over a list of levels.
    Sensitivity {
        #[arg(long)]
        config: PathBuf,
        /// Interval CSV; the report JSON is written next to it.
        #[arg(long, default_value = "sensitivity.csv")]
        out: PathBuf,
    },
    /// Named simulation settings.
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
}

#[derive(Subcommand)]
enum PresetsAction {
    List,
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out_dir } => {
            let cfg = RunConfig::load(&config)?;
            let table = harness::run_replications(&cfg)?;
            let paths = cfg.output.under(&out_dir);
            io::write_table(&table, &paths)?;
            println!(
                "{} rows -> {} (fingerprint {})",
                table.rows.len(),
                paths.results.display(),
                table.metadata.fingerprint
            );
        }
        Command::MseSweep { config, out_dir } => {
            let cfg = RunConfig::load(&config)?;
            let sweep = harness::mse_sweep(&cfg)?;
            let paths: OutputPaths = cfg.output.under(&out_dir);
            io::write_table(&sweep.table, &paths)?;
            io::write_csv(&paths.mse, &sweep.points, &io::MSE_COLUMNS)?;
            io::write_csv(&paths.slopes, &sweep.slopes, &io::SLOPE_COLUMNS)?;
            for s in &sweep.slopes {
                match s.slope {
                    Some(v) => println!("{:<14} slope {v:+.3}", s.estimator),
                    None => println!("{:<14} slope undefined", s.estimator),
                }
            }
        }
        Command::Histogram {
            results,
            metadata,
            estimator,
            n,
            bins,
            out,
        } => {
            let table = io::read_table(&results, &metadata, None)?;
            let h = harness::histogram_export(&table, &estimator, n, bins)?;
            io::write_csv(&out, &h.bins, &io::HISTOGRAM_COLUMNS)?;
            io::write_json(&sidecar(&out), &h.overlay)?;
            println!(
                "{} replicates of {} at n = {} -> {}",
                h.overlay.replicates,
                estimator,
                h.overlay.n,
                out.display()
            );
        }
        Command::Sensitivity { config, out } => {
            let cfg: SensitivityConfig = io::read_json(&config)?;
            let report = sensitivity_report(&cfg)?;
            io::write_csv(&out, &report.intervals, &io::SENSITIVITY_COLUMNS)?;
            io::write_json(&sidecar(&out), &report)?;
            let p = report.noise_polynomial;
            println!("noise polynomial: {:.6} + {:.6}|t| + {:.6}t^2", p.constant, p.linear, p.quadratic);
            for ci in &report.intervals {
                println!("alpha {:<6} ({:.4}, {:.4})", ci.alpha, ci.lo, ci.hi);
            }
        }
        Command::Presets {
            action: PresetsAction::List,
        } => {
            for name in presets::names() {
                let p = presets::lookup(name).expect("listed presets resolve");
                println!("{:<18} pi={:<4} rank={}  {}", p.name, p.pi, p.rank, p.description);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
