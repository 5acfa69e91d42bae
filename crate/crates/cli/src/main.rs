use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvqkd_core::config::PassSource;
use cvqkd_core::{report, sweep, Error, Result, RunConfig};
use log::info;

/// Satellite-to-ground CV-QKD key-rate simulator.
#[derive(Parser)]
#[command(name = "cvqkd", version)]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Worker threads for point evaluation (default: all cores).
    #[arg(long, env = "CVQKD_WORKERS", global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key rate of the configured protocol over the altitude/elevation/aperture grid.
    Sweep(Io),
    /// Every protocol in `compare.protocols` at every sweep point.
    Compare(Io),
    /// Finite-size key accumulated over a satellite pass.
    Pass {
        #[command(flatten)]
        io: Io,
        /// Also write the per-reconciliation totals here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Parse and check a config; print the resolved form with --print.
    ValidateConfig {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long)]
        print: bool,
    },
}

#[derive(Args)]
struct Io {
    /// JSON config file, `-` for stdin.
    #[arg(long, short)]
    config: PathBuf,
    /// CSV destination (default: stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Error::Io(format!("stdin: {e}")))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
    };
    let mut cfg = RunConfig::from_json(&text)?;
    // Profile paths are relative to the config file, not the working directory.
    if let (PassSource::File { path: profile }, Some(dir)) = (&mut cfg.pass.source, path.parent()) {
        if path != Path::new("-") && Path::new(profile.as_str()).is_relative() {
            *profile = dir.join(&*profile).to_string_lossy().into_owned();
        }
    }
    Ok(cfg)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ValidateConfig { config, print } => {
            let cfg = read_config(&config)?;
            if print {
                println!("{}", cfg.to_json_pretty());
            } else {
                eprintln!("{}: ok", config.display());
            }
            Ok(())
        }
        Command::Sweep(io) => {
            let cfg = read_config(&io.config)?;
            let pool = sweep::thread_pool(cli.workers)?;
            let rows = sweep::run_sweep(&cfg, &pool)?;
            report::write_sweep_csv(sink(io.output.as_deref())?, "sweep", &cfg, &rows)
        }
        Command::Compare(io) => {
            let cfg = read_config(&io.config)?;
            let pool = sweep::thread_pool(cli.workers)?;
            let rows = sweep::compare_protocols(&cfg, &pool)?;
            report::write_sweep_csv(sink(io.output.as_deref())?, "compare", &cfg, &rows)
        }
        Command::Pass { io, summary } => {
            let cfg = read_config(&io.config)?;
            let pool = sweep::thread_pool(cli.workers)?;
            let result = sweep::run_pass(&cfg, &pool)?;
            report::write_pass_series_csv(sink(io.output.as_deref())?, &cfg, &result)?;
            if let Some(path) = summary {
                report::write_pass_summary_csv(sink(Some(&path))?, &cfg, &result)?;
            }
            for (kind, r) in &result.results {
                eprintln!(
                    "{}: {} key bits",
                    kind.as_str(),
                    report::format_f64(r.total_key_bits)
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    info!("workers: {:?}", cli.workers);

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}
