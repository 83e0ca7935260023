use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bosonstar::experiments::{self, collect_reports, render_report, write_outputs, ExperimentConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bosonstar", version, about = "Run pseudo-relativistic Hartree experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a config, run its experiment and write CSV curves, a JSON report and snapshots.
    Run {
        config: PathBuf,
        /// Output directory; defaults to the config's `output` or `out/<experiment>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the parallel kernels.
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Print every report found in a directory.
    Report { dir: PathBuf },
}

const FAILED: u8 = 2;

fn load(path: &Path) -> Result<ExperimentConfig, String> {
    let cfg = ExperimentConfig::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
    cfg.validate().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(cfg)
}

fn run(config: &Path, out: Option<PathBuf>, threads: Option<usize>, seed: Option<u64>) -> Result<bool, String> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    let mut cfg = load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.name()));
    let output = experiments::run(&cfg).map_err(|e| e.to_string())?;
    write_outputs(&dir, &cfg, &output).map_err(|e| e.to_string())?;
    print!("{}", render_report(&output.report));
    println!("  output: {}", dir.display());
    Ok(output.report.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run { config, out, threads, seed } => run(&config, out, threads, seed),
        Command::Validate { config } => load(&config).map(|cfg| {
            println!("{}: ok ({})", config.display(), cfg.experiment.name());
            true
        }),
        Command::Report { dir } => collect_reports(&dir).map_err(|e| e.to_string()).and_then(|reports| {
            if reports.is_empty() {
                return Err(format!("no report.json under {}", dir.display()));
            }
            for (path, r) in &reports {
                println!("{}", path.display());
                print!("{}", render_report(r));
            }
            Ok(reports.iter().all(|(_, r)| r.passed))
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(FAILED),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
