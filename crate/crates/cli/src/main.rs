use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use muskat_cli::commands::{self, SpectrumArgs, VelocityArgs, VerifyLevel};
use muskat_cli::{configure_threads, CliError};

#[derive(Parser)]
#[command(name = "muskat", version, about = "Periodic two-phase Muskat problem simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    Phi2Sign,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the interface equation and write time series, snapshots and metadata.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.directory` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run the cross-oracle checks and print a pass/fail table.
    Verify {
        #[arg(long, value_enum, default_value = "quick")]
        level: Level,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Compare the numerical linearized spectrum at the flat state with `-k drho m / 2 mu`.
    Spectrum {
        #[arg(long)]
        k: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        drho: f64,
        #[arg(long)]
        m_max: u32,
        /// Grid size; defaults to the smallest power of two with `8 m_max <= n`, at least 64.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = muskat::analysis::DEFAULT_FRECHET_EPS)]
        eps: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sample velocity and pressure on a rectangular lattice.
    Velocity {
        #[arg(long)]
        config: PathBuf,
        /// Binary snapshot to use instead of the config's initial interface.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        xmin: f64,
        #[arg(long, allow_hyphen_values = true)]
        xmax: f64,
        #[arg(long, allow_hyphen_values = true)]
        ymin: f64,
        #[arg(long, allow_hyphen_values = true)]
        ymax: f64,
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        ny: usize,
        #[arg(long, default_value_t = muskat::flow::DEFAULT_CLEARANCE)]
        clearance: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn emit(text: &str, output: Option<PathBuf>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads(std::env::var("MUSKAT_THREADS").ok().as_deref())?;
    match cli.command {
        Command::Simulate { config, output_dir } => {
            let summary = commands::simulate(&config, output_dir.as_deref())?;
            let m = &summary.metadata;
            println!(
                "{}: t = {} after {} steps, termination {}, wall time {:.2} s",
                summary.directory.display(),
                m.final_t,
                m.steps,
                m.termination,
                m.wall_time_s
            );
            Ok(())
        }
        Command::Verify { level, inject_fault } => {
            let level = match level {
                Level::Quick => VerifyLevel::Quick,
                Level::Full => VerifyLevel::Full,
            };
            let rows = commands::verify(level, matches!(inject_fault, Some(Fault::Phi2Sign)))?;
            commands::write_verify_table(&rows, &mut std::io::stdout())
                .map_err(|e| CliError::Failed(e.to_string()))?;
            let failed = rows.iter().filter(|r| !r.passed()).count();
            if failed > 0 {
                return Err(CliError::Failed(format!("{failed} of {} checks failed", rows.len())));
            }
            Ok(())
        }
        Command::Spectrum { k, mu, drho, m_max, n, eps, output } => {
            let csv = commands::spectrum(&SpectrumArgs { k, mu, delta_rho: drho, m_max, n_points: n, eps })?;
            emit(&csv, output)
        }
        Command::Velocity { config, snapshot, xmin, xmax, ymin, ymax, nx, ny, clearance, output } => {
            let csv = commands::velocity(&VelocityArgs {
                config,
                snapshot,
                x_range: (xmin, xmax),
                y_range: (ymin, ymax),
                nx,
                ny,
                clearance,
            })?;
            emit(&csv, output)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = execute(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
