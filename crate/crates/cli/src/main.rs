use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use zrdelay_cli::config::validate_scenario;
use zrdelay_cli::output::write_outputs;
use zrdelay_cli::run::run_scenario;
use zrdelay_cli::scenarios::{builtin, BUILTIN};
use zrdelay_cli::CliError;

/// Wave-packet delay sweeps for zero-range, rectangular and radial scatterers.
#[derive(Parser)]
#[command(name = "zrdelay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or the name of a built-in scenario).
    Run {
        config: String,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the grid scale of the config.
        #[arg(long)]
        grid_scale: Option<usize>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Reject unknown keys and treat flagged rows as failures.
        #[arg(long)]
        strict: bool,
    },
    /// Check a scenario without running it.
    Validate {
        config: String,
        #[arg(long)]
        strict: bool,
    },
    /// List the built-in scenarios.
    ListScenarios,
}

fn read_config(arg: &str) -> Result<String, CliError> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(text) = builtin(arg) {
            return Ok(text.to_string());
        }
    }
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            for (name, text) in BUILTIN {
                match validate_scenario(text, true) {
                    Ok(s) => println!("{name:<8} {:<15} {}", format!("{:?}", s.mode), s.description),
                    Err(e) => println!("{name:<8} invalid: {e}"),
                }
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config, strict } => {
            let scenario = match read_config(&config).and_then(|t| validate_scenario(&t, strict)) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            for k in &scenario.unknown_keys {
                eprintln!("warning: unknown key {k}");
            }
            let points = scenario.larmor.as_ref().map_or(scenario.dx.len() * scenario.packet.laws.len(), |l| l.df.len());
            println!("ok: {} ({:?}, {points} points)", scenario.name, scenario.mode);
            ExitCode::SUCCESS
        }
        Command::Run { config, out, grid_scale, jobs, strict } => {
            let mut scenario = match read_config(&config).and_then(|t| validate_scenario(&t, strict)) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            for k in &scenario.unknown_keys {
                eprintln!("warning: unknown key {k}");
            }
            if let Some(g) = grid_scale {
                if g == 0 {
                    return fail(CliError::Config(vec![zrdelay_cli::FieldError::new("--grid-scale", "must be at least 1")]));
                }
                scenario.grid_scale = g;
            }
            let result = match run_scenario(&scenario, jobs) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            let files = match write_outputs(&out, &scenario, &result) {
                Ok(f) => f,
                Err(e) => return fail(e),
            };
            let c = &result.counts;
            println!(
                "{}: {} ok, {} flagged, {} skipped, {} failed; {} files in {}",
                scenario.name,
                c.ok,
                c.flagged,
                c.skipped,
                c.failed,
                files.len() + 1,
                out.display()
            );
            if c.failed > 0 || (strict && c.flagged > 0) {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
