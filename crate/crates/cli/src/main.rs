use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dbcomp_cli::pipeline::{self, demo_spec, io_error, Progress, DEMOS};
use dbcomp_cli::{PipelineError, ResultBundle};

#[derive(Parser)]
#[command(name = "dbcomp", version, about = "Complete incomplete reproducing-kernel systems")]
struct Cli {
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, complete and verify the problem in a spec file.
    Complete {
        spec: PathBuf,
        /// Output JSON (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// CSV of S points and per-point diagnostics.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Re-run verification on the S stored in a result file.
    Verify {
        result: PathBuf,
        spec: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a canned problem.
    Demo {
        name: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| io_error("read_input", format!("{}: {e}", path.display())))
}

fn emit(bundle: &ResultBundle, output: Option<&Path>, csv: Option<&Path>) -> Result<(), PipelineError> {
    let json = pipeline::to_json(bundle);
    match output {
        Some(p) => pipeline::write_atomic(p, &json)?,
        None => print!("{json}"),
    }
    if let Some(p) = csv {
        pipeline::write_atomic(p, &pipeline::to_csv(&bundle.completion))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let progress = Progress { quiet: cli.quiet };
    match cli.command {
        Command::Complete { spec, output, csv } => {
            let bundle = pipeline::run_complete(&read(&spec)?, &progress)?;
            emit(&bundle, output.as_deref(), csv.as_deref())
        }
        Command::Verify { result, spec, output } => {
            let bundle = pipeline::run_verify(&read(&result)?, &read(&spec)?, &progress)?;
            emit(&bundle, output.as_deref(), None)
        }
        Command::Demo { name, output, csv } => {
            let spec = demo_spec(&name).ok_or_else(|| PipelineError {
                module: "cli",
                op: "demo",
                failure: pipeline::Failure::Validation(dbcomp_cli::spec::FieldError {
                    field: "name".into(),
                    message: format!("unknown demo `{name}`; expected one of {}", DEMOS.join(", ")),
                }),
            })?;
            progress.note(&format!("demo {name}"));
            let bundle = pipeline::run_complete(spec, &progress)?;
            emit(&bundle, output.as_deref(), csv.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
