use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use shakn_lab::run::exit;
use shakn_lab::{run, run_sweep, Document, Outcome, RunConfig, RunError, Subcommand, Sweep};

/// Gaussian packets of the linearized SHAKN equation: trajectories, snapshots,
/// residual checks, a Crank–Nicolson reference and the velocity-label propagator.
///
/// Exit status: 0 all checks passed, 1 a check failed, 2 usage, 3 configuration,
/// 4 file system, 5 model or trajectory, 6 verification, 7 reference solver,
/// 8 propagator.
#[derive(Debug, Parser)]
#[command(name = "shakn", version)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,

    /// Run configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output directory; overrides `[outputs] directory`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Repeat the run for each value, concurrently, e.g. `model.nu=0,0.1,0.2`.
    #[arg(long, value_name = "KEY=V1,V2,...")]
    sweep: Option<String>,

    /// Print nothing but errors.
    #[arg(long)]
    quiet: bool,
}

fn report(label: &str, outcome: &Outcome, quiet: bool) {
    if quiet {
        return;
    }
    for note in &outcome.notes {
        println!("{label}{note}");
    }
    for file in &outcome.files {
        println!("{label}wrote {}", file.display());
    }
}

fn fail(e: &RunError) -> u8 {
    eprintln!("error: {e}");
    e.exit_code()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.kind() == ErrorKind::InvalidValue => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(exit::USAGE);
        }
        Err(e) => e.exit(),
    };
    let text = match fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return ExitCode::from(exit::IO);
        }
    };
    let doc = match Document::parse(&text) {
        Ok(d) => d,
        Err(e) => return ExitCode::from(fail(&e.into())),
    };

    let Some(sweep) = cli.sweep.as_deref() else {
        let code = match RunConfig::from_document(&doc) {
            Err(e) => fail(&e.into()),
            Ok(cfg) => {
                let out = cli.out.clone().unwrap_or_else(|| cfg.outputs.directory.clone());
                match run(cli.subcommand, &cfg, &out) {
                    Ok(o) => {
                        report("", &o, cli.quiet);
                        o.exit_code()
                    }
                    Err(e) => fail(&e),
                }
            }
        };
        return ExitCode::from(code);
    };

    let sweep: Sweep = match sweep.parse() {
        Ok(s) => s,
        Err(e) => return ExitCode::from(fail(&RunError::from(e))),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| doc.get("outputs.directory").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let mut code = exit::OK;
    for (value, result) in run_sweep(cli.subcommand, &doc, &sweep, &out) {
        let label = format!("[{}={}] ", sweep.key, value);
        let c = match result {
            Ok(o) => {
                report(&label, &o, cli.quiet);
                o.exit_code()
            }
            Err(e) => {
                eprint!("{label}");
                fail(&e)
            }
        };
        code = code.max(c);
    }
    ExitCode::from(code)
}
