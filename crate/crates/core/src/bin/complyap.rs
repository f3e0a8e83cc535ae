use clap::{Args, Parser, Subcommand};
use complyap::cli::{self, CliError, RunConfig, STACK_FILE};
use std::path::PathBuf;
use std::process::ExitCode;

/// Construct and verify complete Lyapunov functions with a prescribed
/// orbital derivative.
#[derive(Parser)]
#[command(name = "complyap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Outer approximation of the chain-recurrent set.
    Chainrec(Common),
    /// Build the modification stack and export the grid.
    Construct(Common),
    /// Verify a saved stack; exit status 1 if any check fails.
    Verify(WithStack),
    /// Re-export the `x y tau taudot` grid of a saved stack.
    ExportGrid(WithStack),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
}

#[derive(Args)]
struct WithStack {
    #[command(flatten)]
    common: Common,
    /// Stack file; defaults to `stack.txt` in the output directory.
    #[arg(long, value_name = "PATH")]
    stack: Option<PathBuf>,
}

fn setup(c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(out) = &c.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(n) = c.threads.map(|n| n as usize).or(cfg.threads) {
        cfg.threads = Some(n);
        complyap::par::set_threads(n);
    }
    Ok(cfg)
}

fn run(cmd: Command) -> Result<u8, CliError> {
    match cmd {
        Command::Chainrec(c) => {
            let cfg = setup(&c)?;
            print!("{}", cli::run_chainrec(&cfg)?.summary);
            Ok(0)
        }
        Command::Construct(c) => {
            let cfg = setup(&c)?;
            let o = cli::run_construct(&cfg)?;
            print!("{}", o.log);
            println!("wrote {}", cfg.out.display());
            Ok(0)
        }
        Command::Verify(w) => {
            let cfg = setup(&w.common)?;
            let stack = w.stack.unwrap_or_else(|| cfg.out.join(STACK_FILE));
            let report = cli::run_verify(&cfg, &stack)?;
            print!("{report}");
            Ok(if report.pass() { 0 } else { 1 })
        }
        Command::ExportGrid(w) => {
            let cfg = setup(&w.common)?;
            let stack = w.stack.unwrap_or_else(|| cfg.out.join(STACK_FILE));
            println!("wrote {}", cli::export_grid(&cfg, &stack)?.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("complyap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
