use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use m3sim::scenario::{emit_csv, emit_plotdata, load_scenario, run_experiment, Command, RunOptions};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Tessellate,
    Routes,
    Capacity,
    Negotiate,
    Verify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Tessellate => Command::Tessellate,
            Cmd::Routes => Command::Routes,
            Cmd::Capacity => Command::Capacity,
            Cmd::Negotiate => Command::Negotiate,
            Cmd::Verify => Command::Verify,
        }
    }
}

/// Run an m3 network experiment and write its tables as CSV and plot data.
#[derive(Debug, Parser)]
#[command(name = "m3sim", version)]
struct Args {
    command: Cmd,
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Seed for simulated walks.
    #[arg(long)]
    seed: Option<u64>,
    /// Walks per chain state.
    #[arg(long)]
    walks: Option<usize>,
}

fn run(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    let scenario = load_scenario(&args.scenario)?;
    for w in &scenario.warnings {
        eprintln!("warning: {w}");
    }
    let opts = RunOptions { seed: args.seed, walks: args.walks };
    let tables = run_experiment(&scenario, args.command.into(), &opts)?;
    std::fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    for t in &tables {
        if t.is_empty() {
            continue;
        }
        let csv = args.out.join(format!("{}.csv", t.name));
        emit_csv(t, &csv)?;
        emit_plotdata(t, &args.out.join(format!("{}.dat", t.name)))?;
        println!("{} ({} rows)", csv.display(), t.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
