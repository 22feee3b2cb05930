mod estimate;
mod simulate;
mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "recelect", version, about = "Record-based leader election: simulations, limit-law estimates and checks")]
struct Cli {
    /// Base seed of the counter-based generator.
    #[arg(long, global = true, env = "RE_SEED", default_value_t = 0)]
    seed: u64,
    /// Number of RNG substreams; output depends on it, not on the thread count.
    #[arg(long, global = true, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    streams: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-repetition rows of an election or coalescent run, plus a summary.
    Simulate(simulate::SimulateArgs),
    /// CSV or JSON estimate of a limit object.
    Estimate(estimate::EstimateArgs),
    /// Runs a verification suite and prints a JSON report.
    Verify(verify::VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
pub struct OutputArgs {
    /// Output file; standard output if omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl OutputArgs {
    fn write(&self, body: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(p) => std::fs::write(p, body)?,
            None => std::io::stdout().lock().write_all(body.as_bytes())?,
        }
        Ok(())
    }
}

pub struct RunConfig {
    pub seed: u64,
    pub streams: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = RunConfig { seed: cli.seed, streams: cli.streams as usize };
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(&run, &a).map(|()| true),
        Command::Estimate(a) => estimate::run(&run, &a).map(|()| true),
        Command::Verify(a) => verify::run(&run, &a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if e.downcast_ref::<record_election::Error>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
