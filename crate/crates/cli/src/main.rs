use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sfcmig::harness::{self, Policy, Scenario, SweepAxis};

#[derive(Parser)]
#[command(name = "sfcmig", version, about = "Dynamic SFC migration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its metric files.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the scenario once per value of one axis.
    Sweep {
        scenario: PathBuf,
        /// n_flows (flows per chain), n_chains or chain_length.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run several policies on the same traffic.
    Compare {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Check that a scenario loads and its initial placement is feasible.
    Validate {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Master seed (overrides the scenario's).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the scenario's).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Training episode cap (overrides msdf.max_episodes).
    #[arg(long)]
    episodes: Option<usize>,
}

impl Common {
    fn load(&self, path: &PathBuf) -> sfcmig::Result<Scenario> {
        let mut s = Scenario::load(path)?;
        if let Some(seed) = self.seed {
            s.experiment.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            // Relative to the working directory, not the scenario file.
            s.scenario.out_dir = Some(std::path::absolute(dir).unwrap_or_else(|_| dir.clone()));
        }
        if let Some(n) = self.episodes {
            s.msdf.max_episodes = n;
        }
        Ok(s)
    }
}

fn execute(cli: Cli) -> sfcmig::Result<()> {
    match cli.command {
        Command::Run { scenario, common } => {
            let s = common.load(&scenario)?;
            let out = harness::run_and_write(&s)?;
            print!("{}", out.summary.to_text());
        }
        Command::Sweep { scenario, axis, values, common } => {
            let s = common.load(&scenario)?;
            let axis: SweepAxis = axis.parse()?;
            let points = harness::sweep(&s, axis, &values)?;
            print!("{}", harness::sweep_table(axis, &points));
            for p in &points {
                if let Err(e) = &p.outcome {
                    eprintln!("{}={}: {e}", axis.name(), p.value);
                }
            }
        }
        Command::Compare { scenario, policies, common } => {
            let s = common.load(&scenario)?;
            let policies = policies.iter().map(|p| p.parse()).collect::<sfcmig::Result<Vec<Policy>>>()?;
            let summaries = harness::compare(&s, &policies)?;
            print!("{}", harness::compare_table(&summaries));
        }
        Command::Validate { scenario, common } => {
            let s = common.load(&scenario)?;
            println!("{}", harness::validate(&s)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
