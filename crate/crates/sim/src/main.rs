use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twrelay::config::{load_config, rate_region_defaults, sumrate_defaults};
use twrelay::experiments::{
    rate_region, sumrate_candidates, sumrate_sweep, write_region_csv, write_sumrate_csv, DEFAULT_REGION_POINTS,
};
use twrelay::{run_validation, SchemeChoice, SimResult, ValidateOptions};
use twrelay_core::ScenarioConfig;

#[derive(Parser)]
#[command(name = "twrelay", version, about = "Multi-pair two-way relay beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// MI and MP rate-region boundaries for two source pairs.
    RateRegion {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SchemeArg::Both)]
        scheme: SchemeArg,
        /// Sweep points per boundary.
        #[arg(long, default_value_t = DEFAULT_REGION_POINTS)]
        points: usize,
    },
    /// MI sum-rate versus relay SNR for each subgroup count and the best one.
    Sumrate {
        #[command(flatten)]
        common: Common,
        /// Subgroup counts to compare, e.g. `1,2,4`.
        #[arg(long, value_delimiter = ',')]
        groups: Option<Vec<usize>>,
    },
    /// Checks the numerical invariants on random instances.
    Validate {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        instances: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Mi,
    Mp,
    Both,
}

impl Common {
    fn scenario(&self, defaults: ScenarioConfig) -> SimResult<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => defaults,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        Ok(cfg)
    }

    fn output(&self) -> SimResult<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn run(cli: Cli) -> SimResult<bool> {
    match cli.command {
        Command::RateRegion { common, scheme, points } => {
            let cfg = common.scenario(rate_region_defaults())?;
            let schemes = match scheme {
                SchemeArg::Mi => SchemeChoice::Mi,
                SchemeArg::Mp => SchemeChoice::Mp,
                SchemeArg::Both => SchemeChoice::Both,
            };
            let rows = rate_region(&cfg, schemes, points)?;
            write_region_csv(&rows, common.output()?)?;
            Ok(true)
        }
        Command::Sumrate { common, groups } => {
            let mut cfg = common.scenario(sumrate_defaults())?;
            if groups.is_some() {
                cfg.subgroups = groups;
            }
            let candidates = sumrate_candidates(&cfg);
            let rows = sumrate_sweep(&cfg, &candidates)?;
            write_sumrate_csv(&rows, common.output()?)?;
            Ok(true)
        }
        Command::Validate { seed, instances } => {
            let defaults = ValidateOptions::default();
            let opts = ValidateOptions {
                seed: seed.unwrap_or(defaults.seed),
                instances: instances.unwrap_or(defaults.instances),
            };
            let report = run_validation(&opts)?;
            print!("{report}");
            let passed = report.passed();
            println!("{}", if passed { "all invariants hold" } else { "invariant check FAILED" });
            Ok(passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("twrelay: {e}");
            e.exit_code()
        }
    }
}

