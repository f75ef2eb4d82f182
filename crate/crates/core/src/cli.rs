//! Command-line front end: `run`, `sweep`, `baseline` and `default-config`.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{convergence_check, summarize};
use crate::config::{ScenarioConfig, SWEEP_PARAMETERS};
use crate::engine::{run, Policy, Scenario};
use crate::error::{Error, Result};
use crate::metrics::MetricsSeries;
use crate::output::{comparison_table, write_comparison, write_run, ComparisonRow, RunSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "meshla",
    version,
    about = "Learning-automata channel assignment for multi-radio mesh networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the learning engine once per seed.
    Run(CommonArgs),
    /// Run every value of one parameter for every seed and compare.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// One of num_radios, K, lambda, feedback.
        #[arg(long)]
        parameter: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
    /// Run a frozen, non-learning assignment.
    Baseline {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        strategy: Strategy,
    },
    /// Print the default scenario file.
    DefaultConfig,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Repeat for several runs. Defaults to the seed in the file.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub slots: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    /// One uniformly drawn channel set per node.
    RandomStatic,
    /// Every node on the lowest channels.
    CommonChannel,
}

/// Everything a subcommand needs after flags have been merged into the file.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config_path: PathBuf,
    pub config: ScenarioConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

impl RunManifest {
    pub fn from_args(args: &CommonArgs) -> Result<Self> {
        let mut config = ScenarioConfig::load(&args.config)?;
        if let Some(slots) = args.slots {
            config.engine.horizon = slots;
        }
        if let Some(warmup) = args.warmup {
            config.engine.warmup = warmup;
        }
        if let Some(out) = &args.out {
            config.output.dir = out.clone();
        }
        let seeds = if args.seeds.is_empty() { vec![config.engine.seed] } else { args.seeds.clone() };
        if seeds.iter().collect::<BTreeSet<_>>().len() != seeds.len() {
            return Err(Error::config("seed", "seeds must be distinct"));
        }
        let out_dir = config.output.dir.clone();
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| Error::config("output.dir", format!("{}: {e}", out_dir.display())))?;
        Ok(Self { config_path: args.config.clone(), config, seeds, out_dir })
    }
}

/// Frozen action per node for a baseline strategy.
pub fn baseline_actions(scenario: &Scenario, strategy: Strategy, seed: u64) -> Vec<usize> {
    let n = scenario.topology.node_count();
    match strategy {
        // The catalog is lexicographic, so index 0 is {0, .., M-1}.
        Strategy::CommonChannel => vec![0; n],
        Strategy::RandomStatic => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            (0..n).map(|v| rng.gen_range(0..scenario.catalog(v).len())).collect()
        }
    }
}

fn summarize_run(config: &ScenarioConfig, seed: u64, series: &MetricsSeries) -> Result<RunSummary> {
    Ok(RunSummary {
        schema_version: crate::output::SCHEMA_VERSION,
        seed,
        summary: summarize(series, series.warm_up),
        convergence: convergence_check(series, config.engine.convergence_threshold)?,
    })
}

fn run_seeds(
    config: &ScenarioConfig,
    seeds: &[u64],
    dir: &Path,
    strategy: Option<Strategy>,
) -> Result<Vec<RunSummary>> {
    let scenario = config.build()?;
    seeds
        .par_iter()
        .map(|&seed| {
            let scenario = scenario.with_seed(seed);
            let policy = match strategy {
                None => Policy::Learning,
                Some(s) => Policy::Frozen(baseline_actions(&scenario, s, seed)),
            };
            let series = run(&scenario, policy)?;
            let summary = summarize_run(config, seed, &series)?;
            write_run(dir, &series, &summary)?;
            Ok(summary)
        })
        .collect()
}

fn report(label: &str, runs: &[RunSummary], dir: &Path) {
    let row = ComparisonRow::aggregate(label, runs);
    println!(
        "{label}: {} run(s), mean delivered/slot {:.3}, connectivity {:.2}, interference {:.2}; output in {}",
        row.seeds,
        row.mean_delivered,
        row.mean_connectivity,
        row.mean_interference,
        dir.display()
    );
}

fn sweep(manifest: &RunManifest, parameter: &str, values: &[String]) -> Result<Vec<ComparisonRow>> {
    if !SWEEP_PARAMETERS.contains(&parameter) && parameter != "num_channels" {
        return Err(Error::config(
            "parameter",
            format!("unknown sweep parameter `{parameter}`, expected one of {SWEEP_PARAMETERS:?}"),
        ));
    }
    if values.is_empty() {
        return Err(Error::config("values", "at least one value is required"));
    }
    let configs = values
        .iter()
        .map(|v| {
            let mut c = manifest.config.clone();
            c.apply_override(parameter, v)?;
            c.build()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = values
        .par_iter()
        .zip(configs.par_iter())
        .map(|(v, c)| {
            let dir = manifest.out_dir.join(format!("{parameter}_{v}"));
            let runs = run_seeds(c, &manifest.seeds, &dir, None)?;
            Ok(ComparisonRow::aggregate(v.clone(), &runs))
        })
        .collect::<Result<Vec<_>>>()?;
    let path = manifest.out_dir.join(format!("comparison_{parameter}.csv"));
    write_comparison(parameter, &rows, std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    print!("{}", comparison_table(parameter, &rows));
    println!("comparison written to {}", path.display());
    Ok(rows)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::DefaultConfig => {
            println!("{}", ScenarioConfig::default().to_json());
        }
        Command::Run(args) => {
            let m = RunManifest::from_args(&args)?;
            let runs = run_seeds(&m.config, &m.seeds, &m.out_dir, None)?;
            report("learning", &runs, &m.out_dir);
        }
        Command::Baseline { common, strategy } => {
            let m = RunManifest::from_args(&common)?;
            let runs = run_seeds(&m.config, &m.seeds, &m.out_dir, Some(strategy))?;
            let label = strategy.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default();
            report(&label, &runs, &m.out_dir);
        }
        Command::Sweep { common, parameter, values } => {
            let m = RunManifest::from_args(&common)?;
            sweep(&m, &parameter, &values)?;
        }
    }
    Ok(())
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Parse { .. } | Error::Config { .. } => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
