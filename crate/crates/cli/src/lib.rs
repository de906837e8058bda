//! Command-line front end: argument parsing, JSON configuration and the
//! subcommands behind the `theftsentry` binary.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

/// A bad flag, config file or parameter combination.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// Maps an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<theftsentry::Error>() {
            return core_code(e);
        }
        if cause.downcast_ref::<std::io::Error>().is_some() || cause.downcast_ref::<csv::Error>().is_some() {
            return EXIT_DATA;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return EXIT_DATA;
        }
    }
    EXIT_INTERNAL
}

fn core_code(e: &theftsentry::Error) -> i32 {
    use theftsentry::Error as E;
    match e {
        E::Trial { source, .. } => core_code(source),
        E::Parameter(_) => EXIT_CONFIG,
        E::Io(_) | E::Metric(_) => EXIT_DATA,
        e if e.is_data_error() => EXIT_DATA,
        _ => EXIT_INTERNAL,
    }
}

#[derive(Debug, Parser)]
#[command(name = "theftsentry", version, about = "Electricity-theft detection from smart-meter data")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed of the stage being run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated methods: mic, cfsfdp, arith, geo, pcc, combined.
    #[arg(long, global = true)]
    pub methods: Option<String>,
    /// Density kernel: cutoff or gaussian.
    #[arg(long, global = true)]
    pub kernel: Option<String>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub map_n: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "THEFTSENTRY_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate untampered consumer profiles.
    Synth,
    /// Split consumers into areas, inject FDI attacks and write observer totals.
    Tamper {
        /// Ground-truth CSV; generated from the config when omitted.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
    },
    /// Score and rank consumers.
    Detect {
        #[arg(long)]
        consumers: Option<PathBuf>,
        /// Observer CSV, directory of per-area CSVs, or `derive`.
        #[arg(long)]
        observer: Option<String>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        ground_truth: Option<PathBuf>,
    },
    /// AUC and MAP@N of a ranking file against scenario labels.
    Evaluate {
        #[arg(long)]
        ranking: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Repeated synthetic trials over one or more FDI rows.
    Experiment {
        /// Comma-separated rows such as FDI1,FDI6,MIX.
        #[arg(long)]
        fdi: Option<String>,
    },
    /// MIC of a two-column CSV.
    Mic {
        input: PathBuf,
    },
}

impl GlobalArgs {
    /// Loads the config file (or defaults) and applies the flag overrides.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = &self.out_dir {
            config.paths.out_dir = dir.clone();
        }
        if let Some(list) = &self.methods {
            config.detect.methods = list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            config.detect.methods()?;
        }
        if let Some(k) = &self.kernel {
            config.detect.kernel = k.parse().map_err(|e| ConfigError(format!("{e}")))?;
        }
        if let Some(t) = self.trials {
            config.evaluate.trials = t;
        }
        if let Some(n) = self.map_n {
            if n == 0 {
                return Err(ConfigError("--map-n must be at least 1".into()));
            }
            config.evaluate.map_n = n;
        }
        Ok(config)
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(ConfigError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    }
    let mut config = cli.global.resolve()?;
    let seed = cli.global.seed;
    match cli.command {
        Command::Synth => {
            if let Some(s) = seed {
                config.generator.seed = s;
            }
            commands::synth(&config)
        }
        Command::Tamper { ground_truth } => {
            if let Some(s) = seed {
                config.scenario.seed = s;
            }
            if ground_truth.is_some() {
                config.paths.ground_truth = ground_truth;
            }
            commands::tamper(&config)
        }
        Command::Detect {
            consumers,
            observer,
            scenario,
            ground_truth,
        } => {
            let p = &mut config.paths;
            p.consumers = consumers.or(p.consumers.take());
            p.observer = observer.or(p.observer.take());
            p.scenario = scenario.or(p.scenario.take());
            p.ground_truth = ground_truth.or(p.ground_truth.take());
            commands::detect(&config)
        }
        Command::Evaluate { ranking, scenario } => {
            config.paths.scenario = scenario.or(config.paths.scenario.take());
            commands::evaluate(&config, ranking)
        }
        Command::Experiment { fdi } => {
            if let Some(s) = seed {
                config.evaluate.master_seed = s;
            }
            if let Some(rows) = fdi {
                config.evaluate.fdi_rows = rows
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect();
            }
            commands::experiment(&config)
        }
        Command::Mic { input } => commands::mic(&config, &input),
    }
}
