//! `doslab` command-line front end.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use doslab::dos::TraceCache;
use doslab::output::{object, to_json_string};
use serde_json::Value;

use crate::cache::{gc, now_unix, DiskCache};
use crate::commands::Outcome;
use crate::config::ExperimentConfig;
pub use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "doslab", version, about = "Density-of-states experiments for Schroedinger operators")]
pub struct Cli {
    /// TOML experiment file; every field has a default.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub no_cache: bool,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Accepted on both sides of the subcommand; the lists are concatenated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Args)]
pub struct Overrides {
    /// Override one config field, e.g. `--set sweep.hbar=[0.2,0.1]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Oracle Laplace transform and mean of V over the domain.
    Oracle(Overrides),
    /// Finite-volume traces over the (t, hbar) grid with extrapolation.
    Sweep(Overrides),
    /// Mean extraction on the domain and on `compare.domain`.
    Compare(Overrides),
    /// Entrywise and trace comparison of the operators on Omega and R Omega.
    RescaleCheck(Overrides),
    /// Integrated density of states curves and their Laplace transforms.
    Ids(Overrides),
    /// Cache maintenance.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum CacheAction {
    /// Remove corrupt or partial entries and rebuild the manifest.
    Gc,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Oracle(_) => "oracle",
            Command::Sweep(_) => "sweep",
            Command::Compare(_) => "compare",
            Command::RescaleCheck(_) => "rescale-check",
            Command::Ids(_) => "ids",
            Command::Cache { .. } => "cache gc",
        }
    }

    fn overrides(&self) -> &[String] {
        match self {
            Command::Oracle(o) | Command::Sweep(o) | Command::Compare(o) | Command::RescaleCheck(o) | Command::Ids(o) => {
                &o.set
            }
            Command::Cache { .. } => &[],
        }
    }
}

/// Config file, then `--set`, then the dedicated flags.
pub fn effective_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let overrides: Vec<String> = cli.overrides.set.iter().chain(cli.command.overrides()).cloned().collect();
    let mut cfg = config::load(cli.config.as_deref(), &overrides)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(n) = cli.threads {
        cfg.threads = n;
    }
    if cli.no_cache {
        cfg.cache.enabled = false;
    }
    Ok(cfg)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_outputs(cfg: &ExperimentConfig, command: &Command, outcome: &Outcome, cache: Option<&DiskCache>) -> CliResult<()> {
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let cache_info = match cache {
        Some(c) => object([
            ("enabled", Value::from(true)),
            ("hits", Value::from(c.hits() as u64)),
            ("misses", Value::from(c.misses() as u64)),
        ]),
        None => object([("enabled", Value::from(false))]),
    };
    let metadata = object([
        ("tool", Value::from("doslab")),
        ("version", Value::from(env!("CARGO_PKG_VERSION"))),
        ("command", Value::from(command.name())),
        ("created", Value::from(now_unix())),
        ("seed", Value::from(cfg.seed)),
        ("cache", cache_info),
        ("config", serde_json::to_value(cfg).expect("config serializes")),
    ]);
    let doc = object([("metadata", metadata), ("report", outcome.body.clone())]);
    write_file(&cfg.out.join("report.json"), &to_json_string(&doc))?;
    for (name, contents) in &outcome.tables {
        write_file(&cfg.out.join(name), contents)?;
    }
    Ok(())
}

/// Runs one parsed invocation. Outputs are written before a failed check is reported.
pub fn execute(cli: &Cli) -> CliResult<()> {
    let cfg = effective_config(cli)?;
    if let Command::Cache { action: CacheAction::Gc } = cli.command {
        let s = gc(&cfg.cache.dir)?;
        println!(
            "cache {}: kept {}, removed {}, temporaries {}",
            cfg.cache.dir.display(),
            s.kept,
            s.removed,
            s.temporaries
        );
        return Ok(());
    }
    let threads = cfg.threads;
    let resolved = cfg.resolve()?;
    let cache = if resolved.config.cache.enabled && matches!(cli.command, Command::Sweep(_) | Command::Compare(_)) {
        Some(DiskCache::open(&resolved.config.cache.dir)?)
    } else {
        None
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config("threads", e))?;
    let dyn_cache = cache.as_ref().map(|c| c as &dyn TraceCache);
    let outcome = pool.install(|| match cli.command {
        Command::Oracle(_) => commands::oracle(&resolved),
        Command::Sweep(_) => commands::sweep_cmd(&resolved, dyn_cache),
        Command::Compare(_) => commands::compare(&resolved, dyn_cache),
        Command::RescaleCheck(_) => commands::rescale_check(&resolved),
        Command::Ids(_) => commands::ids(&resolved),
        Command::Cache { .. } => unreachable!("handled above"),
    })?;
    write_outputs(&resolved.config, &cli.command, &outcome, cache.as_ref())?;
    println!("{}: wrote {}", cli.command.name(), resolved.config.out.join("report.json").display());
    match outcome.failure {
        Some(reason) => Err(CliError::CheckFailed(reason)),
        None => Ok(()),
    }
}

/// Parses `args` (program name first) and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
