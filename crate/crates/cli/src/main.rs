mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rapidmix_core::{Error, Result};

use config::{parse_config, Experiment};
use output::{ExperimentStatus, RunManifest};

#[derive(Parser)]
#[command(name = "rapidmix", version, about = "Gibbs sampler experiments for commuting spin systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suites of every module.
    Verify(Common),
    /// Decay of the clustering measures with distance.
    ScanClustering(Common),
    /// Spectral gap of the Davies generator.
    DaviesGap(Common),
    /// Sampled upper estimate of the MLSI constant.
    Mlsi(Common),
    /// Mixing times and relative entropy trajectories.
    Mix(Common),
    /// Approximate tensorization checks, C(L) and the assembled bound.
    Tensorize(Common),
    /// Regenerate report.md from the CSV files of an output directory.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. --set model.beta=0.3
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (same as --set output_dir=...).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Command::Verify(c) => (Experiment::Verify, c),
            Command::ScanClustering(c) => (Experiment::ScanClustering, c),
            Command::DaviesGap(c) => (Experiment::DaviesGap, c),
            Command::Mlsi(c) => (Experiment::Mlsi, c),
            Command::Mix(c) => (Experiment::Mix, c),
            Command::Tensorize(c) => (Experiment::Tensorize, c),
            Command::Report(c) => (Experiment::Report, c),
        }
    }
}

fn overrides(c: &Common) -> Vec<String> {
    let mut o = c.set.clone();
    if let Some(p) = &c.out {
        o.push(format!("output_dir={}", serde_json::Value::String(p.to_string_lossy().into_owned())));
    }
    if let Some(s) = c.seed {
        o.push(format!("seed={s}"));
    }
    if let Some(t) = c.threads {
        o.push(format!("threads={t}"));
    }
    o
}

/// Runs one experiment. Returns whether all of its checks passed.
fn execute(exp: Experiment, common: &Common) -> Result<bool> {
    let overrides = overrides(common);
    let cfg = parse_config(common.config.as_deref(), &overrides)?;
    if let Some(e) = cfg.experiment {
        if e != exp && exp != Experiment::Report {
            return Err(Error::Config(format!(
                "experiment: config names {:?} but the subcommand is {:?}",
                e.name(),
                exp.name()
            )));
        }
    }
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::Resource(format!("{}: {e}", dir.display())))?;
    if exp == Experiment::Report {
        return match output::write_report(&dir)? {
            Some(p) => {
                println!("wrote {}", p.display());
                Ok(true)
            }
            None => Err(Error::Config(format!("output_dir: no CSV files in {}", dir.display()))),
        };
    }

    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut tables = Vec::new();
    let result = experiments::run(&cfg, exp, &mut tables);
    let seconds = started.elapsed().as_secs_f64();

    let mut paths = Vec::new();
    for t in &tables {
        paths.push(output::write_table(&dir, t)?);
    }
    if let Some(p) = output::write_report(&dir)? {
        paths.push(p);
    }
    let config_json = serde_json::to_value(&cfg).map_err(|e| Error::Numerical(e.to_string()))?;
    let config_text = serde_json::to_string(&config_json).map_err(|e| Error::Numerical(e.to_string()))?;
    let (status, message) = match &result {
        Ok(o) if o.passed => ("passed", o.message.clone()),
        Ok(o) => ("failed", o.message.clone()),
        Err(e) => ("failed", e.to_string()),
    };
    let manifest = RunManifest {
        artifact: "rapidmix".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: output::sha256_hex(config_text.as_bytes()),
        config: config_json,
        overrides,
        started_unix,
        wall_clock_seconds: seconds,
        experiments: vec![ExperimentStatus {
            experiment: exp.name().into(),
            status: status.into(),
            message: message.clone(),
            seconds,
        }],
        tolerances: output::tolerance_table(),
        files: paths
            .iter()
            .map(|p| output::file_entry(&dir, p))
            .collect::<Result<Vec<_>>>()?,
    };
    output::write_manifest(&dir, &manifest)?;
    println!("{}: {status} ({message}), outputs in {}", exp.name(), dir.display());
    Ok(result?.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (exp, common) = cli.command.split();
    match execute(exp, &common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
