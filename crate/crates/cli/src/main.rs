use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use erase_core::runner::{self, Condition, RunInputs};
use erase_core::RunConfig;

/// Remove EMG artifacts from EEG with simulated-EMG reference channels and
/// evaluate the result.
#[derive(Parser, Debug)]
#[command(name = "erase", version)]
struct Cli {
    /// JSON run config; missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for the scene, the virtual EMG and ICA.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Loading-ratio rejection threshold.
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scene with ground truth.
    Simulate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one condition on a recording and compute metrics.
    Run {
        #[arg(long)]
        recording: PathBuf,
        /// Movement onsets, one time in seconds per line.
        #[arg(long)]
        events: PathBuf,
        /// Montage CSV; defaults to the bundled 128-electrode layout.
        #[arg(long)]
        montage: Option<PathBuf>,
        /// baseline, erase or conventional.
        #[arg(long, default_value = "erase")]
        condition: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render SVG figures from a run directory.
    Report {
        /// Directory written by `run`.
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        montage: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the resolved config as JSON.
    Config,
}

fn resolve(cli: &Cli) -> erase_core::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env(std::env::vars())?;
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    if let Some(t) = cli.theta {
        cfg.set_theta(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve(&cli)?;
    match cli.command {
        Command::Simulate { out } => {
            let m = runner::simulate(&cfg, &out).context("simulate")?;
            println!("wrote {} files to {} (seed {})", m.outputs.len() + 1, out.display(), cfg.scene.seed);
        }
        Command::Run {
            recording,
            events,
            montage,
            condition,
            out,
        } => {
            let condition: Condition = condition.parse()?;
            let inputs = RunInputs {
                recording: &recording,
                events: &events,
                montage: montage.as_deref(),
            };
            let res = runner::run(&inputs, condition, &cfg, &out).with_context(|| format!("run {condition}"))?;
            if let Some(c) = &res.cleaning {
                println!("rejected {} of {} components", c.rejected.len(), c.model.n_components);
            }
            let r = &res.metrics.region;
            println!(
                "high-gamma move z: HA {:.3}, NHA {:.3} (P = {:.3}); significant FD-force electrodes: {} HA, {} NHA",
                r.ha_mean, r.nha_mean, r.p_ha_vs_nha, r.sce_ha, r.sce_nha
            );
        }
        Command::Report { metrics, montage, out } => {
            let files = runner::render(&metrics, montage.as_deref(), &out).context("report")?;
            for f in files {
                println!("{}", f.display());
            }
        }
        Command::Config => println!("{}", cfg.to_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ERASE_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.chain().any(|c| c.downcast_ref::<erase_core::Error>().is_some_and(|e| e.is_usage()));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
