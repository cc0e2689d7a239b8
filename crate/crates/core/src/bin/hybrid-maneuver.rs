use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use hybrid_maneuver::cli::{cmd_evaluate, cmd_gen, cmd_identify, cmd_pipeline, cmd_rollout, cmd_train, Layout};
use hybrid_maneuver::config::RunConfig;

#[derive(Parser)]
#[command(version, about = "Grey-box vessel maneuvering: generate, identify, train, roll out, evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Global seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Force {
    /// Accept artifacts produced under a different configuration hash.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic trial logs and a manifest.
    Gen(Common),
    /// Identify the physical model from the training logs.
    Identify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        force: Force,
    },
    /// Train the residual network and the data-driven baseline.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        force: Force,
    },
    /// Roll the trained models through the test logs, or one given log.
    Rollout {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        force: Force,
        /// Trial-log CSV to replay instead of the test split.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score all models on the test logs and write report.json.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        force: Force,
    },
    /// gen, identify, train and evaluate in one go.
    Pipeline(Common),
    /// Print the effective configuration as TOML.
    Config(Common),
}

fn load(common: &Common) -> Result<(RunConfig, Layout)> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate().context("invalid configuration")?;
    let layout = Layout::new(&cfg.output_dir);
    Ok((cfg, layout))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen(common) => {
            let (cfg, layout) = load(&common)?;
            let manifest = cmd_gen(&cfg, &layout)?;
            for t in &manifest.trials {
                println!("{:<16} {:<5} {:>6} samples  {}", t.name, format!("{:?}", t.split).to_lowercase(), t.samples, layout.root.join(&t.file).display());
            }
            println!("manifest: {}", layout.manifest().display());
        }
        Command::Identify { common, force } => {
            let (cfg, layout) = load(&common)?;
            let (_, report) = cmd_identify(&cfg, &layout, force.force)?;
            println!("{:<12} {:>14} {:>14} {:>10}", "term", "identified", "reference", "rel err");
            for c in &report.coefficients {
                let err = c.rel_err.map_or("-".to_string(), |e| format!("{:.3}%", 100.0 * e));
                println!("{:<12} {:>14.6} {:>14.6} {:>10}", c.name, c.identified, c.reference, err);
            }
            println!("coefficients: {}", layout.coefficients().display());
        }
        Command::Train { common, force } => {
            let (cfg, layout) = load(&common)?;
            let (_, nets) = cmd_train(&cfg, &layout, force.force)?;
            for (name, o) in [("hybrid", &nets.hybrid), ("datadriven", &nets.datadriven)] {
                println!("{name:<11} loss {:.6} -> {:.6}", o.initial_loss, o.final_loss);
            }
            println!("bundle: {}", layout.bundle().display());
        }
        Command::Rollout { common, force, log } => {
            let (cfg, layout) = load(&common)?;
            for path in cmd_rollout(&cfg, &layout, log.as_deref(), force.force)? {
                println!("{}", path.display());
            }
        }
        Command::Evaluate { common, force } => {
            let (cfg, layout) = load(&common)?;
            let report = cmd_evaluate(&cfg, &layout, force.force)?;
            print!("{}", report.tables());
            println!("report: {}", layout.report().display());
        }
        Command::Pipeline(common) => {
            let (cfg, layout) = load(&common)?;
            let report = cmd_pipeline(&cfg, &layout)?;
            print!("{}", report.tables());
            println!("report: {}", layout.report().display());
        }
        Command::Config(common) => {
            let (cfg, _) = load(&common)?;
            print!("{}", cfg.to_toml_string()?);
        }
    }
    Ok(())
}
