use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stirguard::harness::{compare, ExperimentConfig, Harness, Overrides, Preset};
use stirguard::Result;

#[derive(Parser)]
#[command(version, about = "Train, evaluate and compare stirring skill libraries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment TOML. Built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn harness(&self) -> Result<Harness> {
        let overrides = Overrides { preset: self.preset, seed: self.seed };
        let config = match &self.config {
            Some(path) => ExperimentConfig::load(path, &overrides)?,
            None => ExperimentConfig::from_toml_str("", "<defaults>".as_ref(), &overrides)?,
        };
        Harness::from_config(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one skill (`all` trains every configured skill).
    Train {
        skill: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Evaluate one condition (`all` evaluates every configured condition).
    Eval {
        condition: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Order the evaluated conditions found under a results directory.
    Compare { dir: PathBuf },
    /// Follow one particle through a condition's first evaluation episode.
    Trace {
        condition: String,
        #[arg(long, default_value_t = 0)]
        particle: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { skill, config } => {
            let harness = config.harness()?;
            let names: Vec<String> = if skill == "all" {
                harness.config.skills.iter().map(|s| s.name.clone()).collect()
            } else {
                vec![skill]
            };
            for name in names {
                let report = harness.train(&name)?;
                println!(
                    "{name}: best eval return {} at episode {}, checkpoint {}",
                    report.best_eval_return.map_or("n/a".into(), |r| format!("{r:.4}")),
                    report.best_episode.map_or("n/a".into(), |e| e.to_string()),
                    report.checkpoint.display()
                );
            }
        }
        Command::Eval { condition, config } => {
            let harness = config.harness()?;
            let ids: Vec<String> = if condition == "all" {
                harness.config.conditions.iter().map(|c| c.id.clone()).collect()
            } else {
                vec![condition]
            };
            for id in ids {
                let report = harness.eval(&id)?;
                let m = &report.metrics;
                let fmt = |a: Option<stirguard::harness::Aggregate>| a.map_or("N/A".into(), |a| format!("{:.4} ± {:.4}", a.mean, a.std));
                println!(
                    "{id}: stir {} | spill {} | slide {} | overturn {}",
                    fmt(Some(m.stir_reward)),
                    fmt(Some(m.spill_count)),
                    fmt(m.slide_d),
                    fmt(m.overturn_theta)
                );
            }
        }
        Command::Compare { dir } => print!("{}", compare(&dir)?),
        Command::Trace { condition, particle, config } => {
            let trace = config.harness()?.trace(&condition, particle)?;
            println!("{} rows, hull area {:.6e} m^2, written to {}", trace.rows.len(), trace.hull_area, trace.path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
