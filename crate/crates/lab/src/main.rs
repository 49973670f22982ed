use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lab::run::configure_threads;
use lab::{report_experiment, resume_experiment, run_experiment, ExperimentConfig, RunManifest, RunOptions, PRESETS};

#[derive(Parser)]
#[command(name = "lab", version, about = "Run soliton-flow experiments and check their bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start (or continue) an experiment.
    Run {
        #[arg(long)]
        preset: Option<String>,
        /// Key/value config file applied on top of the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one key, e.g. `--set flow.t_end=2`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Continue from the snapshots already in `--out`.
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        quiet: bool,
    },
    /// Continue an interrupted experiment.
    Resume {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Recompute diagnostics and reports from stored trajectories.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// List presets, or print one as config text.
    Presets { name: Option<String> },
}

fn build_config(
    preset: Option<&str>,
    config: Option<&PathBuf>,
    sets: &[String],
    seed: Option<u64>,
) -> lab::Result<ExperimentConfig> {
    let mut text = String::new();
    if let Some(p) = preset {
        text.push_str(&format!("preset = {p}\n"));
    }
    if let Some(path) = config {
        text.push_str(&std::fs::read_to_string(path).map_err(|source| lab::LabError::Io {
            path: path.clone(),
            source,
        })?);
        text.push('\n');
    }
    let mut cfg = ExperimentConfig::from_text(&text)?;
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| lab::LabError::Invalid(format!("--set expects KEY=VALUE, got `{s}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = seed {
        cfg.initial.seed = seed;
    }
    Ok(cfg)
}

fn summarize(m: &RunManifest) {
    println!("{} [{:?}] hash {}", m.name, m.status, &m.config_hash[..12]);
    for (id, c) in &m.verdicts {
        println!("  {id:<22} holds {:>2}  violated {:>2}  inconclusive {:>2}", c.holds, c.violated, c.inconclusive);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Run {
            preset,
            config,
            sets,
            out,
            seed,
            resume,
            quiet,
        } => {
            let opts = RunOptions { quiet, ..RunOptions::default() };
            if resume {
                let out = out.ok_or_else(|| lab::LabError::Invalid("--resume needs --out".into()))?;
                return resume_experiment(&out, &opts).map(|m| summarize(&m));
            }
            let cfg = build_config(preset.as_deref(), config.as_ref(), &sets, seed)?;
            let out = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
            run_experiment(&cfg, &out, &opts).map(|m| summarize(&m))
        }
        Command::Resume { out, quiet } => resume_experiment(&out, &RunOptions { quiet, ..RunOptions::default() }).map(|m| summarize(&m)),
        Command::Report { out, quiet } => report_experiment(&out, &RunOptions { quiet, ..RunOptions::default() }).map(|m| summarize(&m)),
        Command::Presets { name } => {
            match name {
                Some(n) => print!("{}", ExperimentConfig::preset(&n)?.to_text()),
                None => PRESETS.iter().for_each(|p| println!("{p}")),
            }
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
