use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use relabel::config::parse_config;
use relabel::harness::{run, Ablation, Command};

#[derive(Parser)]
#[command(name = "relabel", about = "Two-network noisy-label training with label correction")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// symmetric, pairmap or circular
    #[arg(long, global = true)]
    noise: Option<String>,
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Output file (metrics JSON-lines, or CSV for gen-data)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra key=value overrides, applied last
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured mode (method by default)
    Train,
    /// Run a baseline (standard_baseline unless --mode picks joint_only_baseline)
    Baseline,
    /// Run the method and one ablation on the same data: `interval` or `retrain`
    Ablate { which: String },
    /// Write the noisy dataset as CSV
    GenData,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<Vec<PathBuf>, Box<dyn std::error::Error>> {
    let cli = Cli::parse();
    let mut overrides: Vec<(String, String)> = Vec::new();
    if let Some(s) = cli.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    if let Some(t) = cli.tau {
        overrides.push(("tau".into(), t.to_string()));
    }
    if let Some(n) = &cli.noise {
        overrides.push(("noise".into(), n.clone()));
    }
    if let Some(m) = &cli.mode {
        overrides.push(("mode".into(), m.clone()));
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
        overrides.push((k.trim().to_string(), v.to_string()));
    }
    let cfg = parse_config(cli.config.as_deref(), &overrides)?;

    let (command, default_out) = match &cli.command {
        Cmd::Train => (Command::Train, "metrics.jsonl"),
        Cmd::Baseline => (Command::Baseline, "baseline.jsonl"),
        Cmd::Ablate { which } => (Command::Ablate(which.parse::<Ablation>()?), "ablation.jsonl"),
        Cmd::GenData => (Command::GenData, "data.csv"),
    };
    let out = cli.out.unwrap_or_else(|| PathBuf::from(default_out));
    Ok(run(command, &cfg, &out)?)
}
