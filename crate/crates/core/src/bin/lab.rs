use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use srslab::experiments::{self, ExperimentConfig, ExperimentKind};
use srslab::Error;

#[derive(Parser)]
#[command(name = "lab", version, about = "Stationary random subgroup experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record times of i.i.d. tile indices and the gauge
    Records(RunArgs),
    /// Lamp limits on a wreath product: certification, equivariance, census
    WreathSrs(RunArgs),
    /// The builder on a permutational wreath product, then walks
    PermwreathSrs(RunArgs),
    /// The builder on Thompson's F, then walks and window traces
    ThompsonMu(RunArgs),
    /// Fixed subtrees, ζ-relations and intersection indices in BS(m, n)
    BsTree(RunArgs),
    /// Martingale masses and normalish witness counts
    Martingale(RunArgs),
    /// Re-check a finished run from its directory
    Verify { dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; keys left out take the defaults
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    horizon: Option<u64>,
    /// output directory [default: out/<experiment>]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(kind: ExperimentKind, args: &RunArgs) -> srslab::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(Some(kind), &text)?
        }
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(kind: ExperimentKind, args: RunArgs) -> ExitCode {
    let cfg = match load(kind, &args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("lab: invalid config: {e}");
            return ExitCode::from(2);
        }
    };
    let out = args.out.unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    match experiments::run(&cfg, &out) {
        Ok(m) => {
            println!("{} -> {}", kind, out.display());
            println!("config {}", m.config_hash);
            for (name, ok) in &m.checks {
                println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
            }
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lab: {e}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Records(a) => (ExperimentKind::Records, a),
        Command::WreathSrs(a) => (ExperimentKind::WreathSrs, a),
        Command::PermwreathSrs(a) => (ExperimentKind::PermwreathSrs, a),
        Command::ThompsonMu(a) => (ExperimentKind::ThompsonMu, a),
        Command::BsTree(a) => (ExperimentKind::BsTree, a),
        Command::Martingale(a) => (ExperimentKind::Martingale, a),
        Command::Verify { dir } => {
            return match experiments::verify(&dir) {
                Ok(report) => {
                    for c in &report.checks {
                        println!("{} {} {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
                    }
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("lab: {e}");
                    ExitCode::FAILURE
                }
            };
        }
    };
    run(kind, args)
}
