use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use forkfluid::{presets, Command, ExperimentConfig, Overrides, RunOptions};

#[derive(Parser)]
#[command(name = "forkfluid", version = forkfluid::output::VERSION, about = "Fork-join queue fluid-limit laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-replication maximum-queue trajectories.
    Simulate(RunArgs),
    /// Analytic fluid curves.
    Fluid(RunArgs),
    /// Simulated mean maximum queue against the fluid limits.
    Compare(RunArgs),
    /// Maxima of sums of differently scaled samples.
    Extremal(RunArgs),
    /// Chernoff roots and the Gumbel limit.
    Bounds(RunArgs),
    /// Finite-N diagnostics: variance identity, Berry-Esseen distance, Pickands moment.
    Validate(RunArgs),
    /// List the built-in presets, or write them as config files.
    Presets {
        /// Directory to write `<name>.toml` files into.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config, a JSON config, or a `.meta.json` sidecar to replay.
    /// `preset:<name>` selects a built-in preset.
    #[arg(long)]
    config: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
    /// Print the CSV on standard output.
    #[arg(long)]
    stdout: bool,
    /// Suppress progress messages.
    #[arg(long, short)]
    quiet: bool,
}

fn load(spec: &str) -> Result<ExperimentConfig> {
    if let Some(name) = spec.strip_prefix("preset:") {
        return presets::find(name)
            .map(|p| p.config)
            .with_context(|| format!("unknown preset `{name}` (see `forkfluid presets`)"));
    }
    Ok(ExperimentConfig::load(std::path::Path::new(spec))?)
}

fn run(command: Command, args: RunArgs) -> Result<()> {
    let overrides = Overrides {
        seed: args.seed,
        reps: args.reps,
        out: args.out,
    };
    let cfg = load(&args.config)?.resolve(command, &overrides)?;
    if cfg.output.path.is_none() && !args.stdout {
        bail!("no output: set `output.path`, pass --out, or use --stdout");
    }
    if args.workers == Some(0) {
        bail!("--workers must be at least 1");
    }
    let opts = RunOptions {
        workers: args.workers.unwrap_or_else(forkfluid::default_workers),
        stdout: args.stdout,
        progress: !args.quiet,
    };
    forkfluid::execute(&cfg, &opts)?;
    Ok(())
}

fn list_presets(dir: Option<PathBuf>) -> Result<()> {
    for p in presets::preset_figures() {
        match &dir {
            Some(d) => {
                let path = d.join(format!("{}.toml", p.name));
                let body = format!(
                    "# {}\n# estimated runtime: {}\n{}",
                    p.description,
                    p.runtime_estimate,
                    p.config.to_toml_string()
                );
                forkfluid::output::write_file(&path, &body)?;
                eprintln!("{}", path.display());
            }
            None => println!("{:<22} {} ({})", p.name, p.description, p.runtime_estimate),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Simulate(a) => run(Command::Simulate, a),
        Cmd::Fluid(a) => run(Command::Fluid, a),
        Cmd::Compare(a) => run(Command::Compare, a),
        Cmd::Extremal(a) => run(Command::Extremal, a),
        Cmd::Bounds(a) => run(Command::Bounds, a),
        Cmd::Validate(a) => run(Command::Validate, a),
        Cmd::Presets { dir } => list_presets(dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
