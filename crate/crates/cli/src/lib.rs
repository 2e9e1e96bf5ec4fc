//! Experiment harness around `forkfluid-core`: configuration files,
//! deterministic parallel replication and CSV/JSON artifacts.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

use std::io::Write;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};

pub use config::{Command, ConfigError, ExperimentConfig, Overrides};
pub use output::{Cell, Counters, Table};
pub use run::{RunOutput, Runner};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workers: usize,
    /// Also print the CSV on standard output.
    pub stdout: bool,
    /// Progress messages on standard error.
    pub progress: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: default_workers(),
            stdout: false,
            progress: false,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub struct Artifacts {
    pub csv: String,
    pub counters: Counters,
}

/// Runs a resolved config and writes `<out>` plus `<out>.meta.json` when an
/// output path is configured.
pub fn execute(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Artifacts> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let clock = Instant::now();
    let runner = Runner::new(opts.workers, opts.progress)?;
    let out = runner.run(cfg)?;
    let csv = out.table.to_csv();
    let wall = clock.elapsed().as_secs_f64();
    if let Some(path) = &cfg.output.path {
        output::write_file(path, &csv).with_context(|| format!("writing {}", path.display()))?;
        let meta = output::Metadata {
            tool: "forkfluid",
            version: output::VERSION,
            schema_version: output::SCHEMA_VERSION,
            command: cfg.command().name(),
            seed: cfg.seed,
            workers: runner.workers(),
            started_unix_seconds: started,
            wall_clock_seconds: wall,
            counters: &out.counters,
            csv: Some(path.clone()),
            config: cfg,
        };
        let side = output::sidecar_path(path);
        let json = serde_json::to_string_pretty(&meta)? + "\n";
        output::write_file(&side, &json).with_context(|| format!("writing {}", side.display()))?;
        if opts.progress {
            eprintln!("[forkfluid] wrote {} and {} in {wall:.2} s", path.display(), side.display());
        }
    }
    if opts.stdout {
        let mut so = std::io::stdout().lock();
        so.write_all(csv.as_bytes())?;
        so.flush()?;
    }
    Ok(Artifacts {
        csv,
        counters: out.counters,
    })
}
