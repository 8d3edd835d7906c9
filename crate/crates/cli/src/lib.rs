//! Command-line front end: `generate`, `simulate`, `verify` and `stats`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rewave::{Error, Result};

pub mod config;
pub mod generate;
pub mod simulate;
pub mod stats;
pub mod verify;

use config::GeneratorConfig;
use simulate::{FrameFormat, SimulateRequest};
use verify::VerifyOptions;

pub mod exit {
    pub const OK: u8 = 0;
    pub const VERIFY_FAILED: u8 = 1;
    pub const INVALID: u8 = 2;
    pub const CLASS_GENERATION: u8 = 3;
    pub const IO: u8 = 4;
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::Parse { .. } => exit::INVALID,
        Error::ClassGeneration { .. } => exit::CLASS_GENERATION,
        _ => exit::IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "rewave", version, about = "Retinal wave simulator and labeled dataset generator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled image dataset from a parameter grid.
    Generate(RunArgs),
    /// Write every frame of a single episode.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Use the parameters and seed of this grid class.
        #[arg(long)]
        class_id: Option<usize>,
        #[arg(long, default_value_t = 0)]
        episode: u32,
        #[arg(long, value_enum, default_value_t = FrameFormat::Raw)]
        format: FrameFormat,
    },
    /// Check a generated dataset against its manifest and invariants.
    Verify {
        dir: PathBuf,
        /// Also re-simulate every image and compare it byte for byte.
        #[arg(long)]
        resimulate: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Summarize split counts, active pixels and ladder usage.
    Stats { dir: PathBuf },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set selection.threshold=30`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads (falls back to REWAVE_THREADS, then the config).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<(GeneratorConfig, PathBuf)> {
        let mut cfg = GeneratorConfig::load(self.config.as_deref(), &self.overrides)?;
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output.clone())
            .ok_or_else(|| Error::invalid("no output directory: pass --out or set `output`"))?;
        Ok((cfg, out))
    }
}

/// Runs the tool and returns its exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { exit::INVALID } else { exit::OK };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<u8> {
    match command {
        Command::Generate(args) => {
            let (cfg, out) = args.load()?;
            let threads = generate::resolve_threads(args.threads, &cfg)?;
            let manifest = generate::run_generate(&cfg, &out, threads)?;
            let _ = writeln!(
                stdout,
                "wrote {} images in {} classes to {}",
                manifest.rows.len(),
                manifest.meta.class_count,
                out.display()
            );
        }
        Command::Simulate { run, class_id, episode, format } => {
            let (cfg, out) = run.load()?;
            let frames = simulate::run_simulate(&cfg, &SimulateRequest { class_id, episode, format }, &out)?;
            let _ = writeln!(stdout, "wrote {frames} frames to {}", out.display());
        }
        Command::Verify { dir, resimulate, threads } => {
            let threads = generate::resolve_threads(threads, &GeneratorConfig::default())?;
            let report = verify::verify_dataset(&dir, &VerifyOptions { resimulate, threads })?;
            let _ = write!(stdout, "{}", report.render());
            return Ok(if report.passed() { exit::OK } else { exit::VERIFY_FAILED });
        }
        Command::Stats { dir } => {
            let _ = write!(stdout, "{}", stats::dataset_stats(&dir)?.render());
        }
    }
    Ok(exit::OK)
}
