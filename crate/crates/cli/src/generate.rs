use std::path::Path;

use rewave::datasetgen::{generate_dataset, DatasetManifest};
use rewave::{Error, Result};

use crate::config::{GeneratorConfig, CONFIG_ECHO};

pub const THREADS_ENV: &str = "REWAVE_THREADS";

/// Worker count: the flag, else `REWAVE_THREADS`, else the config, else all cores.
pub fn resolve_threads(flag: Option<usize>, cfg: &GeneratorConfig) -> Result<usize> {
    let env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|e| Error::invalid(format!("{THREADS_ENV}={v}: {e}")))?,
        ),
        Err(_) => None,
    };
    let threads = flag
        .or(env)
        .or(cfg.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(Error::invalid("thread count must be >= 1"));
    }
    Ok(threads)
}

/// Generates the dataset described by `cfg` into `out` and writes the config echo.
pub fn run_generate(cfg: &GeneratorConfig, out: &Path, threads: usize) -> Result<DatasetManifest> {
    let dataset = cfg.dataset_config()?;
    let echo = cfg.echo()?;
    let manifest = generate_dataset(&dataset, out, threads)?;
    let path = out.join(CONFIG_ECHO);
    std::fs::write(&path, echo).map_err(|e| Error::io(path, e))?;
    Ok(manifest)
}
