use std::ops::ControlFlow;
use std::path::Path;

use rewave::datasetgen::{ensure_empty, episode_seed};
use rewave::dynamics::{run_episode, WaveParams};
use rewave::imageio::{encode_binary, encode_raw};
use rewave::projection::{AugmentationSpec, RawMap, SamplingMap};
use rewave::rng::derive;
use rewave::{Error, Lattice, Result};

use crate::config::GeneratorConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum FrameFormat {
    /// Full retina, calcium / state / boundary as RGB.
    #[default]
    Raw,
    /// Unaugmented binary crop of side `image_side`.
    Cropped,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SimulateRequest {
    /// Take parameters and seed from this grid class instead of the base parameters.
    pub class_id: Option<usize>,
    pub episode: u32,
    pub format: FrameFormat,
}

/// Parameters and episode seed a simulate request resolves to.
pub fn episode_for(cfg: &GeneratorConfig, req: &SimulateRequest) -> Result<(WaveParams<f64>, u64)> {
    match req.class_id {
        Some(id) => {
            let spec = cfg.grid.to_grid(cfg.params.to_params())?.class(id, cfg.master_seed)?;
            Ok((spec.params, episode_seed(spec.class_seed, req.episode)))
        }
        None => {
            let params = cfg.params.to_params();
            params.validate()?;
            Ok((params, derive(cfg.master_seed, &[u64::from(req.episode)])))
        }
    }
}

pub fn frame_file_name(episode: u32, step: u32) -> String {
    format!("ep{episode}_t{step:05}.png")
}

/// Writes every frame of one episode to `out`. Returns the number of frames.
pub fn run_simulate(cfg: &GeneratorConfig, req: &SimulateRequest, out: &Path) -> Result<usize> {
    let (params, seed) = episode_for(cfg, req)?;
    let globals = cfg.globals.to_globals();
    globals.validate()?;
    let png = cfg.png_settings()?;
    let lattice = Lattice::build(cfg.retina_radius)?;
    let neighbors = lattice.neighbors(params.dendritic_radius)?;
    let cropped = match req.format {
        FrameFormat::Cropped => Some(SamplingMap::new(&lattice, &AugmentationSpec::identity(), cfg.image_side)?),
        FrameFormat::Raw => None,
    };
    let raw = RawMap::new(&lattice);
    ensure_empty(out)?;

    let mut failure = None;
    let frames = run_episode(&lattice, &neighbors, &params, &globals, seed, |frame| {
        let bytes = match &cropped {
            Some(map) => encode_binary(&map.render(frame), &png),
            None => encode_raw(&raw.render(frame, &lattice), &png),
        };
        let path = out.join(frame_file_name(req.episode, frame.step));
        let written = bytes.and_then(|b| std::fs::write(&path, b).map_err(|e| Error::io(&path, e)));
        match written {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(frames),
    }
}
