//! On-disk dataset assembly.
//!
//! ```text
//! out/
//!   manifest.csv, manifest_meta.txt
//!   params/class_00000.txt
//!   {train,val,test}/class_00000/img_000000.png
//! ```

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::generate::{generate_class, GenerationContext};
use super::grid::{enumerate_classes, ClassSpec, ParameterGrid};
use super::manifest::{build_manifest, DatasetManifest, ManifestMeta, ManifestRow};
use super::paramfile::write_class_paramfile;
use super::select::SelectionPolicy;
use super::split::{assign_splits, Split, SplitRatios};
use crate::dynamics::GlobalDynamicsConfig;
use crate::error::{Error, Result};
use crate::imageio::PngSettings;
use crate::lattice::RetinaLattice;
use crate::projection::MIN_SIDE;

pub const PARAMS_DIR: &str = "params";

/// Everything that determines the bytes of a generated dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetConfig {
    pub master_seed: u64,
    pub retina_radius: f64,
    pub image_side: u32,
    pub grid: ParameterGrid,
    pub images_per_class: usize,
    pub selection: SelectionPolicy,
    pub globals: GlobalDynamicsConfig<f64>,
    pub ratios: SplitRatios,
    pub png: PngSettings,
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.retina_radius >= 1.0) || !self.retina_radius.is_finite() {
            return Err(Error::invalid(format!("retina radius must be >= 1, got {}", self.retina_radius)));
        }
        if self.image_side < MIN_SIDE {
            return Err(Error::invalid(format!("image side must be >= {MIN_SIDE}")));
        }
        if self.images_per_class == 0 {
            return Err(Error::invalid("images_per_class must be >= 1"));
        }
        self.grid.validate()?;
        self.selection.validate()?;
        self.globals.validate()?;
        self.png.validate()?;
        self.ratios.counts(self.images_per_class)?;
        Ok(())
    }
}

pub fn paramfile_path(class_id: usize) -> String {
    format!("{PARAMS_DIR}/class_{class_id:05}.txt")
}

pub fn image_path(split: Split, class_id: usize, image_index: usize) -> String {
    format!("{split}/class_{class_id:05}/img_{image_index:06}.png")
}

/// Creates `out` if absent; fails if it exists and is not empty.
pub fn ensure_empty(out: &Path) -> Result<()> {
    match std::fs::read_dir(out) {
        Ok(mut entries) => {
            if entries.next().is_some() {
                return Err(Error::invalid(format!("output directory {} is not empty", out.display())));
            }
            Ok(())
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
        }
        Err(e) => Err(Error::io(out, e)),
    }
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<()> {
    std::fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}

fn build_class(
    cfg: &DatasetConfig,
    spec: &ClassSpec,
    ctx: &GenerationContext<'_>,
    out: &Path,
) -> Result<Vec<ManifestRow>> {
    let output = generate_class(spec, cfg.images_per_class, &cfg.selection, ctx)?;
    let splits = assign_splits(cfg.images_per_class, &cfg.ratios, cfg.master_seed, spec.class_id)?;
    for split in Split::ALL {
        let dir = out.join(split.as_str()).join(format!("class_{:05}", spec.class_id));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir, e))?;
    }
    write_class_paramfile(spec, &out.join(paramfile_path(spec.class_id)))?;
    let mut rows = Vec::with_capacity(output.images.len());
    for img in &output.images {
        let split = splits[img.image_index];
        let relative_path = image_path(split, spec.class_id, img.image_index);
        write_file(out.join(&relative_path), &img.png)?;
        rows.push(ManifestRow {
            relative_path,
            class_id: spec.class_id,
            image_index: img.image_index,
            split,
            episode_id: img.episode_id,
            frame_step: img.frame_step,
            mirror: img.augmentation.mirror,
            rotation_deg: img.augmentation.rotation_deg,
            spacing_used: output.policy.spacing,
            threshold_used: output.policy.threshold,
            active_pixels: img.active_pixels,
            reused: img.reused,
        });
    }
    Ok(rows)
}

/// Generates the full dataset into `out` (which must be empty or absent)
/// using `threads` workers. Output bytes do not depend on `threads`.
pub fn generate_dataset(cfg: &DatasetConfig, out: &Path, threads: usize) -> Result<DatasetManifest> {
    cfg.validate()?;
    ensure_empty(out)?;
    let lattice = RetinaLattice::build(cfg.retina_radius)?;
    let ctx = GenerationContext::new(&lattice, cfg.globals, cfg.image_side, cfg.png)?;
    let classes = enumerate_classes(&cfg.grid, cfg.master_seed)?;
    for dir in [PARAMS_DIR, "train", "val", "test"] {
        let path = out.join(dir);
        std::fs::create_dir_all(&path).map_err(|e| Error::io(path, e))?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let per_class: Vec<Result<Vec<ManifestRow>>> =
        pool.install(|| classes.par_iter().map(|spec| build_class(cfg, spec, &ctx, out)).collect());

    let mut rows = Vec::with_capacity(classes.len() * cfg.images_per_class);
    for result in per_class {
        rows.extend(result?);
    }
    let manifest = build_manifest(rows, meta_for(cfg, classes.len()))?;
    manifest.write(out)?;
    Ok(manifest)
}

pub fn meta_for(cfg: &DatasetConfig, class_count: usize) -> ManifestMeta {
    ManifestMeta {
        master_seed: cfg.master_seed,
        image_side: cfg.image_side,
        retina_radius: cfg.retina_radius,
        images_per_class: cfg.images_per_class,
        class_count,
        initial_spacing: cfg.selection.spacing,
        initial_threshold: cfg.selection.threshold,
        ratios: cfg.ratios,
        grid: cfg.grid.describe(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    }
}
