//! Dataset integrity checks.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use rewave::datasetgen::{
    augmentation_for, episode_seed, image_path, paramfile_path, parse_paramfile, render_paramfile, DatasetConfig,
    DatasetManifest, GenerationContext, ManifestRow, Split, MANIFEST_FILE, PARAMS_DIR,
};
use rewave::imageio::{decode_binary, encode_binary};
use rewave::projection::SamplingMap;
use rewave::{Error, Lattice, Result};

use crate::config::{GeneratorConfig, CONFIG_ECHO};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub check: &'static str,
    pub path: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub images: usize,
    pub classes: usize,
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for v in &self.violations {
            let _ = writeln!(s, "FAIL [{}] {}: {}", v.check, v.path, v.detail);
        }
        let verdict = if self.passed() { "OK" } else { "FAILED" };
        let _ = writeln!(
            s,
            "verify: {} images in {} classes, {} violation(s): {verdict}",
            self.images,
            self.classes,
            self.violations.len()
        );
        s
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    /// Re-simulate every selected frame and compare against the stored images.
    pub resimulate: bool,
    pub threads: usize,
}

struct Report(Vec<Violation>);

impl Report {
    fn fail(&mut self, check: &'static str, path: impl Into<String>, detail: impl Into<String>) {
        self.0.push(Violation { check, path: path.into(), detail: detail.into() });
    }
}

/// Reads the manifest of `dir`, failing with an invalid-argument error when absent.
pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    if !dir.join(MANIFEST_FILE).is_file() {
        return Err(Error::invalid(format!("no {MANIFEST_FILE} in {}", dir.display())));
    }
    DatasetManifest::read(dir)
}

pub fn verify_dataset(dir: &Path, opts: &VerifyOptions) -> Result<VerifyReport> {
    let manifest = read_manifest(dir)?;
    let meta = &manifest.meta;
    let mut report = Report(Vec::new());

    let recipe = match std::fs::read_to_string(dir.join(CONFIG_ECHO)) {
        Ok(text) => match GeneratorConfig::parse(&text, &[]).and_then(|c| c.dataset_config()) {
            Ok(cfg) => Some(cfg),
            Err(e) => {
                report.fail("config", CONFIG_ECHO, e.to_string());
                None
            }
        },
        Err(e) => {
            report.fail("config", CONFIG_ECHO, e.to_string());
            None
        }
    };
    if let Some(cfg) = &recipe {
        if cfg.master_seed != meta.master_seed || cfg.image_side != meta.image_side {
            report.fail("config", CONFIG_ECHO, "seed or image side disagrees with manifest metadata");
        }
    }

    check_rows(&manifest, &mut report);
    check_files(dir, &manifest, opts.threads, &mut report)?;
    check_unlisted(dir, &manifest, &mut report);
    check_classes(&manifest, &mut report);
    check_paramfiles(dir, &manifest, recipe.as_ref(), &mut report);
    if opts.resimulate {
        match &recipe {
            Some(cfg) => check_reproduction(dir, &manifest, cfg, opts.threads, &mut report)?,
            None => report.fail("reproduction", CONFIG_ECHO, "cannot re-simulate without a readable config"),
        }
    }

    Ok(VerifyReport { images: manifest.rows.len(), classes: meta.class_count, violations: report.0 })
}

fn check_rows(manifest: &DatasetManifest, report: &mut Report) {
    for row in &manifest.rows {
        let path = row.relative_path.as_str();
        if row.class_id >= manifest.meta.class_count {
            report.fail("manifest", path, format!("class {} outside 0..{}", row.class_id, manifest.meta.class_count));
        }
        let expected = image_path(row.split, row.class_id, row.image_index);
        if path != expected {
            report.fail("layout", path, format!("expected {expected}"));
        }
        if row.spacing_used == 0 || row.frame_step % row.spacing_used != 0 {
            report.fail("spacing", path, format!("step {} is not a multiple of {}", row.frame_step, row.spacing_used));
        }
        if row.active_pixels < row.threshold_used {
            report.fail(
                "threshold",
                path,
                format!("{} active pixels below threshold {}", row.active_pixels, row.threshold_used),
            );
        }
    }
}

fn check_files(dir: &Path, manifest: &DatasetManifest, threads: usize, report: &mut Report) -> Result<()> {
    let side = manifest.meta.image_side;
    let check = |row: &ManifestRow| -> Option<Violation> {
        let path = row.relative_path.clone();
        let fail = |check: &'static str, detail: String| Some(Violation { check, path: path.clone(), detail });
        let bytes = match std::fs::read(dir.join(&row.relative_path)) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return fail("missing-file", "file not found".into()),
            Err(e) => return fail("missing-file", e.to_string()),
        };
        match decode_binary(&bytes) {
            Ok(img) if img.side() != side => fail("image-side", format!("side {} instead of {side}", img.side())),
            Ok(_) => None,
            Err(e @ Error::NonBinaryPixel { .. }) => fail("binary-value", e.to_string()),
            Err(e) => fail("decode", e.to_string()),
        }
    };
    let found: Vec<Option<Violation>> = pool(threads)?.install(|| manifest.rows.par_iter().map(check).collect());
    report.0.extend(found.into_iter().flatten());
    Ok(())
}

fn check_unlisted(dir: &Path, manifest: &DatasetManifest, report: &mut Report) {
    let listed: HashSet<&str> = manifest.rows.iter().map(|r| r.relative_path.as_str()).collect();
    for split in Split::ALL {
        let Ok(classes) = std::fs::read_dir(dir.join(split.as_str())) else {
            continue;
        };
        let mut found = Vec::new();
        for class_dir in classes.flatten() {
            let class_name = class_dir.file_name().to_string_lossy().into_owned();
            match std::fs::read_dir(class_dir.path()) {
                Ok(files) => {
                    for f in files.flatten() {
                        found.push(format!("{split}/{class_name}/{}", f.file_name().to_string_lossy()));
                    }
                }
                Err(_) => found.push(format!("{split}/{class_name}")),
            }
        }
        found.sort();
        for path in found {
            if !listed.contains(path.as_str()) {
                report.fail("unlisted-file", path, "present on disk but not in the manifest");
            }
        }
    }
}

fn check_classes(manifest: &DatasetManifest, report: &mut Report) {
    let meta = &manifest.meta;
    let n = meta.images_per_class;
    let expected_splits = match meta.ratios.counts(n) {
        Ok(c) => Some(c),
        Err(e) => {
            report.fail("split-balance", MANIFEST_FILE, e.to_string());
            None
        }
    };
    let mut by_class: BTreeMap<usize, Vec<&ManifestRow>> = BTreeMap::new();
    for row in &manifest.rows {
        by_class.entry(row.class_id).or_default().push(row);
    }
    for class_id in 0..meta.class_count {
        let label = format!("class_{class_id:05}");
        let rows = by_class.get(&class_id).map(Vec::as_slice).unwrap_or(&[]);
        if rows.len() != n {
            report.fail("quota", &label, format!("{} images instead of {n}", rows.len()));
        }
        let indices: BTreeSet<usize> = rows.iter().map(|r| r.image_index).collect();
        if indices.len() != rows.len() || indices.iter().any(|&i| i >= n) {
            report.fail("quota", &label, format!("image indices are not a permutation of 0..{n}"));
        }
        if let Some(expected) = expected_splits {
            let mut got = [0usize; 3];
            for r in rows {
                got[Split::ALL.iter().position(|&s| s == r.split).unwrap()] += 1;
            }
            if got != expected {
                report.fail("split-balance", &label, format!("train/val/test = {got:?}, expected {expected:?}"));
            }
        }
        let policies: BTreeSet<(u32, u32)> = rows.iter().map(|r| (r.spacing_used, r.threshold_used)).collect();
        if policies.len() > 1 {
            report.fail("policy", &label, format!("rows record {} different selection policies", policies.len()));
        }
    }
}

fn check_paramfiles(dir: &Path, manifest: &DatasetManifest, recipe: Option<&DatasetConfig>, report: &mut Report) {
    for class_id in 0..manifest.meta.class_count {
        let rel = paramfile_path(class_id);
        let text = match std::fs::read_to_string(dir.join(&rel)) {
            Ok(t) => t,
            Err(e) => {
                report.fail("paramfile", rel, e.to_string());
                continue;
            }
        };
        let spec = match parse_paramfile(&text) {
            Ok(s) => s,
            Err(e) => {
                report.fail("paramfile", rel, e.to_string());
                continue;
            }
        };
        if spec.class_id != class_id {
            report.fail("paramfile", &rel, format!("records class_id {}", spec.class_id));
        }
        if render_paramfile(&spec) != text {
            report.fail("paramfile", &rel, "does not round-trip through parse and render");
        }
        if let Some(cfg) = recipe {
            match cfg.grid.class(class_id, cfg.master_seed) {
                Ok(expected) if expected == spec => {}
                Ok(_) => report.fail("paramfile", &rel, "differs from the class the config defines"),
                Err(e) => report.fail("paramfile", &rel, e.to_string()),
            }
        }
    }
    if let Ok(entries) = std::fs::read_dir(dir.join(PARAMS_DIR)) {
        let expected: HashSet<String> = (0..manifest.meta.class_count).map(paramfile_path).collect();
        let mut extra: Vec<String> = entries
            .flatten()
            .map(|e| format!("{PARAMS_DIR}/{}", e.file_name().to_string_lossy()))
            .filter(|p| !expected.contains(p))
            .collect();
        extra.sort();
        for path in extra {
            report.fail("unlisted-file", path, "parameter file for a class outside the grid");
        }
    }
}

/// Re-simulates every selected frame from its seed and checks the recorded
/// active-pixel count, augmentation and stored bytes.
fn check_reproduction(
    dir: &Path,
    manifest: &DatasetManifest,
    cfg: &DatasetConfig,
    threads: usize,
    report: &mut Report,
) -> Result<()> {
    let lattice = Lattice::build(cfg.retina_radius)?;
    let ctx = GenerationContext::new(&lattice, cfg.globals, cfg.image_side, cfg.png)?;
    let mut by_class: BTreeMap<usize, Vec<&ManifestRow>> = BTreeMap::new();
    for row in &manifest.rows {
        if row.class_id < cfg.grid.class_count() {
            by_class.entry(row.class_id).or_default().push(row);
        }
    }
    let check_class = |(&class_id, rows): (&usize, &Vec<&ManifestRow>)| -> Result<Vec<Violation>> {
        let mut out = Report(Vec::new());
        let spec = cfg.grid.class(class_id, cfg.master_seed)?;
        let neighbors = lattice.neighbors(spec.params.dendritic_radius)?;
        let mut episodes: BTreeMap<u32, BTreeMap<u32, Vec<&ManifestRow>>> = BTreeMap::new();
        for &row in rows {
            episodes.entry(row.episode_id).or_default().entry(row.frame_step).or_default().push(row);
        }
        for (&ep, steps) in &episodes {
            let wanted: BTreeSet<u32> = steps.keys().copied().collect();
            let unreached =
                ctx.visit_steps(&neighbors, &spec.params, episode_seed(spec.class_seed, ep), &wanted, |frame| {
                    let count = ctx.identity_map().active_pixels(frame) as u32;
                    for row in &steps[&frame.step] {
                        let path = row.relative_path.as_str();
                        if count != row.active_pixels {
                            out.fail(
                                "reproduction",
                                path,
                                format!("identity crop has {count} active pixels, manifest says {}", row.active_pixels),
                            );
                        }
                        if count < row.threshold_used {
                            out.fail(
                                "threshold",
                                path,
                                format!("re-projection has {count} active pixels, below {}", row.threshold_used),
                            );
                        }
                        let aug = augmentation_for(spec.class_seed, row.image_index);
                        if aug.mirror != row.mirror || aug.rotation_deg != row.rotation_deg {
                            out.fail("augmentation", path, "recorded augmentation differs from its seed");
                        }
                        let map = SamplingMap::new(&lattice, &aug, cfg.image_side)?;
                        let bytes = encode_binary(&map.render(frame), &cfg.png)?;
                        match std::fs::read(dir.join(path)) {
                            Ok(stored) if stored == bytes => {}
                            Ok(_) => out.fail("reproduction", path, "stored bytes differ from the re-rendered image"),
                            Err(_) => {}
                        }
                    }
                    Ok(())
                })?;
            for step in unreached {
                for row in &steps[&step] {
                    out.fail("reproduction", &row.relative_path, format!("episode {ep} ends before step {step}"));
                }
            }
        }
        Ok(out.0)
    };
    let results: Vec<Result<Vec<Violation>>> = pool(threads)?.install(|| by_class.par_iter().map(check_class).collect());
    for r in results {
        report.0.extend(r?);
    }
    Ok(())
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))
}
