//! Dataset manifest: one CSV row per emitted image plus a metadata sidecar.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use super::split::{Split, SplitRatios};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const META_FILE: &str = "manifest_meta.txt";

pub const COLUMNS: [&str; 12] = [
    "relative_path",
    "class_id",
    "image_index",
    "split",
    "episode_id",
    "frame_step",
    "mirror",
    "rotation_deg",
    "spacing_used",
    "threshold_used",
    "active_pixels",
    "reused",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRow {
    pub relative_path: String,
    pub class_id: usize,
    pub image_index: usize,
    pub split: Split,
    pub episode_id: u32,
    pub frame_step: u32,
    pub mirror: bool,
    pub rotation_deg: f64,
    pub spacing_used: u32,
    pub threshold_used: u32,
    /// Active pixels of the identity-augmentation crop used for selection.
    pub active_pixels: u32,
    /// The frame also backs an earlier image of the class (last ladder rung).
    pub reused: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestMeta {
    pub master_seed: u64,
    pub image_side: u32,
    pub retina_radius: f64,
    pub images_per_class: usize,
    pub class_count: usize,
    pub initial_spacing: u32,
    pub initial_threshold: u32,
    pub ratios: SplitRatios,
    pub grid: String,
    pub tool_version: String,
}

impl ManifestMeta {
    pub fn render(&self) -> String {
        let entries = [
            ("master_seed", self.master_seed.to_string()),
            ("image_side", self.image_side.to_string()),
            ("retina_radius", self.retina_radius.to_string()),
            ("images_per_class", self.images_per_class.to_string()),
            ("class_count", self.class_count.to_string()),
            ("initial_spacing", self.initial_spacing.to_string()),
            ("initial_threshold", self.initial_threshold.to_string()),
            ("split_train", self.ratios.train.to_string()),
            ("split_val", self.ratios.val.to_string()),
            ("split_test", self.ratios.test.to_string()),
            ("grid", self.grid.clone()),
            ("tool_version", self.tool_version.clone()),
        ];
        entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |reason: String| Error::Parse { context: META_FILE.into(), reason };
        let map: BTreeMap<&str, &str> = text.lines().filter_map(|l| l.split_once('=')).collect();
        let get = |k: &str| map.get(k).copied().ok_or_else(|| err(format!("missing `{k}`")));
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e: T::Err| Error::Parse { context: META_FILE.into(), reason: format!("{k}: {e}") })
        }
        Ok(Self {
            master_seed: num("master_seed", get("master_seed")?)?,
            image_side: num("image_side", get("image_side")?)?,
            retina_radius: num("retina_radius", get("retina_radius")?)?,
            images_per_class: num("images_per_class", get("images_per_class")?)?,
            class_count: num("class_count", get("class_count")?)?,
            initial_spacing: num("initial_spacing", get("initial_spacing")?)?,
            initial_threshold: num("initial_threshold", get("initial_threshold")?)?,
            ratios: SplitRatios {
                train: num("split_train", get("split_train")?)?,
                val: num("split_val", get("split_val")?)?,
                test: num("split_test", get("split_test")?)?,
            },
            grid: get("grid")?.to_string(),
            tool_version: get("tool_version")?.to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub meta: ManifestMeta,
    pub rows: Vec<ManifestRow>,
}

/// Sorts rows by (class, image index) and rejects duplicate paths.
pub fn build_manifest(mut rows: Vec<ManifestRow>, meta: ManifestMeta) -> Result<DatasetManifest> {
    rows.sort_by_key(|r| (r.class_id, r.image_index));
    let mut seen = HashSet::with_capacity(rows.len());
    for r in &rows {
        if !seen.insert(r.relative_path.as_str()) {
            return Err(Error::Internal(format!("duplicate manifest path {}", r.relative_path)));
        }
    }
    Ok(DatasetManifest { meta, rows })
}

impl DatasetManifest {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Internal(format!("CSV write: {e}"));
        w.write_record(COLUMNS).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.relative_path.clone(),
                r.class_id.to_string(),
                r.image_index.to_string(),
                r.split.to_string(),
                r.episode_id.to_string(),
                r.frame_step.to_string(),
                r.mirror.to_string(),
                r.rotation_deg.to_string(),
                r.spacing_used.to_string(),
                r.threshold_used.to_string(),
                r.active_pixels.to_string(),
                r.reused.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Internal(format!("CSV flush: {e}")))
    }

    pub fn parse_rows(bytes: &[u8]) -> Result<Vec<ManifestRow>> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let err = |line: usize, reason: String| Error::Parse { context: format!("{MANIFEST_FILE} row {line}"), reason };
        let headers = rdr.headers().map_err(|e| err(0, e.to_string()))?.clone();
        if headers.iter().ne(COLUMNS) {
            return Err(err(0, format!("unexpected header {headers:?}")));
        }
        let mut rows = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let line = k + 1;
            let rec = rec.map_err(|e| err(line, e.to_string()))?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            macro_rules! parse {
                ($i:expr) => {
                    field($i).parse().map_err(|e| err(line, format!("{}: {e}", COLUMNS[$i])))?
                };
            }
            rows.push(ManifestRow {
                relative_path: field(0).to_string(),
                class_id: parse!(1),
                image_index: parse!(2),
                split: field(3).parse()?,
                episode_id: parse!(4),
                frame_step: parse!(5),
                mirror: parse!(6),
                rotation_deg: parse!(7),
                spacing_used: parse!(8),
                threshold_used: parse!(9),
                active_pixels: parse!(10),
                reused: parse!(11),
            });
        }
        Ok(rows)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_csv()?).map_err(|e| Error::io(&path, e))?;
        let path = dir.join(META_FILE);
        std::fs::write(&path, self.meta.render()).map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let rows = Self::parse_rows(&bytes)?;
        let path = dir.join(META_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self { meta: ManifestMeta::parse(&text)?, rows })
    }
}
