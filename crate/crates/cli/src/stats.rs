use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rewave::datasetgen::{DatasetManifest, ManifestMeta, Split};
use rewave::Result;

use crate::verify::read_manifest;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ActiveSummary {
    pub mean: f64,
    pub min: u32,
    pub max: u32,
}

impl ActiveSummary {
    fn of(values: impl IntoIterator<Item = u32>) -> Self {
        let (mut n, mut sum, mut min, mut max) = (0u64, 0u64, u32::MAX, 0);
        for v in values {
            n += 1;
            sum += u64::from(v);
            min = min.min(v);
            max = max.max(v);
        }
        if n == 0 {
            return Self::default();
        }
        Self { mean: sum as f64 / n as f64, min, max }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassStats {
    pub class_id: usize,
    /// Images per split, in train/val/test order.
    pub split_counts: [usize; 3],
    pub active: ActiveSummary,
    pub spacing_used: u32,
    pub threshold_used: u32,
    pub reused: usize,
}

impl ClassStats {
    pub fn total(&self) -> usize {
        self.split_counts.iter().sum()
    }
}

/// How many classes needed each rung of the relaxation ladder.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LadderUsage {
    pub unadjusted: usize,
    pub spacing_relaxed: usize,
    pub threshold_relaxed: usize,
    pub reuse: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetStats {
    pub meta: ManifestMeta,
    pub classes: Vec<ClassStats>,
    pub split_totals: [usize; 3],
    pub active: ActiveSummary,
    pub ladder: LadderUsage,
}

pub fn dataset_stats(dir: &Path) -> Result<DatasetStats> {
    Ok(summarize(&read_manifest(dir)?))
}

pub fn summarize(manifest: &DatasetManifest) -> DatasetStats {
    let meta = &manifest.meta;
    let mut groups: BTreeMap<usize, Vec<_>> = BTreeMap::new();
    for row in &manifest.rows {
        groups.entry(row.class_id).or_default().push(row);
    }
    let mut split_totals = [0usize; 3];
    let mut ladder = LadderUsage::default();
    let classes: Vec<ClassStats> = groups
        .into_iter()
        .map(|(class_id, rows)| {
            let mut split_counts = [0usize; 3];
            for r in &rows {
                split_counts[Split::ALL.iter().position(|&s| s == r.split).unwrap()] += 1;
            }
            for (t, c) in split_totals.iter_mut().zip(split_counts) {
                *t += c;
            }
            // Rows of one class share a policy; the minimum covers a damaged manifest.
            let spacing_used = rows.iter().map(|r| r.spacing_used).min().unwrap_or(0);
            let threshold_used = rows.iter().map(|r| r.threshold_used).min().unwrap_or(0);
            let reused = rows.iter().filter(|r| r.reused).count();
            if reused > 0 {
                ladder.reuse += 1;
            }
            if threshold_used < meta.initial_threshold {
                ladder.threshold_relaxed += 1;
            } else if spacing_used < meta.initial_spacing {
                ladder.spacing_relaxed += 1;
            } else {
                ladder.unadjusted += 1;
            }
            ClassStats {
                class_id,
                split_counts,
                active: ActiveSummary::of(rows.iter().map(|r| r.active_pixels)),
                spacing_used,
                threshold_used,
                reused,
            }
        })
        .collect();
    DatasetStats {
        meta: meta.clone(),
        classes,
        split_totals,
        active: ActiveSummary::of(manifest.rows.iter().map(|r| r.active_pixels)),
        ladder,
    }
}

impl DatasetStats {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>7} {:>7} {:>6} {:>6} {:>9} {:>7} {:>7} {:>8} {:>10} {:>7}",
            "class", "train", "val", "test", "mean_act", "min_act", "max_act", "spacing", "threshold", "reused"
        );
        for c in &self.classes {
            let [train, val, test] = c.split_counts;
            let _ = writeln!(
                s,
                "{:>7} {train:>7} {val:>6} {test:>6} {:>9.1} {:>7} {:>7} {:>8} {:>10} {:>7}",
                c.class_id, c.active.mean, c.active.min, c.active.max, c.spacing_used, c.threshold_used, c.reused
            );
        }
        let [train, val, test] = self.split_totals;
        let _ = writeln!(
            s,
            "{:>7} {train:>7} {val:>6} {test:>6} {:>9.1} {:>7} {:>7}",
            "total", self.active.mean, self.active.min, self.active.max
        );
        let _ = writeln!(
            s,
            "classes: {} of {} present, {} images each (expected)",
            self.classes.len(),
            self.meta.class_count,
            self.meta.images_per_class
        );
        let l = self.ladder;
        let _ = writeln!(
            s,
            "ladder: {} unadjusted, {} spacing relaxed, {} threshold relaxed, {} with reuse",
            l.unadjusted, l.spacing_relaxed, l.threshold_relaxed, l.reuse
        );
        s
    }
}
