//! Per-class parameter text files: `name=value` lines in key order.

use std::collections::BTreeMap;
use std::path::Path;

use super::grid::ClassSpec;
use crate::dynamics::{WaveParams, PARAM_NAMES};
use crate::error::{Error, Result};

const PHENOMENA: [(&str, &str); 6] = [
    ("dendritic_radius", "wave size"),
    ("activation_threshold", "wave shape"),
    ("propagation_prob", "wave speed"),
    ("active_duration", "wave duration"),
    ("refractory_mean", "wave spacing"),
    ("spontaneous_rate", "initiation frequency"),
];

pub fn render_paramfile(spec: &ClassSpec) -> String {
    let mut entries = BTreeMap::new();
    for name in PARAM_NAMES {
        entries.insert(name, spec.params.get(name).unwrap().to_string());
    }
    entries.insert("class_id", spec.class_id.to_string());
    entries.insert("class_seed", spec.class_seed.to_string());

    let mut out = String::new();
    for (name, effect) in PHENOMENA {
        out.push_str(&format!("# {name}: {effect}\n"));
    }
    for (k, v) in entries {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    }
    out
}

pub fn parse_paramfile(text: &str) -> Result<ClassSpec> {
    let err = |reason: String| Error::Parse { context: "parameter file".into(), reason };
    let mut entries = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("line {}: expected name=value", lineno + 1)))?;
        if entries.insert(k.trim(), v.trim()).is_some() {
            return Err(err(format!("line {}: duplicate key `{k}`", lineno + 1)));
        }
    }
    let mut take = |k: &str| entries.remove(k).ok_or_else(|| err(format!("missing key `{k}`")));
    let class_id = take("class_id")?.parse().map_err(|e| err(format!("class_id: {e}")))?;
    let class_seed = take("class_seed")?.parse().map_err(|e| err(format!("class_seed: {e}")))?;
    let mut params = WaveParams::<f64>::default();
    for name in PARAM_NAMES {
        let v: f64 = take(name)?.parse().map_err(|e| err(format!("{name}: {e}")))?;
        params.set(name, v)?;
    }
    if let Some(k) = entries.keys().next() {
        return Err(err(format!("unexpected key `{k}`")));
    }
    params.validate()?;
    Ok(ClassSpec { class_id, params, class_seed })
}

/// Writes the parameter file for `spec` to `path`.
pub fn write_class_paramfile(spec: &ClassSpec, path: &Path) -> Result<()> {
    std::fs::write(path, render_paramfile(spec)).map_err(|e| Error::io(path, e))
}

pub fn read_class_paramfile(path: &Path) -> Result<ClassSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_paramfile(&text)
}
