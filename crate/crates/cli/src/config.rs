//! TOML generator configuration with dotted `--set` overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rewave::datasetgen::{DatasetConfig, GridAxis, ParameterGrid, SelectionPolicy, SplitRatios};
use rewave::dynamics::{GlobalDynamicsConfig, WaveParams};
use rewave::imageio::{PngSettings, RowFilter};
use rewave::{Error, Result};
use serde::{Deserialize, Serialize};

/// Name of the resolved-config copy written next to every generated dataset.
pub const CONFIG_ECHO: &str = "config.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    #[serde(with = "seed")]
    pub master_seed: u64,
    pub retina_radius: f64,
    pub image_side: u32,
    pub images_per_class: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub params: ParamsSection,
    pub grid: GridSection,
    pub selection: SelectionSection,
    pub globals: GlobalsSection,
    pub ratios: RatiosSection,
    pub png: PngSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub dendritic_radius: f64,
    pub activation_threshold: f64,
    pub propagation_prob: f64,
    pub active_duration: f64,
    pub refractory_mean: f64,
    pub spontaneous_rate: f64,
}

/// Altered parameters, in enumeration order. Each takes `values[name]` when
/// given, else `values_per_param` points spread around its base value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub altered: Vec<String>,
    pub spread: f64,
    pub values_per_param: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub spreads: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub spacing: u32,
    pub threshold: u32,
    pub max_episodes_per_attempt: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalsSection {
    pub refractory_jitter: f64,
    pub calcium_decay: f64,
    pub max_steps: u32,
    pub quiet_grace: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatiosSection {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PngSection {
    pub level: u8,
    pub filter: String,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            retina_radius: 160.0,
            image_side: 256,
            images_per_class: 1000,
            threads: None,
            output: None,
            params: ParamsSection::default(),
            grid: GridSection::default(),
            selection: SelectionSection::default(),
            globals: GlobalsSection::default(),
            ratios: RatiosSection::default(),
            png: PngSection::default(),
        }
    }
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self::from(WaveParams::<f64>::default())
    }
}

impl From<WaveParams<f64>> for ParamsSection {
    fn from(p: WaveParams<f64>) -> Self {
        Self {
            dendritic_radius: p.dendritic_radius,
            activation_threshold: p.activation_threshold,
            propagation_prob: p.propagation_prob,
            active_duration: p.active_duration,
            refractory_mean: p.refractory_mean,
            spontaneous_rate: p.spontaneous_rate,
        }
    }
}

impl ParamsSection {
    pub fn to_params(&self) -> WaveParams<f64> {
        WaveParams {
            dendritic_radius: self.dendritic_radius,
            activation_threshold: self.activation_threshold,
            propagation_prob: self.propagation_prob,
            active_duration: self.active_duration,
            refractory_mean: self.refractory_mean,
            spontaneous_rate: self.spontaneous_rate,
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            altered: ["dendritic_radius", "activation_threshold", "propagation_prob", "active_duration", "refractory_mean"]
                .map(String::from)
                .to_vec(),
            spread: 0.2,
            values_per_param: 4,
            spreads: BTreeMap::new(),
            values: BTreeMap::new(),
        }
    }
}

impl GridSection {
    pub fn to_grid(&self, base: WaveParams<f64>) -> Result<ParameterGrid> {
        for name in self.spreads.keys().chain(self.values.keys()) {
            if !self.altered.contains(name) {
                return Err(Error::invalid(format!("grid entry for `{name}`, which is not in grid.altered")));
            }
        }
        if self.values_per_param == 0 {
            return Err(Error::invalid("grid.values_per_param must be >= 1"));
        }
        let axes = self
            .altered
            .iter()
            .map(|name| {
                if let Some(values) = self.values.get(name) {
                    return Ok(GridAxis::new(name.as_str(), values.clone()));
                }
                let b = base
                    .get(name)
                    .ok_or_else(|| Error::invalid(format!("unknown wave parameter `{name}`")))?;
                let spread = self.spreads.get(name).copied().unwrap_or(self.spread);
                if !(0.0..1.0).contains(&spread) {
                    return Err(Error::invalid(format!("spread {spread} for `{name}` must lie in [0, 1)")));
                }
                Ok(GridAxis::from_spread(name.as_str(), b, spread, self.values_per_param))
            })
            .collect::<Result<Vec<_>>>()?;
        ParameterGrid::new(base, axes)
    }
}

impl Default for SelectionSection {
    fn default() -> Self {
        let p = SelectionPolicy::default();
        Self { spacing: p.spacing, threshold: p.threshold, max_episodes_per_attempt: p.max_episodes_per_attempt }
    }
}

impl Default for GlobalsSection {
    fn default() -> Self {
        let g = GlobalDynamicsConfig::<f64>::default();
        Self {
            refractory_jitter: g.refractory_jitter,
            calcium_decay: g.calcium_decay,
            max_steps: g.max_steps,
            quiet_grace: g.quiet_grace,
        }
    }
}

impl GlobalsSection {
    pub fn to_globals(&self) -> GlobalDynamicsConfig<f64> {
        GlobalDynamicsConfig {
            refractory_jitter: self.refractory_jitter,
            calcium_decay: self.calcium_decay,
            max_steps: self.max_steps,
            quiet_grace: self.quiet_grace,
        }
    }
}

impl Default for RatiosSection {
    fn default() -> Self {
        let r = SplitRatios::default();
        Self { train: r.train, val: r.val, test: r.test }
    }
}

impl Default for PngSection {
    fn default() -> Self {
        let p = PngSettings::default();
        Self { level: p.level, filter: p.filter.name().to_string() }
    }
}

impl GeneratorConfig {
    /// Parses TOML text, then applies `overrides` of the form `a.b=value`.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| parse_error("config", e.to_string()))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| parse_error("config", e.to_string()))?;
        Ok(cfg)
    }

    /// Loads `path` (or the built-in defaults when `None`) and applies overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| parse_error(&p.display().to_string(), e.to_string()))?,
            None => String::new(),
        };
        Self::parse(&text, overrides)
    }

    /// Serialized form with the run-specific `threads` and `output` removed,
    /// so two runs of one recipe echo identical bytes.
    pub fn echo(&self) -> Result<String> {
        let recipe = Self { threads: None, output: None, ..self.clone() };
        toml::to_string(&recipe).map_err(|e| Error::Internal(format!("serializing config: {e}")))
    }

    pub fn png_settings(&self) -> Result<PngSettings> {
        let settings = PngSettings { level: self.png.level, filter: RowFilter::parse(&self.png.filter)? };
        settings.validate()?;
        Ok(settings)
    }

    pub fn dataset_config(&self) -> Result<DatasetConfig> {
        let base = self.params.to_params();
        let cfg = DatasetConfig {
            master_seed: self.master_seed,
            retina_radius: self.retina_radius,
            image_side: self.image_side,
            grid: self.grid.to_grid(base)?,
            images_per_class: self.images_per_class,
            selection: SelectionPolicy {
                spacing: self.selection.spacing,
                threshold: self.selection.threshold,
                max_episodes_per_attempt: self.selection.max_episodes_per_attempt,
            },
            globals: self.globals.to_globals(),
            ratios: SplitRatios { train: self.ratios.train, val: self.ratios.val, test: self.ratios.test },
            png: self.png_settings()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_error(context: &str, reason: String) -> Error {
    Error::Parse { context: context.to_string(), reason }
}

/// Sets a dotted key. The value is read as a TOML literal, falling back to a
/// bare string (so `--set png.filter=up` works unquoted).
fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| parse_error("--set", format!("expected KEY=VALUE, got `{item}`")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(parse_error("--set", format!("malformed key `{key}`")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, parents) = path.split_last().unwrap();
    let mut cursor = table;
    for part in parents {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| parse_error("--set", format!("`{part}` in `{key}` is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

/// TOML integers are signed 64-bit; seeds above `i64::MAX` round-trip as strings.
mod seed {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*v) {
            Ok(i) => s.serialize_i64(i),
            Err(_) => s.serialize_str(&v.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(i) => u64::try_from(i).map_err(|_| de::Error::custom("master_seed must be non-negative")),
            Raw::Str(s) => s.parse().map_err(de::Error::custom),
        }
    }
}
