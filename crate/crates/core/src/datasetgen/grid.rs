use std::collections::HashSet;
use std::fmt::Write as _;

use crate::dynamics::{check_param_range, WaveParams, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::rng::derive;

/// One altered parameter and the values it takes across classes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl GridAxis {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }

    /// `count` values evenly spaced over `[base(1-spread), base(1+spread)]`.
    /// With the default count of four this is
    /// `{b(1-s), b(1-s/3), b(1+s/3), b(1+s)}`.
    pub fn from_spread(name: impl Into<String>, base: f64, spread: f64, count: usize) -> Self {
        let values = if count <= 1 {
            vec![base]
        } else {
            let last = (count - 1) as f64;
            (0..count)
                .map(|i| base * (1.0 - spread + 2.0 * spread * i as f64 / last))
                .collect()
        };
        Self::new(name, values)
    }
}

/// Cartesian product of altered parameter values over fixed base parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterGrid {
    base: WaveParams<f64>,
    axes: Vec<GridAxis>,
}

/// A class: one exact parameter combination and its seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassSpec {
    pub class_id: usize,
    pub params: WaveParams<f64>,
    pub class_seed: u64,
}

impl ParameterGrid {
    pub fn new(base: WaveParams<f64>, axes: Vec<GridAxis>) -> Result<Self> {
        let grid = Self { base, axes };
        grid.validate()?;
        Ok(grid)
    }

    /// Axes built from a shared relative spread around `base`.
    pub fn from_spread(base: WaveParams<f64>, altered: &[&str], spread: f64, count: usize) -> Result<Self> {
        let axes = altered
            .iter()
            .map(|&name| {
                let b = base
                    .get(name)
                    .ok_or_else(|| Error::invalid(format!("unknown wave parameter `{name}`")))?;
                Ok(GridAxis::from_spread(name, b, spread, count))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(base, axes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::invalid("parameter grid has no altered parameters"));
        }
        self.base.validate()?;
        let mut seen = HashSet::new();
        for axis in &self.axes {
            if !PARAM_NAMES.contains(&axis.name.as_str()) {
                return Err(Error::invalid(format!("unknown wave parameter `{}`", axis.name)));
            }
            if !seen.insert(axis.name.as_str()) {
                return Err(Error::invalid(format!("parameter `{}` listed twice", axis.name)));
            }
            if axis.values.is_empty() {
                return Err(Error::invalid(format!("parameter `{}` has no values", axis.name)));
            }
            for &v in &axis.values {
                check_param_range(&axis.name, v)?;
            }
        }
        Ok(())
    }

    pub fn base(&self) -> &WaveParams<f64> {
        &self.base
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn class_count(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Class `class_id` of the lexicographic enumeration (first axis most significant).
    pub fn class(&self, class_id: usize, master_seed: u64) -> Result<ClassSpec> {
        if class_id >= self.class_count() {
            return Err(Error::invalid(format!(
                "class {class_id} out of range (grid has {} classes)",
                self.class_count()
            )));
        }
        let mut params = self.base;
        let mut rest = class_id;
        for axis in self.axes.iter().rev() {
            let n = axis.values.len();
            params.set(&axis.name, axis.values[rest % n])?;
            rest /= n;
        }
        Ok(ClassSpec { class_id, params, class_seed: class_seed(master_seed, class_id) })
    }

    /// Human-readable one-line description for manifests.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        for (k, axis) in self.axes.iter().enumerate() {
            if k > 0 {
                s.push(';');
            }
            let vals: Vec<String> = axis.values.iter().map(|v| v.to_string()).collect();
            let _ = write!(s, "{}=[{}]", axis.name, vals.join(","));
        }
        for name in PARAM_NAMES {
            if !self.axes.iter().any(|a| a.name == name) {
                let _ = write!(s, ";{name}={}", self.base.get(name).unwrap());
            }
        }
        s
    }
}

pub fn class_seed(master_seed: u64, class_id: usize) -> u64 {
    derive(master_seed, &[class_id as u64])
}

/// Every class of `grid`, in lexicographic order with dense ids from 0.
pub fn enumerate_classes(grid: &ParameterGrid, master_seed: u64) -> Result<Vec<ClassSpec>> {
    grid.validate()?;
    (0..grid.class_count()).map(|id| grid.class(id, master_seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_gives_four_symmetric_values() {
        let axis = GridAxis::from_spread("refractory_mean", 30.0, 0.3, 4);
        let expected = [30.0 * 0.7, 30.0 * (1.0 - 0.1), 30.0 * (1.0 + 0.1), 30.0 * 1.3];
        for (a, b) in axis.values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn class_count_is_product() {
        let base = WaveParams::default();
        let five = ["dendritic_radius", "activation_threshold", "propagation_prob", "active_duration", "refractory_mean"];
        let grid = ParameterGrid::from_spread(base, &five, 0.2, 4).unwrap();
        assert_eq!(enumerate_classes(&grid, 0).unwrap().len(), 1024);
    }

    #[test]
    fn singleton_grid_keeps_exact_params() {
        let base = WaveParams::default();
        let grid = ParameterGrid::new(base, vec![GridAxis::new("activation_threshold", vec![0.3])]).unwrap();
        let classes = enumerate_classes(&grid, 5).unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].params, WaveParams { activation_threshold: 0.3, ..base });
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let grid = ParameterGrid::new(
            WaveParams::default(),
            vec![
                GridAxis::new("activation_threshold", vec![0.2, 0.3]),
                GridAxis::new("propagation_prob", vec![0.5, 0.6, 0.7]),
            ],
        )
        .unwrap();
        let got: Vec<(f64, f64)> = enumerate_classes(&grid, 0)
            .unwrap()
            .iter()
            .map(|c| (c.params.activation_threshold, c.params.propagation_prob))
            .collect();
        assert_eq!(got, vec![(0.2, 0.5), (0.2, 0.6), (0.2, 0.7), (0.3, 0.5), (0.3, 0.6), (0.3, 0.7)]);
    }

    #[test]
    fn seeds_depend_on_master_and_class() {
        assert_ne!(class_seed(1, 0), class_seed(1, 1));
        assert_ne!(class_seed(1, 0), class_seed(2, 0));
    }

    #[test]
    fn invalid_grids_are_rejected() {
        let base = WaveParams::default();
        assert!(ParameterGrid::new(base, vec![]).is_err());
        assert!(ParameterGrid::new(base, vec![GridAxis::new("bogus", vec![1.0])]).is_err());
        assert!(ParameterGrid::new(base, vec![GridAxis::new("propagation_prob", vec![])]).is_err());
        assert!(ParameterGrid::new(base, vec![GridAxis::new("propagation_prob", vec![1.2])]).is_err());
        let dup = vec![
            GridAxis::new("propagation_prob", vec![0.5]),
            GridAxis::new("propagation_prob", vec![0.6]),
        ];
        assert!(ParameterGrid::new(base, dup).is_err());
    }
}
