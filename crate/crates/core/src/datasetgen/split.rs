use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::{derive, tag, SplitMix64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split `{other}`"))),
        }
    }
}

/// Fractions of each class assigned to train / val / test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.8, val: 0.1, test: 0.1 }
    }
}

const RATIO_EPS: f64 = 1e-9;

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|r| !(0.0..=1.0).contains(r)) || (all.iter().sum::<f64>() - 1.0).abs() > RATIO_EPS {
            return Err(Error::invalid(format!(
                "split ratios {}/{}/{} must be fractions summing to 1",
                self.train, self.val, self.test
            )));
        }
        Ok(())
    }

    /// Exact per-split counts for `n` images, or an error when `n` does not
    /// divide evenly.
    pub fn counts(&self, n: usize) -> Result<[usize; 3]> {
        self.validate()?;
        let mut out = [0usize; 3];
        for (slot, r) in out.iter_mut().zip([self.train, self.val, self.test]) {
            let x = n as f64 * r;
            if (x - x.round()).abs() > RATIO_EPS * n.max(1) as f64 {
                return Err(Error::invalid(format!(
                    "{n} images per class cannot be split {}/{}/{} exactly",
                    self.train, self.val, self.test
                )));
            }
            *slot = x.round() as usize;
        }
        if out.iter().sum::<usize>() != n {
            return Err(Error::invalid(format!("split counts {out:?} do not add up to {n}")));
        }
        Ok(out)
    }
}

/// Split label for each image index of one class.
///
/// A seeded shuffle of the indices sends the first share to train, the next
/// to val and the rest to test, so every class has identical split counts.
pub fn assign_splits(n: usize, ratios: &SplitRatios, master_seed: u64, class_id: usize) -> Result<Vec<Split>> {
    let [train, val, _] = ratios.counts(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::new(derive(master_seed, &[class_id as u64, tag("split")])).shuffle(&mut order);
    let mut labels = vec![Split::Test; n];
    for (rank, &image) in order.iter().enumerate() {
        labels[image] = if rank < train {
            Split::Train
        } else if rank < train + val {
            Split::Val
        } else {
            Split::Test
        };
    }
    Ok(labels)
}
