use crate::dynamics::SimulationFrame;
use crate::error::{Error, Result};
use crate::projection::SamplingMap;
use crate::real::Real;

/// Frame selection settings for one class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelectionPolicy {
    /// Keep only steps that are multiples of this stride.
    pub spacing: u32,
    /// Minimum active pixels in the identity-augmentation crop.
    pub threshold: u32,
    pub max_episodes_per_attempt: u32,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        Self { spacing: 4, threshold: 50, max_episodes_per_attempt: 50 }
    }
}

impl SelectionPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.spacing == 0 || self.threshold == 0 || self.max_episodes_per_attempt == 0 {
            return Err(Error::invalid("spacing, threshold and max_episodes_per_attempt must be >= 1"));
        }
        Ok(())
    }

    /// Next rung of the relaxation ladder: spacing down by one, then threshold
    /// halved. `None` once both are at 1.
    pub fn relaxed(&self) -> Option<Self> {
        if self.spacing > 1 {
            Some(Self { spacing: self.spacing - 1, ..*self })
        } else if self.threshold > 1 {
            Some(Self { threshold: (self.threshold / 2).max(1), ..*self })
        } else {
            None
        }
    }
}

/// Steps passing the policy, given each frame's active-pixel count indexed by step.
pub fn select_steps(active_pixels: &[u32], policy: &SelectionPolicy) -> Vec<u32> {
    active_pixels
        .iter()
        .enumerate()
        .step_by(policy.spacing as usize)
        .filter(|(_, &count)| count >= policy.threshold)
        .map(|(step, _)| step as u32)
        .collect()
}

/// Steps of `episode` whose identity crop (rendered through `identity_map`)
/// passes the policy, in episode order.
pub fn select_frames<T: Real>(
    episode: &[SimulationFrame<T>],
    policy: &SelectionPolicy,
    identity_map: &SamplingMap,
) -> Vec<u32> {
    episode
        .iter()
        .filter(|f| f.step % policy.spacing == 0)
        .filter(|f| identity_map.active_pixels(f) >= policy.threshold as usize)
        .map(|f| f.step)
        .collect()
}
