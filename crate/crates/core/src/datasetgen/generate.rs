use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use super::grid::ClassSpec;
use super::select::{select_steps, SelectionPolicy};
use crate::dynamics::{run_episode, GlobalDynamicsConfig, SimulationFrame, WaveParams};
use crate::error::{Error, Result};
use crate::imageio::{encode_binary, PngSettings};
use crate::lattice::{NeighborTable, RetinaLattice};
use crate::projection::{AugmentationSpec, SamplingMap};
use crate::rng::{derive, tag, SplitMix64};

/// Shared, read-only inputs for generating any class.
#[derive(Clone, Debug)]
pub struct GenerationContext<'a> {
    pub lattice: &'a RetinaLattice<f64>,
    pub globals: GlobalDynamicsConfig<f64>,
    pub side: u32,
    pub png: PngSettings,
    identity: SamplingMap,
}

impl<'a> GenerationContext<'a> {
    pub fn new(
        lattice: &'a RetinaLattice<f64>,
        globals: GlobalDynamicsConfig<f64>,
        side: u32,
        png: PngSettings,
    ) -> Result<Self> {
        globals.validate()?;
        png.validate()?;
        let identity = SamplingMap::new(lattice, &AugmentationSpec::identity(), side)?;
        Ok(Self { lattice, globals, side, png, identity })
    }

    pub fn identity_map(&self) -> &SamplingMap {
        &self.identity
    }

    /// Identity-crop active pixel count of every frame of one episode, indexed by step.
    pub fn episode_active_pixels(&self, neighbors: &NeighborTable, params: &WaveParams<f64>, seed: u64) -> Result<Vec<u32>> {
        self.active_pixels_until(neighbors, params, seed, |_, _| false)
    }

    /// Like `episode_active_pixels`, but stops once `stop(step, count)` returns true.
    fn active_pixels_until(
        &self,
        neighbors: &NeighborTable,
        params: &WaveParams<f64>,
        seed: u64,
        mut stop: impl FnMut(u32, u32) -> bool,
    ) -> Result<Vec<u32>> {
        let mut counts = Vec::new();
        run_episode(self.lattice, neighbors, params, &self.globals, seed, |frame| {
            let count = self.identity.active_pixels(frame) as u32;
            counts.push(count);
            if stop(frame.step, count) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })?;
        Ok(counts)
    }

    /// Re-simulates an episode and returns the frame at `step`, if the episode reaches it.
    pub fn frame_at(
        &self,
        neighbors: &NeighborTable,
        params: &WaveParams<f64>,
        seed: u64,
        step: u32,
    ) -> Result<Option<SimulationFrame<f64>>> {
        let mut found = None;
        self.visit_steps(neighbors, params, seed, &BTreeSet::from([step]), |frame| {
            found = Some(frame.clone());
            Ok(())
        })?;
        Ok(found)
    }

    /// Re-simulates an episode, calling `visit` on each frame whose step is in
    /// `steps`, and stops after the last one. Returns the steps the episode
    /// never reached.
    pub fn visit_steps(
        &self,
        neighbors: &NeighborTable,
        params: &WaveParams<f64>,
        seed: u64,
        steps: &BTreeSet<u32>,
        mut visit: impl FnMut(&SimulationFrame<f64>) -> Result<()>,
    ) -> Result<Vec<u32>> {
        let Some(&last) = steps.last() else {
            return Ok(Vec::new());
        };
        let mut failure = None;
        let mut reached = 0;
        run_episode(self.lattice, neighbors, params, &self.globals, seed, |frame| {
            if steps.contains(&frame.step) {
                reached += 1;
                if let Err(e) = visit(frame) {
                    failure = Some(e);
                    return ControlFlow::Break(());
                }
            }
            if frame.step >= last {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })?;
        match failure {
            Some(e) => Err(e),
            // Steps are visited in ascending order, so the unreached ones form the tail.
            None => Ok(steps.iter().skip(reached).copied().collect()),
        }
    }
}

pub fn episode_seed(class_seed: u64, episode_id: u32) -> u64 {
    derive(class_seed, &[u64::from(episode_id)])
}

/// Mirror coin and rotation angle for one image of a class.
pub fn augmentation_for(class_seed: u64, image_index: usize) -> AugmentationSpec<f64> {
    let mut rng = SplitMix64::new(derive(class_seed, &[tag("aug"), image_index as u64]));
    let mirror = rng.next_unit::<f64>() < 0.5;
    let mut rotation_deg = rng.next_unit::<f64>() * 360.0;
    if rotation_deg >= 360.0 {
        rotation_deg = 0.0;
    }
    AugmentationSpec { mirror, rotation_deg }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedImage {
    pub image_index: usize,
    pub episode_id: u32,
    pub frame_step: u32,
    pub augmentation: AugmentationSpec<f64>,
    /// Identity-crop active pixels that passed the threshold.
    pub active_pixels: u32,
    pub reused: bool,
    pub png: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassOutput {
    pub spec: ClassSpec,
    /// Policy in force when the quota was met.
    pub policy: SelectionPolicy,
    pub images: Vec<GeneratedImage>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    episode_id: u32,
    step: u32,
}

fn pool(counts: &[Vec<u32>], policy: &SelectionPolicy) -> Vec<Candidate> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(ep, c)| {
            select_steps(c, policy).into_iter().map(move |step| Candidate { episode_id: ep as u32, step })
        })
        .collect()
}

/// Produces exactly `quota` augmented images for one class.
///
/// Episodes are simulated in order until the candidate pool covers the quota
/// (stopping mid-episode) or `max_episodes_per_attempt` episodes have run. If the pool is still too
/// small the policy is relaxed (spacing, then threshold) and selection is
/// re-run over the same episodes; as a last resort candidates are cycled with
/// fresh augmentations. Only per-frame pixel counts are retained between
/// passes; the chosen frames are re-simulated from their seeds for rendering.
pub fn generate_class(
    spec: &ClassSpec,
    quota: usize,
    initial: &SelectionPolicy,
    ctx: &GenerationContext<'_>,
) -> Result<ClassOutput> {
    if quota == 0 {
        return Err(Error::invalid("images per class must be >= 1"));
    }
    initial.validate()?;
    let class_err = |reason: String| Error::ClassGeneration { class_id: spec.class_id, reason };
    let neighbors = ctx.lattice.neighbors(spec.params.dendritic_radius).map_err(|e| class_err(e.to_string()))?;

    let mut policy = *initial;
    let mut counts: Vec<Vec<u32>> = Vec::new();
    let mut candidates = Vec::new();
    for ep in 0..initial.max_episodes_per_attempt {
        // Once the pool covers the quota no relaxation can follow, so the
        // rest of the episode is never needed.
        let c = ctx
            .active_pixels_until(&neighbors, &spec.params, episode_seed(spec.class_seed, ep), |step, count| {
                if step % policy.spacing == 0 && count >= policy.threshold {
                    candidates.push(Candidate { episode_id: ep, step });
                }
                candidates.len() >= quota
            })
            .map_err(|e| class_err(e.to_string()))?;
        counts.push(c);
        if candidates.len() >= quota {
            break;
        }
    }
    while candidates.len() < quota {
        match policy.relaxed() {
            Some(next) => {
                policy = next;
                candidates = pool(&counts, &policy);
            }
            None => break,
        }
    }
    if candidates.is_empty() {
        return Err(class_err(format!(
            "no frame reached {} active pixel(s) in {} episode(s)",
            policy.threshold,
            counts.len()
        )));
    }

    // image index -> candidate; cycles the pool when it is short.
    let chosen: Vec<Candidate> = (0..quota).map(|i| candidates[i % candidates.len()]).collect();
    let mut by_episode: BTreeMap<u32, BTreeMap<u32, Vec<usize>>> = BTreeMap::new();
    for (i, c) in chosen.iter().enumerate() {
        by_episode.entry(c.episode_id).or_default().entry(c.step).or_default().push(i);
    }

    let mut images: Vec<Option<GeneratedImage>> = vec![None; quota];
    for (&ep, steps) in &by_episode {
        let wanted: BTreeSet<u32> = steps.keys().copied().collect();
        ctx.visit_steps(&neighbors, &spec.params, episode_seed(spec.class_seed, ep), &wanted, |frame| {
            for &i in &steps[&frame.step] {
                let aug = augmentation_for(spec.class_seed, i);
                let map = SamplingMap::new(ctx.lattice, &aug, ctx.side)?;
                images[i] = Some(GeneratedImage {
                    image_index: i,
                    episode_id: ep,
                    frame_step: frame.step,
                    augmentation: aug,
                    active_pixels: counts[ep as usize][frame.step as usize],
                    reused: i >= candidates.len(),
                    png: encode_binary(&map.render(frame), &ctx.png)?,
                });
            }
            Ok(())
        })
        .map_err(|e| class_err(e.to_string()))?;
    }

    let images = images
        .into_iter()
        .enumerate()
        .map(|(i, img)| img.ok_or_else(|| class_err(format!("image {i} was not rendered on re-simulation"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassOutput { spec: *spec, policy, images })
}
