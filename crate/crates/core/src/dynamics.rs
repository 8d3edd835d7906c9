//! Three-state excitable medium on the amacrine lattice.
//!
//! Cells cycle READY -> ACTIVE -> REFRACTORY -> READY. A READY cell whose
//! fraction of ACTIVE neighbors reaches the activation threshold fires with
//! the propagation probability; otherwise it may fire spontaneously. Firing
//! lasts `active_duration` steps, followed by a jittered refractory period.
//! Each cell carries a calcium trace that is pinned to 1 while ACTIVE and
//! decays exponentially otherwise.
//!
//! All updates are synchronous: the next frame is computed entirely from the
//! previous one. Random numbers come from a counter-based stream addressed
//! by `(step, cell, slot)`, so the outcome does not depend on iteration
//! order or on which branches other cells took.

use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::lattice::{NeighborTable, RetinaLattice};
use crate::real::{round_half_up, Real};
use crate::rng::CounterStream;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CellState {
    #[default]
    Ready = 0,
    Active = 1,
    Refractory = 2,
}

/// Random draw slots reserved per cell per step.
pub mod slot {
    pub const PROPAGATE: u64 = 0;
    pub const SPONTANEOUS: u64 = 1;
    pub const REFRACTORY: u64 = 2;
    pub const COUNT: u64 = 3;
}

/// Stream position of a draw; shared by every stepper implementation.
#[inline]
pub fn draw_index(step: u32, cells: usize, cell: usize, slot: u64) -> u64 {
    (u64::from(step) * cells as u64 + cell as u64) * slot::COUNT + slot
}

/// Parameters that vary from class to class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveParams<T> {
    /// Dendritic reach in lattice units (wave size).
    pub dendritic_radius: T,
    /// Fraction of active neighbors needed to drive a cell (wave shape).
    pub activation_threshold: T,
    /// Probability a driven cell fires (wave speed).
    pub propagation_prob: T,
    /// Steps a cell stays active (wave duration).
    pub active_duration: T,
    /// Mean refractory period in steps (wave spacing).
    pub refractory_mean: T,
    /// Per-cell per-step spontaneous firing probability.
    pub spontaneous_rate: T,
}

/// Field names in declaration order, as used in configs and parameter files.
pub const PARAM_NAMES: [&str; 6] = [
    "dendritic_radius",
    "activation_threshold",
    "propagation_prob",
    "active_duration",
    "refractory_mean",
    "spontaneous_rate",
];

impl<T: Real> Default for WaveParams<T> {
    fn default() -> Self {
        Self {
            dendritic_radius: T::lit(1.5),
            activation_threshold: T::lit(0.25),
            propagation_prob: T::lit(0.8),
            active_duration: T::lit(2.0),
            refractory_mean: T::lit(40.0),
            spontaneous_rate: T::lit(1e-4),
        }
    }
}

impl<T: Real> WaveParams<T> {
    pub fn validate(&self) -> Result<()> {
        for name in PARAM_NAMES {
            let v = self.get(name).unwrap();
            check_param_range(name, v)?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<T> {
        Some(match name {
            "dendritic_radius" => self.dendritic_radius,
            "activation_threshold" => self.activation_threshold,
            "propagation_prob" => self.propagation_prob,
            "active_duration" => self.active_duration,
            "refractory_mean" => self.refractory_mean,
            "spontaneous_rate" => self.spontaneous_rate,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: T) -> Result<()> {
        let field = match name {
            "dendritic_radius" => &mut self.dendritic_radius,
            "activation_threshold" => &mut self.activation_threshold,
            "propagation_prob" => &mut self.propagation_prob,
            "active_duration" => &mut self.active_duration,
            "refractory_mean" => &mut self.refractory_mean,
            "spontaneous_rate" => &mut self.spontaneous_rate,
            _ => return Err(Error::invalid(format!("unknown wave parameter `{name}`"))),
        };
        *field = value;
        Ok(())
    }
}

/// Checks one named parameter against its admissible range.
pub fn check_param_range<T: Real>(name: &str, v: T) -> Result<()> {
    let one = T::one();
    let ok = v.is_finite()
        && match name {
            "dendritic_radius" | "active_duration" | "refractory_mean" => v >= one,
            "activation_threshold" | "propagation_prob" => v > T::zero() && v <= one,
            "spontaneous_rate" => v >= T::zero() && v <= T::lit(0.01),
            _ => return Err(Error::invalid(format!("unknown wave parameter `{name}`"))),
        };
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name}={v} is out of range")))
    }
}

/// Model constants shared by every class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlobalDynamicsConfig<T> {
    pub refractory_jitter: T,
    pub calcium_decay: T,
    pub max_steps: u32,
    /// Consecutive frames without an ACTIVE cell that end an episode.
    pub quiet_grace: u32,
}

impl<T: Real> Default for GlobalDynamicsConfig<T> {
    fn default() -> Self {
        Self {
            refractory_jitter: T::lit(0.2),
            calcium_decay: T::lit(10.0),
            max_steps: 2000,
            quiet_grace: 200,
        }
    }
}

impl<T: Real> GlobalDynamicsConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let j = self.refractory_jitter;
        if !(j >= T::zero() && j < T::one()) {
            return Err(Error::invalid(format!("refractory_jitter={j} must lie in [0, 1)")));
        }
        if !(self.calcium_decay > T::zero()) || !self.calcium_decay.is_finite() {
            return Err(Error::invalid("calcium_decay must be positive"));
        }
        if self.max_steps == 0 || self.quiet_grace == 0 {
            return Err(Error::invalid("max_steps and quiet_grace must be positive"));
        }
        Ok(())
    }

    /// Per-step calcium multiplier `exp(-1/τ)`.
    pub fn decay_factor(&self) -> T {
        (-self.calcium_decay.recip()).exp()
    }
}

/// Full model state at one timestep.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationFrame<T> {
    pub step: u32,
    pub states: Vec<CellState>,
    pub active_timers: Vec<u32>,
    pub refractory_timers: Vec<u32>,
    pub calcium: Vec<T>,
    /// Cells that fired spontaneously on the transition into this frame, ascending.
    pub spontaneous: Vec<u32>,
}

impl<T: Real> SimulationFrame<T> {
    /// Quiescent frame at step 0.
    pub fn initial(cells: usize) -> Self {
        Self {
            step: 0,
            states: vec![CellState::Ready; cells],
            active_timers: vec![0; cells],
            refractory_timers: vec![0; cells],
            calcium: vec![T::zero(); cells],
            spontaneous: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.states.iter().filter(|&&s| s == CellState::Active).count()
    }

    pub fn is_active(&self, cell: usize) -> bool {
        self.states[cell] == CellState::Active
    }
}

/// Quiescent starting frame for `lattice`.
pub fn init_state<T: Real>(lattice: &RetinaLattice<T>) -> SimulationFrame<T> {
    SimulationFrame::initial(lattice.len())
}

/// Derived per-run constants.
#[derive(Clone, Copy, Debug)]
struct Kernel<T> {
    threshold: T,
    propagation: T,
    spontaneous: T,
    active_steps: u32,
    refractory_lo: T,
    refractory_span: T,
    decay: T,
}

impl<T: Real> Kernel<T> {
    fn new(params: &WaveParams<T>, globals: &GlobalDynamicsConfig<T>) -> Result<Self> {
        params.validate()?;
        globals.validate()?;
        let mu = params.refractory_mean;
        let j = globals.refractory_jitter;
        Ok(Self {
            threshold: params.activation_threshold,
            propagation: params.propagation_prob,
            spontaneous: params.spontaneous_rate,
            active_steps: round_half_up(params.active_duration, 1),
            refractory_lo: mu * (T::one() - j),
            refractory_span: mu * (j + j),
            decay: globals.decay_factor(),
        })
    }

    #[inline]
    fn refractory_steps(&self, u: T) -> u32 {
        round_half_up(self.refractory_lo + u * self.refractory_span, 1)
    }
}

/// Incremental stepper.
///
/// Keeps a running count of ACTIVE neighbors per cell, updated only for cells
/// that enter or leave the ACTIVE state. Because a cell's next state depends
/// only on its own previous state and that count, cells are updated in place.
pub struct Simulator<'a, T: Real> {
    neighbors: &'a NeighborTable,
    kernel: Kernel<T>,
    rng: CounterStream,
    frame: SimulationFrame<T>,
    active_neighbors: Vec<u32>,
    /// Smallest active-neighbor count whose drive reaches the threshold.
    needed: Vec<u32>,
    toggled: Vec<u32>,
    active: usize,
}

impl<'a, T: Real> Simulator<'a, T> {
    pub fn new(
        lattice: &RetinaLattice<T>,
        neighbors: &'a NeighborTable,
        params: &WaveParams<T>,
        globals: &GlobalDynamicsConfig<T>,
        seed: u64,
    ) -> Result<Self> {
        Self::from_frame(init_state(lattice), neighbors, params, globals, seed)
    }

    /// Resumes from an arbitrary frame.
    pub fn from_frame(
        frame: SimulationFrame<T>,
        neighbors: &'a NeighborTable,
        params: &WaveParams<T>,
        globals: &GlobalDynamicsConfig<T>,
        seed: u64,
    ) -> Result<Self> {
        let kernel = Kernel::new(params, globals)?;
        let n = frame.len();
        if neighbors.len() != n
            || frame.active_timers.len() != n
            || frame.refractory_timers.len() != n
            || frame.calcium.len() != n
        {
            return Err(Error::invalid("frame and neighbor table disagree on cell count"));
        }
        let mut active_neighbors = vec![0u32; n];
        let mut active = 0;
        for (i, &s) in frame.states.iter().enumerate() {
            if s == CellState::Active {
                active += 1;
                for &j in neighbors.of(i) {
                    active_neighbors[j as usize] += 1;
                }
            }
        }
        // Evaluates the drive exactly as `count / degree >= threshold`.
        let needed = (0..n)
            .map(|i| {
                let degree = neighbors.of(i).len();
                (1..=degree as u32)
                    .find(|&c| T::from_u32(c).unwrap() / T::from_count(degree) >= kernel.threshold)
                    .unwrap_or(u32::MAX)
            })
            .collect();
        Ok(Self {
            neighbors,
            kernel,
            rng: CounterStream::new(seed),
            frame,
            active_neighbors,
            needed,
            toggled: Vec::new(),
            active,
        })
    }

    pub fn frame(&self) -> &SimulationFrame<T> {
        &self.frame
    }

    pub fn into_frame(self) -> SimulationFrame<T> {
        self.frame
    }

    pub fn active_count(&self) -> usize {
        self.active
    }

    /// Advances one synchronous step.
    pub fn advance(&mut self) {
        let k = self.kernel;
        let rng = self.rng;
        let f = &mut self.frame;
        let cells = f.len();
        let step = f.step;
        f.step = step + 1;
        f.spontaneous.clear();
        self.toggled.clear();
        let spontaneous_on = k.spontaneous > T::zero();

        let states = &mut f.states[..];
        let active_timers = &mut f.active_timers[..cells];
        let refractory_timers = &mut f.refractory_timers[..cells];
        let calcium = &mut f.calcium[..cells];
        let counts = &self.active_neighbors[..cells];
        let needed = &self.needed[..cells];

        for i in 0..cells {
            match states[i] {
                CellState::Ready => {
                    let count = counts[i];
                    let fires = if count > 0 && count >= needed[i] {
                        let u: T = rng.unit_at(draw_index(step, cells, i, slot::PROPAGATE));
                        u < k.propagation
                    } else if spontaneous_on {
                        let u: T = rng.unit_at(draw_index(step, cells, i, slot::SPONTANEOUS));
                        let fired = u < k.spontaneous;
                        if fired {
                            f.spontaneous.push(i as u32);
                        }
                        fired
                    } else {
                        false
                    };
                    if fires {
                        states[i] = CellState::Active;
                        active_timers[i] = k.active_steps;
                        refractory_timers[i] = 0;
                        calcium[i] = T::one();
                        self.toggled.push(i as u32);
                    } else {
                        calcium[i] = calcium[i] * k.decay;
                    }
                }
                CellState::Active => {
                    let timer = active_timers[i];
                    if timer > 1 {
                        active_timers[i] = timer - 1;
                    } else {
                        let u: T = rng.unit_at(draw_index(step, cells, i, slot::REFRACTORY));
                        states[i] = CellState::Refractory;
                        active_timers[i] = 0;
                        refractory_timers[i] = k.refractory_steps(u);
                        self.toggled.push(i as u32);
                    }
                }
                CellState::Refractory => {
                    let timer = refractory_timers[i];
                    if timer > 1 {
                        refractory_timers[i] = timer - 1;
                    } else {
                        states[i] = CellState::Ready;
                        refractory_timers[i] = 0;
                    }
                    calcium[i] = calcium[i] * k.decay;
                }
            }
        }

        for &i in &self.toggled {
            let i = i as usize;
            if states[i] == CellState::Active {
                self.active += 1;
                for &j in self.neighbors.of(i) {
                    self.active_neighbors[j as usize] += 1;
                }
            } else {
                self.active -= 1;
                for &j in self.neighbors.of(i) {
                    self.active_neighbors[j as usize] -= 1;
                }
            }
        }
    }
}

/// One synchronous update of `frame`, seeded by the episode `seed`.
pub fn step<T: Real>(
    frame: &SimulationFrame<T>,
    neighbors: &NeighborTable,
    params: &WaveParams<T>,
    globals: &GlobalDynamicsConfig<T>,
    seed: u64,
) -> Result<SimulationFrame<T>> {
    let mut sim = Simulator::from_frame(frame.clone(), neighbors, params, globals, seed)?;
    sim.advance();
    Ok(sim.into_frame())
}

/// Runs one episode and hands every frame (starting at step 0) to `visit`.
///
/// The episode ends after `quiet_grace` consecutive frames without an ACTIVE
/// cell, at `max_steps`, or when `visit` breaks. Returns the number of frames
/// visited.
pub fn run_episode<T: Real, F>(
    lattice: &RetinaLattice<T>,
    neighbors: &NeighborTable,
    params: &WaveParams<T>,
    globals: &GlobalDynamicsConfig<T>,
    seed: u64,
    mut visit: F,
) -> Result<usize>
where
    F: FnMut(&SimulationFrame<T>) -> ControlFlow<()>,
{
    let mut sim = Simulator::new(lattice, neighbors, params, globals, seed)?;
    let mut quiet = 0u32;
    let mut visited = 0;
    loop {
        visited += 1;
        if visit(sim.frame()).is_break() {
            break;
        }
        quiet = if sim.active_count() == 0 { quiet + 1 } else { 0 };
        if quiet >= globals.quiet_grace || sim.frame().step >= globals.max_steps {
            break;
        }
        sim.advance();
    }
    Ok(visited)
}

/// Every frame of one episode.
pub fn simulate_episode<T: Real>(
    lattice: &RetinaLattice<T>,
    neighbors: &NeighborTable,
    params: &WaveParams<T>,
    globals: &GlobalDynamicsConfig<T>,
    seed: u64,
) -> Result<Vec<SimulationFrame<T>>> {
    let mut frames = Vec::new();
    run_episode(lattice, neighbors, params, globals, seed, |f| {
        frames.push(f.clone());
        ControlFlow::Continue(())
    })?;
    Ok(frames)
}
