#![allow(dead_code)]

pub mod reference;

use rewave::dynamics::{CellState, SimulationFrame};
use rewave::rng::SplitMix64;
use rewave::{Globals, Lattice, Params};

/// Exhaustive nearest cell, ties to the lowest index.
pub fn linear_nearest(lattice: &Lattice, p: [f64; 2]) -> Option<usize> {
    if p[0].hypot(p[1]) > lattice.radius() {
        return None;
    }
    let mut best = (f64::INFINITY, usize::MAX);
    for i in 0..lattice.len() {
        let c = lattice.position(i);
        let d = (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2);
        if d < best.0 {
            best = (d, i);
        }
    }
    Some(best.1)
}

/// Parameter sets that keep small lattices busy.
pub fn busy_params() -> Vec<Params> {
    let base = Params { spontaneous_rate: 0.01, ..Params::default() };
    vec![
        Params { refractory_mean: 6.0, ..base },
        Params { dendritic_radius: 1.0, activation_threshold: 0.15, propagation_prob: 1.0, refractory_mean: 4.0, ..base },
        Params { dendritic_radius: 2.0, activation_threshold: 0.3, active_duration: 3.0, refractory_mean: 8.0, ..base },
        Params { propagation_prob: 0.5, active_duration: 1.0, refractory_mean: 2.5, spontaneous_rate: 0.005, ..base },
        Params { dendritic_radius: 1.8, activation_threshold: 0.1, active_duration: 2.4, refractory_mean: 12.5, ..base },
    ]
}

/// Globals that never end an episode before `steps` frames.
pub fn fixed_length(steps: u32) -> Globals {
    Globals { max_steps: steps - 1, quiet_grace: u32::MAX, ..Globals::default() }
}

/// A random frame satisfying the timer and calcium invariants.
pub fn random_frame(cells: usize, rng: &mut SplitMix64) -> SimulationFrame<f64> {
    let mut f = SimulationFrame::initial(cells);
    f.step = rng.below(1000) as u32;
    for i in 0..cells {
        match rng.below(3) {
            0 => f.calcium[i] = rng.next_unit(),
            1 => {
                f.states[i] = CellState::Active;
                f.active_timers[i] = 1 + rng.below(4) as u32;
                f.calcium[i] = 1.0;
            }
            _ => {
                f.states[i] = CellState::Refractory;
                f.refractory_timers[i] = 1 + rng.below(20) as u32;
                f.calcium[i] = rng.next_unit();
            }
        }
    }
    f
}
