//! Naive reference stepper: a literal transcription of the update rules with
//! brute-force neighbor lists and its own copy of the random stream. No
//! incremental counts, no precomputed thresholds, no in-place updates.

use rewave::dynamics::{CellState, SimulationFrame};
use rewave::Lattice;

pub struct RefParams {
    pub rho: f64,
    pub theta: f64,
    pub p_prop: f64,
    pub d_a: f64,
    pub mu_r: f64,
    pub p_spont: f64,
    pub jitter: f64,
    pub tau: f64,
}

impl RefParams {
    pub fn from_model(p: &rewave::Params, g: &rewave::Globals) -> Self {
        Self {
            rho: p.dendritic_radius,
            theta: p.activation_threshold,
            p_prop: p.propagation_prob,
            d_a: p.active_duration,
            mu_r: p.refractory_mean,
            p_spont: p.spontaneous_rate,
            jitter: g.refractory_jitter,
            tau: g.calcium_decay,
        }
    }
}

/// All other cells within `rho`, by pairwise Euclidean distance.
pub fn brute_neighbors(lattice: &Lattice, rho: f64) -> Vec<Vec<usize>> {
    let pos: Vec<[f64; 2]> = (0..lattice.len()).map(|i| lattice.position(i)).collect();
    (0..pos.len())
        .map(|i| {
            (0..pos.len())
                .filter(|&j| j != i && ((pos[i][0] - pos[j][0]).hypot(pos[i][1] - pos[j][1])) <= rho + 1e-9)
                .collect()
        })
        .collect()
}

fn splitmix(z: u64) -> u64 {
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Uniform draw in [0, 1) for (step, cell, slot): position
/// `(step * cells + cell) * 3 + slot` of the splitmix64 sequence seeded with `seed`.
pub fn draw(seed: u64, step: u32, cells: usize, cell: usize, slot: u64) -> f64 {
    let n = (step as u64 * cells as u64 + cell as u64) * 3 + slot;
    let state = seed.wrapping_add((n + 1).wrapping_mul(0x9E3779B97F4A7C15));
    (splitmix(state) >> 11) as f64 / 9007199254740992.0
}

fn round_half_up(x: f64) -> u32 {
    ((x + 0.5).floor() as u32).max(1)
}

pub fn step(old: &SimulationFrame<f64>, nbrs: &[Vec<usize>], p: &RefParams, seed: u64) -> SimulationFrame<f64> {
    let n = old.states.len();
    let t = old.step;
    let mut new = old.clone();
    new.step = t + 1;
    new.spontaneous.clear();
    let decay = (-1.0 / p.tau).exp();
    for i in 0..n {
        match old.states[i] {
            CellState::Ready => {
                let active = nbrs[i].iter().filter(|&&j| old.states[j] == CellState::Active).count();
                let drive = if nbrs[i].is_empty() { 0.0 } else { active as f64 / nbrs[i].len() as f64 };
                let fire = if active > 0 && drive >= p.theta {
                    draw(seed, t, n, i, 0) < p.p_prop
                } else if p.p_spont > 0.0 && draw(seed, t, n, i, 1) < p.p_spont {
                    new.spontaneous.push(i as u32);
                    true
                } else {
                    false
                };
                if fire {
                    new.states[i] = CellState::Active;
                    new.active_timers[i] = round_half_up(p.d_a);
                    new.calcium[i] = 1.0;
                } else {
                    new.calcium[i] = old.calcium[i] * decay;
                }
            }
            CellState::Active => {
                if old.active_timers[i] > 1 {
                    new.active_timers[i] = old.active_timers[i] - 1;
                } else {
                    let u = draw(seed, t, n, i, 2);
                    let lo = p.mu_r * (1.0 - p.jitter);
                    new.states[i] = CellState::Refractory;
                    new.active_timers[i] = 0;
                    new.refractory_timers[i] = round_half_up(lo + u * (2.0 * p.mu_r * p.jitter));
                }
            }
            CellState::Refractory => {
                if old.refractory_timers[i] > 1 {
                    new.refractory_timers[i] = old.refractory_timers[i] - 1;
                } else {
                    new.states[i] = CellState::Ready;
                    new.refractory_timers[i] = 0;
                }
                new.calcium[i] = old.calcium[i] * decay;
            }
        }
    }
    new
}

/// `steps` frames after the quiescent start, including step 0.
pub fn run(lattice: &Lattice, p: &RefParams, seed: u64, steps: u32) -> Vec<SimulationFrame<f64>> {
    let nbrs = brute_neighbors(lattice, p.rho);
    let mut frames = vec![SimulationFrame::initial(lattice.len())];
    for _ in 1..steps {
        let next = step(frames.last().unwrap(), &nbrs, p, seed);
        frames.push(next);
    }
    frames
}
