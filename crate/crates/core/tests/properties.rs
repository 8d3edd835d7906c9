mod support;

use proptest::prelude::*;
use rewave::dynamics::{step, CellState, SimulationFrame};
use rewave::lattice::NeighborTable;
use rewave::projection::{cropped_sample_point, AugmentationSpec, SamplingMap};
use rewave::rng::SplitMix64;
use rewave::{Globals, Lattice, Params};
use support::{linear_nearest, random_frame};

fn params_strategy() -> impl Strategy<Value = Params> {
    (1.0..2.8f64, 0.05..1.0f64, 0.05..1.0f64, 1.0..4.0f64, 1.0..30.0f64, 0.0..0.01f64).prop_map(
        |(rho, theta, p, d, mu, s)| Params {
            dendritic_radius: rho,
            activation_threshold: theta,
            propagation_prob: p,
            active_duration: d,
            refractory_mean: mu,
            spontaneous_rate: s,
        },
    )
}

fn allowed(from: CellState, to: CellState) -> bool {
    use CellState::*;
    matches!((from, to), (Ready, Ready | Active) | (Active, Active | Refractory) | (Refractory, Refractory | Ready))
}

/// Checks every cell of one transition.
fn check_transition(
    old: &SimulationFrame<f64>,
    new: &SimulationFrame<f64>,
    neighbors: &NeighborTable,
    params: &Params,
) -> Result<(), TestCaseError> {
    prop_assert_eq!(new.step, old.step + 1);
    prop_assert!(new.spontaneous.windows(2).all(|w| w[0] < w[1]));
    for i in 0..old.len() {
        let (s0, s1) = (old.states[i], new.states[i]);
        prop_assert!(allowed(s0, s1), "cell {} went {:?} -> {:?}", i, s0, s1);
        prop_assert_eq!(new.active_timers[i] > 0, s1 == CellState::Active);
        prop_assert_eq!(new.refractory_timers[i] > 0, s1 == CellState::Refractory);
        prop_assert!((0.0..=1.0).contains(&new.calcium[i]));
        if s1 == CellState::Active {
            prop_assert_eq!(new.calcium[i], 1.0);
        }
        let nbrs = neighbors.of(i);
        let active = nbrs.iter().filter(|&&j| old.states[j as usize] == CellState::Active).count();
        let driven = active as f64 / nbrs.len() as f64 >= params.activation_threshold;
        let logged = new.spontaneous.binary_search(&(i as u32)).is_ok();
        if s0 == CellState::Ready && s1 == CellState::Active {
            prop_assert!(driven || logged, "cell {} activated without drive or log", i);
        }
        if logged {
            prop_assert!(s0 == CellState::Ready && s1 == CellState::Active && !driven);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_transitions_respect_the_state_machine(
        radius in 2.0..7.0f64,
        params in params_strategy(),
        seed in any::<u64>(),
    ) {
        let lattice = Lattice::build(radius).unwrap();
        let neighbors = lattice.neighbors(params.dendritic_radius).unwrap();
        let globals = Globals::default();
        let mut rng = SplitMix64::new(seed);
        let mut frame = random_frame(lattice.len(), &mut rng);
        for k in 0..20 {
            let next = step(&frame, &neighbors, &params, &globals, seed ^ k).unwrap();
            check_transition(&frame, &next, &neighbors, &params)?;
            frame = next;
        }
    }

    #[test]
    fn nearest_cell_matches_linear_scan(
        radius in 1.0..25.0f64,
        r in 0.0..1.0f64,
        angle in 0.0..std::f64::consts::TAU,
    ) {
        let lattice = Lattice::build(radius).unwrap();
        let p = [radius * r * angle.cos(), radius * r * angle.sin()];
        prop_assert_eq!(lattice.nearest_cell(p), linear_nearest(&lattice, p));
    }

    #[test]
    fn sample_points_stay_inside_the_disc(
        radius in 1.0..200.0f64,
        side in 8u32..300,
        mirror in any::<bool>(),
        rotation in 0.0..360.0f64,
        col_frac in 0.0..1.0f64,
        row_frac in 0.0..1.0f64,
    ) {
        let aug = AugmentationSpec::new(mirror, rotation).unwrap();
        let col = ((side as f64 * col_frac) as u32).min(side - 1);
        let row = ((side as f64 * row_frac) as u32).min(side - 1);
        let p = cropped_sample_point(radius, side, &aug, col, row);
        prop_assert!(p[0].hypot(p[1]) <= radius);
    }
}

#[test]
fn hundred_points_on_radius_five() {
    let lattice = Lattice::build(5.0).unwrap();
    let mut rng = SplitMix64::new(100);
    for _ in 0..100 {
        let r = 5.0 * rng.next_unit::<f64>().sqrt();
        let a = rng.next_unit::<f64>() * std::f64::consts::TAU;
        let p = [r * a.cos(), r * a.sin()];
        assert_eq!(lattice.nearest_cell(p), linear_nearest(&lattice, p));
    }
}

#[test]
fn corner_pixels_of_every_augmentation_hit_a_cell() {
    for radius in [1.0, 4.5, 80.0] {
        let lattice = Lattice::build(radius).unwrap();
        for k in 0..16 {
            let aug = AugmentationSpec::new(k % 2 == 1, k as f64 * 22.5).unwrap();
            assert!(SamplingMap::new(&lattice, &aug, 8).is_ok());
        }
    }
}
