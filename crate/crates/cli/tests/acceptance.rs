//! End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use rewave::datasetgen::{assign_splits, enumerate_classes, episode_seed, GenerationContext, Split};
use rewave::dynamics::{step, CellState, SimulationFrame};
use rewave::imageio::{decode, decode_binary, DecodedImage};
use rewave::lattice::NeighborTable;
use rewave::projection::{RawMap, BLUE_BOUNDARY, GREEN_ACTIVE, GREEN_READY, GREEN_REFRACTORY};
use rewave::rng::SplitMix64;
use rewave::{Globals, Lattice, Params};
use rewave_cli::config::GeneratorConfig;
use rewave_cli::simulate::{episode_for, SimulateRequest};
use rewave_cli::verify::read_manifest;
use support::reference::{self, RefParams};
use support::{busy_params, fixed_length, random_frame};

type Outcome = Result<String, String>;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn rewave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rewave")).args(args).env_remove("REWAVE_THREADS").output().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn generate_desk(out: &Path, threads: &str) -> Result<Duration, String> {
    let desk = config_path("desk.toml");
    let start = Instant::now();
    let o = rewave(&["generate", "--config", desk.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads]);
    let took = start.elapsed();
    ensure(o.status.success(), || format!("generate --threads {threads} exited {:?}: {}", o.status.code(), text(&o)))?;
    Ok(took)
}

fn class_counts() -> Outcome {
    let start = Instant::now();
    let mut counts = Vec::new();
    for name in ["rwave-1024.toml", "rwave-4096.toml"] {
        let cfg = GeneratorConfig::load(Some(&config_path(name)), &[]).map_err(|e| e.to_string())?;
        let ds = cfg.dataset_config().map_err(|e| e.to_string())?;
        counts.push(enumerate_classes(&ds.grid, ds.master_seed).map_err(|e| e.to_string())?.len());
    }
    let took = start.elapsed();
    ensure(counts == [1024, 4096], || format!("class counts {counts:?}"))?;
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!("1024 and 4096 classes in {took:?}"))
}

fn balanced_splits() -> Outcome {
    for (name, quota, want) in [("rwave-1024.toml", 1000, [800, 100, 100]), ("rwave-4096.toml", 2000, [1600, 200, 200])] {
        let cfg = GeneratorConfig::load(Some(&config_path(name)), &[]).map_err(|e| e.to_string())?;
        let ds = cfg.dataset_config().map_err(|e| e.to_string())?;
        ensure(ds.images_per_class == quota, || format!("{name}: quota {}", ds.images_per_class))?;
        let classes = enumerate_classes(&ds.grid, ds.master_seed).map_err(|e| e.to_string())?;
        for spec in &classes {
            let labels = assign_splits(quota, &ds.ratios, ds.master_seed, spec.class_id).map_err(|e| e.to_string())?;
            let mut tally = [0; 3];
            for l in labels {
                tally[match l {
                    Split::Train => 0,
                    Split::Val => 1,
                    Split::Test => 2,
                }] += 1;
            }
            ensure(tally == want, || format!("{name} class {}: {tally:?}", spec.class_id))?;
        }
    }
    Ok("800/100/100 and 1600/200/200 in every class".into())
}

fn desk_generation(dir: &Path, took: Duration) -> Outcome {
    let classes = std::fs::read_dir(dir.join("params")).map_err(|e| e.to_string())?.count();
    let rows = read_manifest(dir).map_err(|e| e.to_string())?.rows.len();
    ensure(classes == 16 && rows == 16 * 40, || format!("{classes} classes, {rows} rows"))?;
    ensure(took < Duration::from_secs(300), || format!("generation took {took:?}"))?;
    let v = rewave(&["verify", dir.to_str().unwrap()]);
    ensure(v.status.code() == Some(0), || format!("verify exited {:?}: {}", v.status.code(), text(&v)))?;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    Ok(format!("{rows} images in {took:.1?} on {cores} core(s), verify OK"))
}

fn determinism(reference_dir: &Path, scratch: &Path) -> Outcome {
    let expected = files(reference_dir);
    for threads in ["1", "8"] {
        let out = scratch.join(format!("threads{threads}"));
        generate_desk(&out, threads)?;
        let got = files(&out);
        ensure(got.keys().eq(expected.keys()), || format!("--threads {threads}: file sets differ"))?;
        if let Some(name) = got.iter().find(|(k, v)| expected[*k] != **v).map(|(k, _)| k) {
            return Err(format!("--threads {threads}: {name} differs"));
        }
    }
    Ok(format!("{} files identical for 1, 4 and 8 threads", expected.len()))
}

fn oracle_equivalence() -> Outcome {
    let steps = 200;
    let globals = fixed_length(steps);
    let mut episodes = 0;
    for radius in [2.0, 3.0, 4.0] {
        let lattice = Lattice::build(radius).map_err(|e| e.to_string())?;
        ensure(lattice.len() <= 61, || format!("radius {radius}: {} cells", lattice.len()))?;
        for params in busy_params() {
            let neighbors = lattice.neighbors(params.dendritic_radius).map_err(|e| e.to_string())?;
            let oracle = RefParams::from_model(&params, &globals);
            for k in 0..10u64 {
                let seed = 0xACCE_5500 + k;
                let want = reference::run(&lattice, &oracle, seed, steps);
                let got = rewave::dynamics::simulate_episode(&lattice, &neighbors, &params, &globals, seed)
                    .map_err(|e| e.to_string())?;
                ensure(got == want, || format!("radius {radius}, seed {seed}, {params:?}"))?;
                episodes += 1;
            }
        }
    }
    Ok(format!("{episodes} episodes of {steps} frames bit-identical"))
}

fn format_contracts(desk_dir: &Path, scratch: &Path) -> Outcome {
    let mut cropped = 0;
    for (name, bytes) in files(desk_dir).iter().filter(|(k, _)| k.ends_with(".png")) {
        decode_binary(bytes).map_err(|e| format!("{name}: {e}"))?;
        cropped += 1;
    }

    let desk = config_path("desk.toml");
    let overrides =
        ["retina_radius=12", "params.spontaneous_rate=0.01", "params.refractory_mean=8.0", "globals.max_steps=150"];
    let out = scratch.join("raw");
    let mut args = vec!["simulate", "--config", desk.to_str().unwrap(), "--out", out.to_str().unwrap()];
    for o in &overrides {
        args.extend(["--set", o]);
    }
    let o = rewave(&args);
    ensure(o.status.success(), || format!("simulate failed: {}", text(&o)))?;

    let owned: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    let cfg = GeneratorConfig::load(Some(&desk), &owned).map_err(|e| e.to_string())?;
    let (params, seed) = episode_for(&cfg, &SimulateRequest::default()).map_err(|e| e.to_string())?;
    let globals = cfg.globals.to_globals();
    let lattice = Lattice::build(cfg.retina_radius).map_err(|e| e.to_string())?;
    let raw: Vec<_> = files(&out).into_values().collect();
    let history = reference::run(&lattice, &RefParams::from_model(&params, &globals), seed, raw.len() as u32);

    // Frame index of each cell's most recent ACTIVE state, per frame.
    let mut last_active = vec![None; lattice.len()];
    let map = RawMap::new(&lattice);
    let mut spots = Vec::new();
    for (t, bytes) in raw.iter().enumerate() {
        let img = match decode(bytes).map_err(|e| e.to_string())? {
            DecodedImage::Rgb(img) => img,
            DecodedImage::Gray(_) => return Err(format!("raw frame {t} is grayscale")),
        };
        let frame = &history[t];
        for (i, s) in frame.states.iter().enumerate() {
            if *s == CellState::Active {
                last_active[i] = Some(t);
            }
        }
        for row in 0..img.side() {
            for col in 0..img.side() {
                let [r, g, b] = img.get(col, row);
                ensure([GREEN_READY, GREEN_REFRACTORY, GREEN_ACTIVE].contains(&g), || format!("frame {t}: green {g}"))?;
                ensure(b == 0 || b == BLUE_BOUNDARY, || format!("frame {t}: blue {b}"))?;
                if let Some(cell) = map.cell_at(col, row) {
                    if let Some(at) = last_active[cell] {
                        spots.push((t, col, row, cell, at, r));
                    }
                }
            }
        }
    }
    ensure(spots.len() >= 100, || format!("only {} calcium-bearing pixels", spots.len()))?;
    let mut rng = SplitMix64::new(6);
    rng.shuffle(&mut spots);
    let tau = globals.calcium_decay;
    for &(t, col, row, _, at, red) in &spots[..100] {
        // Calcium holds at 1 while ACTIVE and on the step leaving ACTIVE.
        let k = t.saturating_sub(at + 1) as f64;
        let want = (255.0 * (-k / tau).exp() + 0.5).floor() as u8;
        ensure(red == want, || format!("frame {t} pixel ({col}, {row}): red {red}, expected {want} at k = {k}"))?;
    }
    Ok(format!("{cropped} cropped PNGs binary, {} raw frames in range, 100 red spot checks exact", raw.len()))
}

fn selection_soundness(dir: &Path) -> Outcome {
    let cfg = GeneratorConfig::load(Some(&dir.join("config.toml")), &[]).map_err(|e| e.to_string())?;
    let ds = cfg.dataset_config().map_err(|e| e.to_string())?;
    let classes = enumerate_classes(&ds.grid, ds.master_seed).map_err(|e| e.to_string())?;
    let lattice = Lattice::build(ds.retina_radius).map_err(|e| e.to_string())?;
    let ctx = GenerationContext::new(&lattice, ds.globals, ds.image_side, ds.png).map_err(|e| e.to_string())?;
    let rows = read_manifest(dir).map_err(|e| e.to_string())?.rows;

    let mut wanted: BTreeMap<(usize, u32), BTreeSet<u32>> = BTreeMap::new();
    for r in &rows {
        ensure(r.spacing_used > 0 && r.frame_step % r.spacing_used == 0, || {
            format!("{}: step {} vs spacing {}", r.relative_path, r.frame_step, r.spacing_used)
        })?;
        wanted.entry((r.class_id, r.episode_id)).or_default().insert(r.frame_step);
    }
    let mut counts = BTreeMap::new();
    for ((class, episode), steps) in &wanted {
        let spec = &classes[*class];
        let neighbors = lattice.neighbors(spec.params.dendritic_radius).map_err(|e| e.to_string())?;
        let seed = episode_seed(spec.class_seed, *episode);
        let missed = ctx
            .visit_steps(&neighbors, &spec.params, seed, steps, |f| {
                counts.insert((*class, *episode, f.step), ctx.identity_map().active_pixels(f) as u32);
                Ok(())
            })
            .map_err(|e| e.to_string())?;
        ensure(missed.is_empty(), || format!("class {class} episode {episode} never reaches {missed:?}"))?;
    }
    for r in &rows {
        let n = counts[&(r.class_id, r.episode_id, r.frame_step)];
        ensure(n >= r.threshold_used, || format!("{}: {n} active pixels < {}", r.relative_path, r.threshold_used))?;
    }
    Ok(format!("{} rows on spacing, {} frames re-projected above threshold", rows.len(), counts.len()))
}

fn allowed(from: CellState, to: CellState) -> bool {
    use CellState::*;
    matches!((from, to), (Ready, Ready | Active) | (Active, Active | Refractory) | (Refractory, Refractory | Ready))
}

fn check_transition(
    old: &SimulationFrame<f64>,
    new: &SimulationFrame<f64>,
    neighbors: &NeighborTable,
    params: &Params,
) -> Result<(), String> {
    for i in 0..old.len() {
        let (s0, s1) = (old.states[i], new.states[i]);
        ensure(allowed(s0, s1), || format!("cell {i} went {s0:?} -> {s1:?}"))?;
        ensure((0.0..=1.0).contains(&new.calcium[i]), || format!("cell {i} calcium {}", new.calcium[i]))?;
        ensure(s1 != CellState::Active || new.calcium[i] == 1.0, || format!("active cell {i} calcium below 1"))?;
        if s0 == CellState::Ready && s1 == CellState::Active {
            let nbrs = neighbors.of(i);
            let active = nbrs.iter().filter(|&&j| old.states[j as usize] == CellState::Active).count();
            let driven = !nbrs.is_empty() && active as f64 / nbrs.len() as f64 >= params.activation_threshold;
            let logged = new.spontaneous.contains(&(i as u32));
            ensure(driven || logged, || format!("cell {i} activated without drive or log"))?;
        }
    }
    Ok(())
}

fn state_machine() -> Outcome {
    let mut rng = SplitMix64::new(8);
    let globals = Globals::default();
    let lattices: Vec<_> = [2.0, 3.5, 5.0, 6.5].iter().map(|&r| Lattice::build(r).unwrap()).collect();
    let mut transitions = 0u64;
    let mut activations = 0usize;
    while transitions < 100_000 {
        let lattice = &lattices[rng.below(lattices.len())];
        let params = Params {
            dendritic_radius: 1.0 + 1.8 * rng.next_unit::<f64>(),
            activation_threshold: 0.05 + 0.95 * rng.next_unit::<f64>(),
            propagation_prob: 0.05 + 0.95 * rng.next_unit::<f64>(),
            active_duration: 1.0 + 3.0 * rng.next_unit::<f64>(),
            refractory_mean: 1.0 + 29.0 * rng.next_unit::<f64>(),
            spontaneous_rate: 0.01 * rng.next_unit::<f64>(),
        };
        let neighbors = lattice.neighbors(params.dendritic_radius).map_err(|e| e.to_string())?;
        let seed = rng.next_u64();
        let mut frame = random_frame(lattice.len(), &mut rng);
        for _ in 0..100 {
            let next = step(&frame, &neighbors, &params, &globals, seed).map_err(|e| e.to_string())?;
            check_transition(&frame, &next, &neighbors, &params).map_err(|e| format!("transition {transitions}: {e}"))?;
            activations += (0..frame.len())
                .filter(|&i| frame.states[i] == CellState::Ready && next.states[i] == CellState::Active)
                .count();
            frame = next;
            transitions += 1;
        }
    }
    Ok(format!("{transitions} transitions, {activations} activations accounted for"))
}

fn record(n: u32, outcome: std::thread::Result<Outcome>, failed: &mut bool) {
    let outcome = outcome.unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    match outcome {
        Ok(detail) => println!("criterion {n}: PASS ({detail})"),
        Err(detail) => {
            *failed = true;
            println!("criterion {n}: FAIL ({detail})");
        }
    }
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().unwrap();
    let desk = tmp.path().join("desk");
    let desk_run = generate_desk(&desk, "4");
    let needs_desk = |f: &dyn Fn() -> Outcome| -> Outcome {
        match &desk_run {
            Ok(_) => f(),
            Err(e) => Err(format!("desk dataset unavailable: {e}")),
        }
    };

    let mut failed = false;
    let run = |f: &dyn Fn() -> Outcome| catch_unwind(AssertUnwindSafe(f));
    record(1, run(&class_counts), &mut failed);
    record(2, run(&balanced_splits), &mut failed);
    record(3, run(&|| needs_desk(&|| desk_generation(&desk, *desk_run.as_ref().unwrap()))), &mut failed);
    record(4, run(&|| needs_desk(&|| determinism(&desk, tmp.path()))), &mut failed);
    record(5, run(&oracle_equivalence), &mut failed);
    record(6, run(&|| needs_desk(&|| format_contracts(&desk, tmp.path()))), &mut failed);
    record(7, run(&|| needs_desk(&|| selection_soundness(&desk))), &mut failed);
    record(8, run(&state_machine), &mut failed);
    println!("criterion 9: excluded (downstream training results are not reproducible at desk scale)");

    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
