//! Benchmark harnesses: crowd-model profile, scaling and driver comparison.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use crowdsim_core::agents::AgentClass;
use crowdsim_core::planner::{DriveStats, DriverKind, EgoDriver, SearchConfig};
use crowdsim_core::roadnet::RoadMap;
use crowdsim_core::sim::{Behavior, SimConfig, World};
use rayon::prelude::*;
use serde::Serialize;

/// Worker pool sized by `CROWDSIM_THREADS` (rayon's default otherwise).
pub fn pool() -> rayon::ThreadPool {
    let threads = std::env::var("CROWDSIM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
}

/// Writes `rows` as CSV with a header.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub model: &'static str,
    pub seed: u64,
    pub class: &'static str,
    pub avg_speed: f64,
    pub congestion_factor: f64,
}

/// Crowd-only run of `frames` frames; per-class mean speed and the
/// congestion factor over the whole run.
pub fn profile(map: &Arc<RoadMap>, sim: &SimConfig, model: Behavior, frames: u64, seed: u64) -> Vec<ProfileRow> {
    let mut w = World::new(map.clone(), SimConfig { model, ..sim.clone() }, seed);
    for _ in 0..frames {
        w.step();
    }
    let m = w.metrics().trailing(f64::INFINITY);
    AgentClass::ALL
        .iter()
        .filter_map(|&c| {
            m.speed(c).map(|v| ProfileRow {
                model: model.tag(),
                seed,
                class: c.name(),
                avg_speed: v,
                congestion_factor: m.congestion_factor,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub count: usize,
    pub frame_ms: f64,
    pub hz: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingSetup {
    pub map: Arc<RoadMap>,
    pub sim: SimConfig,
    /// Frames run before timing starts, so the crowd reaches its size.
    pub warmup_frames: u64,
    pub frames: u64,
    /// Each count is timed this many times; the median is reported.
    pub repeats: usize,
    pub seed: u64,
}

/// Mean wall time per frame of one timed run.
pub fn time_frames(setup: &ScalingSetup, count: usize) -> f64 {
    let sim = SimConfig { target_count: count, model: Behavior::Gamma, ..setup.sim.clone() };
    let mut w = World::new(setup.map.clone(), sim, setup.seed);
    for _ in 0..setup.warmup_frames {
        w.step();
    }
    let t = Instant::now();
    for _ in 0..setup.frames {
        w.step();
    }
    t.elapsed().as_secs_f64() * 1e3 / setup.frames.max(1) as f64
}

/// Runs are sequential so timings do not compete for cores.
pub fn bench_scaling(setup: &ScalingSetup, counts: &[usize]) -> Vec<ScalingRow> {
    counts
        .iter()
        .map(|&count| {
            let mut times: Vec<f64> = (0..setup.repeats.max(1)).map(|_| time_frames(setup, count)).collect();
            times.sort_by(f64::total_cmp);
            let ms = times[times.len() / 2];
            ScalingRow { count, frame_ms: ms, hz: 1e3 / ms }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct DriveSetup {
    pub map: Arc<RoadMap>,
    /// Crowd settings; `target_count` is the number of exo-agents.
    pub sim: SimConfig,
    pub search: SearchConfig,
    /// Crowd-only frames before the ego enters.
    pub warmup_frames: u64,
    /// Simulated seconds with the ego.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverRow {
    pub seed: u64,
    pub driver: &'static str,
    pub steps: u64,
    pub collision_per_step: f64,
    pub avg_speed: f64,
    pub dec_per_step: f64,
    pub wall_s: f64,
}

/// One ego episode on the crowd of `seed`.
pub fn drive(setup: &DriveSetup, kind: DriverKind, seed: u64) -> DriverRow {
    let t = Instant::now();
    let mut w = World::new(setup.map.clone(), setup.sim.clone(), seed);
    for _ in 0..setup.warmup_frames {
        w.step();
    }
    let entry = setup.map.spawn_segments[0];
    let mut d = EgoDriver::spawn(&mut w, kind, setup.search, entry, seed);
    let steps = (setup.duration / setup.search.planning_dt).round() as u64;
    let mut stats = DriveStats::default();
    for _ in 0..steps {
        stats.record(&d.step(&mut w));
    }
    DriverRow {
        seed,
        driver: kind.name(),
        steps: stats.steps,
        collision_per_step: stats.collision_rate(),
        avg_speed: stats.avg_speed(),
        dec_per_step: stats.dec_rate(),
        wall_s: t.elapsed().as_secs_f64(),
    }
}

/// Every driver on every seed, fanned out over the worker pool. Rows are
/// ordered by seed, then driver.
pub fn compare_drivers(setup: &DriveSetup, seeds: &[u64], drivers: &[DriverKind]) -> Vec<DriverRow> {
    let jobs: Vec<(u64, DriverKind)> = seeds.iter().flat_map(|&s| drivers.iter().map(move |&k| (s, k))).collect();
    pool().install(|| jobs.par_iter().map(|&(s, k)| drive(setup, k, s)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverSummary {
    pub driver: &'static str,
    pub seeds: usize,
    pub collision_per_step: f64,
    pub avg_speed: f64,
    pub dec_per_step: f64,
}

/// Step-weighted totals per driver.
pub fn summarize(rows: &[DriverRow]) -> Vec<DriverSummary> {
    let mut names: Vec<&'static str> = Vec::new();
    for r in rows {
        if !names.contains(&r.driver) {
            names.push(r.driver);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let mine: Vec<&DriverRow> = rows.iter().filter(|r| r.driver == name).collect();
            let steps: f64 = mine.iter().map(|r| r.steps as f64).sum::<f64>().max(1.0);
            let weighted = |f: fn(&DriverRow) -> f64| mine.iter().map(|r| f(r) * r.steps as f64).sum::<f64>() / steps;
            DriverSummary {
                driver: name,
                seeds: mine.len(),
                collision_per_step: weighted(|r| r.collision_per_step),
                avg_speed: weighted(|r| r.avg_speed),
                dec_per_step: weighted(|r| r.dec_per_step),
            }
        })
        .collect()
}

/// Number of seeds on which `better(a, b)` holds for the rows of drivers
/// `a` and `b`.
pub fn seeds_where(
    rows: &[DriverRow],
    a: DriverKind,
    b: DriverKind,
    better: impl Fn(&DriverRow, &DriverRow) -> bool,
) -> usize {
    rows.iter()
        .filter(|r| r.driver == a.name())
        .filter(|ra| {
            rows.iter().find(|rb| rb.driver == b.name() && rb.seed == ra.seed).is_some_and(|rb| better(ra, rb))
        })
        .count()
}
