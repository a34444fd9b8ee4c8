//! Single simulation runs with trace and metrics output.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::sync::Arc;
use std::time::Instant;

use crowdsim_core::agents::AgentClass;
use crowdsim_core::planner::{EgoDriver, EgoStep};
use crowdsim_core::sim::World;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Runtime(String),
}

impl RunError {
    /// Process exit code: 2 for configuration errors, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Serialize)]
struct TraceAgent {
    id: u32,
    class: &'static str,
    x: f64,
    y: f64,
    heading: f64,
    vx: f64,
    vy: f64,
    behavior: &'static str,
}

#[derive(Serialize)]
struct PlannerRecord {
    frame: u64,
    action: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    root_values: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    belief_entropy: Option<f64>,
}

#[derive(Serialize)]
struct TraceFrame {
    frame: u64,
    time: f64,
    agents: Vec<TraceAgent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    planner: Option<PlannerRecord>,
}

impl TraceFrame {
    fn line(&self) -> String {
        serde_json::to_string(self).expect("trace frame serializes")
    }
}

fn planner_record(frame: u64, s: &EgoStep) -> PlannerRecord {
    PlannerRecord { frame, action: s.action.name(), root_values: s.root_values, belief_entropy: s.belief_entropy }
}

/// One JSON line describing the world's current frame; `planner` is the
/// decision taken at the given frame, if one governs this frame first.
pub fn trace_line(world: &World, planner: Option<(u64, &EgoStep)>) -> String {
    let mut f = trace_frame(world);
    f.planner = planner.map(|(frame, s)| planner_record(frame, s));
    f.line()
}

fn trace_frame(world: &World) -> TraceFrame {
    let agents = world
        .agents()
        .iter()
        .map(|a| TraceAgent {
            id: a.id,
            class: a.profile.class.name(),
            x: a.state.position.x,
            y: a.state.position.y,
            heading: a.state.heading,
            vx: a.state.velocity.x,
            vy: a.state.velocity.y,
            behavior: a.behavior.tag(),
        })
        .collect();
    TraceFrame { frame: world.frame(), time: world.time(), agents, planner: None }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub frames: u64,
    pub mean_frame_ms: f64,
    pub ego_steps: Vec<EgoStep>,
}

/// Writes metrics rows for the interval ending now.
struct MetricsLog<W: Write> {
    out: W,
    interval: f64,
    next: f64,
    wall_ms: f64,
    frames: u32,
}

impl<W: Write> MetricsLog<W> {
    fn new(mut out: W, interval: f64) -> io::Result<Self> {
        writeln!(out, "time,class,avg_speed,congestion_factor,frame_ms")?;
        Ok(MetricsLog { out, interval, next: interval, wall_ms: 0.0, frames: 0 })
    }

    fn frame(&mut self, world: &World, ms: f64) -> io::Result<()> {
        self.wall_ms += ms;
        self.frames += 1;
        let t = world.time();
        if t + 1e-9 < self.next {
            return Ok(());
        }
        let m = world.metrics().window(t - self.interval, t);
        let frame_ms = self.wall_ms / self.frames as f64;
        for class in AgentClass::ALL {
            if let Some(v) = m.speed(class) {
                writeln!(self.out, "{t:.3},{},{v:.6},{:.6},{frame_ms:.4}", class.name(), m.congestion_factor)?;
            }
        }
        self.next += self.interval;
        self.wall_ms = 0.0;
        self.frames = 0;
        Ok(())
    }
}

/// Runs `config`, writing the trace (JSON lines) and metrics (CSV).
pub fn simulate<T: Write, M: Write>(config: &RunConfig, mut trace: T, metrics: M) -> Result<RunSummary, RunError> {
    config.validate()?;
    let map = Arc::new(config.scenario.build(config.seed)?);
    let sim = config.sim_config()?;
    let frames = config.frames();
    let mut world = World::new(map.clone(), sim, config.seed);
    let mut log = MetricsLog::new(metrics, config.metrics_interval)?;
    let mut total_ms = 0.0;
    let mut ego_steps = Vec::new();
    match config.driver_kind()? {
        None => {
            for _ in 0..frames {
                let t = Instant::now();
                world.step();
                let ms = t.elapsed().as_secs_f64() * 1e3;
                total_ms += ms;
                writeln!(trace, "{}", trace_line(&world, None))?;
                log.frame(&world, ms)?;
            }
        }
        Some(kind) => {
            let entry =
                *map.spawn_segments.first().ok_or_else(|| RunError::Runtime("map has no spawn segments".into()))?;
            let mut driver = EgoDriver::spawn(&mut world, kind, config.search_config()?, entry, config.seed);
            let mut io_err: Option<io::Error> = None;
            while world.frame() < frames {
                let decided_at = world.frame();
                let mut lines: Vec<(TraceFrame, f64)> = Vec::new();
                let mut last = Instant::now();
                let step = driver.step_with(&mut world, |w| {
                    let ms = last.elapsed().as_secs_f64() * 1e3;
                    if w.frame() <= frames {
                        lines.push((trace_frame(w), ms));
                        if let Err(e) = log.frame(w, ms) {
                            io_err.get_or_insert(e);
                        }
                    }
                    last = Instant::now();
                });
                if let Some(e) = io_err.take() {
                    return Err(e.into());
                }
                // the decision is logged on the first frame it governs
                for (k, (mut f, ms)) in lines.into_iter().enumerate() {
                    total_ms += ms;
                    if k == 0 {
                        f.planner = Some(planner_record(decided_at, &step));
                    }
                    writeln!(trace, "{}", f.line())?;
                }
                ego_steps.push(step);
            }
        }
    }
    trace.flush()?;
    Ok(RunSummary { frames, mean_frame_ms: total_ms / frames.max(1) as f64, ego_steps })
}

/// Runs `config` into `<out>/trace.jsonl` and `<out>/metrics.csv`.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    config.validate()?;
    fs::create_dir_all(&config.out)?;
    let trace = BufWriter::new(File::create(config.out.join("trace.jsonl"))?);
    let metrics = BufWriter::new(File::create(config.out.join("metrics.csv"))?);
    simulate(config, trace, metrics)
}
