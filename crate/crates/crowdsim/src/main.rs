use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use crowdsim::bench::{self, DriveSetup, ScalingSetup};
use crowdsim::config::{ConfigError, GeneratedScenario, Overrides, RunConfig, ScenarioSource};
use crowdsim::experiments::{self, ConvergenceSetup};
use crowdsim::netfile;
use crowdsim::runner::{self, RunError};
use crowdsim_core::planner::DriverKind;
use crowdsim_core::roadnet::generate_scenario;
use crowdsim_core::sim::Behavior;

#[derive(Parser)]
#[command(name = "crowdsim", version, about = "Headless heterogeneous crowd simulator and crowd-driving planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON run configuration; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated seconds.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    agents: Option<usize>,
    /// Scenario kind (highway, roundabout, intersection) or network file.
    #[arg(long)]
    scenario: Option<String>,
    /// Output directory (run) or CSV file (harnesses; stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation, writing trace.jsonl and metrics.csv.
    Run {
        #[command(flatten)]
        common: Common,
        /// none, gamma, rollout or pomdp.
        #[arg(long)]
        driver: Option<String>,
    },
    /// Mean frame time of gamma crowds of increasing size.
    BenchScaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "150,200,250,300,350,400")]
        counts: Vec<usize>,
        /// Crowd-only seconds before timing starts.
        #[arg(long, default_value_t = 30.0)]
        warmup: f64,
        /// Timed repetitions per count (median reported).
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Ego drivers on identical seeded crowds.
    CompareDrivers {
        #[command(flatten)]
        common: Common,
        /// Number of seeds, starting at --seed.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, value_delimiter = ',', default_value = "rollout,gamma,pomdp")]
        drivers: Vec<String>,
        /// Crowd-only seconds before the ego enters.
        #[arg(long, default_value_t = 10.0)]
        warmup: f64,
        /// Also print per-driver totals to standard error.
        #[arg(long)]
        summary: bool,
    },
    /// Average speed per class and congestion of the gamma and TTC crowds.
    ///
    /// The original profile ran for 20 minutes; the default here is a
    /// scaled 5 minutes (--duration 1200 for the full length).
    Profile {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
    },
    /// Belief-tracker convergence on synthetic agents.
    Beliefs {
        #[arg(long, default_value_t = 100)]
        agents: usize,
        #[arg(long, default_value_t = 20)]
        updates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated network file.
    GenScenario {
        #[arg(long, default_value = "intersection")]
        kind: String,
        #[arg(long)]
        lanes: Option<usize>,
        #[arg(long)]
        length: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        arms: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve(common: &Common, driver: Option<String>, defaults: RunConfig) -> Result<RunConfig, ConfigError> {
    let mut c = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|source| ConfigError::Io { path: p.display().to_string(), source })?;
            RunConfig::from_json(&text)?
        }
        None => defaults,
    };
    c.apply(&Overrides {
        seed: common.seed,
        duration: common.duration,
        agents: common.agents,
        driver,
        scenario: common.scenario.clone(),
        out: None,
    });
    c.validate()?;
    Ok(c)
}

fn csv_out<T: serde::Serialize>(path: Option<&Path>, rows: &[T]) -> Result<(), RunError> {
    let res = match path {
        Some(p) => bench::write_csv(BufWriter::new(File::create(p)?), rows),
        None => bench::write_csv(io::stdout().lock(), rows),
    };
    res.map_err(|e| RunError::Runtime(e.to_string()))
}

fn generated(kind: &str, lanes: usize, length: f64) -> ScenarioSource {
    ScenarioSource::Generated(GeneratedScenario { kind: kind.into(), lanes, length, ..GeneratedScenario::default() })
}

fn execute(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run { common, driver } => {
            let mut c = resolve(&common, driver, RunConfig::default())?;
            if let Some(out) = common.out {
                c.out = out;
            }
            let s = runner::run(&c)?;
            eprintln!("{} frames, {:.3} ms/frame, output in {}", s.frames, s.mean_frame_ms, c.out.display());
        }
        Command::BenchScaling { common, counts, warmup, repeats } => {
            // large map so the largest crowd is not spawn-limited
            let defaults =
                RunConfig { scenario: generated("intersection", 5, 1000.0), duration: 10.0, ..RunConfig::default() };
            let c = resolve(&common, None, defaults)?;
            let setup = ScalingSetup {
                map: Arc::new(c.scenario.build(c.seed)?),
                sim: c.sim_config()?,
                warmup_frames: (warmup / c.dt).round() as u64,
                frames: c.frames(),
                repeats,
                seed: c.seed,
            };
            csv_out(common.out.as_deref(), &bench::bench_scaling(&setup, &counts))?;
        }
        Command::CompareDrivers { common, seeds, drivers, warmup, summary } => {
            let defaults = RunConfig { agents: 40, duration: 120.0, distracted_prob: 0.5, ..RunConfig::default() };
            let c = resolve(&common, None, defaults)?;
            let kinds = drivers
                .iter()
                .map(|d| DriverKind::parse(d).ok_or_else(|| ConfigError::Invalid(format!("unknown driver {d:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let setup = DriveSetup {
                map: Arc::new(c.scenario.build(c.seed)?),
                sim: c.sim_config()?,
                search: c.search_config()?,
                warmup_frames: (warmup / c.dt).round() as u64,
                duration: c.duration,
            };
            let seed_list: Vec<u64> = (c.seed..c.seed + seeds).collect();
            let rows = bench::compare_drivers(&setup, &seed_list, &kinds);
            csv_out(common.out.as_deref(), &rows)?;
            if summary {
                let mut err = io::stderr().lock();
                for s in bench::summarize(&rows) {
                    writeln!(
                        err,
                        "{:8} collision/step {:.5}  avg speed {:.2}  dec/step {:.3}",
                        s.driver, s.collision_per_step, s.avg_speed, s.dec_per_step
                    )?;
                }
            }
        }
        Command::Profile { common, seeds } => {
            let defaults = RunConfig { agents: 60, duration: 300.0, ..RunConfig::default() };
            let c = resolve(&common, None, defaults)?;
            let sim = c.sim_config()?;
            let mut rows = Vec::new();
            for seed in c.seed..c.seed + seeds {
                let map = Arc::new(c.scenario.build(seed)?);
                for model in [Behavior::Gamma, Behavior::Ttc] {
                    rows.extend(bench::profile(&map, &sim, model, c.frames(), seed));
                }
            }
            csv_out(common.out.as_deref(), &rows)?;
        }
        Command::Beliefs { agents, updates, seed, out } => {
            let rows = experiments::belief_convergence(&ConvergenceSetup {
                agents,
                max_updates: updates,
                seed,
                ..ConvergenceSetup::default()
            });
            csv_out(out.as_deref(), &rows)?;
            eprintln!("converged: {:.1} %", 100.0 * experiments::converged_fraction(&rows));
        }
        Command::GenScenario { kind, lanes, length, radius, arms, seed, out } => {
            let mut g = GeneratedScenario { kind, ..GeneratedScenario::default() };
            g.lanes = lanes.unwrap_or(g.lanes);
            g.length = length.unwrap_or(g.length);
            g.radius = radius.unwrap_or(g.radius);
            g.arms = arms.unwrap_or(g.arms);
            let map =
                generate_scenario(g.kind()?, &g.params(), seed).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            netfile::save(&map, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("crowdsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
