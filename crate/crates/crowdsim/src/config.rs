//! Run configuration: a JSON file, then command-line overrides on top.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crowdsim_core::agents::{AgentClass, ProfileTable};
use crowdsim_core::gamma::{DiscModel, GammaParams};
use crowdsim_core::planner::{DriverKind, RewardWeights, SearchConfig};
use crowdsim_core::roadnet::{generate_scenario, RoadMap, ScenarioKind, ScenarioParams};
use crowdsim_core::sim::{Behavior, SimConfig};
use crowdsim_core::ttc::TtcParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netfile::{self, NetError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Network(#[from] NetError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// A generated scenario or a network file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    File { network: PathBuf },
    Generated(GeneratedScenario),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratedScenario {
    pub kind: String,
    pub lanes: usize,
    pub length: f64,
    pub radius: f64,
    pub arms: usize,
    pub lane_width: f64,
}

impl Default for GeneratedScenario {
    fn default() -> Self {
        let p = ScenarioParams::default();
        GeneratedScenario {
            kind: "intersection".into(),
            lanes: p.lanes,
            length: p.length,
            radius: p.radius,
            arms: p.arms,
            lane_width: p.lane_width,
        }
    }
}

impl GeneratedScenario {
    pub fn kind(&self) -> Result<ScenarioKind, ConfigError> {
        ScenarioKind::parse(&self.kind).ok_or_else(|| invalid(format!("unknown scenario kind {:?}", self.kind)))
    }

    pub fn params(&self) -> ScenarioParams {
        ScenarioParams {
            lanes: self.lanes,
            length: self.length,
            radius: self.radius,
            arms: self.arms,
            lane_width: self.lane_width,
        }
    }
}

impl Default for ScenarioSource {
    fn default() -> Self {
        ScenarioSource::Generated(GeneratedScenario::default())
    }
}

impl ScenarioSource {
    /// `--scenario` value: a scenario kind, or else a path to a network file.
    pub fn from_flag(value: &str, base: &ScenarioSource) -> ScenarioSource {
        if ScenarioKind::parse(value).is_some() {
            let mut g = match base {
                ScenarioSource::Generated(g) => g.clone(),
                ScenarioSource::File { .. } => GeneratedScenario::default(),
            };
            g.kind = value.into();
            ScenarioSource::Generated(g)
        } else if value.ends_with(".json") || Path::new(value).exists() {
            ScenarioSource::File { network: value.into() }
        } else {
            // let validation report the bad kind
            ScenarioSource::Generated(GeneratedScenario { kind: value.into(), ..GeneratedScenario::default() })
        }
    }

    pub fn build(&self, seed: u64) -> Result<RoadMap, ConfigError> {
        match self {
            ScenarioSource::File { network } => Ok(netfile::load(network)?),
            ScenarioSource::Generated(g) => {
                generate_scenario(g.kind()?, &g.params(), seed).map_err(|e| invalid(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaConfig {
    pub tau: f64,
    pub tau_opp: f64,
    pub tau_side: f64,
    pub neighbor_radius: f64,
    pub max_neighbors: usize,
    pub lookahead_dist: f64,
    /// "capsule" or "circumradius".
    pub disc_model: String,
    pub safety_margin: f64,
    pub soft_context: bool,
}

impl Default for GammaConfig {
    fn default() -> Self {
        let p = GammaParams::default();
        GammaConfig {
            tau: p.tau,
            tau_opp: p.tau_opp,
            tau_side: p.tau_side,
            neighbor_radius: p.neighbor_radius,
            max_neighbors: p.max_neighbors,
            lookahead_dist: p.lookahead_dist,
            disc_model: "capsule".into(),
            safety_margin: p.safety_margin,
            soft_context: p.soft_context,
        }
    }
}

impl GammaConfig {
    pub fn params(&self, dt: f64) -> Result<GammaParams, ConfigError> {
        let disc_model = match self.disc_model.as_str() {
            "capsule" => DiscModel::Capsule,
            "circumradius" => DiscModel::Circumradius,
            other => return Err(invalid(format!("unknown disc_model {other:?}"))),
        };
        let p = GammaParams {
            tau: self.tau,
            tau_opp: self.tau_opp,
            tau_side: self.tau_side,
            neighbor_radius: self.neighbor_radius,
            max_neighbors: self.max_neighbors,
            lookahead_dist: self.lookahead_dist,
            dt,
            disc_model,
            safety_margin: self.safety_margin,
            soft_context: self.soft_context,
        };
        p.validate().map_err(|e| invalid(format!("gamma: {e}")))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TtcConfig {
    pub ttc_threshold: f64,
    pub min_gap: f64,
    pub horizon: f64,
    pub sample_dt: f64,
    pub search_radius: f64,
}

impl Default for TtcConfig {
    fn default() -> Self {
        let p = TtcParams::default();
        TtcConfig {
            ttc_threshold: p.ttc_threshold,
            min_gap: p.min_gap,
            horizon: p.horizon,
            sample_dt: p.sample_dt,
            search_radius: p.search_radius,
        }
    }
}

impl TtcConfig {
    pub fn params(&self) -> TtcParams {
        TtcParams {
            ttc_threshold: self.ttc_threshold,
            min_gap: self.min_gap,
            horizon: self.horizon,
            sample_dt: self.sample_dt,
            search_radius: self.search_radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub num_scenarios: usize,
    pub max_depth: usize,
    pub discount: f64,
    pub planning_dt: f64,
    pub exploration: f64,
    pub regularization: f64,
    pub max_trials: usize,
    pub v_max: f64,
    pub noise_sigma: f64,
    pub max_exo: usize,
    pub collision_reward: f64,
    pub speed_weight: f64,
    pub deceleration_reward: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        let c = SearchConfig::default();
        PlannerConfig {
            num_scenarios: c.num_scenarios,
            max_depth: c.max_depth,
            discount: c.discount,
            planning_dt: c.planning_dt,
            exploration: c.exploration,
            regularization: c.regularization,
            max_trials: c.max_trials,
            v_max: c.v_max,
            noise_sigma: c.noise_sigma,
            max_exo: c.max_exo,
            collision_reward: c.reward.collision,
            speed_weight: c.reward.speed,
            deceleration_reward: c.reward.deceleration,
        }
    }
}

impl PlannerConfig {
    pub fn search(&self, gamma: GammaParams) -> Result<SearchConfig, ConfigError> {
        let c = SearchConfig {
            num_scenarios: self.num_scenarios,
            max_depth: self.max_depth,
            discount: self.discount,
            planning_dt: self.planning_dt,
            exploration: self.exploration,
            regularization: self.regularization,
            max_trials: self.max_trials,
            v_max: self.v_max,
            noise_sigma: self.noise_sigma,
            max_exo: self.max_exo,
            reward: RewardWeights {
                collision: self.collision_reward,
                speed: self.speed_weight,
                deceleration: self.deceleration_reward,
            },
            gamma,
        };
        c.validate().map_err(|e| invalid(format!("planner: {e}")))?;
        Ok(c)
    }
}

/// Per-class profile overrides; unset fields keep the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub half_length: Option<f64>,
    pub half_width: Option<f64>,
    pub max_speed: Option<f64>,
    pub max_accel: Option<f64>,
    pub max_steer: Option<f64>,
    pub wheelbase: Option<f64>,
    pub responsibility: Option<f64>,
    pub attention: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSource,
    pub agents: usize,
    /// Spawn weights by class name; classes left out get weight 0.
    pub class_mix: Option<BTreeMap<String, f64>>,
    /// Crowd model: "gamma" or "ttc".
    pub model: String,
    /// Ego driver: "none", "gamma", "rollout" or "pomdp".
    pub driver: String,
    pub seed: u64,
    /// Simulated seconds.
    pub duration: f64,
    pub dt: f64,
    /// Output directory for `trace.jsonl` and `metrics.csv`.
    pub out: PathBuf,
    /// Seconds between metrics rows.
    pub metrics_interval: f64,
    pub t_jam: f64,
    pub distracted_prob: f64,
    pub crossing_prob: f64,
    pub gamma: GammaConfig,
    pub ttc: TtcConfig,
    pub planner: PlannerConfig,
    pub profiles: BTreeMap<String, ProfileConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SimConfig::default();
        RunConfig {
            scenario: ScenarioSource::default(),
            agents: s.target_count,
            class_mix: None,
            model: "gamma".into(),
            driver: "none".into(),
            seed: 0,
            duration: 60.0,
            dt: s.dt,
            out: PathBuf::from("out"),
            metrics_interval: 1.0,
            t_jam: s.t_jam,
            distracted_prob: s.distracted_prob,
            crossing_prob: s.crossing_prob,
            gamma: GammaConfig::default(),
            ttc: TtcConfig::default(),
            planner: PlannerConfig::default(),
            profiles: BTreeMap::new(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub duration: Option<f64>,
    pub agents: Option<usize>,
    pub driver: Option<String>,
    pub scenario: Option<String>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Defaults, then `path` (if any), then `overrides`.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
        let mut c = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|source| ConfigError::Io { path: p.display().to_string(), source })?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        c.apply(overrides);
        c.validate()?;
        Ok(c)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.duration {
            self.duration = v;
        }
        if let Some(v) = o.agents {
            self.agents = v;
        }
        if let Some(v) = &o.driver {
            self.driver = v.clone();
        }
        if let Some(v) = &o.scenario {
            self.scenario = ScenarioSource::from_flag(v, &self.scenario);
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(invalid("duration must be positive"));
        }
        if self.agents == 0 {
            return Err(invalid("agents must be at least 1"));
        }
        if !(self.metrics_interval > 0.0) {
            return Err(invalid("metrics_interval must be positive"));
        }
        if let ScenarioSource::Generated(g) = &self.scenario {
            g.kind()?;
        }
        self.driver_kind()?;
        self.sim_config()?;
        self.search_config()?;
        Ok(())
    }

    pub fn driver_kind(&self) -> Result<Option<DriverKind>, ConfigError> {
        match self.driver.as_str() {
            "none" => Ok(None),
            d => DriverKind::parse(d).map(Some).ok_or_else(|| invalid(format!("unknown driver {d:?}"))),
        }
    }

    pub fn sim_config(&self) -> Result<SimConfig, ConfigError> {
        let model = match self.model.as_str() {
            "gamma" => Behavior::Gamma,
            "ttc" => Behavior::Ttc,
            m => return Err(invalid(format!("unknown model {m:?}"))),
        };
        let mut profiles = ProfileTable::default();
        for (name, o) in &self.profiles {
            let class = AgentClass::parse(name).ok_or_else(|| invalid(format!("unknown class {name:?}")))?;
            let mut p = *profiles.get(class);
            let fields = [
                (&mut p.half_length, o.half_length),
                (&mut p.half_width, o.half_width),
                (&mut p.max_speed, o.max_speed),
                (&mut p.max_accel, o.max_accel),
                (&mut p.max_steer, o.max_steer),
                (&mut p.wheelbase, o.wheelbase),
                (&mut p.responsibility, o.responsibility),
                (&mut p.attention, o.attention),
            ];
            for (slot, v) in fields {
                if let Some(v) = v {
                    *slot = v;
                }
            }
            p.validate().map_err(|e| invalid(format!("profile {name}: {e}")))?;
            profiles.set(p);
        }
        let mut class_mix = SimConfig::default().class_mix;
        if let Some(mix) = &self.class_mix {
            class_mix = [0.0; 5];
            for (name, w) in mix {
                let class = AgentClass::parse(name).ok_or_else(|| invalid(format!("unknown class {name:?}")))?;
                class_mix[class.index()] = *w;
            }
        }
        let c = SimConfig {
            dt: self.dt,
            target_count: self.agents,
            class_mix,
            model,
            gamma: self.gamma.params(self.dt)?,
            ttc: self.ttc.params(),
            profiles,
            t_jam: self.t_jam,
            distracted_prob: self.distracted_prob,
            crossing_prob: self.crossing_prob,
            ..SimConfig::default()
        };
        c.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(c)
    }

    pub fn search_config(&self) -> Result<SearchConfig, ConfigError> {
        self.planner.search(self.gamma.params(self.dt)?)
    }

    /// Frames the run lasts.
    pub fn frames(&self) -> u64 {
        (self.duration / self.dt).round() as u64
    }
}
