//! Frame loop: behavior decisions on a frozen snapshot, a sequential commit,
//! removal of agents that leave the region of interest or stay jammed, and
//! replacement spawning.

mod grid;
mod metrics;
mod walk;

pub use grid::SpatialGrid;
pub use metrics::{MetricsRecorder, SimMetrics};
pub use walk::{sidewalk_route, update_walk, Walk};

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{footprint, footprint_gap, AgentClass, AgentProfile, AgentState, ProfileTable};
use crate::gamma::{apply_velocity, gamma_step, GammaParams, Neighbor, PedestrianContext};
use crate::geom::Vec2;
use crate::roadnet::{LaneRef, RoadMap, Route};
use crate::ttc::{advance_on_route, ttc_step, TtcParams};

pub type AgentId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Behavior {
    Gamma,
    Ttc,
    /// Moved by an outside controller (the ego vehicle).
    External,
}

impl Behavior {
    pub fn tag(self) -> &'static str {
        match self {
            Behavior::Gamma => "gamma",
            Behavior::Ttc => "ttc",
            Behavior::External => "ego",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub id: AgentId,
    pub profile: AgentProfile,
    pub state: AgentState,
    pub behavior: Behavior,
    /// Ignores externally controlled agents when choosing its velocity.
    pub distracted: bool,
    pub walk: Option<Walk>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub target_count: usize,
    /// Spawn weights per class, indexed by [`AgentClass::index`].
    pub class_mix: [f64; 5],
    pub model: Behavior,
    pub gamma: GammaParams,
    pub ttc: TtcParams,
    pub profiles: ProfileTable,
    pub t_jam: f64,
    pub spawn_attempts: usize,
    /// Free space (m) required around a spawn position, plus
    /// `spawn_headway` seconds of travel of each existing agent.
    pub spawn_clearance: f64,
    pub spawn_headway: f64,
    pub crossing_prob: f64,
    /// Probability that a spawned agent ignores externally controlled ones.
    pub distracted_prob: f64,
    /// Vehicle routes are kept extended at least this far ahead (m).
    pub route_horizon: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.05,
            target_count: 120,
            class_mix: [0.5, 0.1, 0.15, 0.15, 0.1],
            model: Behavior::Gamma,
            gamma: GammaParams::default(),
            ttc: TtcParams::default(),
            profiles: ProfileTable::default(),
            t_jam: 30.0,
            spawn_attempts: 20,
            spawn_clearance: 2.0,
            spawn_headway: 1.5,
            crossing_prob: 0.5,
            distracted_prob: 0.0,
            route_horizon: 60.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err("dt must be positive");
        }
        if self.class_mix.iter().any(|w| !(*w >= 0.0)) || self.class_mix.iter().sum::<f64>() <= 0.0 {
            return Err("class mix weights must be non-negative and not all zero");
        }
        if self.model == Behavior::External {
            return Err("crowd model must be gamma or ttc");
        }
        if !(self.t_jam > 0.0) || !(0.0..=1.0).contains(&self.crossing_prob) || !(self.route_horizon > 0.0) {
            return Err("t_jam and route_horizon must be positive, crossing_prob in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.distracted_prob) {
            return Err("distracted_prob must be in [0, 1]");
        }
        for c in AgentClass::ALL {
            self.profiles.get(c).validate()?;
        }
        self.gamma.validate()?;
        self.ttc.validate()
    }
}

/// What an agent intends to do this frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decision {
    Velocity { v: Vec2, fallback: bool },
    Speed(f64),
    Hold,
}

/// Neighbor lookup for one frozen frame.
#[derive(Clone, Debug)]
pub struct FrameIndex {
    grid: SpatialGrid,
}

const GRID_CELL: f64 = 15.0;
const TTC_MAX_OTHERS: usize = 24;
/// Distance from the route point beyond which a vehicle is relocated on the
/// lane network.
const REROUTE_OFFSET_M: f64 = 3.0;

pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream per (seed, agent, frame, purpose).
pub fn agent_rng(seed: u64, id: AgentId, frame: u64, stream: u64) -> ChaCha8Rng {
    let k = splitmix(splitmix(splitmix(seed) ^ id as u64) ^ frame) ^ stream.wrapping_mul(0xd6e8_feb8_6659_fd93);
    ChaCha8Rng::seed_from_u64(splitmix(k))
}

const STREAM_DECIDE: u64 = 1;
const STREAM_ROUTE: u64 = 2;

#[derive(Clone, Debug)]
pub struct World {
    map: Arc<RoadMap>,
    config: SimConfig,
    seed: u64,
    frame: u64,
    agents: Vec<Agent>,
    next_id: AgentId,
    spawn_rng: ChaCha8Rng,
    metrics: MetricsRecorder,
    spawn_starved: u64,
}

impl World {
    /// A world populated up to `config.target_count`.
    pub fn new(map: Arc<RoadMap>, config: SimConfig, seed: u64) -> Self {
        let mut w = World::empty(map, config, seed);
        w.fill();
        w
    }

    pub fn empty(map: Arc<RoadMap>, config: SimConfig, seed: u64) -> Self {
        World {
            map,
            config,
            seed,
            frame: 0,
            agents: Vec::new(),
            next_id: 1,
            spawn_rng: ChaCha8Rng::seed_from_u64(splitmix(seed ^ 0x5bd1_e995)),
            metrics: MetricsRecorder::default(),
            spawn_starved: 0,
        }
    }

    pub fn map(&self) -> &Arc<RoadMap> {
        &self.map
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut SimConfig {
        &mut self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn frame(&self) -> u64 {
        self.frame
    }

    pub fn time(&self) -> f64 {
        self.frame as f64 * self.config.dt
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> Option<&Agent> {
        self.agents.binary_search_by_key(&id, |a| a.id).ok().map(|i| &self.agents[i])
    }

    pub fn agent_mut(&mut self, id: AgentId) -> Option<&mut Agent> {
        self.agents.binary_search_by_key(&id, |a| a.id).ok().map(move |i| &mut self.agents[i])
    }

    pub fn metrics(&self) -> &MetricsRecorder {
        &self.metrics
    }

    /// Number of spawns that failed after the maximum number of attempts.
    pub fn spawn_starved(&self) -> u64 {
        self.spawn_starved
    }

    /// Adds an agent with a fresh id and returns the id.
    pub fn add_agent(
        &mut self,
        profile: AgentProfile,
        state: AgentState,
        behavior: Behavior,
        walk: Option<Walk>,
    ) -> AgentId {
        let id = self.next_id;
        self.next_id += 1;
        self.agents.push(Agent { id, profile, state, behavior, distracted: false, walk });
        id
    }

    pub fn remove_agent(&mut self, id: AgentId) -> Option<Agent> {
        let i = self.agents.binary_search_by_key(&id, |a| a.id).ok()?;
        Some(self.agents.remove(i))
    }

    fn crowd_count(&self) -> usize {
        self.agents.iter().filter(|a| a.behavior != Behavior::External).count()
    }

    pub fn index(&self) -> FrameIndex {
        FrameIndex { grid: SpatialGrid::new(self.agents.iter().map(|a| a.state.position), GRID_CELL) }
    }

    /// Agents within `radius` of agent `i`, nearest first.
    pub fn neighbors_of(&self, index: &FrameIndex, i: usize, radius: f64, max: usize) -> Vec<Neighbor> {
        let me = &self.agents[i];
        let mut found: Vec<(f64, usize)> = index
            .grid
            .candidates(me.state.position, radius)
            .filter(|&j| j != i)
            .filter(|&j| !(me.distracted && self.agents[j].behavior == Behavior::External))
            .map(|j| (self.agents[j].state.position.distance(me.state.position), j))
            .filter(|(d, _)| *d <= radius)
            .collect();
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(self.agents[a.1].id.cmp(&self.agents[b.1].id)));
        found.truncate(max);
        found.into_iter().map(|(_, j)| Neighbor::of(&self.agents[j].state, &self.agents[j].profile)).collect()
    }

    /// Decision of agent `i` against the current (frozen) frame.
    pub fn decide(&self, index: &FrameIndex, i: usize) -> Decision {
        let a = &self.agents[i];
        match a.behavior {
            Behavior::External => Decision::Hold,
            Behavior::Gamma => {
                let p = &self.config.gamma;
                let nbs = self.neighbors_of(index, i, p.neighbor_radius, p.max_neighbors);
                let ped = a.walk.as_ref().map(|w| PedestrianContext { crossing: w.is_crossing(a.state.progress) });
                let mut rng = agent_rng(self.seed, a.id, self.frame, STREAM_DECIDE);
                let out = gamma_step(&self.map, &a.state, &a.profile, &nbs, ped.as_ref(), p, &mut rng);
                Decision::Velocity { v: out.velocity, fallback: out.fallback }
            }
            Behavior::Ttc => {
                let p = &self.config.ttc;
                let nbs = self.neighbors_of(index, i, p.search_radius, TTC_MAX_OTHERS);
                Decision::Speed(ttc_step(&a.state, &a.profile, &nbs, p))
            }
        }
    }

    pub fn decide_all(&self) -> Vec<Decision> {
        let index = self.index();
        (0..self.agents.len()).map(|i| self.decide(&index, i)).collect()
    }

    /// One frame with sequential decisions.
    pub fn step(&mut self) {
        let d = self.decide_all();
        self.commit(&d);
    }

    /// Applies one decision per agent (in agent order), advances the clock,
    /// records metrics and runs removal and replacement.
    pub fn commit(&mut self, decisions: &[Decision]) {
        assert_eq!(decisions.len(), self.agents.len(), "one decision per agent");
        let dt = self.config.dt;
        let frame = self.frame;
        for (a, d) in self.agents.iter_mut().zip(decisions) {
            match *d {
                Decision::Velocity { v, .. } => a.state = apply_velocity(&a.state, &a.profile, v, dt),
                Decision::Speed(s) => a.state = advance_on_route(&a.state, s, dt),
                Decision::Hold => continue,
            }
            let mut rng = agent_rng(self.seed, a.id, frame, STREAM_ROUTE);
            match &mut a.walk {
                Some(w) => update_walk(&self.map.sidewalks, w, &mut a.state, self.config.crossing_prob, &mut rng),
                None => extend_route(&self.map, &mut a.state, self.config.route_horizon, &mut rng),
            }
        }
        self.frame += 1;
        let t = self.time();
        self.metrics.record_frame(
            t,
            self.agents
                .iter()
                .filter(|a| a.behavior != Behavior::External)
                .map(|a| (a.id, a.profile.class, a.state.speed())),
        );
        self.despawn();
        self.fill();
    }

    fn despawn(&mut self) {
        let t = self.time();
        let t_jam = self.config.t_jam;
        let roi = &self.map.region_of_interest;
        let metrics = &mut self.metrics;
        self.agents.retain(|a| {
            if a.behavior == Behavior::External {
                return true;
            }
            if a.state.stationary_time > t_jam {
                metrics.record_jam(t, a.id);
                return false;
            }
            roi.contains(a.state.position)
        });
    }

    fn fill(&mut self) {
        let mut missing = self.config.target_count.saturating_sub(self.crowd_count());
        while missing > 0 {
            if !self.spawn_one() {
                self.spawn_starved += 1;
                break;
            }
            missing -= 1;
        }
    }

    fn pick_class(&mut self) -> AgentClass {
        let has_walks = !self.map.sidewalks.sidewalks().is_empty();
        let weights: [f64; 5] = core::array::from_fn(|i| {
            if AgentClass::ALL[i] == AgentClass::Pedestrian && !has_walks {
                0.0
            } else {
                self.config.class_mix[i]
            }
        });
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return AgentClass::Car;
        }
        let mut x = self.spawn_rng.random_range(0.0..total);
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return AgentClass::ALL[i];
            }
            x -= w;
        }
        AgentClass::Car
    }

    fn spawn_one(&mut self) -> bool {
        let class = self.pick_class();
        let profile = *self.config.profiles.get(class);
        for _ in 0..self.config.spawn_attempts {
            let Some((state, walk)) = self.spawn_candidate(&profile) else {
                continue;
            };
            if !self.map.region_of_interest.contains(state.position) || !self.spawn_is_clear(&state, &profile) {
                continue;
            }
            let behavior = self.config.model;
            // no draw when disabled, so plain crowds keep their spawn stream
            let distracted =
                self.config.distracted_prob > 0.0 && self.spawn_rng.random_bool(self.config.distracted_prob);
            let id = self.add_agent(profile, state, behavior, walk);
            if let Some(a) = self.agent_mut(id) {
                a.distracted = distracted;
            }
            return true;
        }
        false
    }

    fn spawn_candidate(&mut self, profile: &AgentProfile) -> Option<(AgentState, Option<Walk>)> {
        let map = Arc::clone(&self.map);
        if profile.class == AgentClass::Pedestrian {
            let walks = map.sidewalks.sidewalks();
            let s = self.spawn_rng.random_range(0..walks.len());
            let arc = self.spawn_rng.random_range(0.0..walks[s].length());
            let forward = self.spawn_rng.random_bool(0.5);
            let pos = walks[s].point_at(arc);
            let route = sidewalk_route(&map.sidewalks, s, arc, forward, pos);
            let heading = route.polyline().tangent_at(0.0).angle();
            return Some((AgentState::new(pos, heading, 0.0, route), Some(Walk::new(s, forward))));
        }
        if map.spawn_segments.is_empty() {
            return None;
        }
        let id = map.spawn_segments[self.spawn_rng.random_range(0..map.spawn_segments.len())];
        let seg = map.lanes.segment(id)?;
        let arc = self.spawn_rng.random_range(0.0..seg.centerline.length());
        let pos = seg.centerline.point_at(arc);
        let heading = seg.centerline.tangent_at(arc).angle();
        let mut state =
            AgentState::new(pos, heading, 0.0, Route::build(&map.lanes, LaneRef { segment: id, arc }, &[id]));
        state.progress = 0.0;
        extend_route(&map, &mut state, self.config.route_horizon, &mut self.spawn_rng);
        Some((state, None))
    }

    fn spawn_is_clear(&self, state: &AgentState, profile: &AgentProfile) -> bool {
        let fp = footprint(state, profile);
        let reach = profile.circumradius();
        self.agents.iter().all(|o| {
            let need = self.config.spawn_clearance + self.config.spawn_headway * o.state.speed();
            let d = o.state.position.distance(state.position);
            if d - reach - o.profile.circumradius() > need {
                return true;
            }
            footprint_gap(&fp, &footprint(&o.state, &o.profile)).0 >= need
        })
    }

    /// Pairs of agent ids whose footprints overlap.
    pub fn colliding_pairs(&self) -> Vec<(AgentId, AgentId)> {
        let index = self.index();
        let mut out = Vec::new();
        for (i, a) in self.agents.iter().enumerate() {
            for j in index.grid.candidates(a.state.position, GRID_CELL) {
                if j <= i {
                    continue;
                }
                let b = &self.agents[j];
                if crate::agents::collides(&a.state, &a.profile, &b.state, &b.profile) {
                    out.push((a.id, b.id));
                }
            }
        }
        out
    }
}

/// Keeps a lane route extended `horizon` meters past the agent, sampling one
/// successor per fork. An agent that has been pushed off its route is
/// relocated on the lane network first. Routes without lane segments are
/// left alone.
pub fn extend_route<R: Rng + ?Sized>(map: &RoadMap, state: &mut AgentState, horizon: f64, rng: &mut R) {
    if state.route.segments().is_empty() {
        return;
    }
    if state.position.distance(state.route.polyline().point_at(state.progress)) > REROUTE_OFFSET_M {
        if let Ok(here) = map.lanes.locate(state.position, state.heading) {
            let tangent = map.lanes.segment(here.segment).map(|s| s.centerline.tangent_at(here.arc));
            if tangent.is_some_and(|t| t.dot(Vec2::from_angle(state.heading)) > 0.0) {
                state.route = Route::build(&map.lanes, here, &[here.segment]);
                state.progress = 0.0;
                state.update_progress();
            }
        }
    }
    let route = &state.route;
    if route.remaining(state.progress) >= 0.5 * horizon {
        return;
    }
    let Some(here) = route.lane_at(state.progress) else { return };
    let k = route.segment_index_at(state.progress);
    let mut segs = route.segments()[k..].to_vec();
    let mut covered = route.remaining(state.progress);
    let last_before = segs.len();
    while covered < horizon {
        let Some(last) = segs.last().and_then(|id| map.lanes.segment(*id)) else { break };
        if last.successors.is_empty() {
            break;
        }
        let next = last.successors[rng.random_range(0..last.successors.len())];
        covered += map.lanes.segment(next).map_or(0.0, |s| s.centerline.length());
        segs.push(next);
    }
    if segs.len() == last_before && k == 0 {
        return;
    }
    state.route = Route::build(&map.lanes, here, &segs);
    state.progress = 0.0;
    state.update_progress();
}

#[cfg(test)]
mod tests;
