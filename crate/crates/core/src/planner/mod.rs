//! Belief-space planning of the ego vehicle's longitudinal action: a
//! scenario-based belief tree search and a roll-out baseline.

mod despot;
mod drivers;

pub use despot::{plan, plan_scenarios, sample_scenarios, PlanOutcome, Scenario};
pub use drivers::{BeliefTracker, DriveStats, DriverKind, EgoDriver, EgoStep};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::agents::{
    footprint, footprint_gap, integrate_bicycle, lookahead_for, pure_pursuit_at, AgentClass, AgentProfile, AgentState,
};
use crate::belief::{hypothesis_step, AgentBelief, AgentType, MotionContext};
use crate::gamma::{GammaParams, Neighbor};
use crate::geom::Vec2;
use crate::math;
use crate::roadnet::{RoadMap, Route};
use crate::sim::AgentId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Acc,
    Maintain,
    Dec,
}

impl Action {
    /// Also the tie-break order.
    pub const ALL: [Action; 3] = [Action::Acc, Action::Maintain, Action::Dec];

    pub fn accel(self) -> f64 {
        match self {
            Action::Acc => 3.0,
            Action::Maintain => 0.0,
            Action::Dec => -3.0,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Acc => "ACC",
            Action::Maintain => "MAINTAIN",
            Action::Dec => "DEC",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardWeights {
    pub collision: f64,
    pub speed: f64,
    pub deceleration: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { collision: -1000.0, speed: 1.0, deceleration: -0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    pub num_scenarios: usize,
    pub max_depth: usize,
    pub discount: f64,
    pub planning_dt: f64,
    /// Target gap fraction ξ: a trial stops where the weighted bound gap
    /// falls below ξ times the root gap.
    pub exploration: f64,
    /// Per-node penalty λ on the lower bound (policy size regularizer).
    pub regularization: f64,
    /// Search budget in trials; the search is anytime, so any value ≥ 1
    /// returns an action.
    pub max_trials: usize,
    pub v_max: f64,
    /// Displacement noise per axis and step (m).
    pub noise_sigma: f64,
    /// Only the nearest exo-agents enter the tree.
    pub max_exo: usize,
    pub reward: RewardWeights,
    pub gamma: GammaParams,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            num_scenarios: 100,
            max_depth: 9,
            discount: 0.95,
            planning_dt: 1.0 / 3.0,
            exploration: 0.95,
            regularization: 0.0,
            max_trials: 100,
            v_max: 6.0,
            noise_sigma: 0.1,
            max_exo: 8,
            reward: RewardWeights::default(),
            gamma: GammaParams::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.num_scenarios == 0 || self.max_depth == 0 || self.max_trials == 0 {
            return Err("num_scenarios, max_depth and max_trials must be at least 1");
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err("discount must be in (0, 1)");
        }
        if !(self.planning_dt > 0.0) || !(self.v_max > 0.0) || !(self.noise_sigma >= 0.0) {
            return Err("planning_dt and v_max must be positive, noise_sigma non-negative");
        }
        if !(self.regularization >= 0.0) || !(self.exploration >= 0.0) {
            return Err("regularization and exploration must be non-negative");
        }
        self.gamma.validate()
    }

    /// Lower end of the range every discounted return lies in.
    pub fn return_floor(&self) -> f64 {
        self.reward.collision / (1.0 - self.discount)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExoState {
    pub id: AgentId,
    pub profile: AgentProfile,
    /// Current state; its route is the agent's intended path.
    pub state: AgentState,
    pub agent_type: AgentType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PomdpState {
    /// Ego state; its route is the ego path.
    pub ego: AgentState,
    pub ego_profile: AgentProfile,
    pub exo: Vec<ExoState>,
    pub depth: usize,
    pub collided: bool,
}

/// What the planner sees of the world at one planning tick.
#[derive(Clone, Copy, Debug)]
pub struct PlannerInput<'a> {
    pub map: &'a RoadMap,
    pub ego: &'a AgentState,
    pub ego_profile: &'a AgentProfile,
    /// Other agents (id, profile, state).
    pub others: &'a [(AgentId, AgentProfile, AgentState)],
}

/// The ego's car profile with its top speed set to `v_max`.
pub fn ego_profile(v_max: f64) -> AgentProfile {
    AgentProfile { max_speed: v_max, ..AgentProfile::default_for(AgentClass::Car) }
}

impl PomdpState {
    /// State with every exo-agent's type and path taken from `hidden`
    /// (agents without an entry are left out).
    pub fn from_input(
        input: &PlannerInput<'_>,
        beliefs: &BTreeMap<AgentId, AgentBelief>,
        hidden: &BTreeMap<AgentId, crate::belief::HiddenState>,
        max_exo: usize,
    ) -> PomdpState {
        let exo = nearest_others(input, max_exo)
            .into_iter()
            .filter_map(|(id, profile, state)| {
                let h = hidden.get(&id)?;
                let route = beliefs.get(&id)?.route(*h).clone();
                let mut s = state.clone();
                s.progress = route.polyline().project(s.position).arc;
                s.route = route;
                Some(ExoState { id, profile, state: s, agent_type: h.agent_type })
            })
            .collect();
        PomdpState { ego: input.ego.clone(), ego_profile: *input.ego_profile, exo, depth: 0, collided: false }
    }
}

/// Up to `max` other agents nearest to the ego (ties by id).
pub fn nearest_others<'a>(input: &PlannerInput<'a>, max: usize) -> Vec<(AgentId, AgentProfile, &'a AgentState)> {
    let mut v: Vec<(f64, AgentId, AgentProfile, &AgentState)> =
        input.others.iter().map(|(id, p, s)| (s.position.distance(input.ego.position), *id, *p, s)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    v.truncate(max);
    v.into_iter().map(|(_, id, p, s)| (id, p, s)).collect()
}

/// Ego motion for one planning step: speed changes by `accel·dt` within
/// `[0, v_max]`, steering tracks the ego path.
pub fn ego_step(ego: &AgentState, profile: &AgentProfile, accel: f64, v_max: f64, dt: f64) -> AgentState {
    let speed = (ego.speed() + accel * dt).clamp(0.0, v_max);
    let steer = pure_pursuit_at(ego, profile, ego.route.polyline(), ego.progress, lookahead_for(speed));
    let mut next = integrate_bicycle(ego, profile, speed, steer, dt);
    next.update_progress();
    next
}

fn neighbors_for(state: &PomdpState, skip: usize, params: &GammaParams) -> Vec<Neighbor> {
    let me = state.exo[skip].state.position;
    let mut v: Vec<(f64, Neighbor)> = core::iter::once(Neighbor::of(&state.ego, &state.ego_profile))
        .chain(
            state.exo.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, e)| Neighbor::of(&e.state, &e.profile)),
        )
        .map(|n| (n.position.distance(me), n))
        .filter(|(d, _)| *d <= params.neighbor_radius)
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v.truncate(params.max_neighbors);
    v.into_iter().map(|(_, n)| n).collect()
}

/// Noise-free next state of exo-agent `i` under its own type, and under the
/// other one when `alternative` is set.
fn exo_means(
    map: &RoadMap,
    state: &PomdpState,
    i: usize,
    config: &SearchConfig,
    alternative: bool,
) -> (AgentState, Option<AgentState>) {
    let e = &state.exo[i];
    let nbs = neighbors_for(state, i, &config.gamma);
    let ctx = MotionContext { map, profile: &e.profile, neighbors: &nbs, gamma: &config.gamma };
    let dt = config.planning_dt;
    let own = hypothesis_step(e.agent_type, &e.state.route, &e.state, &ctx, dt);
    let other = alternative.then(|| {
        let t = match e.agent_type {
            AgentType::Distracted => AgentType::Attentive,
            AgentType::Attentive => AgentType::Distracted,
        };
        hypothesis_step(t, &e.state.route, &e.state, &ctx, dt)
    });
    (own, other)
}

/// One transition. With `obs` set, also returns the observation key: one
/// bit per exo-agent, set when its noisy displacement is nearer the
/// attentive mean than the distracted one.
pub(crate) fn step_full<R: Rng + ?Sized>(
    map: &RoadMap,
    state: &PomdpState,
    action: Action,
    config: &SearchConfig,
    rng: &mut R,
    obs: bool,
) -> (PomdpState, f64, u64) {
    let dt = config.planning_dt;
    let mut next = state.clone();
    next.depth += 1;
    if state.collided {
        return (next, 0.0, 0);
    }
    next.ego = ego_step(&state.ego, &state.ego_profile, action.accel(), config.v_max, dt);
    let noise = Normal::new(0.0, config.noise_sigma).expect("finite sigma");
    let mut key = 0u64;
    for i in 0..state.exo.len() {
        let (own, other) = exo_means(map, state, i, config, obs);
        let mean = own.position;
        let mut s = own;
        s.position += Vec2::new(noise.sample(rng), noise.sample(rng));
        s.update_progress();
        if let Some(alt) = other {
            let d_own = (s.position - mean).norm_sq();
            let d_alt = (s.position - alt.position).norm_sq();
            let attentive_like = match state.exo[i].agent_type {
                AgentType::Attentive => d_own <= d_alt,
                AgentType::Distracted => d_alt < d_own,
            };
            if attentive_like && i < 64 {
                key |= 1 << i;
            }
        }
        next.exo[i].state = s;
    }
    let r = reward(state, action, &next, config);
    next.collided = ego_collides(&next);
    (next, r, key)
}

/// Sampled transition and its reward.
pub fn pomdp_transition<R: Rng + ?Sized>(
    map: &RoadMap,
    state: &PomdpState,
    action: Action,
    config: &SearchConfig,
    rng: &mut R,
) -> (PomdpState, f64) {
    let (s, r, _) = step_full(map, state, action, config, rng, false);
    (s, r)
}

pub fn ego_collides(state: &PomdpState) -> bool {
    state.exo.iter().any(|e| crate::agents::collides(&state.ego, &state.ego_profile, &e.state, &e.profile))
}

/// Collision penalty, a speed shortfall term on the speed driven during the
/// step and a deceleration penalty.
pub fn reward(_state: &PomdpState, action: Action, next: &PomdpState, config: &SearchConfig) -> f64 {
    let w = &config.reward;
    let mut r = w.speed * (next.ego.speed() - config.v_max) / config.v_max;
    if action == Action::Dec {
        r += w.deceleration;
    }
    if ego_collides(next) {
        r += w.collision;
    }
    r
}

pub const CONE_HALF_ANGLE: f64 = core::f64::consts::PI / 6.0;
pub const CAUTION_NEAR_M: f64 = 2.0;
pub const CAUTION_FAR_M: f64 = 4.0;
/// Speed tolerance around half of `v_max` in the caution band.
pub const HALF_SPEED_TOL: f64 = 0.5;

/// Footprint clearance to the nearest exo-agent inside the front cone.
pub fn front_distance(state: &PomdpState) -> f64 {
    front_distance_of(&state.ego, &state.ego_profile, state.exo.iter().map(|e| (&e.state, &e.profile)))
}

pub fn front_distance_of<'a>(
    ego: &AgentState,
    ego_profile: &AgentProfile,
    others: impl Iterator<Item = (&'a AgentState, &'a AgentProfile)>,
) -> f64 {
    let f = Vec2::from_angle(ego.heading);
    let me = footprint(ego, ego_profile);
    let cos_cone = math::cos(CONE_HALF_ANGLE);
    let mut best = f64::INFINITY;
    for (s, p) in others {
        let to = s.position - ego.position;
        if to.norm() - ego_profile.circumradius() - p.circumradius() > best {
            continue;
        }
        let (gap, dir) = footprint_gap(&me, &footprint(s, p));
        let ahead = |d: Vec2| d.normalized().is_some_and(|u| u.dot(f) >= cos_cone);
        if ahead(to) || ahead(dir) {
            best = best.min(gap.max(0.0));
        }
    }
    best
}

/// Rule-based driver: accelerate when the front cone is clear beyond 4 m,
/// hold half speed between 2 and 4 m, brake below 2 m.
pub fn default_policy(state: &PomdpState, v_max: f64) -> Action {
    default_action(front_distance(state), state.ego.speed(), v_max)
}

pub fn default_action(d: f64, v: f64, v_max: f64) -> Action {
    if d > CAUTION_FAR_M {
        Action::Acc
    } else if d >= CAUTION_NEAR_M {
        let half = 0.5 * v_max;
        if v < half {
            Action::Acc
        } else if v <= half + HALF_SPEED_TOL {
            Action::Maintain
        } else {
            Action::Dec
        }
    } else {
        Action::Dec
    }
}

/// Noise stream of scenario `seed` at tree depth `depth`.
pub fn scenario_rng(seed: u64, depth: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(crate::sim::splitmix(seed ^ crate::sim::splitmix(depth as u64 + 1)))
}

/// Discounted return of the default policy from `state` until `max_depth`,
/// on scenario `seed`'s noise.
pub fn default_rollout(map: &RoadMap, state: &PomdpState, seed: u64, config: &SearchConfig) -> f64 {
    let mut s = state.clone();
    let mut total = 0.0;
    let mut disc = 1.0;
    while s.depth < config.max_depth && !s.collided {
        let a = default_policy(&s, config.v_max);
        let mut rng = scenario_rng(seed, s.depth);
        let (n, r) = pomdp_transition(map, &s, a, config, &mut rng);
        total += disc * r;
        disc *= config.discount;
        s = n;
    }
    total
}

/// Roll-out baseline: each action followed by the default policy, averaged
/// over `num_scenarios` sampled scenarios of depth `max_depth`.
pub fn rollout_plan<R: Rng + ?Sized>(
    input: &PlannerInput<'_>,
    beliefs: &BTreeMap<AgentId, AgentBelief>,
    config: &SearchConfig,
    rng: &mut R,
) -> (Action, [f64; 3]) {
    let scenarios = sample_scenarios(input, beliefs, config, rng);
    let mut values = [0.0; 3];
    for a in Action::ALL {
        let mut sum = 0.0;
        for sc in &scenarios {
            let mut r0 = scenario_rng(sc.seed, 0);
            let (n, r) = pomdp_transition(input.map, &sc.state, a, config, &mut r0);
            sum += r + config.discount * default_rollout(input.map, &n, sc.seed, config);
        }
        values[a.index()] = sum / scenarios.len() as f64;
    }
    (argmax_action(&values), values)
}

/// First action (in tie-break order) with the largest value.
pub fn argmax_action(values: &[f64; 3]) -> Action {
    let mut best = Action::Acc;
    for a in Action::ALL {
        if values[a.index()] > values[best.index()] {
            best = a;
        }
    }
    best
}

/// Straight-line path along `state`'s heading, for agents that cannot be
/// placed on the lane network.
pub fn straight_ahead(state: &AgentState, length: f64) -> Route {
    let f = Vec2::from_angle(state.heading);
    Route::from_polyline(
        crate::geom::Polyline::new(alloc::vec![state.position, state.position + f * length]).expect("positive length"),
    )
}
