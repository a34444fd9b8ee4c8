//! Ego-vehicle drivers running inside a crowd [`World`], and the per-step
//! bookkeeping used to compare them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ego_step, plan, rollout_plan, straight_ahead, Action, PlannerInput, SearchConfig};
use crate::agents::{collides, AgentProfile, AgentState};
use crate::belief::{init_belief, AgentBelief, MotionContext, DEFAULT_SIGMA};
use crate::gamma::{apply_velocity, gamma_step, Neighbor};
use crate::roadnet::{LaneRef, Route};
use crate::sim::{extend_route, AgentId, Behavior, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriverKind {
    /// The crowd model itself drives the ego at the simulation rate.
    Gamma,
    Rollout,
    Pomdp,
}

impl DriverKind {
    pub const ALL: [DriverKind; 3] = [DriverKind::Rollout, DriverKind::Gamma, DriverKind::Pomdp];

    pub fn name(self) -> &'static str {
        match self {
            DriverKind::Gamma => "gamma",
            DriverKind::Rollout => "rollout",
            DriverKind::Pomdp => "pomdp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        DriverKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Agents farther than this from the ego are not tracked.
pub const TRACK_RADIUS_M: f64 = 40.0;
const STRAIGHT_PATH_M: f64 = 30.0;
/// Routes offered per agent.
pub const MAX_ROUTES: usize = 4;
/// A gamma-driven step counts as braking when the speed drops by more than
/// this over the step (m/s).
pub const GAMMA_DEC_DROP: f64 = 0.5;

/// Beliefs over the agents near the ego, updated once per planning step.
#[derive(Clone, Debug, Default)]
pub struct BeliefTracker {
    beliefs: BTreeMap<AgentId, AgentBelief>,
    /// State and lane segment at the previous update.
    last: BTreeMap<AgentId, (AgentState, Option<u32>)>,
}

impl BeliefTracker {
    pub fn beliefs(&self) -> &BTreeMap<AgentId, AgentBelief> {
        &self.beliefs
    }

    fn fresh<R: Rng + ?Sized>(world: &World, s: &AgentState, rng: &mut R) -> AgentBelief {
        init_belief(s, world.map(), MAX_ROUTES, rng)
            .unwrap_or_else(|_| AgentBelief::uniform(alloc::vec![straight_ahead(s, STRAIGHT_PATH_M)]))
    }

    /// Bayes update from the previous call's snapshot to the world's
    /// current one; `dt` is the time between the two.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        world: &World,
        ego: AgentId,
        config: &SearchConfig,
        dt: f64,
        rng: &mut R,
    ) {
        let Some(e) = world.agent(ego) else { return };
        let ego_pos = e.state.position;
        let mut beliefs = BTreeMap::new();
        let mut last = BTreeMap::new();
        let prev_neighbors: Vec<(AgentId, Neighbor)> = self
            .last
            .iter()
            .map(|(id, (s, _))| {
                (
                    *id,
                    Neighbor::of(
                        s,
                        &world
                            .agent(*id)
                            .map_or(AgentProfile::default_for(crate::agents::AgentClass::Car), |a| a.profile),
                    ),
                )
            })
            .collect();
        for a in world.agents() {
            if a.id == ego || a.state.position.distance(ego_pos) > TRACK_RADIUS_M {
                continue;
            }
            let lane = world.map().lanes.locate(a.state.position, a.state.heading).ok().map(|r| r.segment);
            let b = match (self.beliefs.get(&a.id), self.last.get(&a.id)) {
                (Some(b), Some((prev, prev_lane))) => {
                    let nbs: Vec<Neighbor> = prev_neighbors
                        .iter()
                        .filter(|(id, n)| {
                            *id != a.id && n.position.distance(prev.position) <= config.gamma.neighbor_radius
                        })
                        .map(|(_, n)| *n)
                        .collect();
                    let ctx =
                        MotionContext { map: world.map(), profile: &a.profile, neighbors: &nbs, gamma: &config.gamma };
                    let b = b.update(prev, a.state.position, &ctx, dt, DEFAULT_SIGMA);
                    if lane.is_some() && lane != *prev_lane {
                        b.refresh(&a.state, world.map(), MAX_ROUTES, rng).unwrap_or(b)
                    } else {
                        b
                    }
                }
                _ => Self::fresh(world, &a.state, rng),
            };
            beliefs.insert(a.id, b);
            last.insert(a.id, (a.state.clone(), lane));
        }
        self.beliefs = beliefs;
        self.last = last;
    }
}

/// What happened during one planning step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EgoStep {
    /// Longitudinal action (for the gamma driver: `Dec` when it braked).
    pub action: Action,
    pub collided: bool,
    /// Ego speed at the end of the step.
    pub speed: f64,
    /// Value of each action as the planner saw it (planning drivers only).
    pub root_values: Option<[f64; 3]>,
    /// Mean belief entropy over the tracked agents (nats).
    pub belief_entropy: Option<f64>,
}

pub struct EgoDriver {
    pub kind: DriverKind,
    pub config: SearchConfig,
    pub ego: AgentId,
    /// When off, the planner sees uniform beliefs (as the roll-out
    /// baseline does).
    pub track_beliefs: bool,
    tracker: BeliefTracker,
    action: Action,
    rng: ChaCha8Rng,
    /// Simulation frames per planning step and the leftover fraction.
    step_time: f64,
    clock: f64,
}

impl EgoDriver {
    /// Places the ego at the start of spawn segment `entry` (agents touching
    /// it are removed) and returns its driver.
    pub fn spawn(world: &mut World, kind: DriverKind, config: SearchConfig, entry: u32, seed: u64) -> EgoDriver {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile = super::ego_profile(config.v_max);
        let state = ego_start(world, entry, &mut rng);
        let clashing: Vec<AgentId> =
            world.agents().iter().filter(|a| collides(&state, &profile, &a.state, &a.profile)).map(|a| a.id).collect();
        for id in clashing {
            world.remove_agent(id);
        }
        let ego = world.add_agent(profile, state, Behavior::External, None);
        EgoDriver {
            kind,
            config,
            ego,
            track_beliefs: true,
            tracker: BeliefTracker::default(),
            action: Action::Acc,
            rng,
            step_time: config.planning_dt,
            clock: 0.0,
        }
    }

    pub fn beliefs(&self) -> &BTreeMap<AgentId, AgentBelief> {
        self.tracker.beliefs()
    }

    fn decide(&mut self, world: &World) -> (Action, Option<[f64; 3]>) {
        let ego = world.agent(self.ego).expect("ego present");
        let others: Vec<(AgentId, AgentProfile, AgentState)> = world
            .agents()
            .iter()
            .filter(|a| a.id != self.ego && a.state.position.distance(ego.state.position) <= TRACK_RADIUS_M)
            .map(|a| (a.id, a.profile, a.state.clone()))
            .collect();
        let input = PlannerInput { map: world.map(), ego: &ego.state, ego_profile: &ego.profile, others: &others };
        let mut uniform = || -> BTreeMap<AgentId, AgentBelief> {
            others.iter().map(|(id, _, s)| (*id, BeliefTracker::fresh(world, s, &mut self.rng))).collect()
        };
        match self.kind {
            DriverKind::Pomdp => {
                let out = if self.track_beliefs {
                    plan(&input, self.tracker.beliefs(), &self.config, &mut self.rng)
                } else {
                    let b = uniform();
                    plan(&input, &b, &self.config, &mut self.rng)
                };
                (out.action, Some(out.root_values))
            }
            // the baseline keeps no beliefs
            DriverKind::Rollout => {
                let b = uniform();
                let (a, v) = rollout_plan(&input, &b, &self.config, &mut self.rng);
                (a, Some(v))
            }
            DriverKind::Gamma => (Action::Maintain, None),
        }
    }

    /// Runs the world for one planning step (the action is chosen on the
    /// current frame and applied at once). Agents that collide with the ego
    /// are removed.
    pub fn step(&mut self, world: &mut World) -> EgoStep {
        self.step_with(world, |_| {})
    }

    /// As [`EgoDriver::step`], calling `on_frame` after every simulated frame.
    pub fn step_with(&mut self, world: &mut World, mut on_frame: impl FnMut(&World)) -> EgoStep {
        let dt = world.config().dt;
        let start_speed = world.agent(self.ego).map_or(0.0, |a| a.state.speed());
        if self.kind == DriverKind::Pomdp && self.track_beliefs {
            self.tracker.update(world, self.ego, &self.config, self.step_time, &mut self.rng);
        }
        let (action, root_values) = self.decide(world);
        self.action = action;
        let belief_entropy = (self.kind == DriverKind::Pomdp && !self.tracker.beliefs().is_empty()).then(|| {
            let b = self.tracker.beliefs();
            b.values().map(AgentBelief::entropy).sum::<f64>() / b.len() as f64
        });
        let mut collided = false;
        self.clock += self.step_time;
        while self.clock > 0.5 * dt {
            self.clock -= dt;
            let decisions = world.decide_all();
            self.move_ego(world, dt);
            world.commit(&decisions);
            let ego = world.agent(self.ego).expect("ego present").clone();
            let hit: Vec<AgentId> = world
                .agents()
                .iter()
                .filter(|a| a.id != self.ego && collides(&ego.state, &ego.profile, &a.state, &a.profile))
                .map(|a| a.id)
                .collect();
            collided |= !hit.is_empty();
            for id in hit {
                world.remove_agent(id);
            }
            on_frame(world);
        }
        let speed = world.agent(self.ego).map_or(0.0, |a| a.state.speed());
        let action = match self.kind {
            DriverKind::Gamma if start_speed - speed > GAMMA_DEC_DROP => Action::Dec,
            DriverKind::Gamma if speed > start_speed + GAMMA_DEC_DROP => Action::Acc,
            DriverKind::Gamma => Action::Maintain,
            _ => self.action,
        };
        EgoStep { action, collided, speed, root_values, belief_entropy }
    }

    fn move_ego(&mut self, world: &mut World, dt: f64) {
        let v_max = self.config.v_max;
        let horizon = world.config().route_horizon;
        let ego = world.agent(self.ego).expect("ego present").clone();
        let mut next = match self.kind {
            DriverKind::Gamma => {
                let index = world.index();
                let i = world.agents().iter().position(|a| a.id == self.ego).expect("ego present");
                let p = world.config().gamma;
                let nbs = world.neighbors_of(&index, i, p.neighbor_radius, p.max_neighbors);
                let out = gamma_step(world.map(), &ego.state, &ego.profile, &nbs, None, &p, &mut self.rng);
                apply_velocity(&ego.state, &ego.profile, out.velocity, dt)
            }
            _ => ego_step(&ego.state, &ego.profile, self.action.accel(), v_max, dt),
        };
        let map = world.map().clone();
        extend_route(&map, &mut next, horizon, &mut self.rng);
        if next.route.remaining(next.progress) < 1.0 {
            // end of the network: start over at a random entry
            let entry = map.spawn_segments[self.rng.random_range(0..map.spawn_segments.len())];
            let speed = next.speed();
            next = ego_start(world, entry, &mut self.rng);
            next.velocity = next.velocity.normalized().unwrap_or_default() * speed;
        }
        if let Some(a) = world.agent_mut(self.ego) {
            a.state = next;
        }
    }
}

fn ego_start<R: Rng + ?Sized>(world: &World, entry: u32, rng: &mut R) -> AgentState {
    let map = world.map();
    let seg = map.lanes.segment(entry).expect("entry segment exists");
    let pos = seg.centerline.point_at(0.0);
    let heading = seg.centerline.tangent_at(0.0).angle();
    let mut s =
        AgentState::new(pos, heading, 0.0, Route::build(&map.lanes, LaneRef { segment: entry, arc: 0.0 }, &[entry]));
    extend_route(map, &mut s, world.config().route_horizon, rng);
    s
}

/// Per-driver totals over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DriveStats {
    pub steps: u64,
    pub collision_steps: u64,
    pub dec_steps: u64,
    pub speed_sum: f64,
}

impl DriveStats {
    pub fn record(&mut self, s: &EgoStep) {
        self.steps += 1;
        self.collision_steps += s.collided as u64;
        self.dec_steps += (s.action == Action::Dec) as u64;
        self.speed_sum += s.speed;
    }

    pub fn collision_rate(&self) -> f64 {
        self.collision_steps as f64 / self.steps.max(1) as f64
    }

    pub fn dec_rate(&self) -> f64 {
        self.dec_steps as f64 / self.steps.max(1) as f64
    }

    pub fn avg_speed(&self) -> f64 {
        self.speed_sum / self.steps.max(1) as f64
    }
}
