//! Factored histogram filter over each exo-agent's type and intended route.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{AgentProfile, AgentState};
use crate::gamma::{apply_velocity, gamma_step, GammaParams, Neighbor};
use crate::geom::Vec2;
use crate::math;
use crate::roadnet::{route_candidates, RoadError, RoadMap, Route};
use crate::sim::AgentId;
use crate::ttc::advance_on_route;

pub const PROB_FLOOR: f64 = 1e-4;
pub const DEFAULT_SIGMA: f64 = 0.1;
/// Route candidates are enumerated this far ahead (m).
pub const ROUTE_HORIZON_M: f64 = 60.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgentType {
    /// Tracks its route at constant speed, ignoring others.
    Distracted,
    /// Avoids others with the crowd model.
    Attentive,
}

impl AgentType {
    pub const ALL: [AgentType; 2] = [AgentType::Distracted, AgentType::Attentive];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HiddenState {
    pub agent_type: AgentType,
    pub route_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentBelief {
    hypotheses: Vec<HiddenState>,
    probs: Vec<f64>,
    routes: Vec<Route>,
}

/// What an attentive hypothesis needs to predict a step.
#[derive(Clone, Copy, Debug)]
pub struct MotionContext<'a> {
    pub map: &'a RoadMap,
    pub profile: &'a AgentProfile,
    /// The rest of the previous frame, as seen by this agent.
    pub neighbors: &'a [Neighbor],
    pub gamma: &'a GammaParams,
}

/// Uniform prior over both types and the route candidates of a lane-bound
/// agent.
pub fn init_belief<R: Rng + ?Sized>(
    agent: &AgentState,
    map: &RoadMap,
    max_routes: usize,
    rng: &mut R,
) -> Result<AgentBelief, RoadError> {
    let here = map.lanes.locate(agent.position, agent.heading)?;
    Ok(AgentBelief::uniform(route_candidates(&map.lanes, here, ROUTE_HORIZON_M, max_routes, rng)))
}

impl AgentBelief {
    /// Uniform over {distracted, attentive} × `routes`. Panics on an empty
    /// route list.
    pub fn uniform(routes: Vec<Route>) -> Self {
        assert!(!routes.is_empty(), "belief needs at least one route");
        let hypotheses: Vec<HiddenState> = AgentType::ALL
            .iter()
            .flat_map(|&t| (0..routes.len()).map(move |r| HiddenState { agent_type: t, route_index: r }))
            .collect();
        let p = 1.0 / hypotheses.len() as f64;
        AgentBelief { probs: alloc::vec![p; hypotheses.len()], hypotheses, routes }
    }

    /// Explicit distribution over {distracted, attentive} × `routes`, in
    /// that order. Normalized on construction.
    pub fn with_probs(routes: Vec<Route>, probs: Vec<f64>) -> Self {
        let mut b = AgentBelief::uniform(routes);
        assert_eq!(probs.len(), b.probs.len(), "one probability per hypothesis");
        let total: f64 = probs.iter().sum();
        assert!(total > 0.0 && probs.iter().all(|p| *p >= 0.0), "probabilities must be non-negative");
        b.probs = probs.into_iter().map(|p| p / total).collect();
        b
    }

    pub fn hypotheses(&self) -> &[HiddenState] {
        &self.hypotheses
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn route(&self, h: HiddenState) -> &Route {
        &self.routes[h.route_index]
    }

    pub fn prob(&self, h: HiddenState) -> f64 {
        self.hypotheses.iter().position(|x| *x == h).map_or(0.0, |i| self.probs[i])
    }

    /// Marginal probability of each route.
    pub fn route_marginal(&self) -> Vec<f64> {
        let mut m = alloc::vec![0.0; self.routes.len()];
        for (h, p) in self.hypotheses.iter().zip(&self.probs) {
            m[h.route_index] += p;
        }
        m
    }

    pub fn type_marginal(&self, t: AgentType) -> f64 {
        self.hypotheses.iter().zip(&self.probs).filter(|(h, _)| h.agent_type == t).map(|(_, p)| p).sum()
    }

    /// Shannon entropy (nats).
    pub fn entropy(&self) -> f64 {
        self.probs.iter().filter(|p| **p > 0.0).map(|p| -p * math::ln(*p)).sum()
    }

    /// Bayes update from one observed step. Every probability is floored at
    /// [`PROB_FLOOR`] afterwards; if every likelihood underflows the prior
    /// is kept.
    pub fn update(
        &self,
        prev: &AgentState,
        observed: Vec2,
        ctx: &MotionContext<'_>,
        dt: f64,
        sigma: f64,
    ) -> AgentBelief {
        assert!(dt > 0.0 && sigma > 0.0, "dt and sigma must be positive");
        let obs = observed - prev.position;
        let means: Vec<Vec2> = self.hypotheses.iter().map(|h| self.predict_displacement(*h, prev, ctx, dt)).collect();
        let likelihoods: Vec<f64> =
            means.iter().map(|m| math::exp(-(obs - *m).norm_sq() / (2.0 * sigma * sigma))).collect();
        self.posterior(&likelihoods)
    }

    /// Posterior for the given per-hypothesis likelihoods.
    pub fn posterior(&self, likelihoods: &[f64]) -> AgentBelief {
        let mut post: Vec<f64> = self.probs.iter().zip(likelihoods).map(|(p, l)| p * l).collect();
        let total: f64 = post.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return self.clone();
        }
        for p in &mut post {
            *p = (*p / total).max(PROB_FLOOR);
        }
        let total: f64 = post.iter().sum();
        for p in &mut post {
            *p /= total;
        }
        AgentBelief { hypotheses: self.hypotheses.clone(), probs: post, routes: self.routes.clone() }
    }

    /// Mean one-step displacement of `prev` under hypothesis `h`.
    pub fn predict_displacement(&self, h: HiddenState, prev: &AgentState, ctx: &MotionContext<'_>, dt: f64) -> Vec2 {
        predict_displacement(h.agent_type, self.route(h), prev, ctx, dt)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HiddenState {
        let w = WeightedIndex::new(&self.probs).expect("normalized belief");
        self.hypotheses[w.sample(rng)]
    }

    /// Re-enumerate routes from the agent's current lane and carry the old
    /// mass over to the new routes that continue an old one. Meant to be
    /// called when the agent enters a new segment (so a passed fork prunes
    /// the branches not taken). Falls back to uniform when no old route
    /// survives.
    pub fn refresh<R: Rng + ?Sized>(
        &self,
        agent: &AgentState,
        map: &RoadMap,
        max_routes: usize,
        rng: &mut R,
    ) -> Result<AgentBelief, RoadError> {
        let here = map.lanes.locate(agent.position, agent.heading)?;
        let routes = route_candidates(&map.lanes, here, ROUTE_HORIZON_M, max_routes, rng);
        let mut fresh = AgentBelief::uniform(routes);
        // old route r continues into new route r' when r' (from its first
        // segment on) agrees with r for as long as both last
        let follows = |old: &Route, new: &Route| {
            let (o, n) = (old.segments(), new.segments());
            match o.iter().position(|s| Some(s) == n.first()) {
                Some(k) => o[k..].iter().zip(n).all(|(a, b)| a == b),
                None => false,
            }
        };
        let mut mass = alloc::vec![0.0; fresh.probs.len()];
        for (h, p) in self.hypotheses.iter().zip(&self.probs) {
            let old = &self.routes[h.route_index];
            let heirs: Vec<usize> = (0..fresh.routes.len()).filter(|&r| follows(old, &fresh.routes[r])).collect();
            for &r in &heirs {
                let j = fresh
                    .hypotheses
                    .iter()
                    .position(|x| x.agent_type == h.agent_type && x.route_index == r)
                    .expect("every type × route hypothesis exists");
                mass[j] += p / heirs.len() as f64;
            }
        }
        let total: f64 = mass.iter().sum();
        if total > 0.0 {
            fresh.probs = mass.iter().map(|m| (m / total).max(PROB_FLOOR)).collect();
            let t: f64 = fresh.probs.iter().sum();
            for p in &mut fresh.probs {
                *p /= t;
            }
        }
        Ok(fresh)
    }
}

/// Mean one-step displacement of an agent of type `t` following `route`:
/// constant speed along the route when distracted, one crowd-model step
/// when attentive.
pub fn predict_displacement(t: AgentType, route: &Route, prev: &AgentState, ctx: &MotionContext<'_>, dt: f64) -> Vec2 {
    if t == AgentType::Distracted {
        // along the route's shape, without pulling a laterally offset agent onto it
        let line = route.polyline();
        let a = line.project(prev.position).arc;
        let b = (a + prev.speed() * dt).min(line.length());
        return line.point_at(b) - line.point_at(a);
    }
    hypothesis_step(t, route, prev, ctx, dt).position - prev.position
}

/// Noise-free next state of an agent of type `t` following `route`.
pub fn hypothesis_step(t: AgentType, route: &Route, prev: &AgentState, ctx: &MotionContext<'_>, dt: f64) -> AgentState {
    let mut s = prev.clone();
    if s.route != *route {
        s.route = route.clone();
        s.progress = route.polyline().project(prev.position).arc;
    }
    match t {
        AgentType::Distracted => advance_on_route(&s, s.speed(), dt),
        AgentType::Attentive => {
            let params = GammaParams { dt, ..*ctx.gamma };
            // only consumed by attention draws
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let out = gamma_step(ctx.map, &s, ctx.profile, ctx.neighbors, None, &params, &mut rng);
            apply_velocity(&s, ctx.profile, out.velocity, dt)
        }
    }
}

/// One hidden state per agent, drawn independently.
pub fn joint_sample<R: Rng + ?Sized>(
    beliefs: &BTreeMap<AgentId, AgentBelief>,
    rng: &mut R,
) -> BTreeMap<AgentId, HiddenState> {
    beliefs.iter().map(|(id, b)| (*id, b.sample(rng))).collect()
}
