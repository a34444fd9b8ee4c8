//! Belief-tracker convergence on synthetic agents with known hidden states.

use crowdsim_core::agents::{AgentClass, AgentProfile, AgentState};
use crowdsim_core::belief::{hypothesis_step, init_belief, AgentType, HiddenState, MotionContext, DEFAULT_SIGMA};
use crowdsim_core::gamma::GammaParams;
use crowdsim_core::geom::Vec2;
use crowdsim_core::roadnet::{generate_scenario, Route, ScenarioKind, ScenarioParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct ConvergenceSetup {
    pub agents: usize,
    pub max_updates: usize,
    /// Posterior mass on the truth that counts as converged.
    pub threshold: f64,
    pub dt: f64,
    pub sigma: f64,
    pub max_routes: usize,
    pub seed: u64,
}

impl Default for ConvergenceSetup {
    fn default() -> Self {
        ConvergenceSetup {
            agents: 100,
            max_updates: 20,
            threshold: 0.9,
            dt: 1.0 / 3.0,
            sigma: DEFAULT_SIGMA,
            max_routes: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub agent: usize,
    pub true_type: &'static str,
    pub routes: usize,
    /// First update after which the truth held `threshold` mass.
    pub converged_at: Option<usize>,
    pub final_mass: f64,
}

/// Cars approaching an unsignalised junction, each moving by its true
/// hypothesis model plus Gaussian displacement noise, tracked from a
/// uniform prior.
pub fn belief_convergence(setup: &ConvergenceSetup) -> Vec<ConvergenceRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let map = generate_scenario(ScenarioKind::Intersection, &ScenarioParams::default(), setup.seed)
        .expect("default intersection is valid");
    let profile = AgentProfile::default_for(AgentClass::Car);
    let gamma = GammaParams::default();
    let noise = Normal::new(0.0, setup.sigma).expect("finite sigma");
    (0..setup.agents)
        .map(|agent| {
            let entry = map.spawn_segments[rng.random_range(0..map.spawn_segments.len())];
            let seg = map.lanes.segment(entry).expect("spawn segment exists");
            let arc = seg.centerline.length() - rng.random_range(3.0..10.0);
            let pos = seg.centerline.point_at(arc);
            let heading = seg.centerline.tangent_at(arc).angle();
            let speed = rng.random_range(2.0..4.0);
            let tmp = AgentState::new(pos, heading, speed, Route::from_polyline(seg.centerline.clone()));
            let mut belief = init_belief(&tmp, &map, setup.max_routes, &mut rng).expect("agent is on its lane");
            let truth = HiddenState {
                agent_type: if rng.random_bool(0.5) { AgentType::Distracted } else { AgentType::Attentive },
                route_index: rng.random_range(0..belief.routes().len()),
            };
            let route = belief.route(truth).clone();
            let mut state = AgentState::new(pos, heading, speed, route.clone());
            state.progress = route.polyline().project(pos).arc;
            let ctx = MotionContext { map: &map, profile: &profile, neighbors: &[], gamma: &gamma };
            let mut converged_at = None;
            for k in 1..=setup.max_updates {
                let mut next = hypothesis_step(truth.agent_type, &route, &state, &ctx, setup.dt);
                next.position += Vec2::new(noise.sample(&mut rng), noise.sample(&mut rng));
                next.update_progress();
                belief = belief.update(&state, next.position, &ctx, setup.dt, setup.sigma);
                state = next;
                if converged_at.is_none() && belief.prob(truth) > setup.threshold {
                    converged_at = Some(k);
                }
            }
            ConvergenceRow {
                agent,
                true_type: match truth.agent_type {
                    AgentType::Distracted => "distracted",
                    AgentType::Attentive => "attentive",
                },
                routes: belief.routes().len(),
                converged_at,
                final_mass: belief.prob(truth),
            }
        })
        .collect()
}

/// Fraction of rows that converged.
pub fn converged_fraction(rows: &[ConvergenceRow]) -> f64 {
    rows.iter().filter(|r| r.converged_at.is_some()).count() as f64 / rows.len().max(1) as f64
}
