//! Context-aware reciprocal velocity selection: the new velocity is the
//! point closest to the preferred velocity inside the kinematic set, the
//! reciprocal half-planes of nearby agents and the road-context half-planes.

mod context;
mod orca;

mod capsule;
pub use capsule::{capsule, polygon_halfplane, relative_obstacle};
pub use context::{contextual_halfplanes, ContextConstraints, ContextKind, PedestrianContext};
pub use orca::{geometric_halfplanes, orca_halfplane, Neighbor};

use alloc::vec::Vec;

use rand::Rng;

use crate::agents::{integrate_bicycle, integrate_holonomic, AgentClass, AgentProfile, AgentState};
use crate::geom::{
    least_violation_fallback, solve_or_fallback, solve_velocity_program, ConvexPolygon, HalfPlane, Vec2,
};
use crate::math;
use crate::roadnet::RoadMap;

/// How neighbor footprints are turned into discs for the reciprocal planes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiscModel {
    /// Each footprint is replaced by its circumscribed disc.
    Circumradius,
    /// Each footprint is swept as a capsule (a disc moved along the body
    /// axis); the plane comes from the rounded relative obstacle.
    Capsule,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaParams {
    pub tau: f64,
    pub tau_opp: f64,
    pub tau_side: f64,
    pub neighbor_radius: f64,
    pub max_neighbors: usize,
    pub lookahead_dist: f64,
    pub dt: f64,
    pub disc_model: DiscModel,
    /// Extra clearance added to every reciprocal constraint (m).
    pub safety_margin: f64,
    /// On infeasibility, drop the road-context planes before relaxing the
    /// reciprocal ones.
    pub soft_context: bool,
}

impl Default for GammaParams {
    fn default() -> Self {
        GammaParams {
            tau: 4.0,
            tau_opp: 2.0,
            tau_side: 2.0,
            neighbor_radius: 15.0,
            max_neighbors: 10,
            lookahead_dist: 6.0,
            dt: 0.05,
            disc_model: DiscModel::Capsule,
            safety_margin: 0.3,
            soft_context: true,
        }
    }
}

impl GammaParams {
    pub fn validate(&self) -> Result<(), &'static str> {
        let pos = [self.tau, self.tau_opp, self.tau_side, self.neighbor_radius, self.lookahead_dist, self.dt];
        if pos.iter().any(|x| !(*x > 0.0) || !x.is_finite()) || self.max_neighbors == 0 {
            return Err("gamma parameters must be positive");
        }
        if !(self.safety_margin >= 0.0) {
            return Err("safety_margin must be non-negative");
        }
        Ok(())
    }
}

/// Speed toward the route point `lookahead_dist` past the agent's
/// projection, tapering to zero within 1 m of the route end.
pub fn preferred_velocity(agent: &AgentState, profile: &AgentProfile, params: &GammaParams) -> Vec2 {
    preferred_velocity_at_speed(agent, profile.pref_speed(), params.lookahead_dist)
}

pub fn preferred_velocity_at_speed(agent: &AgentState, speed: f64, lookahead: f64) -> Vec2 {
    let line = agent.route.polyline();
    let target = line.point_at(agent.progress + lookahead);
    let to = target - agent.position;
    let Some(dir) = to.normalized() else {
        return Vec2::ZERO;
    };
    let to_end = agent.position.distance(line.end());
    dir * (speed * to_end.min(1.0))
}

/// Velocities reachable within one control interval.
pub fn kinematic_set(agent: &AgentState, profile: &AgentProfile, dt: f64) -> ConvexPolygon {
    if profile.class == AgentClass::Pedestrian {
        return ConvexPolygon::regular(Vec2::ZERO, profile.max_speed, 16, 0.0).expect("positive max speed");
    }
    let s = agent.velocity.dot(Vec2::from_angle(agent.heading)).max(0.0);
    let lo = (s - profile.max_accel * dt).max(0.0);
    let hi = (s + profile.max_accel * dt).min(profile.max_speed).max(lo + 1e-6);
    let half = (s / profile.wheelbase * math::tan(profile.max_steer) * dt).max(MIN_TURN_ARC);
    let mut pts = Vec::with_capacity(7);
    for i in 0..5 {
        let a = agent.heading - half + half * i as f64 / 2.0;
        pts.push(Vec2::from_angle(a) * hi);
    }
    pts.push(Vec2::from_angle(agent.heading - half) * lo);
    pts.push(Vec2::from_angle(agent.heading + half) * lo);
    ConvexPolygon::hull(&pts).unwrap_or_else(|_| {
        let f = Vec2::from_angle(agent.heading);
        ConvexPolygon::new(alloc::vec![f * lo - f.perp() * 1e-6, f * hi, f * lo + f.perp() * 1e-6])
            .expect("fallback wedge")
    })
}

/// Smallest half-opening of the heading arc, so the set never collapses.
const MIN_TURN_ARC: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct GammaOutcome {
    pub velocity: Vec2,
    /// The feasible set was empty and the least-violation velocity was used.
    pub fallback: bool,
    pub planes: Vec<HalfPlane>,
}

/// One velocity decision for `agent` given its neighbors (already filtered
/// to `neighbor_radius`/`max_neighbors`) and the road context.
pub fn gamma_step<R: Rng + ?Sized>(
    map: &RoadMap,
    agent: &AgentState,
    profile: &AgentProfile,
    neighbors: &[Neighbor],
    ped: Option<&PedestrianContext>,
    params: &GammaParams,
    rng: &mut R,
) -> GammaOutcome {
    let v_pref = preferred_velocity(agent, profile, params);
    let kin = kinematic_set(agent, profile, params.dt);
    let mut planes = geometric_halfplanes(agent, profile, neighbors, params, rng);
    let n_geo = planes.len();
    planes.extend(contextual_halfplanes(agent, profile, map, ped, params).planes);
    let (velocity, fallback) = match solve_velocity_program(&kin, &planes, v_pref) {
        Ok(v) => (v, false),
        Err(_) if params.soft_context => (solve_or_fallback(&kin, &planes[..n_geo], v_pref).0, true),
        Err(_) => (least_violation_fallback(&kin, &planes), true),
    };
    GammaOutcome { velocity, fallback, planes }
}

/// Advance `agent` so that it follows `v` as closely as its kinematics
/// allow: holonomic for pedestrians, bicycle otherwise.
pub fn apply_velocity(agent: &AgentState, profile: &AgentProfile, v: Vec2, dt: f64) -> AgentState {
    let mut next = if profile.class == AgentClass::Pedestrian {
        integrate_holonomic(agent, v.clamp_norm(profile.max_speed), dt)
    } else {
        let speed = v.norm().min(profile.max_speed);
        let steer = if speed > 1e-9 {
            let dphi = math::wrap_angle(v.angle() - agent.heading);
            math::atan(dphi * profile.wheelbase / (speed * dt))
        } else {
            0.0
        };
        integrate_bicycle(agent, profile, speed, steer, dt)
    };
    next.update_progress();
    next
}
