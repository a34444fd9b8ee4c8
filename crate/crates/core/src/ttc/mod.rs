//! Lane-locked baseline: agents stay on their route polyline and scale
//! their speed with the time to collision.

use crate::agents::{footprint_at, footprint_gap, AgentProfile, AgentState};
use crate::gamma::Neighbor;
use crate::geom::Vec2;
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TtcParams {
    pub ttc_threshold: f64,
    pub min_gap: f64,
    pub horizon: f64,
    pub sample_dt: f64,
    /// Agents farther than this (center to center) are not considered.
    pub search_radius: f64,
}

impl Default for TtcParams {
    fn default() -> Self {
        TtcParams { ttc_threshold: 4.0, min_gap: 1.0, horizon: 10.0, sample_dt: 0.1, search_radius: 40.0 }
    }
}

impl TtcParams {
    pub fn validate(&self) -> Result<(), &'static str> {
        let all = [self.ttc_threshold, self.min_gap, self.horizon, self.sample_dt, self.search_radius];
        if all.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err("ttc parameters must be positive");
        }
        Ok(())
    }
}

/// First sampled time at which the agent, moving along its route at its
/// current speed, comes within `min_gap` (footprint clearance) of another
/// agent ahead of it extrapolated at constant velocity. Infinite if none
/// within the horizon.
pub fn ttc(agent: &AgentState, profile: &AgentProfile, others: &[Neighbor], params: &TtcParams) -> f64 {
    let line = agent.route.polyline();
    let speed = agent.speed();
    let reach = profile.circumradius();
    let steps = math::round(params.horizon / params.sample_dt) as usize;
    for k in 0..=steps {
        let t = k as f64 * params.sample_dt;
        let arc = agent.progress + speed * t;
        let pos = line.point_at(arc);
        let dir = line.tangent_at(arc);
        let me = footprint_at(pos, dir.angle(), profile);
        for o in others {
            let op = o.position + o.velocity * t;
            let rel = op - pos;
            if rel.dot(dir) <= 0.0 {
                continue;
            }
            if rel.norm() - reach - o.profile.circumradius() > params.min_gap {
                continue;
            }
            let (gap, _) = footprint_gap(&me, &footprint_at(op, o.heading, &o.profile));
            if gap <= params.min_gap + 1e-9 {
                return t;
            }
        }
    }
    f64::INFINITY
}

/// Linear ramp from standstill at zero TTC to `pref_speed` at the threshold.
pub fn ttc_speed(ttc: f64, pref_speed: f64, params: &TtcParams) -> f64 {
    pref_speed * (ttc / params.ttc_threshold).clamp(0.0, 1.0)
}

pub fn ttc_step(agent: &AgentState, profile: &AgentProfile, others: &[Neighbor], params: &TtcParams) -> f64 {
    ttc_speed(ttc(agent, profile, others, params), profile.pref_speed(), params)
}

/// Moves the agent `speed · dt` along its route, with the heading locked to
/// the route tangent.
pub fn advance_on_route(agent: &AgentState, speed: f64, dt: f64) -> AgentState {
    let mut next = agent.clone();
    let line = agent.route.polyline();
    let arc = (agent.progress + speed * dt).min(line.length());
    let moved = arc - agent.progress;
    next.progress = arc;
    next.position = line.point_at(arc);
    let t = line.tangent_at(arc);
    next.heading = t.angle();
    next.velocity = if dt > 0.0 { t * (moved / dt) } else { Vec2::ZERO };
    if next.velocity.norm() < crate::agents::STATIONARY_SPEED {
        next.stationary_time += dt;
    } else {
        next.stationary_time = 0.0;
    }
    next
}
