use alloc::vec::Vec;

use rand::Rng;

use super::capsule::{polygon_halfplane, relative_obstacle};
use super::{DiscModel, GammaParams};
use crate::agents::{AgentProfile, AgentState, STATIONARY_SPEED};
use crate::geom::{HalfPlane, Vec2};
use crate::math;

/// Frozen view of another agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub position: Vec2,
    pub heading: f64,
    pub velocity: Vec2,
    pub profile: AgentProfile,
}

impl Neighbor {
    pub fn of(state: &AgentState, profile: &AgentProfile) -> Self {
        Neighbor { position: state.position, heading: state.heading, velocity: state.velocity, profile: *profile }
    }
}

/// Reciprocal half-plane for relative position `p = p_B − p_A`, relative
/// velocity `v = v_A − v_B` and combined radius `r`. `share` is the part of
/// the required change that A takes on.
pub fn orca_halfplane(p: Vec2, v: Vec2, r: f64, tau: f64, dt: f64, v_a: Vec2, share: f64) -> HalfPlane {
    let dist_sq = p.norm_sq();
    let r_sq = r * r;
    let (direction, u) = if dist_sq > r_sq {
        let w = v - p / tau;
        let w_len_sq = w.norm_sq();
        let dot1 = w.dot(p);
        if dot1 < 0.0 && dot1 * dot1 > r_sq * w_len_sq {
            // cut-off circle
            let w_len = math::sqrt(w_len_sq);
            let unit_w = w / w_len;
            (Vec2::new(unit_w.y, -unit_w.x), unit_w * (r / tau - w_len))
        } else {
            let leg = math::sqrt(dist_sq - r_sq);
            let direction = if p.cross(w) > 0.0 {
                Vec2::new(p.x * leg - p.y * r, p.x * r + p.y * leg) / dist_sq
            } else {
                -Vec2::new(p.x * leg + p.y * r, -p.x * r + p.y * leg) / dist_sq
            };
            (direction, direction * v.dot(direction) - v)
        }
    } else {
        // already overlapping: resolve within one step
        let w = v - p / dt;
        let w_len = w.norm();
        let unit_w = if w_len > 1e-12 { w / w_len } else { -p.normalized().unwrap_or(Vec2::new(1.0, 0.0)) };
        (Vec2::new(unit_w.y, -unit_w.x), unit_w * (r / dt - w_len))
    };
    let point = v_a + u * share;
    HalfPlane::through(point, direction.perp()).expect("unit direction")
}

/// Responsibility share of the agent towards `nb`. A stationary neighbor is
/// treated as an obstacle and leaves the whole avoidance to the agent.
fn share(a: &AgentProfile, nb: &Neighbor) -> f64 {
    if nb.velocity.norm() < STATIONARY_SPEED {
        return 1.0;
    }
    let b = &nb.profile;
    let total = a.responsibility + b.responsibility;
    if total > 0.0 {
        a.responsibility / total
    } else {
        0.5
    }
}

fn pair_plane(agent: &AgentState, profile: &AgentProfile, nb: &Neighbor, params: &GammaParams) -> HalfPlane {
    let v_rel = agent.velocity - nb.velocity;
    let sh = share(profile, nb);
    match params.disc_model {
        DiscModel::Circumradius => orca_halfplane(
            nb.position - agent.position,
            v_rel,
            profile.circumradius() + nb.profile.circumradius() + params.safety_margin,
            params.tau,
            params.dt,
            agent.velocity,
            sh,
        ),
        DiscModel::Capsule => {
            let q = relative_obstacle(
                agent.position,
                agent.heading,
                profile,
                nb.position,
                nb.heading,
                &nb.profile,
                params.safety_margin,
            );
            polygon_halfplane(&q, v_rel, params.tau, params.dt, agent.velocity, sh)
        }
    }
}

/// One reciprocal half-plane per attended neighbor. Attention is drawn per
/// neighbor per call.
pub fn geometric_halfplanes<R: Rng + ?Sized>(
    agent: &AgentState,
    profile: &AgentProfile,
    neighbors: &[Neighbor],
    params: &GammaParams,
    rng: &mut R,
) -> Vec<HalfPlane> {
    let mut planes = Vec::with_capacity(neighbors.len());
    for nb in neighbors {
        if profile.attention < 1.0 && !rng.random_bool(profile.attention.clamp(0.0, 1.0)) {
            continue;
        }
        planes.push(pair_plane(agent, profile, nb, params));
    }
    planes
}
