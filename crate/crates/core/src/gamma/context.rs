use alloc::vec::Vec;

use super::GammaParams;
use crate::agents::{extent_along, AgentProfile, AgentState};
use crate::geom::{HalfPlane, Polyline, Vec2};
use crate::roadnet::{LaneSegment, RoadMap};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContextKind {
    /// Boundary with opposite-direction traffic, at clearance `d`.
    OppositeLane {
        d: f64,
    },
    /// Road edge, at clearance `d`.
    RoadEdge {
        d: f64,
    },
    Custom,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContextConstraints {
    pub planes: Vec<HalfPlane>,
    pub kinds: Vec<ContextKind>,
}

impl ContextConstraints {
    fn push(&mut self, plane: HalfPlane, kind: ContextKind) {
        self.planes.push(plane);
        self.kinds.push(kind);
    }
}

/// Pedestrian-specific context.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PedestrianContext {
    /// While crossing, road edges do not constrain the pedestrian.
    pub crossing: bool,
}

/// Signed clearance and inward normal of `boundary` as seen from `pos`.
/// `inside` is any point on the side the agent should stay on. Returns None
/// when `pos` projects onto an end of the boundary from beyond it.
fn boundary_clearance(boundary: &Polyline, pos: Vec2, inside: Vec2) -> Option<(f64, Vec2, Vec2)> {
    let pr = boundary.project(pos);
    let t = boundary.tangent_at(pr.arc);
    let along = (pos - pr.point).dot(t);
    if (pr.arc <= 0.0 && along < -1e-6) || (pr.arc >= boundary.length() && along > 1e-6) {
        return None;
    }
    let side = if t.cross(inside - pr.point) >= 0.0 { 1.0 } else { -1.0 };
    let n = t.perp() * side;
    Some(((pos - pr.point).dot(n), n, pr.point))
}

/// Plane bounding the speed toward a boundary at clearance `d` by `d / tau`.
fn clearance_plane(n: Vec2, d: f64, tau: f64) -> HalfPlane {
    HalfPlane::through(n * (-d / tau), n).expect("unit normal")
}

fn lane_of<'a>(agent: &AgentState, map: &'a RoadMap) -> Option<(&'a LaneSegment, f64)> {
    let r = match agent.route.lane_at(agent.progress) {
        Some(r) => r,
        None => map.lanes.locate(agent.position, agent.heading).ok()?,
    };
    map.lanes.segment(r.segment).map(|s| (s, r.arc))
}

/// Road-context half-planes: opposite-lane and road-edge clearance for
/// vehicles, road-edge clearance (from the sidewalk side) for pedestrians
/// that are not crossing.
pub fn contextual_halfplanes(
    agent: &AgentState,
    profile: &AgentProfile,
    map: &RoadMap,
    ped: Option<&PedestrianContext>,
    params: &GammaParams,
) -> ContextConstraints {
    let mut out = ContextConstraints::default();
    if !profile.class.is_vehicle() {
        if ped.is_some_and(|p| p.crossing) {
            return out;
        }
        pedestrian_edge(agent, profile, map, params, &mut out);
        return out;
    }
    let Some((seg, arc)) = lane_of(agent, map) else {
        return out;
    };
    let center = seg.centerline.point_at(arc);
    let bounds = [
        (seg.left_opposite_boundary.as_ref(), params.tau_opp, true),
        (seg.right_road_edge.as_ref(), params.tau_side, false),
    ];
    for (boundary, tau, opposite) in bounds {
        let Some(b) = boundary else { continue };
        let Some((dc, n, _)) = boundary_clearance(b, agent.position, center) else {
            continue;
        };
        let d = dc - extent_along(agent.heading, profile, n);
        let kind = if opposite { ContextKind::OppositeLane { d } } else { ContextKind::RoadEdge { d } };
        out.push(clearance_plane(n, d, tau), kind);
    }
    out
}

/// Pedestrians keep off the nearest road edge within 6 m.
fn pedestrian_edge(
    agent: &AgentState,
    profile: &AgentProfile,
    map: &RoadMap,
    params: &GammaParams,
    out: &mut ContextConstraints,
) {
    let mut best: Option<(f64, Vec2)> = None;
    for seg in map.lanes.segments_near(agent.position) {
        let Some(edge) = &seg.right_road_edge else { continue };
        let lane = seg.centerline.point_at(seg.centerline.project(agent.position).arc);
        let Some((dc, n, _)) = boundary_clearance(edge, agent.position, lane) else {
            continue;
        };
        // n points into the road; the pedestrian belongs on the other side
        let d = -dc;
        if d < 0.0 || d > 6.0 {
            continue;
        }
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, -n));
        }
    }
    if let Some((dc, n)) = best {
        let d = dc - profile.half_width;
        out.push(clearance_plane(n, d, params.tau_side), ContextKind::RoadEdge { d });
    }
}
