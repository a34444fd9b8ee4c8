//! Agent classes, kinematics, footprints and path tracking.

mod profile;

pub use profile::{AgentClass, AgentProfile, ProfileTable};

use crate::geom::{ConvexPolygon, Polyline, Vec2};
use crate::math;
use crate::roadnet::Route;

/// Below this speed an agent counts as stationary (and holonomic agents keep
/// their heading).
pub const STATIONARY_SPEED: f64 = 0.2;
pub const HEADING_HOLD_SPEED: f64 = 0.05;
pub const MIN_LOOKAHEAD_M: f64 = 3.0;
pub const LOOKAHEAD_TIME_S: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub position: Vec2,
    pub heading: f64,
    pub velocity: Vec2,
    pub route: Route,
    /// Arc-length of the agent's last projection onto `route`.
    pub progress: f64,
    pub stationary_time: f64,
}

impl AgentState {
    pub fn new(position: Vec2, heading: f64, speed: f64, route: Route) -> Self {
        let progress = route.polyline().project(position).arc;
        AgentState {
            position,
            heading,
            velocity: Vec2::from_angle(heading) * speed,
            route,
            progress,
            stationary_time: 0.0,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }

    /// Re-project onto the route near the last known progress. Keeps the
    /// projection from jumping to a later, nearby piece of a curving route.
    pub fn update_progress(&mut self) {
        let line = self.route.polyline();
        let lo = (self.progress - 5.0).max(0.0);
        let hi = self.progress + 5.0 + 2.0 * self.speed();
        self.progress = line.project_window(self.position, lo, hi).arc;
    }

    fn tick_stationary(&mut self, speed: f64, dt: f64) {
        if speed < STATIONARY_SPEED {
            self.stationary_time += dt;
        } else {
            self.stationary_time = 0.0;
        }
    }
}

/// Kinematic bicycle step referenced at the rear axle, which sits half a
/// wheelbase behind the footprint center. The axle is advanced along the
/// mean of the old and new headings, so the body pivots about it.
pub fn integrate_bicycle(state: &AgentState, profile: &AgentProfile, speed: f64, steer: f64, dt: f64) -> AgentState {
    let mut next = state.clone();
    next.tick_stationary(math::abs(speed), dt);
    if speed == 0.0 {
        next.velocity = Vec2::ZERO;
        return next;
    }
    let steer = steer.clamp(-profile.max_steer, profile.max_steer);
    let dphi = if profile.wheelbase > 0.0 { speed / profile.wheelbase * math::tan(steer) * dt } else { 0.0 };
    let mid = state.heading + 0.5 * dphi;
    let heading = math::wrap_angle(state.heading + dphi);
    let half_wb = 0.5 * profile.wheelbase;
    let rear = state.position - Vec2::from_angle(state.heading) * half_wb + Vec2::from_angle(mid) * (speed * dt);
    next.position = rear + Vec2::from_angle(heading) * half_wb;
    next.heading = heading;
    next.velocity = Vec2::from_angle(heading) * speed;
    next
}

pub fn integrate_holonomic(state: &AgentState, v: Vec2, dt: f64) -> AgentState {
    let mut next = state.clone();
    let speed = v.norm();
    next.tick_stationary(speed, dt);
    next.position = state.position + v * dt;
    next.velocity = v;
    if speed > HEADING_HOLD_SPEED {
        next.heading = v.angle();
    }
    next
}

pub fn lookahead_for(speed: f64) -> f64 {
    (LOOKAHEAD_TIME_S * math::abs(speed)).max(MIN_LOOKAHEAD_M)
}

/// Pure-pursuit steering toward the point `lookahead` meters past the
/// projection of the agent onto `path`.
pub fn pure_pursuit(state: &AgentState, profile: &AgentProfile, path: &Polyline, lookahead: f64) -> f64 {
    let arc = path.project(state.position).arc;
    pure_pursuit_at(state, profile, path, arc, lookahead)
}

/// As [`pure_pursuit`] with the projection arc already known.
pub fn pure_pursuit_at(state: &AgentState, profile: &AgentProfile, path: &Polyline, arc: f64, lookahead: f64) -> f64 {
    let target = path.point_at(arc + lookahead);
    let to = target - state.position;
    if to.norm_sq() < 1e-18 {
        return 0.0;
    }
    let alpha = math::wrap_angle(to.angle() - state.heading);
    let steer = math::atan(2.0 * profile.wheelbase * math::sin(alpha) / lookahead);
    steer.clamp(-profile.max_steer, profile.max_steer)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Footprint {
    Polygon(ConvexPolygon),
    Disc { center: Vec2, radius: f64 },
}

impl Footprint {
    pub fn overlaps(&self, other: &Footprint) -> bool {
        match (self, other) {
            (Footprint::Polygon(a), Footprint::Polygon(b)) => a.overlaps(b),
            (Footprint::Polygon(p), Footprint::Disc { center, radius })
            | (Footprint::Disc { center, radius }, Footprint::Polygon(p)) => p.overlaps_disc(*center, *radius),
            (Footprint::Disc { center: a, radius: ra }, Footprint::Disc { center: b, radius: rb }) => {
                a.distance(*b) < ra + rb
            }
        }
    }
}

pub fn footprint(state: &AgentState, profile: &AgentProfile) -> Footprint {
    footprint_at(state.position, state.heading, profile)
}

pub fn footprint_at(position: Vec2, heading: f64, profile: &AgentProfile) -> Footprint {
    if profile.class == AgentClass::Pedestrian {
        Footprint::Disc { center: position, radius: profile.half_width }
    } else {
        Footprint::Polygon(
            ConvexPolygon::oriented_rect(position, heading, profile.half_length, profile.half_width)
                .expect("profile dimensions are positive"),
        )
    }
}

pub fn collides(a: &AgentState, a_prof: &AgentProfile, b: &AgentState, b_prof: &AgentProfile) -> bool {
    poses_collide(a.position, a.heading, a_prof, b.position, b.heading, b_prof)
}

pub fn poses_collide(pa: Vec2, ha: f64, a_prof: &AgentProfile, pb: Vec2, hb: f64, b_prof: &AgentProfile) -> bool {
    // cheap reject on circumradii
    let reach = a_prof.circumradius() + b_prof.circumradius();
    if pa.distance(pb) >= reach {
        return false;
    }
    footprint_at(pa, ha, a_prof).overlaps(&footprint_at(pb, hb, b_prof))
}

/// Signed clearance between two footprints and the unit direction from `a`
/// toward `b` along which it is measured. Negative clearance is the
/// penetration depth along the minimum-overlap axis.
pub fn footprint_gap(a: &Footprint, b: &Footprint) -> (f64, Vec2) {
    match (a, b) {
        (Footprint::Disc { center: ca, radius: ra }, Footprint::Disc { center: cb, radius: rb }) => {
            let d = *cb - *ca;
            let n = d.normalized().unwrap_or(Vec2::new(1.0, 0.0));
            (d.norm() - ra - rb, n)
        }
        (Footprint::Polygon(p), Footprint::Disc { center, radius }) => polygon_disc_gap(p, *center, *radius),
        (Footprint::Disc { center, radius }, Footprint::Polygon(p)) => {
            let (g, n) = polygon_disc_gap(p, *center, *radius);
            (g, -n)
        }
        (Footprint::Polygon(pa), Footprint::Polygon(pb)) => polygon_gap(pa, pb),
    }
}

fn polygon_disc_gap(p: &ConvexPolygon, c: Vec2, r: f64) -> (f64, Vec2) {
    let v = p.vertices();
    let n = v.len();
    if p.contains(c, 0.0) {
        // shallowest edge
        let mut best = (f64::INFINITY, Vec2::new(1.0, 0.0));
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let out = -(b - a).perp().normalize_or_zero();
            let depth = (a - c).dot(out);
            if depth < best.0 {
                best = (depth, out);
            }
        }
        return (-best.0 - r, best.1);
    }
    let mut best = (f64::INFINITY, Vec2::ZERO);
    for i in 0..n {
        let q = closest_on_segment(v[i], v[(i + 1) % n], c);
        let d = q.distance(c);
        if d < best.0 {
            best = (d, (c - q) / d);
        }
    }
    (best.0 - r, best.1)
}

fn polygon_gap(a: &ConvexPolygon, b: &ConvexPolygon) -> (f64, Vec2) {
    let ab = b.centroid() - a.centroid();
    if a.overlaps(b) {
        // minimum-penetration separating axis over both polygons' edge normals
        let mut best = (f64::INFINITY, Vec2::new(1.0, 0.0));
        for poly in [a, b] {
            let v = poly.vertices();
            for i in 0..v.len() {
                let mut axis = (v[(i + 1) % v.len()] - v[i]).perp().normalize_or_zero();
                if axis.dot(ab) < 0.0 {
                    axis = -axis;
                }
                let depth = a.support(axis) + b.support(-axis);
                if depth < best.0 {
                    best = (depth, axis);
                }
            }
        }
        return (-best.0, best.1);
    }
    let mut best = (f64::INFINITY, Vec2::new(1.0, 0.0));
    for (p, q, sign) in [(a, b, 1.0), (b, a, -1.0)] {
        let qv = q.vertices();
        for &pt in p.vertices() {
            for i in 0..qv.len() {
                let c = closest_on_segment(qv[i], qv[(i + 1) % qv.len()], pt);
                let d = c.distance(pt);
                if d < best.0 && d > 0.0 {
                    // direction from a's feature toward b's feature
                    best = (d, (c - pt) / d * sign);
                }
            }
        }
    }
    best
}

fn closest_on_segment(a: Vec2, b: Vec2, p: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return a;
    }
    a + ab * ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
}

/// Half extent of the footprint along unit direction `dir`.
pub fn extent_along(heading: f64, profile: &AgentProfile, dir: Vec2) -> f64 {
    if profile.class == AgentClass::Pedestrian {
        return profile.half_width;
    }
    let f = Vec2::from_angle(heading);
    profile.half_length * math::abs(f.dot(dir)) + profile.half_width * math::abs(f.cross(dir))
}
