use alloc::vec::Vec;

use rand::Rng;

use crate::agents::AgentState;
use crate::geom::{Polyline, Vec2};
use crate::roadnet::{Route, SidewalkNetwork, CROSSING_WINDOW_M};

/// Sidewalk-following state of a pedestrian.
#[derive(Clone, Debug, PartialEq)]
pub struct Walk {
    pub sidewalk: usize,
    /// Walking toward increasing sidewalk arc-length.
    pub forward: bool,
    /// Route arc interval of an ongoing road crossing.
    pub crossing: Option<(f64, f64)>,
    after_crossing: Option<(usize, bool)>,
    /// Crossings already decided on.
    considered: Vec<usize>,
}

/// Route arc lead before a crossing at which the pedestrian counts as
/// crossing.
const CROSSING_LEAD_M: f64 = 1.0;

impl Walk {
    pub fn new(sidewalk: usize, forward: bool) -> Self {
        Walk { sidewalk, forward, crossing: None, after_crossing: None, considered: Vec::new() }
    }

    pub fn is_crossing(&self, progress: f64) -> bool {
        self.crossing.is_some_and(|(a, b)| progress >= a - CROSSING_LEAD_M && progress <= b)
    }
}

/// Rest of `sidewalk` from `arc` in the walking direction, starting at `from`.
pub fn sidewalk_route(net: &SidewalkNetwork, sidewalk: usize, arc: f64, forward: bool, from: Vec2) -> Route {
    let line = &net.sidewalks()[sidewalk];
    let rest = if forward { line.slice(arc, line.length()) } else { line.slice(0.0, arc).map(|p| p.reversed()) };
    let mut pts: Vec<Vec2> = alloc::vec![from];
    if let Some(rest) = rest {
        pts.extend_from_slice(rest.points());
    }
    let poly = Polyline::from_points(pts).unwrap_or_else(|_| {
        let t = line.tangent_at(arc) * if forward { 1.0 } else { -1.0 };
        Polyline::new(alloc::vec![from, from + t * 1e-3]).unwrap()
    });
    Route::from_polyline(poly)
}

/// Sidewalk bookkeeping after a move: finish crossings, decide on upcoming
/// ones, turn around at dead ends.
pub fn update_walk<R: Rng + ?Sized>(
    net: &SidewalkNetwork,
    walk: &mut Walk,
    state: &mut AgentState,
    cross_prob: f64,
    rng: &mut R,
) {
    if let Some((_, b)) = walk.crossing {
        if state.progress > b {
            let (s, f) = walk.after_crossing.take().unwrap_or((walk.sidewalk, walk.forward));
            walk.sidewalk = s;
            walk.forward = f;
            walk.crossing = None;
        } else {
            return;
        }
    }
    let line = &net.sidewalks()[walk.sidewalk];
    let here = line.project(state.position).arc;
    for (idx, c) in net.crossings().iter().enumerate() {
        let ends = [(c.sidewalk_a, c.arc_a, c.sidewalk_b, c.arc_b), (c.sidewalk_b, c.arc_b, c.sidewalk_a, c.arc_a)];
        for (s, arc, os, oarc) in ends {
            if s != walk.sidewalk || walk.considered.contains(&idx) {
                continue;
            }
            let ahead = if walk.forward { arc - here } else { here - arc };
            if !(ahead > 0.0 && ahead <= CROSSING_WINDOW_M) {
                continue;
            }
            walk.considered.push(idx);
            if !rng.random_bool(cross_prob) {
                continue;
            }
            let near = line.point_at(arc);
            let far = net.sidewalks()[os].point_at(oarc);
            let forward = rng.random_bool(0.5);
            let on = sidewalk_route(net, os, oarc, forward, far);
            let mut pts: Vec<Vec2> = alloc::vec![state.position, near];
            pts.extend_from_slice(on.polyline().points());
            let Ok(poly) = Polyline::from_points(pts) else { continue };
            let a = state.position.distance(near);
            let b = a + near.distance(far);
            state.route = Route::from_polyline(poly);
            state.progress = 0.0;
            walk.crossing = Some((a, b));
            walk.after_crossing = Some((os, forward));
            return;
        }
    }
    if state.route.remaining(state.progress) < 0.5 {
        walk.forward = !walk.forward;
        state.route = sidewalk_route(net, walk.sidewalk, here, walk.forward, state.position);
        state.progress = 0.0;
    }
}
