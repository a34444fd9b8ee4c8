use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use super::{LaneNetwork, LaneRef, SegmentId};
use crate::geom::{Polyline, Vec2};

/// A path through the lane graph (or a free polyline for pedestrians).
#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    segments: Vec<SegmentId>,
    /// Route arc-length at which each segment begins.
    seg_starts: Vec<f64>,
    /// Arc-length within the first segment where the route begins.
    start_arc: f64,
    polyline: Polyline,
}

impl Route {
    /// Route over `segments` starting at `start` (which must be on
    /// `segments[0]`). Unknown ids are skipped.
    pub fn build(net: &LaneNetwork, start: LaneRef, segments: &[SegmentId]) -> Route {
        let mut points: Vec<Vec2> = Vec::new();
        let mut seg_starts = Vec::with_capacity(segments.len());
        let mut kept = Vec::with_capacity(segments.len());
        let mut length = 0.0;
        for (k, id) in segments.iter().enumerate() {
            let Some(seg) = net.segment(*id) else { continue };
            let line = &seg.centerline;
            let from = if k == 0 { start.arc.clamp(0.0, line.length()) } else { 0.0 };
            if let Some(last) = points.last().copied() {
                // join gap (normally zero) counts toward the route length
                length += last.distance(line.point_at(from));
            }
            seg_starts.push(length);
            kept.push(*id);
            points.push(line.point_at(from));
            for (p, &a) in line.points().iter().zip(line.arcs()) {
                if a > from {
                    points.push(*p);
                }
            }
            length += line.length() - from;
        }
        let polyline = Polyline::from_points(points.iter().copied()).unwrap_or_else(|_| {
            // route shorter than a millimetre: keep a stub along the lane
            let p = points.first().copied().unwrap_or(Vec2::ZERO);
            let t = segments
                .first()
                .and_then(|id| net.segment(*id))
                .map_or(Vec2::new(1.0, 0.0), |s| s.centerline.tangent_at(start.arc));
            Polyline::new(vec![p, p + t * 1e-3]).unwrap()
        });
        Route { segments: kept, seg_starts, start_arc: start.arc, polyline }
    }

    /// Lane-free route (pedestrians).
    pub fn from_polyline(polyline: Polyline) -> Route {
        Route { segments: Vec::new(), seg_starts: Vec::new(), start_arc: 0.0, polyline }
    }

    pub fn segments(&self) -> &[SegmentId] {
        &self.segments
    }

    pub fn polyline(&self) -> &Polyline {
        &self.polyline
    }

    pub fn length(&self) -> f64 {
        self.polyline.length()
    }

    pub fn start_arc(&self) -> f64 {
        self.start_arc
    }

    /// Lane position corresponding to a route arc-length.
    pub fn lane_at(&self, route_arc: f64) -> Option<LaneRef> {
        if self.segments.is_empty() {
            return None;
        }
        let k = self.segment_index_at(route_arc);
        let base = if k == 0 { self.start_arc } else { 0.0 };
        Some(LaneRef { segment: self.segments[k], arc: base + (route_arc - self.seg_starts[k]).max(0.0) })
    }

    /// Index into [`Route::segments`] of the segment containing `route_arc`.
    pub fn segment_index_at(&self, route_arc: f64) -> usize {
        self.seg_starts.partition_point(|&s| s <= route_arc).saturating_sub(1)
    }

    /// Arc-length remaining after `route_arc`.
    pub fn remaining(&self, route_arc: f64) -> f64 {
        (self.length() - route_arc).max(0.0)
    }

    pub fn last_segment(&self) -> Option<SegmentId> {
        self.segments.last().copied()
    }
}

/// Depth-first enumeration of successor chains from `start`, each extended
/// until it covers `horizon` meters (or dead-ends). When more than
/// `max_routes` chains exist, a uniform subset is kept (DFS order
/// preserved).
pub fn route_candidates<R: Rng + ?Sized>(
    net: &LaneNetwork,
    start: LaneRef,
    horizon: f64,
    max_routes: usize,
    rng: &mut R,
) -> Vec<Route> {
    let Some(first) = net.segment(start.segment) else {
        return Vec::new();
    };
    let mut chains: Vec<Vec<SegmentId>> = Vec::new();
    let first_len = (first.centerline.length() - start.arc).max(0.0);
    let mut stack: Vec<(Vec<SegmentId>, f64)> = vec![(vec![start.segment], first_len)];
    while let Some((chain, covered)) = stack.pop() {
        let last = net.segment(*chain.last().unwrap()).unwrap();
        if covered >= horizon || last.successors.is_empty() {
            chains.push(chain);
            continue;
        }
        // reverse so the first successor is explored first
        for succ in last.successors.iter().rev() {
            let seg = net.segment(*succ).unwrap();
            let mut next = chain.clone();
            next.push(*succ);
            stack.push((next, covered + seg.centerline.length()));
        }
    }
    if max_routes > 0 && chains.len() > max_routes {
        let mut picked = index::sample(rng, chains.len(), max_routes).into_vec();
        picked.sort_unstable();
        chains = picked.into_iter().map(|i| core::mem::take(&mut chains[i])).collect();
    }
    chains.iter().map(|c| Route::build(net, start, c)).collect()
}
