use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use super::RoadError;
use crate::geom::{Polyline, Vec2};
use crate::math;

pub type SegmentId = u32;

/// Weight (in meters) of the heading misalignment term in [`LaneNetwork::locate`].
pub const HEADING_PENALTY_M: f64 = 2.0;

const INDEX_CELL: f64 = 16.0;

/// A directed lane piece; the centerline runs in the legal travel direction.
#[derive(Clone, Debug, PartialEq)]
pub struct LaneSegment {
    pub id: SegmentId,
    pub centerline: Polyline,
    pub width: f64,
    pub successors: Vec<SegmentId>,
    /// Boundary shared with opposite-direction traffic.
    pub left_opposite_boundary: Option<Polyline>,
    pub right_road_edge: Option<Polyline>,
}

/// Position on the lane network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaneRef {
    pub segment: SegmentId,
    pub arc: f64,
}

#[derive(Clone, Debug)]
pub struct LaneNetwork {
    segments: Vec<LaneSegment>,
    by_id: BTreeMap<SegmentId, usize>,
    cells: BTreeMap<(i64, i64), Vec<usize>>,
    max_width: f64,
}

fn cell_of(p: Vec2) -> (i64, i64) {
    (math::floor(p.x / INDEX_CELL) as i64, math::floor(p.y / INDEX_CELL) as i64)
}

impl LaneNetwork {
    pub fn new(mut segments: Vec<LaneSegment>) -> Result<Self, RoadError> {
        segments.sort_by_key(|s| s.id);
        let mut by_id = BTreeMap::new();
        for (i, s) in segments.iter().enumerate() {
            if !(s.width > 0.0) || !s.width.is_finite() {
                return Err(RoadError::Validation(format!("segment {} has width {}", s.id, s.width)));
            }
            if by_id.insert(s.id, i).is_some() {
                return Err(RoadError::Validation(format!("segment {} is duplicated", s.id)));
            }
        }
        for s in &segments {
            for succ in &s.successors {
                if !by_id.contains_key(succ) {
                    return Err(RoadError::Validation(format!(
                        "segment {succ} (successor of segment {}) does not exist",
                        s.id
                    )));
                }
            }
        }
        let max_width = segments.iter().map(|s| s.width).fold(0.0, f64::max);
        let mut cells: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        let reach = 2.0 * max_width;
        for (i, s) in segments.iter().enumerate() {
            let (mut lo, mut hi) =
                (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
            for p in s.centerline.points() {
                lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
            let (c0, c1) = (cell_of(lo - Vec2::new(reach, reach)), cell_of(hi + Vec2::new(reach, reach)));
            for cx in c0.0..=c1.0 {
                for cy in c0.1..=c1.1 {
                    cells.entry((cx, cy)).or_default().push(i);
                }
            }
        }
        Ok(LaneNetwork { segments, by_id, cells, max_width })
    }

    pub fn segments(&self) -> &[LaneSegment] {
        &self.segments
    }

    pub fn segment(&self, id: SegmentId) -> Option<&LaneSegment> {
        self.by_id.get(&id).map(|&i| &self.segments[i])
    }

    pub fn max_width(&self) -> f64 {
        self.max_width
    }

    /// Segments whose centerline may lie within `2 × max_width` of `p`.
    fn nearby(&self, p: Vec2) -> &[usize] {
        self.cells.get(&cell_of(p)).map_or(&[], |v| v.as_slice())
    }

    /// Segments whose centerline bounding box, grown by `2 × max_width`,
    /// contains the cell of `p`.
    pub fn segments_near(&self, p: Vec2) -> impl Iterator<Item = &LaneSegment> + '_ {
        self.nearby(p).iter().map(|&i| &self.segments[i])
    }

    /// Nearest segment scored by `distance + 2 m × (1 − cos Δθ) / 2`; ties go
    /// to the smaller segment id.
    pub fn locate(&self, position: Vec2, heading: f64) -> Result<LaneRef, RoadError> {
        let limit = 2.0 * self.max_width;
        let mut best: Option<(f64, LaneRef)> = None;
        for &i in self.nearby(position) {
            let s = &self.segments[i];
            let pr = s.centerline.project(position);
            if pr.distance > limit {
                continue;
            }
            let tangent = s.centerline.tangent_at(pr.arc);
            let misalign = (1.0 - math::cos(heading - tangent.angle())) / 2.0;
            let score = pr.distance + HEADING_PENALTY_M * misalign;
            let better = match best {
                None => true,
                Some((b, r)) => score < b || (score == b && s.id < r.segment),
            };
            if better {
                best = Some((score, LaneRef { segment: s.id, arc: pr.arc }));
            }
        }
        best.map(|(_, r)| r).ok_or(RoadError::OffNetwork)
    }

    /// Segments that list `id` as a successor.
    pub fn predecessors(&self, id: SegmentId) -> impl Iterator<Item = SegmentId> + '_ {
        self.segments.iter().filter(move |s| s.successors.contains(&id)).map(|s| s.id)
    }
}
