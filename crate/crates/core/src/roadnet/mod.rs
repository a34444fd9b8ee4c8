//! Road context: directed lane graph, sidewalk network with road crossings,
//! drivable-area occupancy, and procedural benchmark scenarios.

mod lanes;
mod occupancy;
mod route;
mod scenario;
mod sidewalks;

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geom::{GeomError, Vec2};

pub use lanes::{LaneNetwork, LaneRef, LaneSegment, SegmentId, HEADING_PENALTY_M};
pub use occupancy::{OccupancyGrid, OccupancyRegion};
pub use route::{route_candidates, Route};
pub use scenario::{generate_scenario, two_way_road, ScenarioKind, ScenarioParams};
pub use sidewalks::{Crossing, SidewalkNetwork, SidewalkRef, CROSSING_WINDOW_M};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoadError {
    /// Structural problem; the message names the offending entity.
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("parameter out of range: {0}")]
    Param(String),
    #[error("position is not on the lane network")]
    OffNetwork,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Simple (possibly non-convex) polygon used for the region of interest.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, RoadError> {
        if vertices.len() < 3 {
            return Err(RoadError::Validation("region_of_interest needs 3 vertices".into()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(RoadError::Geom(GeomError::NonFinite));
        }
        Ok(Polygon { vertices })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// Even-odd rule.
    pub fn contains(&self, p: Vec2) -> bool {
        let v = &self.vertices;
        let mut inside = false;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[j]);
            if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

/// Everything an agent or planner needs to know about the static scene.
#[derive(Clone, Debug)]
pub struct RoadMap {
    pub lanes: LaneNetwork,
    pub sidewalks: SidewalkNetwork,
    pub occupancy: OccupancyRegion,
    pub region_of_interest: Polygon,
    pub spawn_segments: Vec<SegmentId>,
}

impl RoadMap {
    /// Validates cross-references and derives the occupancy region from the
    /// lane corridors.
    pub fn new(
        segments: Vec<LaneSegment>,
        sidewalks: SidewalkNetwork,
        region_of_interest: Polygon,
        spawn_segments: Vec<SegmentId>,
    ) -> Result<Self, RoadError> {
        let lanes = LaneNetwork::new(segments)?;
        for id in &spawn_segments {
            if lanes.segment(*id).is_none() {
                return Err(RoadError::Validation(alloc::format!("spawn segment {id}")));
            }
        }
        let occupancy = OccupancyRegion::from_lanes(&lanes, occupancy::DEFAULT_RESOLUTION);
        Ok(RoadMap { lanes, sidewalks, occupancy, region_of_interest, spawn_segments })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn polygon_even_odd() {
        // L shape
        let p = Polygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 2.0),
            Vec2::new(0.0, 2.0),
        ])
        .unwrap();
        assert!(p.contains(Vec2::new(0.5, 1.5)));
        assert!(p.contains(Vec2::new(1.5, 0.5)));
        assert!(!p.contains(Vec2::new(1.5, 1.5)));
        assert!(!p.contains(Vec2::new(-0.1, 0.5)));
    }
}
