use alloc::format;
use alloc::vec::Vec;

use super::RoadError;
use crate::geom::{Polyline, Vec2};
use crate::math;

/// Arc-length window around a sidewalk position in which a crossing counts
/// as reachable.
pub const CROSSING_WINDOW_M: f64 = 5.0;

/// A crossable stretch of road linking two sidewalk positions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub sidewalk_a: usize,
    pub arc_a: f64,
    pub sidewalk_b: usize,
    pub arc_b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SidewalkRef {
    pub sidewalk: usize,
    pub arc: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SidewalkNetwork {
    sidewalks: Vec<Polyline>,
    crossings: Vec<Crossing>,
}

impl SidewalkNetwork {
    pub fn new(sidewalks: Vec<Polyline>, crossings: Vec<Crossing>) -> Result<Self, RoadError> {
        for (i, c) in crossings.iter().enumerate() {
            for (s, arc) in [(c.sidewalk_a, c.arc_a), (c.sidewalk_b, c.arc_b)] {
                let Some(line) = sidewalks.get(s) else {
                    return Err(RoadError::Validation(format!("crossing {i} names sidewalk {s}")));
                };
                if !(arc >= -0.1 && arc <= line.length() + 0.1) {
                    return Err(RoadError::Validation(format!("crossing {i} endpoint arc {arc} is off sidewalk {s}")));
                }
            }
        }
        Ok(SidewalkNetwork { sidewalks, crossings })
    }

    pub fn sidewalks(&self) -> &[Polyline] {
        &self.sidewalks
    }

    pub fn crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    pub fn point(&self, r: SidewalkRef) -> Vec2 {
        self.sidewalks[r.sidewalk].point_at(r.arc)
    }

    /// Closest sidewalk position to `p`; ties go to the lower index.
    pub fn locate(&self, p: Vec2) -> Option<(SidewalkRef, f64)> {
        let mut best: Option<(SidewalkRef, f64)> = None;
        for (i, s) in self.sidewalks.iter().enumerate() {
            let pr = s.project(p);
            if best.is_none_or(|(_, d)| pr.distance < d) {
                best = Some((SidewalkRef { sidewalk: i, arc: pr.arc }, pr.distance));
            }
        }
        best
    }

    /// Far end of the nearest crossing within `CROSSING_WINDOW_M` of `r`.
    pub fn opposite_sidewalk(&self, r: SidewalkRef) -> Option<SidewalkRef> {
        let mut best: Option<(f64, SidewalkRef)> = None;
        for c in &self.crossings {
            let ends = [(c.sidewalk_a, c.arc_a, c.sidewalk_b, c.arc_b), (c.sidewalk_b, c.arc_b, c.sidewalk_a, c.arc_a)];
            for (s, arc, os, oarc) in ends {
                if s != r.sidewalk {
                    continue;
                }
                let gap = math::abs(arc - r.arc);
                if gap <= CROSSING_WINDOW_M && best.is_none_or(|(g, _)| gap < g) {
                    best = Some((gap, SidewalkRef { sidewalk: os, arc: oarc }));
                }
            }
        }
        best.map(|(_, r)| r)
    }

    /// Crossings whose near end lies on `sidewalk` between arcs `lo` and `hi`.
    pub fn crossings_between(
        &self,
        sidewalk: usize,
        lo: f64,
        hi: f64,
    ) -> impl Iterator<Item = (f64, SidewalkRef)> + '_ {
        self.crossings.iter().flat_map(move |c| {
            let mut out = [None, None];
            if c.sidewalk_a == sidewalk && c.arc_a >= lo && c.arc_a <= hi {
                out[0] = Some((c.arc_a, SidewalkRef { sidewalk: c.sidewalk_b, arc: c.arc_b }));
            }
            if c.sidewalk_b == sidewalk && c.arc_b >= lo && c.arc_b <= hi {
                out[1] = Some((c.arc_b, SidewalkRef { sidewalk: c.sidewalk_a, arc: c.arc_a }));
            }
            out.into_iter().flatten()
        })
    }
}
