use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::LaneNetwork;
use crate::geom::{ConvexPolygon, Vec2};
use crate::math;

pub(super) const DEFAULT_RESOLUTION: f64 = 0.5;
const CELL: f64 = 8.0;

/// Drivable area: union of lane corridors (centerline swept by half the lane
/// width), one rectangle per centerline piece plus joint patches on bends.
#[derive(Clone, Debug)]
pub struct OccupancyRegion {
    drivable: Vec<ConvexPolygon>,
    resolution: f64,
    cells: BTreeMap<(i64, i64), Vec<usize>>,
}

/// Row-major boolean grid; rows advance along the ego heading, columns to the
/// ego's left.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    pub rows: usize,
    pub cols: usize,
    pub resolution: f64,
    pub cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }
}

fn key(p: Vec2) -> (i64, i64) {
    (math::floor(p.x / CELL) as i64, math::floor(p.y / CELL) as i64)
}

impl OccupancyRegion {
    pub fn from_lanes(lanes: &LaneNetwork, resolution: f64) -> Self {
        let mut drivable = Vec::new();
        for seg in lanes.segments() {
            let half = seg.width / 2.0;
            let pts = seg.centerline.points();
            let mut prev_end: Option<(Vec2, Vec2)> = None;
            for w in pts.windows(2) {
                let dir = (w[1] - w[0]).normalize_or_zero();
                let n = dir.perp() * half;
                let quad = [w[0] - n, w[1] - n, w[1] + n, w[0] + n];
                if let Ok(r) = ConvexPolygon::new(quad.to_vec()) {
                    drivable.push(r);
                }
                if let Some((a, b)) = prev_end {
                    // close the wedge gap on the outside of the bend
                    if let Ok(j) = ConvexPolygon::hull(&[a, b, quad[0], quad[3]]) {
                        drivable.push(j);
                    }
                }
                prev_end = Some((quad[1], quad[2]));
            }
        }
        Self::from_polygons(drivable, resolution)
    }

    pub fn from_polygons(drivable: Vec<ConvexPolygon>, resolution: f64) -> Self {
        let mut cells: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for (i, p) in drivable.iter().enumerate() {
            let (lo, hi) = p.bounding_box();
            let (a, b) = (key(lo), key(hi));
            for cx in a.0..=b.0 {
                for cy in a.1..=b.1 {
                    cells.entry((cx, cy)).or_default().push(i);
                }
            }
        }
        OccupancyRegion { drivable, resolution, cells }
    }

    pub fn polygons(&self) -> &[ConvexPolygon] {
        &self.drivable
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.cells.get(&key(p)).is_some_and(|ids| ids.iter().any(|&i| self.drivable[i].contains(p, 1e-9)))
    }

    /// Square crop of side `extent` centred on the ego pose. Cell `(i, j)` is
    /// true iff its centre, mapped through the pose, is drivable.
    pub fn crop(&self, position: Vec2, heading: f64, extent: f64) -> OccupancyGrid {
        let n = math::ceil(extent / self.resolution).max(1.0) as usize;
        let fwd = Vec2::from_angle(heading);
        let left = fwd.perp();
        let mut cells = vec![false; n * n];
        for i in 0..n {
            let x = (i as f64 + 0.5) * self.resolution - extent / 2.0;
            for j in 0..n {
                let y = (j as f64 + 0.5) * self.resolution - extent / 2.0;
                cells[i * n + j] = self.contains(position + fwd * x + left * y);
            }
        }
        OccupancyGrid { rows: n, cols: n, resolution: self.resolution, cells }
    }
}
